"""
Nystrom kernel approximation with recursive ridge leverage score sampling.
"""

__version__ = "0.1.0"

from rls_nystrom.core.exceptions import NystromError
from rls_nystrom.core.kernels import EvalCounter, KernelSpec
from rls_nystrom.core.nystrom import NystromFactors, approx_matvec, build_factors, feature_map
from rls_nystrom.core.sampling import (
    LandmarkSample,
    SamplerConfig,
    SamplerMode,
    recursive_rls_fixed_lambda,
    recursive_rls_fixed_size,
)
from rls_nystrom.data.datasets import Dataset, load_dataset

__all__ = [
    'Dataset',
    'EvalCounter',
    'KernelSpec',
    'LandmarkSample',
    'NystromError',
    'NystromFactors',
    'SamplerConfig',
    'SamplerMode',
    'approx_matvec',
    'build_factors',
    'feature_map',
    'load_dataset',
    'recursive_rls_fixed_lambda',
    'recursive_rls_fixed_size',
]
