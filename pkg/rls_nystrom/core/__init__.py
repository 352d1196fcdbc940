"""
Core numerical components: kernels, ridge leverage score sampling, Nystrom
factors and the dense reference oracle.
"""

from rls_nystrom.core.exceptions import (
    NystromError,
    UsageError,
    ArgumentError,
    OracleCapacityError,
    DataFormatError,
    DataParseError,
    NumericalError,
    EmptySampleError,
    DegenerateScoresError,
    DegenerateKernelError,
    VerificationError,
)

__all__ = [
    'NystromError',
    'UsageError',
    'ArgumentError',
    'OracleCapacityError',
    'DataFormatError',
    'DataParseError',
    'NumericalError',
    'EmptySampleError',
    'DegenerateScoresError',
    'DegenerateKernelError',
    'VerificationError',
]
