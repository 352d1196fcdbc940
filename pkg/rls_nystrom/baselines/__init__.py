"""Comparison methods: uniform landmark sampling and random Fourier features."""

from rls_nystrom.baselines.rff import RFFMap, estimate_rff_spectral_error, rff_build, rff_transform
from rls_nystrom.baselines.uniform import uniform_sample

__all__ = ["RFFMap", "estimate_rff_spectral_error", "rff_build", "rff_transform", "uniform_sample"]
