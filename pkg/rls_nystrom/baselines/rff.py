"""
Random Fourier features for the Gaussian kernel.

Frequencies w_j ~ N(0, sigma^-2 I) and phases b_j ~ U[0, 2 pi) are drawn with
scikit-learn's RBFSampler (gamma = 1 / (2 sigma^2)); features are
z(x)_j = sqrt(2 / D) cos(w_j^T x + b_j), so Z Z^T is an unbiased estimate of
the Gaussian Gram matrix.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from sklearn.kernel_approximation import RBFSampler

from rls_nystrom.core.container import read_container, write_container
from rls_nystrom.core.exceptions import ArgumentError
from rls_nystrom.core.kernels import EvalCounter, KernelSpec
from rls_nystrom.core.nystrom import NystromSettings, estimate_low_rank_error, subset_indices
from rls_nystrom.utils.rng import seed32

logger = logging.getLogger(__name__)

CONTAINER_KIND = "rff"


@dataclass(frozen=True)
class RFFMap:
    """A drawn random Fourier feature map.

    Attributes:
        frequencies: (D, d) matrix whose rows are the w_j
        phases: (D,) offsets in [0, 2 pi)
        sigma: Gaussian bandwidth the frequencies were drawn for
    """

    frequencies: np.ndarray
    phases: np.ndarray
    sigma: float

    @property
    def D(self) -> int:
        return self.frequencies.shape[0]

    @property
    def d(self) -> int:
        return self.frequencies.shape[1]

    def save(self, path: str) -> None:
        write_container(path, CONTAINER_KIND, {"D": self.D, "d": self.d, "sigma": self.sigma},
                        {"frequencies": self.frequencies, "phases": self.phases})

    @classmethod
    def load(cls, path: str) -> "RFFMap":
        metadata, arrays = read_container(path, CONTAINER_KIND)
        return cls(arrays["frequencies"], arrays["phases"], float(metadata["sigma"]))


def rff_build(d: int, D: int, sigma: float, seed: int) -> RFFMap:
    """Draw a D-feature map for d-dimensional inputs, deterministic under seed."""
    if D < 1:
        raise ArgumentError(f"feature count must be at least 1, got {D}")
    if d < 1:
        raise ArgumentError(f"input dimension must be at least 1, got {d}")
    if not sigma > 0:
        raise ArgumentError(f"sigma must be positive, got {sigma}")

    sampler = RBFSampler(gamma=KernelSpec.gaussian(sigma).gamma, n_components=D, random_state=seed32(seed))
    sampler.fit(np.zeros((1, d)))
    logger.debug(f"Drew {D} random Fourier features for d={d}, sigma={sigma}")
    return RFFMap(np.ascontiguousarray(sampler.random_weights_.T), np.asarray(sampler.random_offset_), sigma)


def rff_transform(rff: RFFMap, data) -> np.ndarray:
    """Feature matrix Z (n x D) with rows sqrt(2 / D) cos(W x + b)."""
    X = np.asarray(getattr(data, "features", data), dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.shape[1] != rff.d:
        raise ArgumentError(f"data dimension {X.shape[1]} does not match the map's {rff.d}")
    return np.sqrt(2.0 / rff.D) * np.cos(X @ rff.frequencies.T + rff.phases)


def estimate_rff_spectral_error(spec: KernelSpec, data, rff: RFFMap, subset_size: int, iterations: int,
                                seed: int, counter: Optional[EvalCounter] = None,
                                settings: Optional[NystromSettings] = None) -> float:
    """Estimate ||K_sub - Z_sub Z_sub^T||_2 on a seeded subset (same subset rule as for Nystrom)."""
    if spec.kind != "gaussian":
        raise ArgumentError("random Fourier features approximate the gaussian kernel only")
    X = np.asarray(getattr(data, "features", data), dtype=float)
    subset = subset_indices(X.shape[0], subset_size, seed)
    base = settings or NystromSettings()
    settings = base.model_copy(update={"subset_size": subset_size, "iterations": iterations})
    rows = rff_transform(rff, X[subset])
    return estimate_low_rank_error(spec, X[subset], rows, settings, seed + 1, counter)
