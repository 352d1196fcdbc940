"""
Nystrom approximation K~ = C W^+ C^T built from a landmark sample.

C holds the unweighted kernel columns of the landmarks and W = S^T K S is read
from C's landmark rows, so building factors costs exactly n * s kernel
evaluations. The pseudoinverse is taken through a truncated symmetric
eigendecomposition whose factors also give the explicit feature map.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from rls_nystrom.core.container import read_container, write_container
from rls_nystrom.core.exceptions import ArgumentError
from rls_nystrom.core.kernels import EvalCounter, KernelSpec, kernel_block, kernel_columns
from rls_nystrom.core.sampling import LandmarkSample
from rls_nystrom.utils.linalg import symmetrize, truncated_eigh
from rls_nystrom.utils.rng import make_rng

logger = logging.getLogger(__name__)

CONTAINER_KIND = "nystrom"


class NystromSettings(BaseModel):
    """Spectral-error estimation parameters."""

    model_config = ConfigDict(frozen=True)

    subset_size: int = Field(default=20000, ge=1)
    iterations: int = Field(default=100, ge=1)
    tolerance: float = Field(default=1e-6, gt=0.0)
    block_size: int = Field(default=2048, ge=1)


@dataclass(frozen=True)
class NystromFactors:
    """Factors of a Nystrom approximation.

    Attributes:
        C: (n, s) kernel columns of the landmarks
        Winv: (s, s) pseudoinverse of the landmark Gram matrix
        eigvecs: (s, rank) kept eigenvectors of the landmark Gram matrix
        eigvals: (rank,) kept eigenvalues, nonincreasing
        landmark_indices: (s,) landmark row indices
        rank: Effective rank after truncation
        kernel: Kernel the factors were built with
    """

    C: np.ndarray
    Winv: np.ndarray
    eigvecs: np.ndarray
    eigvals: np.ndarray
    landmark_indices: np.ndarray
    rank: int
    kernel: KernelSpec

    @property
    def n(self) -> int:
        return self.C.shape[0]

    @property
    def s(self) -> int:
        return self.C.shape[1]

    def dense(self) -> np.ndarray:
        """Materialize K~ (n x n); for small instances only."""
        features = feature_map(self)
        return symmetrize(features @ features.T)

    def save(self, path: str) -> None:
        metadata = {"n": self.n, "s": self.s, "rank": self.rank, "kernel": str(self.kernel)}
        write_container(path, CONTAINER_KIND, metadata, {
            "landmark_indices": self.landmark_indices,
            "C": self.C,
            "Winv": self.Winv,
            "eigvecs": self.eigvecs,
            "eigvals": self.eigvals,
        })

    @classmethod
    def load(cls, path: str) -> "NystromFactors":
        metadata, arrays = read_container(path, CONTAINER_KIND)
        return cls(
            C=arrays["C"],
            Winv=arrays["Winv"],
            eigvecs=arrays["eigvecs"],
            eigvals=arrays["eigvals"],
            landmark_indices=arrays["landmark_indices"],
            rank=int(metadata["rank"]),
            kernel=KernelSpec.parse(metadata["kernel"]),
        )


def build_factors(spec: KernelSpec, data, sample: LandmarkSample, counter: EvalCounter) -> NystromFactors:
    """Build Nystrom factors from a landmark sample (sample weights are dropped).

    Eigenvalues of the landmark Gram matrix at or below s * eps * lambda_max
    are treated as zero in the pseudoinverse.

    Raises:
        ArgumentError: If the sample is empty
    """
    if sample.size == 0:
        raise ArgumentError("cannot build Nystrom factors from an empty sample")

    indices = sample.indices
    C = kernel_columns(spec, data, indices, counter)
    W = symmetrize(C[indices])
    eig = truncated_eigh(W)
    Winv = eig.pseudoinverse()

    logger.info(f"Built Nystrom factors: n={C.shape[0]}, s={indices.size}, rank={eig.rank}")
    return NystromFactors(C, Winv, eig.vectors, eig.values, indices.copy(), eig.rank, spec)


def approx_matvec(factors: NystromFactors, v: np.ndarray) -> np.ndarray:
    """Compute K~ v = C (Winv (C^T v)) in O(n s) arithmetic."""
    v = np.asarray(v, dtype=float)
    if v.shape[0] != factors.n:
        raise ArgumentError(f"vector has length {v.shape[0]}, expected {factors.n}")
    return factors.C @ (factors.Winv @ (factors.C.T @ v))


def feature_map(factors: NystromFactors) -> np.ndarray:
    """Rows F = C U diag(eigvals)^-1/2 with F F^T = K~; shape (n, rank)."""
    return factors.C @ (factors.eigvecs / np.sqrt(factors.eigvals))


def subset_indices(n: int, subset_size: int, seed: int) -> np.ndarray:
    if subset_size < 1:
        raise ArgumentError("subset size must be at least 1")
    if subset_size > n:
        raise ArgumentError(f"subset size {subset_size} exceeds n={n}")
    if subset_size == n:
        return np.arange(n)
    return np.sort(make_rng(seed).choice(n, size=subset_size, replace=False))


def estimate_low_rank_error(spec: KernelSpec, X: np.ndarray, low_rank_rows: np.ndarray,
                            settings: NystromSettings, seed: int,
                            counter: Optional[EvalCounter] = None) -> float:
    """Power-iteration estimate of ||K_X - R R^T||_2 for feature rows R.

    K_X is applied block-row-wise, holding at most block_size * m kernel
    entries at once (the whole matrix when m <= block_size). For an indefinite
    difference the magnitude of the dominant Rayleigh quotient is returned.
    """
    m = X.shape[0]
    block = settings.block_size
    cached = kernel_block(spec, X, X, counter) if m <= block else None

    def apply(v: np.ndarray) -> np.ndarray:
        if cached is not None:
            kv = cached @ v
        else:
            kv = np.empty(m)
            for start in range(0, m, block):
                stop = min(start + block, m)
                kv[start:stop] = kernel_block(spec, X[start:stop], X, counter) @ v
        return kv - low_rank_rows @ (low_rank_rows.T @ v)

    v = make_rng(seed).standard_normal(m)
    v /= np.linalg.norm(v)
    estimate = 0.0
    for iteration in range(1, settings.iterations + 1):
        w = apply(v)
        rayleigh = float(v @ w)
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            logger.debug(f"Power iteration hit the null space at step {iteration}")
            return 0.0
        v = w / norm
        if iteration > 1 and abs(rayleigh - estimate) <= settings.tolerance * abs(rayleigh):
            estimate = rayleigh
            logger.debug(f"Power iteration stagnated after {iteration} steps")
            break
        estimate = rayleigh

    return abs(estimate)


def estimate_spectral_error(spec: KernelSpec, data, factors: NystromFactors, subset_size: int,
                            iterations: int, seed: int, counter: Optional[EvalCounter] = None,
                            settings: Optional[NystromSettings] = None) -> float:
    """Estimate lambda_max(K_sub - K~_sub) on a seeded uniform subset.

    Args:
        spec: Kernel descriptor
        data: Dataset the factors were built on
        factors: Nystrom factors
        subset_size: Points in the evaluation subset (<= n)
        iterations: Maximum power iterations
        seed: Seed for the subset and the start vector
        counter: Optional kernel evaluation counter
        settings: Tolerance and block size (defaults when omitted)

    Returns:
        Nonnegative spectral error estimate
    """
    X = np.asarray(getattr(data, "features", data), dtype=float)
    subset = subset_indices(X.shape[0], subset_size, seed)
    base = settings or NystromSettings()
    settings = base.model_copy(update={"subset_size": subset_size, "iterations": iterations})
    rows = feature_map(factors)[subset]
    error = estimate_low_rank_error(spec, X[subset], rows, settings, seed + 1, counter)
    return max(error, 0.0)
