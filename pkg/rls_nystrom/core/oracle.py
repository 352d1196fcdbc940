"""
Dense reference computations for small instances.

Everything here materializes the full n x n kernel matrix and uses dense
symmetric eigensolves, so it is capped at a few thousand points. These paths
are the ground truth the sampler, the factors and the learning routines are
checked against.
"""

import logging
from typing import Optional

import numpy as np
import scipy.linalg
from scipy.linalg import lapack

from rls_nystrom.core.exceptions import ArgumentError, NumericalError, OracleCapacityError
from rls_nystrom.core.kernels import KernelSpec, gram_matrix
from rls_nystrom.core.nystrom import NystromFactors
from rls_nystrom.core.sampling import LandmarkSample, SamplerConfig, sample_from_scores
from rls_nystrom.utils.linalg import symmetrize
from rls_nystrom.utils.rng import make_rng

logger = logging.getLogger(__name__)

ORACLE_MAX_N = 5000
SYMMETRY_TOLERANCE = 1e-10
PIVOT_TOLERANCE = 1e-12
PCP_SLACK = 1e-6


def _check_capacity(n: int) -> None:
    if n > ORACLE_MAX_N:
        raise OracleCapacityError(f"dense oracle is limited to n <= {ORACLE_MAX_N}, got {n}")


class DenseKernel:
    """A dense symmetric kernel matrix with lazily computed eigenpairs."""

    def __init__(self, K: np.ndarray):
        K = np.asarray(K, dtype=float)
        if K.ndim != 2 or K.shape[0] != K.shape[1]:
            raise ArgumentError(f"kernel matrix must be square, got shape {K.shape}")
        _check_capacity(K.shape[0])
        scale = max(1.0, float(np.max(np.abs(K)))) if K.size else 1.0
        if np.max(np.abs(K - K.T), initial=0.0) > SYMMETRY_TOLERANCE * scale:
            raise ArgumentError("kernel matrix is not symmetric")
        self.K = symmetrize(K)
        self._eigenvalues = None
        self._eigenvectors = None

    @classmethod
    def from_data(cls, spec: KernelSpec, data) -> "DenseKernel":
        X = getattr(data, "features", data)
        _check_capacity(np.asarray(X).shape[0])
        return cls(gram_matrix(spec, X))

    @property
    def n(self) -> int:
        return self.K.shape[0]

    def _decompose(self) -> None:
        values, vectors = scipy.linalg.eigh(self.K)
        order = np.argsort(values)[::-1]
        self._eigenvalues = values[order]
        self._eigenvectors = vectors[:, order]
        floor = -1e-8 * max(float(np.trace(self.K)), 0.0)
        if self._eigenvalues.size and self._eigenvalues[-1] < floor:
            logger.warning(f"Dense kernel has eigenvalue {self._eigenvalues[-1]:.3e} below PSD tolerance")

    @property
    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues in nonincreasing order."""
        if self._eigenvalues is None:
            self._decompose()
        return self._eigenvalues

    @property
    def eigenvectors(self) -> np.ndarray:
        if self._eigenvectors is None:
            self._decompose()
        return self._eigenvectors

    @property
    def spectral_norm(self) -> float:
        return float(np.max(np.abs(self.eigenvalues), initial=0.0))


def _check_lambda(lam: float) -> None:
    if not lam > 0:
        raise ArgumentError(f"lambda must be positive, got {lam}")


def exact_ridge_scores(K: DenseKernel, lam: float) -> np.ndarray:
    """l_i = (K (K + lam I)^-1)_ii = sum_j U_ij^2 sigma_j / (sigma_j + lam)."""
    _check_lambda(lam)
    sigma = np.maximum(K.eigenvalues, 0.0)
    scores = (K.eigenvectors ** 2) @ (sigma / (sigma + lam))
    return np.clip(scores, 0.0, 1.0)


def exact_ridge_scores_from_factor(B: np.ndarray, lam: float) -> np.ndarray:
    """Scores through a square-root factor K = B^T B: l_i = b_i^T (B B^T + lam I)^-1 b_i.

    Args:
        B: (r, n) factor whose columns b_i satisfy K_ij = b_i^T b_j
        lam: Ridge parameter
    """
    _check_lambda(lam)
    B = np.asarray(B, dtype=float)
    inner = symmetrize(B @ B.T) + lam * np.eye(B.shape[0])
    solved = scipy.linalg.solve(inner, B, assume_a="pos")
    return np.einsum("ij,ij->j", B, solved)


def pivoted_cholesky(K: DenseKernel, tolerance: Optional[float] = None) -> np.ndarray:
    """Rank-revealing factor B (r x n) with B^T B = K up to the pivot tolerance.

    Uses LAPACK dpstrf with absolute tolerance 1e-12 * trace(K) unless given.
    """
    trace = float(np.trace(K.K))
    if trace <= 0:
        return np.zeros((0, K.n))
    tol = PIVOT_TOLERANCE * trace if tolerance is None else tolerance
    factor, pivots, rank, info = lapack.dpstrf(K.K, lower=0, tol=tol)
    if info < 0:
        raise NumericalError(f"pivoted Cholesky failed with LAPACK info={info}")
    upper = np.triu(factor)[:rank]
    B = np.empty_like(upper)
    # dpstrf pivots are 1-based: P^T K P = U^T U
    B[:, pivots - 1] = upper
    return B


def exact_deff(K: DenseKernel, lam: float) -> float:
    """Effective dimension tr(K (K + lam I)^-1)."""
    _check_lambda(lam)
    sigma = np.maximum(K.eigenvalues, 0.0)
    return float(np.sum(sigma / (sigma + lam)))


def lambda_for_k(K: DenseKernel, k: int) -> float:
    """Tail average (1/k) sum_{i>k} sigma_i(K); the effective dimension there is at most 2k."""
    if not 1 <= k <= K.n:
        raise ArgumentError(f"k must lie in [1, {K.n}], got {k}")
    lam = float(np.maximum(K.eigenvalues[k:], 0.0).sum()) / k
    if lam > 0:
        deff = exact_deff(K, lam)
        if deff > 2 * k + 1e-8:
            raise NumericalError(f"effective dimension {deff} exceeds 2k={2 * k} at lambda={lam}")
    return lam


def pcp_lambda(K: DenseKernel, k: int, epsilon: float) -> float:
    """Ridge parameter (epsilon / k) sum_{i>k} sigma_i(K) for projection-cost preservation."""
    if not epsilon > 0:
        raise ArgumentError(f"epsilon must be positive, got {epsilon}")
    return epsilon * lambda_for_k(K, k)


def _factors_matrix(K: DenseKernel, factors: NystromFactors) -> np.ndarray:
    if factors.n != K.n:
        raise ArgumentError(f"factors cover {factors.n} points, kernel has {K.n}")
    return factors.dense()


def exact_spectral_error(K: DenseKernel, factors: NystromFactors) -> float:
    """Largest eigenvalue magnitude of K - K~ (dense eigensolve)."""
    _check_capacity(K.n)
    difference = symmetrize(K.K - _factors_matrix(K, factors))
    values = scipy.linalg.eigvalsh(difference)
    return float(np.max(np.abs(values), initial=0.0))


def min_difference_eigenvalue(K: DenseKernel, factors: NystromFactors) -> float:
    """Smallest eigenvalue of K - K~ (>= -1e-8 ||K||_2 when K~ is dominated by K)."""
    difference = symmetrize(K.K - _factors_matrix(K, factors))
    return float(scipy.linalg.eigvalsh(difference)[0])


def pcp_check(K: DenseKernel, factors: NystromFactors, k: int, epsilon: float,
              trials: int, seed: int) -> float:
    """Fraction of random rank-k projections X satisfying

        tr(K - XKX) <= tr(K~ - XK~X) + c <= (1 + epsilon) tr(K - XKX),

    with c = tr(K) - tr(K~) and 1e-6 slack. epsilon = inf disables the upper
    inequality.
    """
    if not 1 <= k < K.n:
        raise ArgumentError(f"k must lie in [1, {K.n}), got {k}")
    if trials < 1:
        raise ArgumentError("trials must be at least 1")

    approx = _factors_matrix(K, factors)
    trace_k = float(np.trace(K.K))
    trace_approx = float(np.trace(approx))
    offset = trace_k - trace_approx
    rng = make_rng(seed)

    passed = 0
    for _ in range(trials):
        Q, _ = np.linalg.qr(rng.standard_normal((K.n, k)))
        # tr(X A X) = tr(Q^T A Q) for X = Q Q^T
        exact_cost = trace_k - float(np.trace(Q.T @ K.K @ Q))
        approx_cost = trace_approx - float(np.trace(Q.T @ approx @ Q)) + offset
        lower_ok = exact_cost <= approx_cost + PCP_SLACK
        upper_ok = np.isinf(epsilon) or approx_cost <= (1.0 + epsilon) * exact_cost + PCP_SLACK
        passed += int(lower_ok and upper_ok)

    return passed / trials


def rls_nystrom_exact(K: DenseKernel, lam: float, config: SamplerConfig,
                      seed: Optional[int] = None) -> LandmarkSample:
    """Sample landmarks independently by exact ridge leverage scores at lam."""
    return sample_from_scores(exact_ridge_scores(K, lam), config, lam, seed)
