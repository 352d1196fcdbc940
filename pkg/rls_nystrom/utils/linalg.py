"""
Small dense linear-algebra helpers shared by the sampler, the Nystrom factors
and the regression solver.

Symmetric systems are factored with Cholesky and a short escalation of
diagonal jitter; pseudoinverses of PSD matrices come from a truncated
symmetric eigendecomposition.
"""

import logging
from typing import NamedTuple

import numpy as np
import scipy.linalg

from rls_nystrom.core.exceptions import NumericalError

logger = logging.getLogger(__name__)

JITTER_FACTOR = 1e-12
JITTER_GROWTH = 10.0
JITTER_RETRIES = 3


def symmetrize(matrix: np.ndarray) -> np.ndarray:
    """Return (A + A^T) / 2."""
    return 0.5 * (matrix + matrix.T)


def jittered_cholesky(matrix: np.ndarray, scale: float) -> np.ndarray:
    """Lower Cholesky factor of a symmetric positive definite matrix.

    On failure the diagonal is shifted by scale * 1e-12, growing tenfold per
    retry, for at most three retries.

    Args:
        matrix: Symmetric matrix expected to be positive definite
        scale: Magnitude the jitter is relative to (typically the ridge lambda)

    Returns:
        Lower-triangular factor L with L @ L.T = matrix (+ jitter)

    Raises:
        NumericalError: If every attempt fails
    """
    matrix = symmetrize(np.asarray(matrix, dtype=float))
    if matrix.shape[0] == 0:
        return np.zeros((0, 0))

    try:
        return scipy.linalg.cholesky(matrix, lower=True)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
        pass

    base = abs(scale) if scale > 0 else float(np.max(np.abs(np.diag(matrix))) or 1.0)
    jitter = base * JITTER_FACTOR
    identity = np.eye(matrix.shape[0])
    for attempt in range(1, JITTER_RETRIES + 1):
        logger.warning(f"Cholesky failed, retrying with diagonal jitter {jitter:.3e} (attempt {attempt})")
        try:
            return scipy.linalg.cholesky(matrix + jitter * identity, lower=True)
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
            jitter *= JITTER_GROWTH

    raise NumericalError(
        f"Cholesky factorization of a {matrix.shape[0]}x{matrix.shape[0]} system failed "
        f"after {JITTER_RETRIES} jitter retries"
    )


def cholesky_solve(factor: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve (L L^T) x = rhs given the lower factor L."""
    return scipy.linalg.cho_solve((factor, True), rhs)


class TruncatedEigh(NamedTuple):
    """Truncated eigendecomposition of a symmetric PSD matrix."""

    vectors: np.ndarray
    values: np.ndarray
    rank: int

    def pseudoinverse(self) -> np.ndarray:
        """Pseudoinverse of the decomposed matrix: V diag(1/values) V^T."""
        return symmetrize((self.vectors / self.values) @ self.vectors.T)


def truncated_eigh(matrix: np.ndarray, relative_tol: float = None) -> TruncatedEigh:
    """Eigendecomposition keeping only eigenvalues above a rank-revealing cutoff.

    Eigenvalues <= size * eps * lambda_max (or relative_tol * lambda_max when
    given) are discarded, which also removes small negative values caused by
    rounding.

    Args:
        matrix: Symmetric PSD matrix
        relative_tol: Optional override of the relative cutoff

    Returns:
        TruncatedEigh with kept eigenvectors (columns), eigenvalues sorted
        nonincreasing, and the kept count
    """
    matrix = symmetrize(np.asarray(matrix, dtype=float))
    size = matrix.shape[0]
    if size == 0:
        return TruncatedEigh(np.zeros((0, 0)), np.zeros(0), 0)

    values, vectors = scipy.linalg.eigh(matrix)
    order = np.argsort(values)[::-1]
    values = values[order]
    vectors = vectors[:, order]

    top = values[0]
    if top <= 0:
        return TruncatedEigh(np.zeros((size, 0)), np.zeros(0), 0)

    if relative_tol is None:
        relative_tol = size * np.finfo(float).eps
    keep = values > relative_tol * top
    rank = int(np.count_nonzero(keep))
    return TruncatedEigh(vectors[:, :rank], values[:rank], rank)


def sorted_eigenvalues(matrix: np.ndarray) -> np.ndarray:
    """Eigenvalues of a symmetric matrix in nonincreasing order."""
    matrix = symmetrize(np.asarray(matrix, dtype=float))
    if matrix.shape[0] == 0:
        return np.zeros(0)
    return scipy.linalg.eigvalsh(matrix)[::-1]
