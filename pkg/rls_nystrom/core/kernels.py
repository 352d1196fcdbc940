"""
Kernel functions with exact accounting of kernel evaluations.

The number of scalar kernel evaluations is the primary cost metric of every
sampler in this package, so all kernel access goes through the functions here
and each one adds its exact logical count to an EvalCounter, even when the
values are computed in vectorized blocks.
"""

import logging
import threading
from typing import Literal, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from sklearn.metrics.pairwise import linear_kernel, polynomial_kernel, rbf_kernel

from rls_nystrom.core.exceptions import ArgumentError

logger = logging.getLogger(__name__)

DEFAULT_BLOCK_ROWS = 4096


class KernelSpec(BaseModel):
    """Descriptor of a positive semidefinite kernel function.

    Gaussian: exp(-||x - y||^2 / (2 sigma^2)); Linear: <x, y>;
    Polynomial: (<x, y> + offset)^degree.
    """

    model_config = ConfigDict(frozen=True)

    kind: Literal["gaussian", "linear", "poly"]
    sigma: Optional[float] = Field(default=None, gt=0)
    degree: Optional[int] = Field(default=None, ge=1)
    offset: Optional[float] = Field(default=None, ge=0)

    @model_validator(mode="after")
    def check_parameters(self) -> "KernelSpec":
        if self.kind == "gaussian" and self.sigma is None:
            raise ValueError("gaussian kernel requires sigma")
        if self.kind == "poly" and self.degree is None:
            raise ValueError("polynomial kernel requires degree")
        return self

    @classmethod
    def gaussian(cls, sigma: float) -> "KernelSpec":
        return cls(kind="gaussian", sigma=sigma)

    @classmethod
    def linear(cls) -> "KernelSpec":
        return cls(kind="linear")

    @classmethod
    def polynomial(cls, degree: int, offset: float = 0.0) -> "KernelSpec":
        return cls(kind="poly", degree=degree, offset=offset)

    @classmethod
    def parse(cls, text: str) -> "KernelSpec":
        """Parse a config string such as `gaussian:sigma=2.5` or `poly:degree=3,offset=1`.

        Raises:
            ArgumentError: Unknown kind, malformed parameters or invalid values
        """
        kind, _, params_text = text.strip().partition(":")
        kind = kind.strip().lower()
        aliases = {"rbf": "gaussian", "polynomial": "poly"}
        kind = aliases.get(kind, kind)

        params = {}
        for item in filter(None, (part.strip() for part in params_text.split(","))):
            key, sep, value = item.partition("=")
            if not sep:
                raise ArgumentError(f"malformed kernel parameter '{item}' in '{text}'")
            params[key.strip().lower()] = value.strip()

        try:
            if kind == "gaussian":
                return cls.gaussian(float(params.pop("sigma")))
            if kind == "linear":
                return cls.linear()
            if kind == "poly":
                return cls.polynomial(int(params.pop("degree")), float(params.pop("offset", 0.0)))
        except KeyError as e:
            raise ArgumentError(f"kernel '{kind}' is missing parameter {e}") from None
        except ValueError as e:
            raise ArgumentError(f"invalid kernel parameters in '{text}': {e}") from None
        finally:
            if params and kind in ("gaussian", "linear", "poly"):
                logger.warning(f"Ignoring unknown kernel parameters: {sorted(params)}")

        raise ArgumentError(f"unknown kernel kind '{kind}' (expected gaussian, linear or poly)")

    def __str__(self) -> str:
        if self.kind == "gaussian":
            return f"gaussian:sigma={self.sigma!r}"
        if self.kind == "poly":
            return f"poly:degree={self.degree},offset={self.offset or 0.0!r}"
        return "linear"

    @property
    def gamma(self) -> float:
        """Gaussian precision 1 / (2 sigma^2) in scikit-learn's parametrization."""
        return 1.0 / (2.0 * self.sigma ** 2)


class EvalCounter:
    """Thread-safe monotone count of scalar kernel evaluations."""

    def __init__(self):
        self._count = 0
        self._lock = threading.Lock()

    @property
    def count(self) -> int:
        return self._count

    def add(self, amount: int) -> None:
        if amount < 0:
            raise ArgumentError("kernel evaluation counts cannot decrease")
        with self._lock:
            self._count += int(amount)

    def __repr__(self) -> str:
        return f"EvalCounter(count={self._count})"


def _as_rows(matrix) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim == 1:
        matrix = matrix.reshape(1, -1)
    return matrix


def kernel_block(spec: KernelSpec, X: np.ndarray, Y: np.ndarray,
                 counter: Optional[EvalCounter] = None) -> np.ndarray:
    """Kernel matrix between the rows of X and the rows of Y.

    Args:
        spec: Kernel descriptor
        X: (a, d) matrix
        Y: (b, d) matrix
        counter: Incremented by a * b when given

    Returns:
        (a, b) matrix of kernel values
    """
    X = _as_rows(X)
    Y = _as_rows(Y)
    if X.shape[1] != Y.shape[1]:
        raise ArgumentError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")

    if X.shape[0] == 0 or Y.shape[0] == 0:
        return np.zeros((X.shape[0], Y.shape[0]))

    if spec.kind == "gaussian":
        block = rbf_kernel(X, Y, gamma=spec.gamma)
    elif spec.kind == "linear":
        block = linear_kernel(X, Y)
    else:
        block = polynomial_kernel(X, Y, degree=spec.degree, gamma=1.0, coef0=spec.offset or 0.0)

    if counter is not None:
        counter.add(X.shape[0] * Y.shape[0])
    return block


def evaluate(spec: KernelSpec, x: np.ndarray, y: np.ndarray, counter: EvalCounter) -> float:
    """Evaluate K(x, y) for two points.

    Raises:
        ArgumentError: If x and y differ in dimension
    """
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise ArgumentError(f"dimension mismatch: {x.shape[0]} vs {y.shape[0]}")

    if spec.kind == "gaussian":
        diff = x - y
        value = float(np.exp(-np.dot(diff, diff) / (2.0 * spec.sigma ** 2)))
    elif spec.kind == "linear":
        value = float(np.dot(x, y))
    else:
        value = float((np.dot(x, y) + (spec.offset or 0.0)) ** spec.degree)

    counter.add(1)
    return value


def kernel_columns(spec: KernelSpec, data, landmarks: Sequence[int], counter: EvalCounter,
                   block_rows: int = DEFAULT_BLOCK_ROWS) -> np.ndarray:
    """Columns of the kernel matrix for a set of landmark indices.

    Args:
        spec: Kernel descriptor
        data: Dataset (or raw (n, d) feature matrix)
        landmarks: Indices in [0, n)
        counter: Incremented by exactly n * s
        block_rows: Rows computed per vectorized block

    Returns:
        (n, s) matrix whose column j holds K(x_i, x_landmarks[j])

    Raises:
        ArgumentError: If an index is out of range
    """
    X = getattr(data, "features", data)
    X = _as_rows(X)
    n = X.shape[0]
    landmarks = np.asarray(landmarks, dtype=int).ravel()
    if landmarks.size and (landmarks.min() < 0 or landmarks.max() >= n):
        raise ArgumentError(f"landmark index out of range [0, {n})")

    s = landmarks.size
    columns = np.empty((n, s))
    if s == 0:
        return columns

    L = X[landmarks]
    for start in range(0, n, block_rows):
        stop = min(start + block_rows, n)
        columns[start:stop] = kernel_block(spec, X[start:stop], L)

    counter.add(n * s)
    return columns


def kernel_diagonal(spec: KernelSpec, data, counter: EvalCounter) -> np.ndarray:
    """Diagonal K(x_i, x_i) of the kernel matrix; counter += n."""
    X = _as_rows(getattr(data, "features", data))
    n = X.shape[0]
    if spec.kind == "gaussian":
        diagonal = np.ones(n)
    else:
        norms = np.einsum("ij,ij->i", X, X)
        if spec.kind == "linear":
            diagonal = norms
        else:
            diagonal = (norms + (spec.offset or 0.0)) ** spec.degree

    counter.add(n)
    return diagonal


def gram_matrix(spec: KernelSpec, data, counter: Optional[EvalCounter] = None) -> np.ndarray:
    """Full symmetric kernel matrix (dense; for oracle and tests only)."""
    X = _as_rows(getattr(data, "features", data))
    K = kernel_block(spec, X, X, counter)
    return 0.5 * (K + K.T)
