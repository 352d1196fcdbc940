"""
Approximate kernel ridge regression.

With the Nystrom feature map F (F F^T = K~) the dual coefficients
alpha = (K~ + lam I)^-1 y follow from the Woodbury identity

    alpha = (1 / lam) (y - F (F^T F + lam I)^-1 F^T y),

which only factors an s x s system. Predictions use the precomputed weights
w = Winv C^T alpha, so a new point costs exactly s kernel evaluations.
"""

import logging
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from rls_nystrom.baselines.rff import RFFMap, rff_transform
from rls_nystrom.core.container import read_container, write_container
from rls_nystrom.core.exceptions import ArgumentError
from rls_nystrom.core.kernels import EvalCounter, KernelSpec, kernel_block
from rls_nystrom.core.nystrom import NystromFactors, feature_map
from rls_nystrom.utils.linalg import cholesky_solve, jittered_cholesky, symmetrize

logger = logging.getLogger(__name__)

CONTAINER_KIND = "krr"


def factors_path(path: str) -> str:
    """Path of the factors container saved next to a model: model.bin -> model.factors.bin."""
    root, ext = os.path.splitext(path)
    return f"{root}.factors{ext or '.bin'}"


@dataclass(frozen=True)
class KRRModel:
    """Fitted approximate kernel ridge regression model."""

    alpha: np.ndarray
    predictor_weights: np.ndarray
    landmark_indices: np.ndarray
    lam: float
    kernel: KernelSpec

    @property
    def s(self) -> int:
        return self.predictor_weights.shape[0]

    def save(self, path: str, factors: Optional[NystromFactors] = None) -> None:
        """Write the model container, and the factors container at factors_path(path) if given."""
        write_container(path, CONTAINER_KIND, {"lambda": self.lam, "kernel": str(self.kernel)}, {
            "alpha": self.alpha,
            "predictor_weights": self.predictor_weights,
            "landmark_indices": self.landmark_indices,
        })
        if factors is not None:
            factors.save(factors_path(path))

    @classmethod
    def load(cls, path: str) -> "KRRModel":
        metadata, arrays = read_container(path, CONTAINER_KIND)
        return cls(arrays["alpha"], arrays["predictor_weights"], arrays["landmark_indices"],
                   float(metadata["lambda"]), KernelSpec.parse(metadata["kernel"]))


def _check_lambda(lam: float) -> None:
    if not lam > 0:
        raise ArgumentError(f"lambda must be positive, got {lam}")


def _ridge_core(F: np.ndarray, y: np.ndarray, lam: float) -> np.ndarray:
    """(F^T F + lam I)^-1 F^T y through a jittered Cholesky factor."""
    gram = symmetrize(F.T @ F) + lam * np.eye(F.shape[1])
    factor = jittered_cholesky(gram, lam)
    if factor.size == 0:
        return np.zeros(0)
    return cholesky_solve(factor, F.T @ y)


def krr_fit(factors: NystromFactors, y: np.ndarray, lam: float) -> KRRModel:
    """Fit alpha = (K~ + lam I)^-1 y and the landmark predictor weights.

    Raises:
        ArgumentError: lam <= 0 or label length mismatch
        NumericalError: The s x s solve fails after jitter escalation
    """
    _check_lambda(lam)
    y = np.asarray(y, dtype=float).ravel()
    if y.shape[0] != factors.n:
        raise ArgumentError(f"{y.shape[0]} labels for {factors.n} points")

    F = feature_map(factors)
    alpha = (y - F @ _ridge_core(F, y, lam)) / lam
    weights = factors.Winv @ (factors.C.T @ alpha)

    logger.info(f"Fitted approximate KRR: n={factors.n}, s={factors.s}, lambda={lam:.4g}")
    return KRRModel(alpha, weights, factors.landmark_indices.copy(), float(lam), factors.kernel)


def _landmark_points(model: KRRModel, data) -> np.ndarray:
    X = np.asarray(getattr(data, "features", data), dtype=float)
    return X[model.landmark_indices]


def krr_predict(model: KRRModel, data, x_new: np.ndarray, counter: EvalCounter) -> float:
    """Predict one point: k(x_new, landmarks)^T w, exactly s kernel evaluations."""
    landmarks = _landmark_points(model, data)
    x_new = np.asarray(x_new, dtype=float).ravel()
    if x_new.shape[0] != landmarks.shape[1]:
        raise ArgumentError(f"point has dimension {x_new.shape[0]}, model expects {landmarks.shape[1]}")
    return float(kernel_block(model.kernel, x_new, landmarks, counter)[0] @ model.predictor_weights)


def krr_predict_batch(model: KRRModel, data, X_new: np.ndarray, counter: EvalCounter) -> np.ndarray:
    """Predict every row of X_new; counter += rows * s."""
    landmarks = _landmark_points(model, data)
    X_new = np.asarray(getattr(X_new, "features", X_new), dtype=float)
    if X_new.ndim == 1:
        X_new = X_new.reshape(1, -1)
    if X_new.shape[1] != landmarks.shape[1]:
        raise ArgumentError(f"points have dimension {X_new.shape[1]}, model expects {landmarks.shape[1]}")
    return kernel_block(model.kernel, X_new, landmarks, counter) @ model.predictor_weights


def fitted_values(model: KRRModel, factors: NystromFactors) -> np.ndarray:
    """In-sample predictions K~ alpha = C w."""
    return factors.C @ model.predictor_weights


@dataclass(frozen=True)
class RFFRidgeModel:
    """Primal ridge regression on random Fourier features."""

    rff: RFFMap
    coef: np.ndarray
    lam: float


def rff_ridge_fit(rff: RFFMap, data, y: np.ndarray, lam: float) -> RFFRidgeModel:
    """coef = (Z^T Z + lam I)^-1 Z^T y."""
    _check_lambda(lam)
    Z = rff_transform(rff, data)
    y = np.asarray(y, dtype=float).ravel()
    if y.shape[0] != Z.shape[0]:
        raise ArgumentError(f"{y.shape[0]} labels for {Z.shape[0]} points")
    return RFFRidgeModel(rff, _ridge_core(Z, y, lam), float(lam))


def rff_ridge_predict(model: RFFRidgeModel, X_new) -> np.ndarray:
    return rff_transform(model.rff, X_new) @ model.coef


def rmse(predicted: np.ndarray, actual: np.ndarray) -> float:
    predicted = np.asarray(predicted, dtype=float).ravel()
    actual = np.asarray(actual, dtype=float).ravel()
    if predicted.shape != actual.shape:
        raise ArgumentError("prediction and label lengths differ")
    return float(np.sqrt(np.mean((predicted - actual) ** 2)))


def classification_error(predicted: np.ndarray, actual: np.ndarray, threshold: float = 0.0) -> float:
    """Fraction of points whose thresholded prediction sign differs from the +/-1 label.

    Raises:
        ArgumentError: Length mismatch or a label other than +1 or -1
    """
    predicted = np.asarray(predicted, dtype=float).ravel()
    actual = np.asarray(actual, dtype=float).ravel()
    if predicted.shape != actual.shape:
        raise ArgumentError("prediction and label lengths differ")
    if not is_plus_minus_one(actual):
        raise ArgumentError(f"classification labels must be +1 or -1, got {np.unique(actual)[:5].tolist()}")
    signs = np.where(predicted >= threshold, 1.0, -1.0)
    return float(np.mean(signs != actual))


def is_plus_minus_one(labels: np.ndarray) -> bool:
    return bool(np.all(np.abs(np.asarray(labels, dtype=float)) == 1.0))
