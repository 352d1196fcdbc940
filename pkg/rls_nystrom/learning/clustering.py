"""
k-means and PCA on the Nystrom feature map.

Because F F^T = K~, Euclidean k-means on the rows of F optimizes the kernel
k-means objective of K~, and the top right singular directions of F give the
approximate kernel principal components.
"""

import concurrent.futures
import logging
import math
from typing import List, NamedTuple, Optional, Tuple

import numpy as np
from sklearn.cluster import kmeans_plusplus

from rls_nystrom.core.exceptions import ArgumentError, NumericalError
from rls_nystrom.core.kernels import EvalCounter, KernelSpec
from rls_nystrom.core.nystrom import NystromFactors, build_factors, feature_map
from rls_nystrom.core.sampling import SamplerConfig, recursive_rls_fixed_size
from rls_nystrom.utils.rng import derive_seed, seed32

logger = logging.getLogger(__name__)

DEFAULT_RESTARTS = 3
DEFAULT_ITERATIONS = 100
# Relative slack allowed on the objective between Lloyd iterations
MONOTONE_TOLERANCE = 1e-9


class LloydResult(NamedTuple):
    labels: np.ndarray
    objective: float
    history: List[float]


class KernelClustering(NamedTuple):
    labels: np.ndarray
    objective: float
    factors: NystromFactors


class KernelPCA(NamedTuple):
    components: np.ndarray
    captured: float
    projected: np.ndarray
    factors: NystromFactors


def _assign(features: np.ndarray, centroids: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    distances = (
        np.einsum("ij,ij->i", features, features)[:, None]
        - 2.0 * features @ centroids.T
        + np.einsum("ij,ij->i", centroids, centroids)[None, :]
    )
    labels = np.argmin(distances, axis=1)
    return labels, np.maximum(distances[np.arange(features.shape[0]), labels], 0.0)


def _within_cluster_cost(features: np.ndarray, labels: np.ndarray, k: int) -> float:
    cost = 0.0
    for cluster in range(k):
        members = features[labels == cluster]
        if members.shape[0]:
            cost += float(np.sum((members - members.mean(axis=0)) ** 2))
    return cost


def lloyd(features: np.ndarray, centroids: np.ndarray, iterations: int) -> LloydResult:
    """Lloyd iterations from the given centroids.

    The within-cluster squared-distance sum is recorded after every
    assignment step and must never increase.

    Raises:
        NumericalError: If the objective increases between iterations
    """
    k = centroids.shape[0]
    centroids = centroids.copy()
    labels, _ = _assign(features, centroids)
    history = [_within_cluster_cost(features, labels, k)]

    for _ in range(iterations):
        for cluster in range(k):
            members = features[labels == cluster]
            # Empty clusters keep their centroid
            if members.shape[0]:
                centroids[cluster] = members.mean(axis=0)
        new_labels, _ = _assign(features, centroids)
        objective = _within_cluster_cost(features, new_labels, k)
        if objective > history[-1] * (1.0 + MONOTONE_TOLERANCE) + MONOTONE_TOLERANCE:
            raise NumericalError(f"k-means objective increased from {history[-1]} to {objective}")
        history.append(objective)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels

    return LloydResult(labels, history[-1], history)


def kmeans_on_features(features: np.ndarray, k: int, restarts: int = DEFAULT_RESTARTS,
                       iterations: int = DEFAULT_ITERATIONS, seed: int = 0,
                       max_workers: int = 1) -> Tuple[np.ndarray, float]:
    """Best-of-restarts k-means with k-means++ seeding.

    Args:
        features: (n, r) feature rows
        k: Number of clusters (1 <= k <= n)
        restarts: Independent seeded restarts
        iterations: Maximum Lloyd iterations per restart
        seed: Base seed; restart i uses a seed derived from (seed, i)
        max_workers: Threads used for restarts

    Returns:
        (labels, objective) of the restart with the lowest objective
    """
    features = np.asarray(features, dtype=float)
    n = features.shape[0]
    if not 1 <= k <= n:
        raise ArgumentError(f"k must lie in [1, {n}], got {k}")
    if restarts < 1:
        raise ArgumentError("restarts must be at least 1")

    def run(restart: int) -> LloydResult:
        centers, _ = kmeans_plusplus(features, n_clusters=k,
                                     random_state=seed32(derive_seed(seed, restart)))
        return lloyd(features, centers, iterations)

    results = {}
    with concurrent.futures.ThreadPoolExecutor(max_workers=max(1, max_workers)) as executor:
        future_to_restart = {executor.submit(run, restart): restart for restart in range(restarts)}
        for future in concurrent.futures.as_completed(future_to_restart):
            restart = future_to_restart[future]
            results[restart] = future.result()
            logger.debug(f"k-means restart {restart}: objective {results[restart].objective:.6g}")

    best = min(range(restarts), key=lambda restart: (results[restart].objective, restart))
    return results[best].labels, results[best].objective


def kpca_on_features(features: np.ndarray, k: int) -> Tuple[np.ndarray, float]:
    """Top-k right singular directions of the feature matrix.

    Returns:
        (components, captured): (r, k) orthonormal components and the sum of
        the top-k squared singular values

    Raises:
        ArgumentError: If k exceeds the numerical rank of the features
    """
    features = np.asarray(features, dtype=float)
    if k < 1:
        raise ArgumentError(f"k must be at least 1, got {k}")
    _, singular, vt = np.linalg.svd(features, full_matrices=False)
    tol = max(features.shape) * np.finfo(float).eps * (singular[0] if singular.size else 0.0)
    rank = int(np.count_nonzero(singular > tol))
    if k > rank:
        raise ArgumentError(f"k={k} exceeds the feature rank {rank}")
    return vt[:k].T, float(np.sum(singular[:k] ** 2))


def default_landmarks(k: int, n: int) -> int:
    """Landmark budget for k clusters or components: about 2 k log k, at least 2k, at most n."""
    return min(n, max(2 * k, int(math.ceil(2.0 * k * math.log(max(k, 2))))))


def _sampled_features(spec: KernelSpec, data, s: int, config: SamplerConfig,
                      counter: EvalCounter) -> Tuple[np.ndarray, NystromFactors]:
    sample = recursive_rls_fixed_size(spec, data, s, config, counter)
    factors = build_factors(spec, data, sample, counter)
    return feature_map(factors), factors


def kernel_kmeans(spec: KernelSpec, data, k: int, s: Optional[int] = None,
                  config: Optional[SamplerConfig] = None, counter: Optional[EvalCounter] = None,
                  restarts: int = DEFAULT_RESTARTS, iterations: int = DEFAULT_ITERATIONS,
                  max_workers: int = 1) -> KernelClustering:
    """Approximate kernel k-means: fixed-size RLS sampling, then k-means on the feature map."""
    config = config or SamplerConfig()
    counter = counter or EvalCounter()
    n = np.asarray(getattr(data, "features", data)).shape[0]
    s = s or default_landmarks(k, n)
    features, factors = _sampled_features(spec, data, s, config, counter)
    labels, objective = kmeans_on_features(features, k, restarts, iterations, config.seed, max_workers)
    logger.info(f"Kernel k-means with k={k} on {factors.s} landmarks: objective {objective:.6g}")
    return KernelClustering(labels, objective, factors)


def kernel_pca(spec: KernelSpec, data, k: int, s: Optional[int] = None,
               config: Optional[SamplerConfig] = None,
               counter: Optional[EvalCounter] = None) -> KernelPCA:
    """Approximate kernel PCA on the feature map; `projected` is features @ components."""
    config = config or SamplerConfig()
    counter = counter or EvalCounter()
    n = np.asarray(getattr(data, "features", data)).shape[0]
    s = s or default_landmarks(k, n)
    features, factors = _sampled_features(spec, data, s, config, counter)
    components, captured = kpca_on_features(features, k)
    logger.info(f"Kernel PCA with k={k} on {factors.s} landmarks: captured {captured:.6g}")
    return KernelPCA(components, captured, features @ components, factors)
