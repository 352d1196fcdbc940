"""
Seeded synthetic instances: clustered Gaussian point clouds and dense kernels
with a prescribed spectrum.
"""

import logging
from typing import List, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from rls_nystrom.core.exceptions import ArgumentError
from rls_nystrom.core.oracle import DenseKernel
from rls_nystrom.data.datasets import Dataset
from rls_nystrom.utils.linalg import symmetrize
from rls_nystrom.utils.rng import make_rng

logger = logging.getLogger(__name__)

DOMINANT_SPREAD = 0.05
SMALL_SPREAD = 0.3
SEPARATION = 10.0


class ClusterSpec(BaseModel):
    """Sizes, centers and per-cluster spreads of a clustered point cloud."""

    model_config = ConfigDict(frozen=True)

    cluster_sizes: List[int] = Field(min_length=1)
    centers: List[List[float]]
    spreads: List[float]

    @field_validator("cluster_sizes")
    @classmethod
    def check_sizes(cls, sizes: List[int]) -> List[int]:
        if any(size < 0 for size in sizes) or sum(sizes) < 1:
            raise ValueError("cluster sizes must be nonnegative with a positive total")
        return sizes

    @field_validator("spreads")
    @classmethod
    def check_spreads(cls, spreads: List[float]) -> List[float]:
        if any(spread < 0 for spread in spreads):
            raise ValueError("spreads must be nonnegative")
        return spreads

    @model_validator(mode="after")
    def check_shapes(self) -> "ClusterSpec":
        count = len(self.cluster_sizes)
        if len(self.centers) != count or len(self.spreads) != count:
            raise ValueError("cluster_sizes, centers and spreads must have equal length")
        if len({len(center) for center in self.centers}) != 1:
            raise ValueError("all centers must have the same dimension")
        if len({tuple(center) for center in self.centers}) != count:
            raise ValueError("cluster centers must be distinct")
        return self

    @property
    def n(self) -> int:
        return sum(self.cluster_sizes)

    @property
    def d(self) -> int:
        return len(self.centers[0])


def clustered_gaussian(spec: ClusterSpec, seed: int) -> Dataset:
    """Draw each cluster's points as center + spread * N(0, I); labels are cluster ids."""
    rng = make_rng(seed)
    centers = np.asarray(spec.centers, dtype=float)
    blocks = []
    labels = []
    for cluster, (size, spread) in enumerate(zip(spec.cluster_sizes, spec.spreads)):
        blocks.append(centers[cluster] + spread * rng.standard_normal((size, spec.d)))
        labels.append(np.full(size, cluster, dtype=float))
    return Dataset(np.vstack(blocks), np.concatenate(labels))


def dominant_cluster_spec(n: int, d: int = 2, small_clusters: int = 10, seed: int = 0,
                          dominant_spread: float = DOMINANT_SPREAD,
                          small_spread: float = SMALL_SPREAD) -> ClusterSpec:
    """One cluster of 9n/10 points plus `small_clusters` equal small clusters.

    Centers sit on a scaled random direction set so every pair is at least
    SEPARATION apart, whatever the spreads. With the default spreads the
    dominant cluster is nearly low-rank under a unit-bandwidth Gaussian
    kernel, so the small clusters carry most of the ridge leverage.
    """
    if n < small_clusters + 1:
        raise ArgumentError(f"n={n} is too small for {small_clusters} small clusters")
    dominant = (9 * n) // 10
    remainder = n - dominant
    sizes = [dominant] + [remainder // small_clusters + (1 if i < remainder % small_clusters else 0)
                          for i in range(small_clusters)]

    rng = make_rng(seed)
    centers = [np.zeros(d)]
    while len(centers) < small_clusters + 1:
        direction = rng.standard_normal(d)
        direction /= np.linalg.norm(direction)
        candidate = direction * SEPARATION * rng.uniform(1.0, 4.0)
        if all(np.linalg.norm(candidate - center) >= SEPARATION for center in centers):
            centers.append(candidate)

    return ClusterSpec(
        cluster_sizes=sizes,
        centers=[center.tolist() for center in centers],
        spreads=[dominant_spread] + [small_spread] * small_clusters,
    )


def random_orthogonal(n: int, seed: int) -> np.ndarray:
    """Orthogonal matrix from the QR decomposition of a seeded Gaussian matrix, R's diagonal made positive."""
    Q, R = np.linalg.qr(make_rng(seed).standard_normal((n, n)))
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs


def spectrum_kernel(eigenvalues: Sequence[float], seed: int) -> DenseKernel:
    """Dense PSD kernel Q diag(eigenvalues) Q^T with a seeded random orthogonal Q.

    Raises:
        ArgumentError: Negative or unsorted eigenvalues
    """
    eigenvalues = np.asarray(eigenvalues, dtype=float).ravel()
    if eigenvalues.size == 0:
        raise ArgumentError("at least one eigenvalue is required")
    if np.any(eigenvalues < 0):
        raise ArgumentError("eigenvalues must be nonnegative")
    if np.any(np.diff(eigenvalues) > 0):
        raise ArgumentError("eigenvalues must be sorted nonincreasing")

    Q = random_orthogonal(eigenvalues.size, seed)
    return DenseKernel(symmetrize((Q * eigenvalues) @ Q.T))
