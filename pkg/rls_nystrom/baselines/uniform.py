"""Uniform landmark selection, the classic Nystrom baseline."""

import logging

import numpy as np

from rls_nystrom.core.exceptions import ArgumentError
from rls_nystrom.core.sampling import LandmarkSample
from rls_nystrom.utils.rng import make_rng

logger = logging.getLogger(__name__)


def uniform_sample(n: int, s: int, seed: int) -> LandmarkSample:
    """Draw s distinct indices from [0, n) uniformly without replacement.

    Every index is included with probability s / n; weights are 1 and are not
    used downstream.

    Raises:
        ArgumentError: Unless 1 <= s <= n
    """
    if n < 1 or not 1 <= s <= n:
        raise ArgumentError(f"uniform sampling needs 1 <= s <= n, got s={s}, n={n}")

    indices = np.sort(make_rng(seed).choice(n, size=s, replace=False))
    logger.debug(f"Uniform sample of {s} of {n} points")
    return LandmarkSample(indices, np.full(s, s / n), np.ones(s))
