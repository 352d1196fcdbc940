"""
Ridge leverage score landmark sampling.

Implements score estimation from a weighted subsample (using only the kernel
columns of the subsample and the kernel diagonal), the conversion of scores
into Bernoulli sampling probabilities, independent Bernoulli selection, and
the two recursive halving samplers: one for a fixed ridge parameter lambda and
one for a fixed target sample size, where lambda is derived at every level
from the tail of the subsample's spectrum.

Weights 1/sqrt(p_i) travel with samples through the recursion; they do not
change the final Nystrom approximation, which drops them.
"""

import csv
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Optional

import numpy as np
import scipy.linalg
from pydantic import BaseModel, ConfigDict, Field, field_validator

from rls_nystrom.core.exceptions import (
    ArgumentError,
    DegenerateKernelError,
    DegenerateScoresError,
    EmptySampleError,
    NystromError,
    with_context,
)
from rls_nystrom.core.kernels import EvalCounter, KernelSpec, kernel_columns, kernel_diagonal
from rls_nystrom.utils.linalg import jittered_cholesky, sorted_eigenvalues, symmetrize
from rls_nystrom.utils.rng import derive_seed, make_rng

logger = logging.getLogger(__name__)

# Multipliers applied to the sampled-ridge residual in each recursion mode
FIXED_LAMBDA_SCORE_MULTIPLIER = 1.5
FIXED_SIZE_SCORE_MULTIPLIER = 5.0

THEORY_OVERSAMPLING = 16.0
THEORY_BASE_CASE_FACTOR = 192.0
THEORY_SIZE_CONSTANT = 384.0
PRACTICAL_SIZE_CONSTANT = 4.0

MAX_SELECTION_ATTEMPTS = 16

# Seed streams per recursion depth
_HALVING_STREAM = 0
_SELECTION_STREAM = 1


class SamplerMode(str, Enum):
    THEORY_FIXED_LAMBDA = "theory_fixed_lambda"
    THEORY_FIXED_SIZE = "theory_fixed_size"
    PRACTICAL = "practical"

    @property
    def is_theory(self) -> bool:
        return self is not SamplerMode.PRACTICAL


class SamplerConfig(BaseModel):
    """Parameters of the recursive samplers.

    oversampling_multiplier and base_case_threshold may be left unset, in which
    case the recursion derives them (see `resolve_base_case_threshold` and the
    practical-mode notes on `probabilities`). size_constant is the c in
    "largest k with c k log(2k/delta) <= s".
    """

    model_config = ConfigDict(frozen=True)

    delta: float = Field(default=0.01, gt=0.0, lt=1.0 / 32.0)
    oversampling_multiplier: Optional[float] = Field(default=None, gt=0.0)
    mode: SamplerMode = SamplerMode.PRACTICAL
    accelerated: bool = False
    base_case_threshold: Optional[int] = Field(default=None, ge=1)
    size_constant: Optional[float] = Field(default=None, gt=0.0)
    seed: int = 0

    @field_validator("seed")
    @classmethod
    def fold_seed(cls, value: int) -> int:
        return int(value) & ((1 << 64) - 1)

    def to_block(self) -> str:
        """Serialize to a flat key=value block, one entry per line."""
        lines = []
        for key, value in self.model_dump().items():
            if isinstance(value, Enum):
                value = value.value
            lines.append(f"{key}={'' if value is None else value}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_block(cls, text: str) -> "SamplerConfig":
        """Parse a key=value block (blank lines and # comments ignored).

        Raises:
            ArgumentError: Malformed line or invalid value
        """
        values: Dict[str, str] = {}
        for number, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ArgumentError(f"line {number}: expected key=value, got '{line}'")
            value = value.strip()
            if value:
                values[key.strip()] = value
        if "accelerated" in values:
            values["accelerated"] = values["accelerated"].lower() in ("1", "true", "yes", "on")
        try:
            return cls(**values)
        except ValueError as e:
            raise ArgumentError(f"invalid sampler configuration: {e}") from None

    def resolve_size_constant(self) -> float:
        if self.size_constant is not None:
            return self.size_constant
        return THEORY_SIZE_CONSTANT if self.mode.is_theory else PRACTICAL_SIZE_CONSTANT


@dataclass
class RidgeScores:
    """Approximate ridge leverage scores of every point at one regularization."""

    scores: np.ndarray
    lam: float
    probabilities: Optional[np.ndarray] = None


@dataclass
class LandmarkSample:
    """Selected point indices with their inclusion probabilities and weights.

    weights[j] = 1 / sqrt(probabilities[j]). lambda_used records the
    regularization of the level that produced the sample, when there was one.
    """

    indices: np.ndarray
    probabilities: np.ndarray
    weights: np.ndarray
    lambda_used: Optional[float] = None

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.int64).ravel()
        self.probabilities = np.asarray(self.probabilities, dtype=float).ravel()
        self.weights = np.asarray(self.weights, dtype=float).ravel()
        if not (self.indices.size == self.probabilities.size == self.weights.size):
            raise ArgumentError("indices, probabilities and weights must have equal length")

    @property
    def size(self) -> int:
        return int(self.indices.size)

    def __len__(self) -> int:
        return self.size

    @classmethod
    def identity(cls, m: int) -> "LandmarkSample":
        """All m points with probability 1 and unit weight."""
        return cls(np.arange(m), np.ones(m), np.ones(m))

    def to_csv(self, path: str) -> None:
        """Write `index,probability,weight` rows with a header line."""
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["index", "probability", "weight"])
            for index, probability, weight in zip(self.indices, self.probabilities, self.weights):
                writer.writerow([int(index), repr(float(probability)), repr(float(weight))])

    @classmethod
    def from_csv(cls, path: str) -> "LandmarkSample":
        with open(path, "r", encoding="utf-8", newline="") as f:
            rows = list(csv.DictReader(f))
        return cls(
            [int(row["index"]) for row in rows],
            [float(row["probability"]) for row in rows],
            [float(row["weight"]) for row in rows],
        )


def residual_scores(columns: np.ndarray, weights: np.ndarray, sample_rows: np.ndarray,
                    diagonal: np.ndarray, lam: float, multiplier: float) -> np.ndarray:
    """Scores (multiplier / lam) * (K - K S (S^T K S + lam I)^-1 S^T K)_ii.

    Args:
        columns: (m, s) unweighted kernel columns K[:, sample]
        weights: (s,) column weights of the weighted selection S
        sample_rows: (s,) row positions of the sampled points within the m rows
        diagonal: (m,) kernel diagonal
        lam: Ridge parameter (> 0)
        multiplier: Score multiplier

    Returns:
        (m,) nonnegative scores
    """
    weighted = columns * weights
    gram = symmetrize(weighted[sample_rows] * weights[:, None])
    factor = jittered_cholesky(gram + lam * np.eye(gram.shape[0]), lam)
    # Solve L Y = (K S)^T; the quadratic form is the squared column norm of Y
    solved = scipy.linalg.solve_triangular(factor, weighted.T, lower=True)
    residual = diagonal - np.einsum("ij,ij->j", solved, solved)
    return (multiplier / lam) * np.maximum(residual, 0.0)


def scores_from_sample(spec: KernelSpec, data, sample: LandmarkSample, lam: float,
                       score_multiplier: float, counter: EvalCounter) -> RidgeScores:
    """Approximate ridge leverage scores of all points from a weighted sample.

    Uses only K S (n * s kernel evaluations) and diag(K) (n evaluations); the
    s x s block S^T K S is read from the rows of K S.

    Raises:
        ArgumentError: lam <= 0 or empty sample
        NumericalError: Solve failure after jitter escalation
    """
    if not lam > 0:
        raise ArgumentError(f"lambda must be positive, got {lam}")
    if sample.size == 0:
        raise ArgumentError("cannot estimate scores from an empty sample")

    columns = kernel_columns(spec, data, sample.indices, counter)
    diagonal = kernel_diagonal(spec, data, counter)
    scores = residual_scores(columns, sample.weights, sample.indices, diagonal, lam, score_multiplier)
    return RidgeScores(scores, lam)


def probabilities(scores: RidgeScores, config: SamplerConfig, k: Optional[int] = None) -> np.ndarray:
    """Bernoulli inclusion probabilities from approximate scores.

    TheoryFixedLambda: p_i = min{1, l_i * 16 log(sum(l) / delta)}
    TheoryFixedSize:   p_i = min{1, l_i * 16 log(2k / delta)}
    Practical:         p_i = min{1, l_i * oversampling_multiplier}

    In practical mode the multiplier must be resolved before calling (the
    recursive samplers do this when the config leaves it unset).

    Raises:
        DegenerateScoresError: If the scores sum to zero or less
        ArgumentError: Missing k in fixed-size theory mode, or unresolved
            practical multiplier
    """
    values = np.asarray(scores.scores, dtype=float)
    if not np.all(np.isfinite(values)):
        raise ArgumentError("scores must be finite")
    total = float(values.sum())
    if total <= 0:
        raise DegenerateScoresError(f"ridge leverage scores sum to {total}")

    if config.mode is SamplerMode.THEORY_FIXED_LAMBDA:
        multiplier = THEORY_OVERSAMPLING * math.log(total / config.delta)
    elif config.mode is SamplerMode.THEORY_FIXED_SIZE:
        if k is None or k < 1:
            raise ArgumentError("fixed-size probabilities need a positive k")
        multiplier = THEORY_OVERSAMPLING * math.log(2.0 * k / config.delta)
    else:
        if config.oversampling_multiplier is None:
            raise ArgumentError("practical mode needs an oversampling multiplier")
        multiplier = config.oversampling_multiplier

    return np.clip(values * multiplier, 0.0, 1.0)


def bernoulli_select(probs: np.ndarray, seed: int) -> LandmarkSample:
    """Include each index independently with its probability.

    An empty draw is retried with seed + 1, up to 16 draws in total.

    Raises:
        ArgumentError: Probabilities outside [0, 1]
        EmptySampleError: All probabilities zero, or 16 empty draws
    """
    probs = np.asarray(probs, dtype=float).ravel()
    if probs.size and (np.any(probs < 0) or np.any(probs > 1) or not np.all(np.isfinite(probs))):
        raise ArgumentError("probabilities must lie in [0, 1]")
    if not np.any(probs > 0):
        raise EmptySampleError("all inclusion probabilities are zero")

    for attempt in range(MAX_SELECTION_ATTEMPTS):
        rng = make_rng(seed + attempt)
        chosen = np.flatnonzero(rng.random(probs.size) < probs)
        if chosen.size:
            if attempt:
                logger.warning(f"Bernoulli selection succeeded after {attempt} empty draw(s)")
            kept = probs[chosen]
            return LandmarkSample(chosen, kept, 1.0 / np.sqrt(kept))

    raise EmptySampleError(f"{MAX_SELECTION_ATTEMPTS} consecutive Bernoulli draws were empty")


def accelerated_cap(n: int, s: int) -> int:
    """Intermediate-level sample size ceil(sqrt((n s + s^3) / n)) for the accelerated sampler."""
    if n < 1 or s < 1:
        raise ArgumentError("n and s must be at least 1")
    return int(math.ceil(math.sqrt((n * s + s ** 3) / n)))


def choose_k(s: int, delta: float, size_constant: float) -> int:
    """Largest integer k >= 1 with c k log(2k / delta) <= s (1 when none qualifies)."""
    def cost(k: int) -> float:
        return size_constant * k * math.log(2.0 * k / delta)

    if cost(1) > s:
        logger.debug(f"No k satisfies c k log(2k/delta) <= {s} with c={size_constant}; using k=1")
        return 1

    low, high = 1, 2
    while cost(high) <= s:
        low, high = high, high * 2
    while high - low > 1:
        middle = (low + high) // 2
        if cost(middle) <= s:
            low = middle
        else:
            high = middle
    return low


def tail_lambda(gram: np.ndarray, k: int) -> float:
    """(1/k) * sum of eigenvalues beyond the k-th; absent eigenvalues count as 0.

    A zero tail is replaced by eps * trace / k.

    Raises:
        DegenerateKernelError: If the matrix has zero trace
    """
    eigenvalues = np.maximum(sorted_eigenvalues(gram), 0.0)
    lam = float(eigenvalues[k:].sum()) / k
    if lam > 0:
        return lam
    trace = float(np.trace(gram))
    if trace <= 0:
        raise DegenerateKernelError("subsample kernel matrix has zero trace")
    return np.finfo(float).eps * trace / k


def resolve_base_case_threshold(config: SamplerConfig, target: Optional[int] = None) -> int:
    """Recursion base-case size.

    Theory modes: ceil(192 log(1/delta)). Practical mode: 2 * target, where the
    fixed-lambda sampler (which has no target) uses ceil(16 log(1/delta)) as
    the target.
    """
    if config.base_case_threshold is not None:
        return config.base_case_threshold
    if config.mode.is_theory:
        return int(math.ceil(THEORY_BASE_CASE_FACTOR * math.log(1.0 / config.delta)))
    if target is None:
        target = int(math.ceil(THEORY_OVERSAMPLING * math.log(1.0 / config.delta)))
    return max(1, 2 * target)


def _halve(m: int, seed: int, depth: int) -> np.ndarray:
    """Positions kept by an independent fair coin per point."""
    rng = make_rng(derive_seed(seed, depth, _HALVING_STREAM))
    return np.flatnonzero(rng.random(m) < 0.5)


def _practical_config(config: SamplerConfig, multiplier: float) -> SamplerConfig:
    return config.model_copy(update={"mode": SamplerMode.PRACTICAL, "oversampling_multiplier": multiplier})


class _Recursion:
    """Shared state of one recursive sampling run."""

    def __init__(self, spec: KernelSpec, features: np.ndarray, config: SamplerConfig, counter: EvalCounter):
        self.spec = spec
        self.features = features
        self.config = config
        self.counter = counter

    def level_inputs(self, positions: np.ndarray, child: LandmarkSample, subset: np.ndarray):
        """Kernel columns, sampled-row positions, weights and diagonal for one level."""
        X = self.features[positions]
        sample_rows = subset[child.indices]
        columns = kernel_columns(self.spec, X, sample_rows, self.counter)
        diagonal = kernel_diagonal(self.spec, X, self.counter)
        return columns, sample_rows, child.weights, diagonal

    def fixed_lambda(self, positions: np.ndarray, lam: float, delta: float, depth: int) -> LandmarkSample:
        m = positions.size
        threshold = resolve_base_case_threshold(self.config)
        if m <= threshold:
            logger.debug(f"depth {depth}: base case with m={m}")
            return LandmarkSample.identity(m)

        try:
            subset = _halve(m, self.config.seed, depth)
            child = self.fixed_lambda(positions[subset], lam, delta / 3.0, depth + 1)
            if child.size == 0:
                raise EmptySampleError("recursive call returned no landmarks")

            columns, sample_rows, weights, diagonal = self.level_inputs(positions, child, subset)
            scores = residual_scores(columns, weights, sample_rows, diagonal, lam,
                                     FIXED_LAMBDA_SCORE_MULTIPLIER)
            ridge = RidgeScores(scores, lam)
            level_config = self.config.model_copy(update={"delta": delta}) if self.config.mode.is_theory \
                else self.config
            if level_config.mode is SamplerMode.THEORY_FIXED_SIZE:
                level_config = level_config.model_copy(update={"mode": SamplerMode.THEORY_FIXED_LAMBDA})
            if not level_config.mode.is_theory and level_config.oversampling_multiplier is None:
                total = float(scores.sum())
                if total <= 0:
                    raise DegenerateScoresError(f"ridge leverage scores sum to {total}")
                level_config = _practical_config(level_config, max(1.0, math.log(total / delta)))
            ridge.probabilities = probabilities(ridge, level_config)
            sample = bernoulli_select(ridge.probabilities, derive_seed(self.config.seed, depth, _SELECTION_STREAM))
        except NystromError as e:
            if "recursion depth" in str(e):
                raise
            raise with_context(e, f"recursion depth {depth}, m={m}") from e

        sample.lambda_used = lam
        logger.debug(f"depth {depth}: m={m}, sub-sample {child.size}, "
                     f"sum(scores)={scores.sum():.3f}, selected {sample.size}")
        return sample

    def fixed_size(self, positions: np.ndarray, s: int, level_s: int, delta: float, depth: int) -> LandmarkSample:
        m = positions.size
        target = s if depth == 0 else level_s
        threshold = s if depth == 0 else max(level_s, resolve_base_case_threshold(self.config, level_s))
        if m <= threshold:
            logger.debug(f"depth {depth}: base case with m={m}")
            return LandmarkSample.identity(m)

        try:
            subset = _halve(m, self.config.seed, depth)
            child = self.fixed_size(positions[subset], s, level_s, delta / 3.0, depth + 1)
            if child.size == 0:
                raise EmptySampleError("recursive call returned no landmarks")

            columns, sample_rows, weights, diagonal = self.level_inputs(positions, child, subset)
            gram = symmetrize(columns[sample_rows] * weights[:, None] * weights)
            k = choose_k(target, delta, self.config.resolve_size_constant())
            lam = tail_lambda(gram, k)
            scores = residual_scores(columns, weights, sample_rows, diagonal, lam,
                                     FIXED_SIZE_SCORE_MULTIPLIER)
            ridge = RidgeScores(scores, lam)

            if self.config.mode.is_theory:
                level_config = self.config.model_copy(
                    update={"delta": delta, "mode": SamplerMode.THEORY_FIXED_SIZE})
            elif self.config.oversampling_multiplier is None:
                total = float(scores.sum())
                if total <= 0:
                    raise DegenerateScoresError(f"ridge leverage scores sum to {total}")
                level_config = _practical_config(self.config, target / total)
            else:
                level_config = self.config
            ridge.probabilities = probabilities(ridge, level_config, k)
            sample = bernoulli_select(ridge.probabilities, derive_seed(self.config.seed, depth, _SELECTION_STREAM))
        except NystromError as e:
            if "recursion depth" in str(e):
                raise
            raise with_context(e, f"recursion depth {depth}, m={m}") from e

        sample.lambda_used = lam
        logger.debug(f"depth {depth}: m={m}, sub-sample {child.size}, k={k}, "
                     f"lambda={lam:.4e}, target {target}, selected {sample.size}")
        return sample


def recursive_rls_fixed_lambda(spec: KernelSpec, data, lam: float, config: SamplerConfig,
                               counter: EvalCounter) -> LandmarkSample:
    """Recursive ridge leverage score sampling at a fixed ridge parameter.

    Points are halved uniformly at random, the half is sampled recursively
    with failure parameter delta/3, scores of all points are estimated from
    that sample with multiplier 3/2, and a Bernoulli draw by the resulting
    probabilities forms the output. Inputs at or below the base-case threshold
    return the identity sample.

    Args:
        spec: Kernel descriptor
        data: Dataset
        lam: Ridge parameter (> 0)
        config: Sampler configuration (a fixed-size theory mode is treated as
            fixed-lambda theory mode; `accelerated` has no effect here)
        counter: Kernel evaluation counter

    Returns:
        Weighted LandmarkSample of data indices
    """
    if not lam > 0:
        raise ArgumentError(f"lambda must be positive, got {lam}")
    if config.accelerated:
        logger.debug("Accelerated mode only applies to fixed-size sampling; ignoring")

    features = np.asarray(getattr(data, "features", data), dtype=float)
    n = features.shape[0]
    start = counter.count
    sample = _Recursion(spec, features, config, counter).fixed_lambda(np.arange(n), lam, config.delta, 0)
    sample.lambda_used = lam
    logger.info(f"Fixed-lambda sampling selected {sample.size} of {n} points "
                f"using {counter.count - start} kernel evaluations")
    return sample


def recursive_rls_fixed_size(spec: KernelSpec, data, s: int, config: SamplerConfig,
                             counter: EvalCounter) -> LandmarkSample:
    """Recursive ridge leverage score sampling for a target sample size s.

    At each level lambda is set to the average of the subsample Gram
    matrix's eigenvalues beyond the k-th, where k is the largest integer with
    c k log(2k/delta) <= s, and scores use multiplier 5. Inputs with m <= s
    return the identity sample. With `config.accelerated`, recursive calls
    below the top level target min(s, accelerated_cap(n, s)) points.

    Returns:
        Weighted LandmarkSample of data indices, with lambda_used set to the
        top-level lambda
    """
    if s < 1:
        raise ArgumentError(f"sample size must be at least 1, got {s}")

    features = np.asarray(getattr(data, "features", data), dtype=float)
    n = features.shape[0]
    level_s = min(s, accelerated_cap(n, s)) if config.accelerated else s
    if config.accelerated:
        logger.debug(f"Accelerated sampling: intermediate levels target {level_s} points")

    start = counter.count
    sample = _Recursion(spec, features, config, counter).fixed_size(np.arange(n), s, level_s, config.delta, 0)
    logger.info(f"Fixed-size sampling selected {sample.size} of {n} points (target {s}) "
                f"using {counter.count - start} kernel evaluations")
    return sample


def sample_from_scores(exact_scores: np.ndarray, config: SamplerConfig, lam: float,
                       seed: Optional[int] = None) -> LandmarkSample:
    """Basic (non-recursive) sampler driven by exact ridge leverage scores.

    Args:
        exact_scores: Exact scores l_i, e.g. from the dense oracle
        config: Sampler configuration; practical mode uses the configured
            oversampling multiplier, or 2 when unset
        lam: The ridge parameter the scores were computed at
        seed: Selection seed (defaults to config.seed)

    Returns:
        Weighted LandmarkSample
    """
    ridge = RidgeScores(np.maximum(np.asarray(exact_scores, dtype=float), 0.0), lam)
    level_config = config
    if config.mode is SamplerMode.THEORY_FIXED_SIZE:
        level_config = config.model_copy(update={"mode": SamplerMode.THEORY_FIXED_LAMBDA})
    if not level_config.mode.is_theory and level_config.oversampling_multiplier is None:
        level_config = _practical_config(level_config, 2.0)
    ridge.probabilities = probabilities(ridge, level_config)
    sample = bernoulli_select(ridge.probabilities, config.seed if seed is None else seed)
    sample.lambda_used = lam
    return sample
