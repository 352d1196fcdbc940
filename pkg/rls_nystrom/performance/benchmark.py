"""
Benchmark harness comparing landmark selection methods.

For every (method, s, trial) the runner builds an approximation, times it,
counts its kernel evaluations and estimates its spectral error on a seeded
evaluation subset shared by all methods of the same trial. Results are
written as JSON lines plus a CSV for error-vs-s and error-vs-time plots.
"""

import concurrent.futures
import csv
import json
import os
import time
from datetime import datetime
from enum import Enum
from typing import Iterable, List, Optional, Sequence

import numpy as np
import psutil
from pydantic import BaseModel, ConfigDict, Field
from tqdm import tqdm

from rls_nystrom.baselines.rff import estimate_rff_spectral_error, rff_build
from rls_nystrom.baselines.uniform import uniform_sample
from rls_nystrom.core.exceptions import ArgumentError
from rls_nystrom.core.kernels import EvalCounter, KernelSpec
from rls_nystrom.core.nystrom import NystromSettings, build_factors, estimate_spectral_error
from rls_nystrom.core.oracle import ORACLE_MAX_N, DenseKernel, exact_deff, lambda_for_k, rls_nystrom_exact
from rls_nystrom.core.sampling import SamplerConfig, SamplerMode, choose_k, recursive_rls_fixed_size
from rls_nystrom.utils.logging_config import get_logger
from rls_nystrom.utils.rng import derive_seed

logger = get_logger(__name__)

# Seed stream of the evaluation subset, shared by all methods in a trial
_EVALUATION_STREAM = 7


class BenchMethod(str, Enum):
    RLS = "rls"
    RLS_ACCELERATED = "rls_accelerated"
    UNIFORM = "uniform"
    RFF = "rff"
    RLS_EXACT = "rls_exact"


class BenchResult(BaseModel):
    """One benchmark measurement.

    For rff, `s` is the feature count D. For sampling methods it is the number
    of landmarks actually selected, while `requested_s` keeps the grid value.
    """

    model_config = ConfigDict(use_enum_values=True)

    method: BenchMethod
    s: int = Field(ge=0)
    requested_s: int = Field(ge=1)
    trial: int = Field(ge=0)
    seed: int
    spectral_error: float = Field(ge=0.0)
    wall_time_seconds: float = Field(ge=0.0)
    kernel_evals: int = Field(ge=0)
    subset_size: int = Field(ge=1)
    lambda_used: Optional[float] = None
    memory_delta_bytes: int = 0


CSV_FIELDS = list(BenchResult.model_fields)


def bench_result_schema() -> dict:
    """JSON schema every emitted result line validates against."""
    return BenchResult.model_json_schema()


class BenchmarkRunner:
    """Runs a (method x size x trial) grid on one dataset."""

    def __init__(self, spec: KernelSpec, data, config: Optional[SamplerConfig] = None,
                 settings: Optional[NystromSettings] = None, results_dir: Optional[str] = None,
                 max_workers: int = 1, progress: bool = True):
        """Initialize the runner.

        Args:
            spec: Kernel descriptor
            data: Dataset to benchmark on
            config: Sampler configuration; its seed is the base seed of the grid
            settings: Spectral-error estimation settings
            results_dir: Directory for timestamped result folders (None: no files)
            max_workers: Threads used to run trials
            progress: Show a progress bar on stderr
        """
        self.spec = spec
        self.data = data
        self.features = np.asarray(getattr(data, "features", data), dtype=float)
        self.config = config or SamplerConfig()
        self.settings = settings or NystromSettings()
        self.results_dir = results_dir
        self.max_workers = max(1, max_workers)
        self.progress = progress

        n = self.features.shape[0]
        if self.settings.subset_size > n:
            logger.warning(f"Evaluation subset {self.settings.subset_size} exceeds n={n}; clamping to {n}")
            self.settings = self.settings.model_copy(update={"subset_size": n})

        self._dense = None

    @property
    def n(self) -> int:
        return self.features.shape[0]

    def trial_seed(self, trial: int) -> int:
        return derive_seed(self.config.seed, trial)

    def _dense_kernel(self) -> DenseKernel:
        if self._dense is None:
            self._dense = DenseKernel.from_data(self.spec, self.features)
        return self._dense

    def _sample(self, method: BenchMethod, s: int, seed: int, counter: EvalCounter):
        if method in (BenchMethod.RLS, BenchMethod.RLS_ACCELERATED):
            config = self.config.model_copy(update={
                "seed": seed,
                "accelerated": method is BenchMethod.RLS_ACCELERATED,
            })
            return recursive_rls_fixed_size(self.spec, self.features, s, config, counter)

        if method is BenchMethod.UNIFORM:
            return uniform_sample(self.n, min(s, self.n), seed)

        if method is BenchMethod.RLS_EXACT:
            if self.n > ORACLE_MAX_N:
                raise ArgumentError(f"rls_exact needs n <= {ORACLE_MAX_N}, got {self.n}")
            dense = self._dense_kernel()
            counter.add(self.n * self.n)
            k = min(choose_k(s, self.config.delta, self.config.resolve_size_constant()), self.n)
            lam = lambda_for_k(dense, k) or np.finfo(float).eps * float(np.trace(dense.K))
            scores_total = exact_deff(dense, lam)
            multiplier = s / max(scores_total, np.finfo(float).tiny)
            config = self.config.model_copy(update={
                "mode": SamplerMode.PRACTICAL, "oversampling_multiplier": multiplier})
            return rls_nystrom_exact(dense, lam, config, seed)

        raise ArgumentError(f"method {method} does not sample landmarks")

    def run_single(self, method: BenchMethod, s: int, trial: int) -> BenchResult:
        """Build one approximation and measure it."""
        method = BenchMethod(method)
        if s < 1:
            raise ArgumentError(f"sample size must be at least 1, got {s}")
        seed = self.trial_seed(trial)
        evaluation_seed = derive_seed(self.config.seed, trial, _EVALUATION_STREAM)
        subset = self.settings.subset_size
        iterations = self.settings.iterations

        process = psutil.Process(os.getpid())
        memory_before = process.memory_info().rss
        counter = EvalCounter()
        lambda_used = None

        start = time.perf_counter()
        if method is BenchMethod.RFF:
            rff = rff_build(self.features.shape[1], s, self.spec.sigma, seed)
            wall_time = time.perf_counter() - start
            selected = s
            error = estimate_rff_spectral_error(self.spec, self.features, rff, subset, iterations,
                                                evaluation_seed, settings=self.settings)
        else:
            sample = self._sample(method, s, seed, counter)
            factors = build_factors(self.spec, self.features, sample, counter)
            wall_time = time.perf_counter() - start
            selected = sample.size
            lambda_used = sample.lambda_used
            error = estimate_spectral_error(self.spec, self.features, factors, subset, iterations,
                                            evaluation_seed, settings=self.settings)

        result = BenchResult(
            method=method,
            s=selected,
            requested_s=s,
            trial=trial,
            seed=seed,
            spectral_error=float(max(error, 0.0)),
            wall_time_seconds=wall_time,
            kernel_evals=counter.count,
            subset_size=subset,
            lambda_used=lambda_used,
            memory_delta_bytes=int(process.memory_info().rss - memory_before),
        )
        logger.info(f"{result.method} s={result.s} (requested {s}) trial {trial}: "
                    f"error {result.spectral_error:.4e}, {result.wall_time_seconds:.2f}s, "
                    f"{result.kernel_evals} kernel evaluations")
        return result

    def run(self, methods: Sequence[BenchMethod], sizes: Sequence[int], trials: int) -> List[BenchResult]:
        """Run the full grid; results are ordered by (method, s, trial) regardless of completion order."""
        methods = [BenchMethod(method) for method in methods]
        if BenchMethod.RFF in methods and self.spec.kind != "gaussian":
            raise ArgumentError("rff is only defined for the gaussian kernel")
        if trials < 1:
            raise ArgumentError("trials must be at least 1")

        grid = [(method, s, trial) for method in methods for s in sizes for trial in range(trials)]
        results = {}
        bar = tqdm(total=len(grid), desc="bench", disable=not self.progress)
        with concurrent.futures.ThreadPoolExecutor(max_workers=self.max_workers) as executor:
            future_to_cell = {executor.submit(self.run_single, *cell): cell for cell in grid}
            for future in concurrent.futures.as_completed(future_to_cell):
                results[future_to_cell[future]] = future.result()
                bar.update(1)
        bar.close()

        ordered = [results[cell] for cell in grid]
        if self.results_dir:
            self.save_results(ordered)
        return ordered

    def save_results(self, results: Iterable[BenchResult]) -> str:
        """Write results.jsonl, results.csv and schema.json into a timestamped directory."""
        timestamp = datetime.now().strftime('%Y%m%d_%H%M%S')
        directory = os.path.join(self.results_dir, f"bench_{timestamp}")
        os.makedirs(directory, exist_ok=True)
        results = list(results)

        write_jsonl(results, os.path.join(directory, "results.jsonl"))
        write_csv(results, os.path.join(directory, "results.csv"))
        with open(os.path.join(directory, "schema.json"), "w", encoding="utf-8") as f:
            json.dump(bench_result_schema(), f, indent=2)

        logger.info(f"Benchmark results saved to {directory}")
        return directory


def write_jsonl(results: Iterable[BenchResult], path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for result in results:
            f.write(result.model_dump_json() + "\n")


def write_csv(results: Iterable[BenchResult], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=CSV_FIELDS)
        writer.writeheader()
        for result in results:
            writer.writerow(result.model_dump(mode="json"))


def median_errors(results: Iterable[BenchResult]) -> dict:
    """Median spectral error per (method, requested_s)."""
    grouped = {}
    for result in results:
        grouped.setdefault((result.method, result.requested_s), []).append(result.spectral_error)
    return {key: float(np.median(values)) for key, values in grouped.items()}


def parse_sizes(text: str) -> List[int]:
    """Parse a comma-separated size grid such as "100,200,400"."""
    try:
        sizes = [int(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise ArgumentError(f"invalid size grid '{text}'") from None
    if not sizes or any(size < 1 for size in sizes):
        raise ArgumentError(f"size grid must contain positive integers, got '{text}'")
    return sizes


