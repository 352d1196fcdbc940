"""
Property-based verification suite.

Each check runs seeded instances against the dense oracle or a statistical
target and reports pass/fail. The quick tier uses reduced sizes and trial
counts; the full tier runs the stated scales.
"""

import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List

import numpy as np

from rls_nystrom.baselines.uniform import uniform_sample
from rls_nystrom.core.exceptions import NumericalError, VerificationError
from rls_nystrom.core.kernels import EvalCounter, KernelSpec, gram_matrix
from rls_nystrom.core.nystrom import NystromSettings, build_factors, estimate_spectral_error
from rls_nystrom.core.oracle import (
    DenseKernel,
    exact_deff,
    exact_ridge_scores,
    exact_spectral_error,
    lambda_for_k,
    min_difference_eigenvalue,
    pcp_check,
    pcp_lambda,
)
from rls_nystrom.core.sampling import (
    LandmarkSample,
    SamplerConfig,
    SamplerMode,
    recursive_rls_fixed_lambda,
    recursive_rls_fixed_size,
    scores_from_sample,
)
from rls_nystrom.data.synthetic import DOMINANT_SPREAD, clustered_gaussian, dominant_cluster_spec, spectrum_kernel
from rls_nystrom.learning.krr import krr_fit
from rls_nystrom.performance.benchmark import BenchmarkRunner, BenchMethod, median_errors
from rls_nystrom.utils.logging_config import get_logger
from rls_nystrom.utils.rng import derive_seed, make_rng

logger = get_logger(__name__)

GAUSSIAN = KernelSpec.gaussian(1.0)
LINEAR = KernelSpec.linear()

# Dominant cluster as wide as the kernel bandwidth: many landmarks land in it.
WIDE_SPREAD = 1.0


class Tier(str, Enum):
    QUICK = "quick"
    FULL = "full"


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail,
                "seconds": round(self.seconds, 3)}


@dataclass
class VerificationReport:
    tier: Tier
    seed: int
    checks: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def to_dict(self) -> dict:
        return {
            "tier": self.tier.value,
            "seed": self.seed,
            "passed": self.passed,
            "checks": [check.to_dict() for check in self.checks],
        }

    def raise_for_failure(self) -> None:
        failed = [check.name for check in self.checks if not check.passed]
        if failed:
            raise VerificationError(f"verification failed: {', '.join(failed)}")


def _clustered(n: int, seed: int, dominant_spread: float = WIDE_SPREAD):
    return clustered_gaussian(dominant_cluster_spec(n, seed=seed, dominant_spread=dominant_spread), seed)


def _random_points(n: int, d: int, seed: int) -> np.ndarray:
    return make_rng(seed).standard_normal((n, d))


def check_full_sample_scores(tier: Tier, seed: int) -> CheckResult:
    """Scores from the full unit-weight sample equal the exact ridge leverage scores."""
    instances = 50 if tier is Tier.FULL else 8
    worst = 0.0
    for instance in range(instances):
        instance_seed = derive_seed(seed, 1, instance)
        n = (50, 200)[instance % 2]
        spec = (GAUSSIAN, LINEAR)[(instance // 2) % 2]
        lam = float(10.0 ** np.linspace(-2, 1, instances)[instance])
        X = _random_points(n, 5, instance_seed)
        approx = scores_from_sample(spec, X, LandmarkSample.identity(n), lam, 1.0, EvalCounter()).scores
        exact = exact_ridge_scores(DenseKernel(gram_matrix(spec, X)), lam)
        error = float(np.max(np.abs(approx - exact) / np.maximum(np.abs(exact), 1e-12)))
        worst = max(worst, error)
        if not np.allclose(approx, exact, rtol=1e-8, atol=1e-12):
            return CheckResult("full_sample_scores", False, f"instance {instance}: relative error {error:.2e}")
    return CheckResult("full_sample_scores", True, f"{instances} instances, worst relative error {worst:.2e}")


def check_deff_identity(tier: Tier, seed: int) -> CheckResult:
    """Effective dimension equals the sum of exact scores."""
    instances = 50 if tier is Tier.FULL else 8
    for instance in range(instances):
        X = _random_points((50, 200)[instance % 2], 5, derive_seed(seed, 2, instance))
        spec = (GAUSSIAN, LINEAR)[(instance // 2) % 2]
        K = DenseKernel(gram_matrix(spec, X))
        lam = float(10.0 ** np.linspace(-2, 1, instances)[instance])
        gap = abs(exact_deff(K, lam) - float(np.sum(exact_ridge_scores(K, lam))))
        if gap > 1e-10:
            return CheckResult("deff_identity", False, f"instance {instance}: gap {gap:.2e}")
    return CheckResult("deff_identity", True, f"{instances} instances")


def check_tail_lambda_bound(tier: Tier, seed: int) -> CheckResult:
    """Effective dimension at the tail-average lambda is at most 2k."""
    instances = 50 if tier is Tier.FULL else 6
    n = 200
    for instance in range(instances):
        rate = 0.5 + 0.45 * instance / max(instances - 1, 1)
        if instance % 2:
            eigenvalues = rate ** np.arange(n)
        else:
            eigenvalues = 1.0 / (1.0 + np.arange(n)) ** (1.0 + 2.0 * rate)
        K = spectrum_kernel(eigenvalues, derive_seed(seed, 3, instance))
        for k in (1, 5, 20):
            try:
                lam = lambda_for_k(K, k)
            except NumericalError as e:
                return CheckResult("tail_lambda_bound", False, f"instance {instance}, k={k}: {e}")
            if lam > 0 and exact_deff(K, lam) > 2 * k + 1e-8:
                return CheckResult("tail_lambda_bound", False, f"instance {instance}, k={k}")
    return CheckResult("tail_lambda_bound", True, f"{instances} spectra, k in (1, 5, 20)")


def check_spectral_guarantee(tier: Tier, seed: int) -> CheckResult:
    """Fixed-lambda theory-mode sampling gives ||K - K~|| <= lambda and K~ <= K."""
    n, trials, required = (2000, 20, 18) if tier is Tier.FULL else (400, 4, 3)
    data = _clustered(n, seed)
    K = DenseKernel.from_data(GAUSSIAN, data)
    lam = lambda_for_k(K, 25)
    bounded = dominated = 0
    for trial in range(trials):
        config = SamplerConfig(mode=SamplerMode.THEORY_FIXED_LAMBDA, seed=derive_seed(seed, 4, trial))
        sample = recursive_rls_fixed_lambda(GAUSSIAN, data, lam, config, EvalCounter())
        factors = build_factors(GAUSSIAN, data, sample, EvalCounter())
        bounded += exact_spectral_error(K, factors) <= lam
        dominated += min_difference_eigenvalue(K, factors) >= -1e-8 * K.spectral_norm
    passed = bounded >= required and dominated == trials
    return CheckResult("spectral_guarantee", passed,
                       f"error <= lambda in {bounded}/{trials}, K~ <= K in {dominated}/{trials}")


def check_size_control(tier: Tier, seed: int) -> CheckResult:
    """Fixed-size sampling returns at most 2s landmarks."""
    n, sizes, trials, required = (5000, (100, 300), 20, 18) if tier is Tier.FULL else (1500, (100,), 5, 4)
    data = _clustered(n, seed)
    details = []
    passed = True
    for s in sizes:
        within = 0
        for trial in range(trials):
            config = SamplerConfig(seed=derive_seed(seed, 5, s, trial))
            sample = recursive_rls_fixed_size(GAUSSIAN, data, s, config, EvalCounter())
            within += sample.size <= 2 * s
        details.append(f"s={s}: {within}/{trials}")
        passed = passed and within >= required
    return CheckResult("size_control", passed, ", ".join(details))


def check_evaluation_scaling(tier: Tier, seed: int) -> CheckResult:
    """Kernel evaluations per n * s' stay nearly constant as n doubles."""
    s, sizes = (200, (4000, 8000, 16000)) if tier is Tier.FULL else (50, (1000, 2000))
    ratios = []
    for n in sizes:
        data = _clustered(n, seed)
        counter = EvalCounter()
        sample = recursive_rls_fixed_size(GAUSSIAN, data, s, SamplerConfig(seed=seed), counter)
        ratios.append(counter.count / (n * sample.size))
    growth = [later / earlier for earlier, later in zip(ratios, ratios[1:])]
    passed = all(g < 1.25 for g in growth)
    return CheckResult("evaluation_scaling", passed,
                       "ratios " + ", ".join(f"{r:.3f}" for r in ratios))


def check_method_ordering(tier: Tier, seed: int) -> CheckResult:
    """Median spectral error: RLS < uniform < RFF, RLS at least 2x better than uniform at the smallest s."""
    n, sizes, trials = (4000, (50, 100, 200), 10) if tier is Tier.FULL else (1000, (50,), 3)
    data = _clustered(n, seed, dominant_spread=DOMINANT_SPREAD)
    settings = NystromSettings(subset_size=min(n, 2000), iterations=100)
    runner = BenchmarkRunner(GAUSSIAN, data, SamplerConfig(seed=seed), settings, progress=False)
    medians = median_errors(runner.run([BenchMethod.RLS, BenchMethod.UNIFORM, BenchMethod.RFF], sizes, trials))

    failures = []
    for s in sizes:
        rls, uniform, rff = (medians[(method.value, s)] for method in
                             (BenchMethod.RLS, BenchMethod.UNIFORM, BenchMethod.RFF))
        if not rls < uniform < rff:
            failures.append(f"s={s}: rls {rls:.3g}, uniform {uniform:.3g}, rff {rff:.3g}")
    smallest = sizes[0]
    if 2.0 * medians[("rls", smallest)] > medians[("uniform", smallest)]:
        failures.append(f"s={smallest}: uniform is not 2x worse than rls")
    detail = "; ".join(failures) if failures else \
        ", ".join(f"{m}@{s}={v:.3g}" for (m, s), v in sorted(medians.items()))
    return CheckResult("method_ordering", not failures, detail)


def check_projection_cost(tier: Tier, seed: int) -> CheckResult:
    """Projection-cost preservation with epsilon = 0.5, k = 5."""
    seeds, required = (20, 18) if tier is Tier.FULL else (3, 3)
    n, k, epsilon = 300, 5, 0.5
    data = _clustered(n, seed)
    K = DenseKernel.from_data(GAUSSIAN, data)
    lam = pcp_lambda(K, k, epsilon)
    successes = 0
    for trial in range(seeds):
        config = SamplerConfig(base_case_threshold=50, seed=derive_seed(seed, 8, trial))
        sample = recursive_rls_fixed_lambda(GAUSSIAN, data, lam, config, EvalCounter())
        factors = build_factors(GAUSSIAN, data, sample, EvalCounter())
        successes += pcp_check(K, factors, k, epsilon, 50, derive_seed(seed, 9, trial)) >= 0.9
    return CheckResult("projection_cost", successes >= required, f"{successes}/{seeds} seeds")


def check_regression(tier: Tier, seed: int) -> CheckResult:
    """Full-sample KRR matches the dense solve; K~ eigenvalues never exceed K's."""
    n = 300 if tier is Tier.FULL else 120
    data = _clustered(n, seed)
    y = make_rng(derive_seed(seed, 10)).standard_normal(n)
    K = DenseKernel.from_data(GAUSSIAN, data)
    lam = 0.1

    factors = build_factors(GAUSSIAN, data, LandmarkSample.identity(n), EvalCounter())
    alpha = krr_fit(factors, y, lam).alpha
    dense = np.linalg.solve(K.K + lam * np.eye(n), y)
    relative = float(np.linalg.norm(alpha - dense) / np.linalg.norm(dense))

    sample = recursive_rls_fixed_size(GAUSSIAN, data, 40, SamplerConfig(seed=seed), EvalCounter())
    approx = np.linalg.eigvalsh(build_factors(GAUSSIAN, data, sample, EvalCounter()).dense())[::-1]
    monotone = bool(np.all(approx <= K.eigenvalues + 1e-8))

    passed = relative <= 1e-6 and monotone
    return CheckResult("regression", passed,
                       f"relative error {relative:.2e}, eigenvalue monotonicity {'holds' if monotone else 'fails'}")


def check_accelerated(tier: Tier, seed: int) -> CheckResult:
    """Accelerated sampling halves kernel evaluations while the error grows by at most 50%."""
    n, s, trials = (16000, 400, 10) if tier is Tier.FULL else (3000, 100, 3)
    data = _clustered(n, seed)
    settings = NystromSettings(subset_size=2000, iterations=100)
    evals = {False: [], True: []}
    errors = {False: [], True: []}
    for trial in range(trials):
        for accelerated in (False, True):
            config = SamplerConfig(seed=derive_seed(seed, 11, trial), accelerated=accelerated)
            counter = EvalCounter()
            sample = recursive_rls_fixed_size(GAUSSIAN, data, s, config, counter)
            evals[accelerated].append(counter.count)
            factors = build_factors(GAUSSIAN, data, sample, EvalCounter())
            errors[accelerated].append(estimate_spectral_error(
                GAUSSIAN, data, factors, settings.subset_size, settings.iterations,
                derive_seed(seed, 12, trial), settings=settings))

    reduction = float(np.median(evals[False]) / np.median(evals[True]))
    degradation = float(np.median(errors[True]) / max(np.median(errors[False]), 1e-300))
    passed = reduction >= 2.0 and degradation <= 1.5
    return CheckResult("accelerated", passed,
                       f"evaluation reduction {reduction:.2f}x, error ratio {degradation:.2f}")


def check_determinism(tier: Tier, seed: int) -> CheckResult:
    """Every randomized operation is bit-identical under a fixed seed."""
    data = _clustered(600, seed)
    config = SamplerConfig(seed=seed)

    def fingerprint() -> List[np.ndarray]:
        fixed_size = recursive_rls_fixed_size(GAUSSIAN, data, 60, config, EvalCounter())
        fixed_lambda = recursive_rls_fixed_lambda(GAUSSIAN, data, 1.0, config, EvalCounter())
        uniform = uniform_sample(data.n, 60, seed)
        factors = build_factors(GAUSSIAN, data, fixed_size, EvalCounter())
        error = estimate_spectral_error(GAUSSIAN, data, factors, 300, 50, seed)
        return [fixed_size.indices, fixed_size.probabilities, fixed_lambda.indices,
                uniform.indices, factors.Winv, np.array([error])]

    first, second = fingerprint(), fingerprint()
    identical = all(np.array_equal(a, b) for a, b in zip(first, second))
    return CheckResult("determinism", identical, "outputs identical" if identical else "outputs differ")


QUICK_CHECKS: Dict[str, Callable[[Tier, int], CheckResult]] = {
    "full_sample_scores": check_full_sample_scores,
    "deff_identity": check_deff_identity,
    "tail_lambda_bound": check_tail_lambda_bound,
    "spectral_guarantee": check_spectral_guarantee,
    "size_control": check_size_control,
    "regression": check_regression,
    "projection_cost": check_projection_cost,
    "determinism": check_determinism,
}

FULL_CHECKS: Dict[str, Callable[[Tier, int], CheckResult]] = {
    **QUICK_CHECKS,
    "evaluation_scaling": check_evaluation_scaling,
    "method_ordering": check_method_ordering,
    "accelerated": check_accelerated,
}


def run_verification(tier: Tier = Tier.QUICK, seed: int = 0) -> VerificationReport:
    """Run every check of a tier; a check that raises counts as failed."""
    tier = Tier(tier)
    checks = FULL_CHECKS if tier is Tier.FULL else QUICK_CHECKS
    report = VerificationReport(tier, seed)
    for name, check in checks.items():
        start = time.perf_counter()
        try:
            result = check(tier, seed)
        except Exception as e:
            logger.error(f"Check {name} raised: {str(e)}")
            result = CheckResult(name, False, f"raised {type(e).__name__}: {e}")
        result.seconds = time.perf_counter() - start
        logger.info(f"{'PASS' if result.passed else 'FAIL'} {name}: {result.detail} ({result.seconds:.1f}s)")
        report.checks.append(result)
    return report
