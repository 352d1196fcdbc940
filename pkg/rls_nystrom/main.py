"""
Command-line interface for the RLS-Nystrom toolkit.

Subcommands: sample, approx, bench, regress, synth, verify, cluster.
Machine-readable results go to stdout as JSON; logs go to stderr.
Exit codes: 0 success, 2 usage error, 3 numerical failure, 4 verification
failure, 1 any other toolkit error.
"""

import argparse
import json
import sys
import time
from typing import Any, List, Optional

import numpy as np
from pydantic import ValidationError

from rls_nystrom import __version__
from rls_nystrom.baselines.rff import estimate_rff_spectral_error, rff_build, rff_transform
from rls_nystrom.baselines.uniform import uniform_sample
from rls_nystrom.config import Config, get_settings
from rls_nystrom.core.exceptions import ArgumentError, NystromError, UsageError
from rls_nystrom.core.kernels import EvalCounter, KernelSpec
from rls_nystrom.core.nystrom import NystromSettings, build_factors, estimate_spectral_error
from rls_nystrom.core.sampling import (
    SamplerConfig,
    SamplerMode,
    recursive_rls_fixed_lambda,
    recursive_rls_fixed_size,
)
from rls_nystrom.data.datasets import (
    Dataset,
    apply_preprocess,
    describe_dataset,
    load_dataset,
    one_vs_rest,
    preprocess,
    save_csv,
    save_libsvm,
)
from rls_nystrom.data.synthetic import clustered_gaussian, dominant_cluster_spec
from rls_nystrom.learning.clustering import kernel_kmeans, kernel_pca
from rls_nystrom.learning.krr import (
    classification_error,
    factors_path,
    is_plus_minus_one,
    krr_fit,
    krr_predict_batch,
    rff_ridge_fit,
    rff_ridge_predict,
    rmse,
)
from rls_nystrom.performance.benchmark import BenchMethod, BenchmarkRunner, parse_sizes
from rls_nystrom.performance.verification import Tier, run_verification
from rls_nystrom.utils.logging_config import get_logger, parse_log_level, setup_logging

logger = get_logger(__name__)


def emit(payload: Any) -> None:
    """Write one JSON document to stdout."""
    sys.stdout.write(json.dumps(payload, sort_keys=True) + "\n")
    sys.stdout.flush()


def pick(*values: Any) -> Any:
    """First value that is not None."""
    for value in values:
        if value is not None:
            return value
    return None


def file_section(args, name: str) -> dict:
    """A section of the --config file (empty without one)."""
    return Config(args.config).section(name) if args.config else {}


def require(args, *names: str) -> None:
    missing = [f"--{name.replace('_', '-')}" for name in names if getattr(args, name, None) is None]
    if missing:
        raise UsageError(f"missing required option(s): {', '.join(missing)}")


def kernel_from_args(args) -> KernelSpec:
    require(args, "kernel")
    return KernelSpec.parse(args.kernel)


def dataset_from_args(args, path: Optional[str] = None) -> Dataset:
    path = path or args.data
    if path is None:
        raise UsageError("missing required option: --data")
    categorical = parse_columns(args.categorical)
    data = load_dataset(path, args.format, args.label_column, categorical)
    logger.info(f"Loaded {data.n} x {data.d} dataset from {path}")
    return data


def parse_columns(text: Optional[str]) -> List[int]:
    if not text:
        return []
    try:
        return [int(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise UsageError(f"invalid column list '{text}'") from None


def sampler_block_values(args) -> dict:
    """Explicit keys of the --sampler-config key=value block (empty without one)."""
    path = getattr(args, "sampler_config", None)
    if not path:
        return {}
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    try:
        block = SamplerConfig.from_block(text)
    except ArgumentError as e:
        raise UsageError(f"{path}: {e}") from None
    return block.model_dump(mode="json", exclude_unset=True)


def sampler_config_from_args(args, fixed_lambda: bool) -> SamplerConfig:
    """Sampler settings: config file `sampler` section, then the --sampler-config block, then flags."""
    file_values = dict(file_section(args, "sampler"))
    file_values.update(sampler_block_values(args))
    settings = get_settings()
    mode_name = pick(args.mode, file_values.get("mode"), "practical")
    if mode_name not in ("theory", "practical"):
        mode = SamplerMode(mode_name)
    elif mode_name == "theory":
        mode = SamplerMode.THEORY_FIXED_LAMBDA if fixed_lambda else SamplerMode.THEORY_FIXED_SIZE
    else:
        mode = SamplerMode.PRACTICAL

    values = dict(file_values)
    values.update({
        "mode": mode,
        "delta": pick(args.delta, file_values.get("delta"), settings.DEFAULT_DELTA),
        "seed": pick(args.seed, file_values.get("seed"), settings.DEFAULT_SEED),
        "accelerated": bool(args.accelerated or file_values.get("accelerated", False)),
    })
    try:
        return SamplerConfig(**values)
    except ValidationError as e:
        raise UsageError(f"invalid sampler settings: {e}") from None


def nystrom_settings_from_args(args) -> NystromSettings:
    file_values = file_section(args, "nystrom")
    settings = get_settings()
    try:
        return NystromSettings(
            subset_size=pick(getattr(args, "subset", None), file_values.get("subset_size"), settings.SUBSET_SIZE),
            iterations=pick(getattr(args, "iterations", None), file_values.get("iterations"),
                            settings.POWER_ITERATIONS),
            tolerance=file_values.get("tolerance", settings.POWER_TOLERANCE),
            block_size=file_values.get("block_size", settings.BLOCK_SIZE),
        )
    except ValidationError as e:
        raise UsageError(f"invalid estimation settings: {e}") from None


def draw_landmarks(args, spec: KernelSpec, data: Dataset, counter: EvalCounter, method: str = "rls"):
    """Landmark sample for --lambda or --size with the requested method."""
    if args.lam is not None and args.size is not None:
        raise UsageError("--lambda and --size are mutually exclusive")
    if args.lam is None and args.size is None:
        raise UsageError("one of --lambda or --size is required")

    if method == "uniform":
        if args.size is None:
            raise UsageError("uniform sampling needs --size")
        seed = pick(args.seed, get_settings().DEFAULT_SEED)
        return uniform_sample(data.n, min(args.size, data.n), seed)

    config = sampler_config_from_args(args, fixed_lambda=args.lam is not None)
    if getattr(args, "save_sampler_config", None):
        with open(args.save_sampler_config, "w", encoding="utf-8") as f:
            f.write(config.to_block())
        logger.info(f"Saved sampler settings to {args.save_sampler_config}")
    if args.lam is not None:
        return recursive_rls_fixed_lambda(spec, data, args.lam, config, counter)
    return recursive_rls_fixed_size(spec, data, args.size, config, counter)


def sample_command(args):
    """Draw a landmark sample and write it as CSV."""
    spec = kernel_from_args(args)
    data = dataset_from_args(args)
    counter = EvalCounter()
    sample = draw_landmarks(args, spec, data, counter)

    out = args.out or "landmarks.csv"
    sample.to_csv(out)
    logger.info(f"Saved {sample.size} landmarks to {out}")
    emit({
        "n": data.n,
        "s": sample.size,
        "sum_probabilities": float(np.sum(sample.probabilities)),
        "kernel_evals": counter.count,
        "lambda_used": sample.lambda_used,
        "output": out,
    })


def approx_command(args):
    """Build and save Nystrom factors (or a random feature map)."""
    spec = kernel_from_args(args)
    data = dataset_from_args(args)
    counter = EvalCounter()
    settings = nystrom_settings_from_args(args)
    seed = pick(args.seed, get_settings().DEFAULT_SEED)
    subset = min(settings.subset_size, data.n)
    result = {"method": args.method, "n": data.n}

    if args.method == "rff":
        require(args, "size")
        if spec.kind != "gaussian":
            raise UsageError("rff requires a gaussian kernel")
        rff = rff_build(data.d, args.size, spec.sigma, seed)
        out = args.out or "rff.bin"
        rff.save(out)
        result.update({"s": rff.D, "kernel_evals": 0, "output": out})
        if args.estimate_error:
            result["spectral_error"] = estimate_rff_spectral_error(
                spec, data, rff, subset, settings.iterations, seed, settings=settings)
    else:
        sample = draw_landmarks(args, spec, data, counter, args.method)
        factors = build_factors(spec, data, sample, counter)
        out = args.out or "factors.bin"
        factors.save(out)
        result.update({"s": factors.s, "rank": factors.rank, "kernel_evals": counter.count,
                       "lambda_used": sample.lambda_used, "output": out})
        if args.estimate_error:
            result["spectral_error"] = estimate_spectral_error(
                spec, data, factors, subset, settings.iterations, seed, settings=settings)

    logger.info(f"Saved approximation to {result['output']}")
    emit(result)


def bench_command(args):
    """Run the method x size x trial benchmark grid."""
    spec = kernel_from_args(args)
    data = dataset_from_args(args)
    file_values = file_section(args, "bench")
    settings = get_settings()

    if args.dataset_name:
        info = describe_dataset(args.dataset_name)
        if info.d != data.d:
            logger.warning(f"{info.name} has {info.d} features after preprocessing, loaded data has {data.d}")

    methods_text = pick(args.methods, file_values.get("methods"), "rls,uniform")
    if isinstance(methods_text, list):
        methods_text = ",".join(methods_text)
    try:
        methods = [BenchMethod(item.strip()) for item in methods_text.split(",") if item.strip()]
    except ValueError:
        raise UsageError(f"unknown method in '{methods_text}'") from None

    sizes_text = pick(args.sizes, args.size, file_values.get("sizes"), "100,200")
    if isinstance(sizes_text, list):
        sizes_text = ",".join(str(size) for size in sizes_text)
    sizes = parse_sizes(str(sizes_text))
    trials = pick(args.trials, file_values.get("trials"), 10)

    runner = BenchmarkRunner(
        spec,
        data,
        config=sampler_config_from_args(args, fixed_lambda=False),
        settings=nystrom_settings_from_args(args),
        results_dir=pick(args.out, settings.RESULTS_DIR),
        max_workers=pick(args.workers, settings.MAX_WORKERS),
        progress=not args.quiet,
    )
    for result in runner.run(methods, sizes, trials):
        sys.stdout.write(result.model_dump_json() + "\n")
    sys.stdout.flush()


def regress_command(args):
    """Fit approximate kernel ridge regression and report errors and timings."""
    ridge = pick(args.ridge, args.lam)
    if ridge is None:
        raise UsageError("regression needs --ridge (or --lambda)")
    spec = kernel_from_args(args)
    train = dataset_from_args(args)
    test = dataset_from_args(args, args.test) if args.test else None
    if train.labels is None or (test is not None and test.labels is None):
        raise UsageError("regression needs labeled train and test data")

    if args.preprocess:
        categorical = set(parse_columns(args.categorical))
        train, report = preprocess(train, categorical)
        if test is not None:
            test = apply_preprocess(test, report)

    y_train, y_test = train.labels, None if test is None else test.labels
    if args.task == "classification":
        if args.positive is not None:
            y_train = one_vs_rest(y_train, args.positive)
            y_test = None if y_test is None else one_vs_rest(y_test, args.positive)
        elif not is_plus_minus_one(y_train) or (y_test is not None and not is_plus_minus_one(y_test)):
            raise UsageError("classification labels must be +1/-1; use --positive to pick a class")
    measure = classification_error if args.task == "classification" else rmse
    if args.out and args.method == "rff":
        raise UsageError("--out saves Nystrom models only, not rff")

    counter = EvalCounter()
    seed = pick(args.seed, get_settings().DEFAULT_SEED)
    timings = {}
    start = time.perf_counter()
    if args.method == "rff":
        require(args, "size")
        if spec.kind != "gaussian":
            raise UsageError("rff requires a gaussian kernel")
        rff = rff_build(train.d, args.size, spec.sigma, seed)
        timings["sample_seconds"] = time.perf_counter() - start
        start = time.perf_counter()
        model = rff_ridge_fit(rff, train, y_train, ridge)
        timings["fit_seconds"] = time.perf_counter() - start
        start = time.perf_counter()
        train_pred = rff_transform(rff, train) @ model.coef
        test_pred = None if test is None else rff_ridge_predict(model, test)
        s = rff.D
    else:
        # With --size the ridge lambda only regularizes the fit, not the sampling
        sampling_args = argparse.Namespace(**{**vars(args), "lam": None if args.size is not None else args.lam})
        sample = draw_landmarks(sampling_args, spec, train, counter, args.method)
        factors = build_factors(spec, train, sample, counter)
        timings["sample_seconds"] = time.perf_counter() - start
        start = time.perf_counter()
        model = krr_fit(factors, y_train, ridge)
        timings["fit_seconds"] = time.perf_counter() - start
        start = time.perf_counter()
        train_pred = factors.C @ model.predictor_weights
        test_pred = None if test is None else krr_predict_batch(model, train, test, counter)
        s = factors.s
    timings["predict_seconds"] = time.perf_counter() - start

    metric = "error" if args.task == "classification" else "rmse"
    result = {"method": args.method, "task": args.task, "n": train.n, "s": s, "lambda": ridge,
              "kernel_evals": counter.count, f"train_{metric}": measure(train_pred, y_train), **timings}
    if test_pred is not None:
        result[f"test_{metric}"] = measure(test_pred, y_test)
    if args.out:
        model.save(args.out, factors)
        result.update({"output": args.out, "factors_output": factors_path(args.out)})
        logger.info(f"Saved model to {args.out}")
    emit(result)


def synth_command(args):
    """Generate clustered data with one dominant cluster and write it to a file."""
    seed = pick(args.seed, get_settings().DEFAULT_SEED)
    spec = dominant_cluster_spec(args.n, d=args.dim, small_clusters=args.small_clusters, seed=seed)
    data = clustered_gaussian(spec, seed)
    out = args.out or "synthetic.csv"
    if args.format == "libsvm":
        save_libsvm(data, out)
    else:
        save_csv(data, out)
    emit({"n": data.n, "d": data.d, "clusters": len(spec.cluster_sizes), "output": out})


def verify_command(args):
    """Run the verification suite; a failed check exits with code 4."""
    seed = pick(args.seed, get_settings().DEFAULT_SEED)
    report = run_verification(Tier(args.tier), seed)
    emit(report.to_dict())
    report.raise_for_failure()


def cluster_command(args):
    """Approximate kernel k-means (or kernel PCA with --pca)."""
    spec = kernel_from_args(args)
    data = dataset_from_args(args)
    require(args, "k")
    config = sampler_config_from_args(args, fixed_lambda=False)
    counter = EvalCounter()

    if args.pca:
        result = kernel_pca(spec, data, args.k, args.size, config, counter)
        emit({"k": args.k, "s": result.factors.s, "captured": result.captured, "kernel_evals": counter.count})
        if args.out:
            np.savetxt(args.out, result.projected, delimiter=",")
        return

    result = kernel_kmeans(spec, data, args.k, args.size, config, counter, restarts=args.restarts,
                           max_workers=pick(args.workers, get_settings().MAX_WORKERS))
    emit({"k": args.k, "s": result.factors.s, "objective": result.objective,
          "cluster_sizes": np.bincount(result.labels, minlength=args.k).tolist(),
          "kernel_evals": counter.count})
    if args.out:
        np.savetxt(args.out, result.labels, fmt="%d")


def add_common_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--config', type=str, help='Path to JSON or YAML configuration file')
    parser.add_argument('--seed', type=int, help='Random seed')
    parser.add_argument('--out', type=str, help='Output path')
    parser.add_argument('--verbose', action='store_true', help='Debug logging')
    parser.add_argument('--quiet', action='store_true', help='Warnings only, no progress bar')
    parser.add_argument('--log-file', type=str, help='Also write logs to this file')


def add_data_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--data', type=str, help='Dataset path (CSV or LIBSVM)')
    parser.add_argument('--format', choices=['csv', 'libsvm'], help='Dataset format (default: by extension)')
    parser.add_argument('--label-column', type=int, help='CSV label column index')
    parser.add_argument('--categorical', type=str, help='Comma-separated categorical column indices')
    parser.add_argument('--kernel', type=str, help='Kernel, e.g. gaussian:sigma=1 or poly:degree=3,offset=1')


def add_sampler_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--lambda', dest='lam', type=float, help='Fixed ridge parameter')
    parser.add_argument('--size', type=int, help='Target sample size')
    parser.add_argument('--delta', type=float, help='Failure probability (default 0.01)')
    parser.add_argument('--mode', choices=['theory', 'practical'], help='Sampling constants (default practical)')
    parser.add_argument('--accelerated', action='store_true', help='Accelerated fixed-size sampling')
    parser.add_argument('--sampler-config', type=str, help='key=value sampler settings file (flags override it)')
    parser.add_argument('--save-sampler-config', type=str, help='Write the resolved sampler settings as key=value')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Nystrom kernel approximation with recursive ridge leverage scores")
    parser.add_argument('--version', action='version', version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest='command', help='Command to run')

    sample_parser = subparsers.add_parser('sample', help='Draw a landmark sample')
    add_common_arguments(sample_parser)
    add_data_arguments(sample_parser)
    add_sampler_arguments(sample_parser)
    sample_parser.set_defaults(func=sample_command)

    approx_parser = subparsers.add_parser('approx', help='Build and save an approximation')
    add_common_arguments(approx_parser)
    add_data_arguments(approx_parser)
    add_sampler_arguments(approx_parser)
    approx_parser.add_argument('--method', choices=['rls', 'uniform', 'rff'], default='rls', help='Approximation method')
    approx_parser.add_argument('--estimate-error', action='store_true', help='Also estimate the spectral error')
    approx_parser.add_argument('--subset', type=int, help='Error estimation subset size (default 20000)')
    approx_parser.add_argument('--iterations', type=int, help='Power iterations (default 100)')
    approx_parser.set_defaults(func=approx_command)

    bench_parser = subparsers.add_parser('bench', help='Benchmark methods over a size grid')
    add_common_arguments(bench_parser)
    add_data_arguments(bench_parser)
    add_sampler_arguments(bench_parser)
    bench_parser.add_argument('--methods', type=str, help='Comma-separated methods: rls,rls_accelerated,uniform,rff,rls_exact')
    bench_parser.add_argument('--sizes', type=str, help='Comma-separated sample sizes')
    bench_parser.add_argument('--trials', type=int, help='Trials per (method, size) (default 10)')
    bench_parser.add_argument('--subset', type=int, help='Error estimation subset size (default 20000)')
    bench_parser.add_argument('--iterations', type=int, help='Power iterations (default 100)')
    bench_parser.add_argument('--workers', type=int, help='Parallel trials')
    bench_parser.add_argument('--dataset-name', type=str, help='Registered dataset name to validate against')
    bench_parser.set_defaults(func=bench_command)

    regress_parser = subparsers.add_parser('regress', help='Approximate kernel ridge regression')
    add_common_arguments(regress_parser)
    add_data_arguments(regress_parser)
    add_sampler_arguments(regress_parser)
    regress_parser.add_argument('--test', type=str, help='Held-out dataset path')
    regress_parser.add_argument('--method', choices=['rls', 'uniform', 'rff'], default='rls', help='Approximation method')
    regress_parser.add_argument('--ridge', type=float, help='Ridge regularization of the regression')
    regress_parser.add_argument('--task', choices=['regression', 'classification'], default='regression')
    regress_parser.add_argument('--positive', type=float, help='Positive class for one-vs-rest labels')
    regress_parser.add_argument('--preprocess', action='store_true', help='Standardize features (fit on train)')
    regress_parser.set_defaults(func=regress_command)

    synth_parser = subparsers.add_parser('synth', help='Generate clustered synthetic data')
    add_common_arguments(synth_parser)
    synth_parser.add_argument('--n', type=int, default=4000, help='Number of points')
    synth_parser.add_argument('--dim', type=int, default=2, help='Dimension')
    synth_parser.add_argument('--small-clusters', type=int, default=10, help='Number of small clusters')
    synth_parser.add_argument('--format', choices=['csv', 'libsvm'], default='csv')
    synth_parser.set_defaults(func=synth_command)

    verify_parser = subparsers.add_parser('verify', help='Run the verification suite')
    add_common_arguments(verify_parser)
    verify_parser.add_argument('--tier', choices=['quick', 'full'], default='quick')
    verify_parser.set_defaults(func=verify_command)

    cluster_parser = subparsers.add_parser('cluster', help='Approximate kernel k-means or PCA')
    add_common_arguments(cluster_parser)
    add_data_arguments(cluster_parser)
    add_sampler_arguments(cluster_parser)
    cluster_parser.add_argument('--k', type=int, help='Clusters or components')
    cluster_parser.add_argument('--restarts', type=int, default=3, help='k-means restarts')
    cluster_parser.add_argument('--workers', type=int, help='Parallel restarts')
    cluster_parser.add_argument('--pca', action='store_true', help='Kernel PCA instead of k-means')
    cluster_parser.set_defaults(func=cluster_command)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point."""
    parser = build_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help(sys.stderr)
        return UsageError.exit_code

    settings = get_settings()
    if args.verbose:
        level = parse_log_level("DEBUG")
    elif args.quiet:
        level = parse_log_level("WARNING")
    else:
        level = parse_log_level(settings.LOG_LEVEL)
    setup_logging(log_level=level, log_file=args.log_file or settings.LOG_FILE or None)

    try:
        args.func(args)
    except NystromError as e:
        logger.error(str(e))
        return e.exit_code
    except ValidationError as e:
        logger.error(f"Invalid configuration: {e}")
        return UsageError.exit_code
    except OSError as e:
        logger.error(f"I/O error: {str(e)}")
        return 1
    return 0


if __name__ == '__main__':
    sys.exit(main())
