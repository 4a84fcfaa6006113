"""Command-line entry point for reproducible training, evaluation, and verification runs.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import replace

import numpy as np

from .boosting import (
    BoostConfig,
    load_trace_csv,
    parse_config_file,
    save_model,
    train,
    with_trust_mode,
)
from .data import DataError, load_csv, random_undersample, save_csv, stratified_kfold
from .evaluation import (
    METRIC_NAMES,
    cross_validate,
    initial_margins,
    noise_sweep,
    trajectory_summary,
    write_sweep_csv,
    write_trajectory_csv,
)
from .noise import NOISE_KINDS, NoiseMask, NoiseSpec, inject
from .synth import make_gaussian_dataset
from .theory import (
    ComplexitySample,
    ratio_bound_check,
    separability_from_groups,
    trust_bound_check,
)


class UsageError(Exception):
    pass


class CliParser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


BOOST_FLAGS = {
    "iterations": int,
    "learning_rate": float,
    "max_depth": int,
    "min_samples_leaf": int,
    "loss": str,
    "encoding": str,
    "trust": str,
}


def _add_global_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help="master seed (default 42)")
    p.add_argument("--config", default=None, help="key=value config file; flags override it")
    p.add_argument("--out", required=True, help="primary output path")
    p.add_argument("--threads", type=int, default=1, help="parallelism bound; 1 is fully serial")


def _add_data_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="input CSV with a header row")
    p.add_argument("--label", default="label", help="label column name or zero-based index")
    p.add_argument("--positive", default="1", help="raw token mapped to the positive class")


def _add_boost_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--learning-rate", type=float, default=None, dest="learning_rate")
    p.add_argument("--max-depth", type=int, default=None, dest="max_depth")
    p.add_argument("--min-samples-leaf", type=int, default=None, dest="min_samples_leaf")
    p.add_argument("--loss", choices=("logistic", "squared"), default=None)
    p.add_argument("--encoding", choices=("binary-sign", "binary-delta", "quantized"), default=None)
    p.add_argument("--trust", choices=("enabled", "disabled", "magnitude-only"), default=None)


def _resolve_label(label: str):
    return int(label) if label.lstrip("-").isdigit() else label


def _build_config(args) -> BoostConfig:
    mapping = {}
    if args.config:
        mapping.update(parse_config_file(args.config))
    for name in BOOST_FLAGS:
        value = getattr(args, name, None)
        if value is not None:
            mapping[name] = value
    if args.seed is not None:
        mapping["seed"] = args.seed
    elif "seed" not in mapping:
        mapping["seed"] = 42
    try:
        return BoostConfig.from_mapping(mapping)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _load(args):
    return load_csv(args.data, _resolve_label(args.label), args.positive)


def cmd_synth(args) -> int:
    seed = args.seed if args.seed is not None else 42
    dataset = make_gaussian_dataset(
        n_rows=args.n,
        n_informative=args.d,
        n_distractors=args.distractors,
        separation=args.sep,
        seed=seed,
    )
    save_csv(dataset, args.out)
    print(f"wrote {dataset.n_rows} rows x {dataset.n_features} features to {args.out}")
    return 0


def cmd_train(args) -> int:
    dataset = _load(args)
    config = _build_config(args)
    t0 = time.perf_counter()
    model, trace = train(dataset, config)
    dt = time.perf_counter() - t0
    save_model(model, args.out)
    if args.trace:
        trace.to_csv(args.trace)
    print(f"trained {len(model.trees)} trees in {dt:.3f}s (trust step: {trace.total_trust_seconds():.3f}s)")
    print(f"model written to {args.out}" + (f", trace to {args.trace}" if args.trace else ""))
    return 0


def cmd_evaluate(args) -> int:
    dataset = _load(args)
    config = _build_config(args)
    if args.undersample == "before":
        dataset = random_undersample(dataset, seed=config.seed)
    folds = stratified_kfold(dataset, args.k, config.seed)
    report = cross_validate(
        dataset,
        config,
        folds,
        threads=args.threads,
        undersample_train=(args.undersample == "after"),
    )
    report.peak_memory_estimate = _peak_memory_mb()
    report.to_csv(args.out)
    for m in METRIC_NAMES:
        print(f"{m}_mean={report.mean(m):.6f} {m}_std={report.std(m):.6f}")
    print(f"wall_time_seconds={report.wall_time_seconds:.3f}")
    print(f"train_seconds={report.total_train_seconds():.3f}")
    print(f"trust_seconds={report.trust_seconds:.3f}")
    per_iter = report.trust_seconds / (config.iterations * folds.k)
    print(f"trust_seconds_per_iteration={per_iter:.6f}")
    if report.peak_memory_estimate is not None:
        print(f"peak_memory_mb={report.peak_memory_estimate:.1f}")
    print(f"report written to {args.out}")
    return 0


def _peak_memory_mb():
    try:
        import resource

        return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024.0
    except (ImportError, OSError):
        return None


def cmd_noise_sweep(args) -> int:
    dataset = _load(args)
    config = _build_config(args)
    try:
        rates = sorted(float(r) for r in args.rates.split(","))
        modes = [m.strip() for m in args.modes.split(",")]
    except ValueError as exc:
        raise UsageError(f"bad --rates value: {exc}") from None
    folds = stratified_kfold(dataset, args.k, config.seed)
    rows = []
    for mode in modes:
        mode_config = with_trust_mode(config, mode)
        for rate, report in noise_sweep(
            dataset, mode_config, args.kind, rates, config.seed, folds, threads=args.threads
        ):
            rows.append((mode, args.kind, rate, report))
    write_sweep_csv(rows, args.out)
    print(f"{len(rows)} sweep rows written to {args.out}")
    return 0


def cmd_ablate(args) -> int:
    dataset = _load(args)
    config = _build_config(args)
    folds = stratified_kfold(dataset, args.k, config.seed)
    rows = []
    for encoding in ("binary-sign", "quantized"):
        enc_config = replace(config, encoding=encoding, trust="enabled")
        report = cross_validate(dataset, enc_config, folds, threads=args.threads)
        rows.append((encoding, "none", 0.0, report))
        print(
            f"encoding={encoding} acc={report.mean('acc'):.6f} "
            f"train_seconds={report.total_train_seconds():.3f} trust_seconds={report.trust_seconds:.3f}"
        )
    write_sweep_csv(rows, args.out, first_column="encoding")
    binary_t = rows[0][3].total_train_seconds()
    quant_t = rows[1][3].total_train_seconds()
    print(f"binary_vs_quantized_time_ratio={binary_t / quant_t:.4f}")
    print(f"ablation table written to {args.out}")
    return 0


def cmd_trajectory(args) -> int:
    dataset = _load(args)
    config = _build_config(args)
    spec = NoiseSpec(kind=args.noise_kind, rate=args.noise_rate, seed=config.seed)
    noisy, mask = inject(dataset, spec)
    model, trace = train(noisy, config)
    early = max(1, config.iterations // 10)
    margins = initial_margins(trace, noisy.labels, config.loss, early)
    curves = trajectory_summary(trace, mask, margins)
    write_trajectory_csv(curves, args.out)
    if args.mask_out:
        mask.to_csv(args.mask_out)
    if args.trace_out:
        trace.to_csv(args.trace_out)
    print(f"categories: {', '.join(curves)}; curves written to {args.out}")
    return 0


def cmd_verify_bounds(args) -> int:
    row_ids, states = load_trace_csv(args.trace)
    rows, kind = NoiseMask.read_rows(args.mask)
    mask = NoiseMask(flipped_rows=rows, spec=NoiseSpec(kind=kind or "symmetric", rate=0.0, seed=0))
    iterations = sorted(states)
    iteration = args.iteration if args.iteration is not None else iterations[-1]
    if iteration not in states:
        raise DataError(f"verify-bounds: iteration {iteration} not present in trace {args.trace}")
    state = states[iteration]
    noisy_sel = np.isin(row_ids, sorted(mask.flipped_rows))
    if not np.any(noisy_sel) or np.all(noisy_sel):
        raise DataError("verify-bounds: mask must mark some but not all trace rows")

    overall = trust_bound_check(ComplexitySample(state.normalized, group="clean"))
    ratio = ratio_bound_check(
        ComplexitySample(state.normalized[~noisy_sel], group="clean"),
        ComplexitySample(state.normalized[noisy_sel], group="noisy"),
    )
    sep = separability_from_groups(
        state.normalized[~noisy_sel],
        state.normalized[noisy_sel],
        args.eps,
        args.delta,
        iteration=iteration,
    )

    pairs = [
        ("iteration", iteration),
        ("empirical_tau", overall.empirical_tau),
        ("mean_complexity", overall.mean_complexity),
        ("jensen_lower", overall.jensen_lower),
        ("hoeffding_upper", overall.hoeffding_upper),
        ("jensen_satisfied", overall.jensen_satisfied),
        ("hoeffding_satisfied", overall.hoeffding_satisfied),
        ("tau_clean", ratio.tau_clean),
        ("tau_noisy", ratio.tau_noisy),
        ("tau_ratio", ratio.ratio),
        ("complexity_gap", ratio.complexity_gap),
        ("correction", ratio.correction),
        ("ratio_bound", ratio.ratio_bound),
        ("ratio_bound_satisfied", ratio.bound_satisfied),
        ("gap_exceeds_correction", ratio.gap_exceeds_correction),
        ("n_clean", sep.n_clean),
        ("n_noisy", sep.n_noisy),
        ("mean_clean", sep.mean_clean),
        ("mean_noisy", sep.mean_noisy),
        ("epsilon", sep.epsilon),
        ("delta", sep.delta),
        ("required_group_size", sep.required_group_size),
        ("separable", sep.separable),
    ]
    for key, value in pairs:
        print(f"{key}={value}")
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("key,value\n")
        for key, value in pairs:
            fh.write(f"{key},{value}\n")
    print(f"report written to {args.out}")
    return 0


def build_parser() -> CliParser:
    parser = CliParser(prog="itboost", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a seeded synthetic two-Gaussian dataset")
    _add_global_flags(p)
    p.add_argument("--n", type=int, default=400, help="number of rows")
    p.add_argument("--d", type=int, default=10, help="informative feature count")
    p.add_argument("--distractors", type=int, default=0, help="pure-noise feature count")
    p.add_argument("--sep", type=float, default=2.0, help="distance between class means")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="fit a model on a CSV, write model and trace")
    _add_global_flags(p)
    _add_data_flags(p)
    _add_boost_flags(p)
    p.add_argument("--trace", default=None, help="optional trace CSV output path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="stratified k-fold cross-validation report")
    _add_global_flags(p)
    _add_data_flags(p)
    _add_boost_flags(p)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--undersample", choices=("off", "before", "after"), default="off",
                   help="rebalance classes before the CV split or per training fold")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("noise-sweep", help="cross-validate across noise rates and trust modes")
    _add_global_flags(p)
    _add_data_flags(p)
    _add_boost_flags(p)
    p.add_argument("--kind", choices=NOISE_KINDS, required=True)
    p.add_argument("--rates", required=True, help="comma-separated noise rates")
    p.add_argument("--modes", default="enabled", help="comma-separated trust modes")
    p.add_argument("--k", type=int, default=5)
    p.set_defaults(func=cmd_noise_sweep)

    p = sub.add_parser("ablate", help="binary vs quantized encoding, metrics and timing")
    _add_global_flags(p)
    _add_data_flags(p)
    _add_boost_flags(p)
    p.add_argument("--k", type=int, default=5)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("trajectory", help="per-category mean weight curves from a noisy run")
    _add_global_flags(p)
    _add_data_flags(p)
    _add_boost_flags(p)
    p.add_argument("--noise-kind", choices=NOISE_KINDS, default="symmetric", dest="noise_kind")
    p.add_argument("--noise-rate", type=float, default=0.2, dest="noise_rate")
    p.add_argument("--mask-out", default=None, dest="mask_out")
    p.add_argument("--trace-out", default=None, dest="trace_out")
    p.set_defaults(func=cmd_trajectory)

    p = sub.add_parser("verify-bounds", help="trust-weight bound and separability reports from a trace")
    _add_global_flags(p)
    p.add_argument("--trace", required=True, help="trace CSV written by train/trajectory")
    p.add_argument("--mask", required=True, help="noise mask CSV")
    p.add_argument("--iteration", type=int, default=None)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--delta", type=float, default=0.05)
    p.set_defaults(func=cmd_verify_bounds)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
