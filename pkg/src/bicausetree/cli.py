"""Command-line interface.

Subcommands:
    fit        fit a tree on a CSV and save it as JSON (optionally DOT)
    estimate   apply a saved tree to a CSV and report effects
    audit      positivity report for a saved tree, with calibration output
    simulate   write a synthetic benchmark dataset to CSV
    benchmark  replicated bias evaluation with figures and CSV output

Exit codes: 0 on success, 2 on usage, input, or schema problems, 3 when a
dataset has only one treatment arm.

Every subcommand takes a single ``--seed``.  Streams that must not collide
use fixed offsets from it: ``benchmark`` draws the dataset with ``seed``
and splits replication ``r`` with ``seed + 1 + r`` (the extra offset keeps
the split permutation independent of the generator's first draws), and
noise features use ``seed + 1000003`` internally.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from .dataset import ColumnSchema, SingleArmError, load_csv, write_csv
from .estimators import EffectReport, tree_ate, tree_propensity
from .evaluation import (
    METHODS,
    ablation_feature_selection,
    calibration_curve,
    depth_sweep,
    run_bias_benchmark,
    write_ablation_csv,
    write_bias_csv,
    write_calibration_csv,
    write_depth_sweep_csvs,
    write_summary_csv,
)
from .synthgen import GENERATOR_KINDS, GeneratorSpec, generate
from .tree import (
    FEATURE_SELECTION_MODES,
    POSITIVITY_METHODS,
    FitConfig,
    Tree,
    assign_leaves,
    fit,
    from_json,
    to_dot,
    to_json,
)

_CONFIG_PARSERS = {
    "max_depth": int,
    "asmd_threshold": float,
    "min_treat_group_size": int,
    "min_leaf_population": int,
    "alpha": float,
    "correction": str,
    "positivity_method": str,
    "crump_segments": int,
    "sp_alpha": float,
    "feature_selection": str,
    "max_split_candidates": lambda v: None if v.lower() == "none" else int(v),
    "seed": int,
}


def parse_config_file(path) -> dict:
    """Read flat ``key = value`` lines into fit-configuration values.

    Keys mirror the command-line flags (dashes and underscores are
    interchangeable).  Blank lines and ``#`` comments are skipped; unknown
    keys and unparseable values raise ValueError naming the offending line.
    """
    values: dict = {}
    with Path(path).open() as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}: line {lineno}: expected key = value")
            key, _, text = line.partition("=")
            key = key.strip().replace("-", "_")
            text = text.strip()
            if key not in _CONFIG_PARSERS:
                raise ValueError(f"{path}: line {lineno}: unknown key {key!r}")
            try:
                values[key] = _CONFIG_PARSERS[key](text)
            except ValueError as exc:
                raise ValueError(
                    f"{path}: line {lineno}: bad value for {key}: {text!r}"
                ) from exc
    return values


def _int_or_none(text: str):
    return None if text.lower() == "none" else int(text)


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("fit configuration")
    group.add_argument("--config", metavar="FILE", help="key = value configuration file")
    group.add_argument("--max-depth", type=int, default=None)
    group.add_argument("--asmd-threshold", type=float, default=None)
    group.add_argument("--min-treat-group-size", type=int, default=None)
    group.add_argument("--min-leaf-population", type=int, default=None)
    group.add_argument("--alpha", type=float, default=None, help="pruning test level")
    group.add_argument("--correction", choices=("holm",), default=None)
    group.add_argument("--positivity-method", choices=POSITIVITY_METHODS, default=None)
    group.add_argument("--crump-segments", type=int, default=None)
    group.add_argument("--sp-alpha", type=float, default=None)
    group.add_argument("--feature-selection", choices=FEATURE_SELECTION_MODES, default=None)
    group.add_argument(
        "--max-split-candidates",
        type=_int_or_none,
        default=None,
        metavar="N|none",
        help="quantile-thin split candidates above N distinct values",
    )


def build_fit_config(args) -> FitConfig:
    """Merge defaults, the optional config file, and explicit flags."""
    values = {f.name: getattr(FitConfig(), f.name) for f in fields(FitConfig)}
    if getattr(args, "config", None):
        values.update(parse_config_file(args.config))
    for name in values:
        override = getattr(args, name, None)
        if override is not None:
            values[name] = override
    cfg = FitConfig(**values)
    cfg.validate()
    return cfg


def _schema_from_args(args) -> ColumnSchema:
    features = tuple(name.strip() for name in args.features.split(",") if name.strip())
    return ColumnSchema(
        features=features,
        treatment=args.treatment,
        outcome=args.outcome,
        y0=getattr(args, "y0", None),
        y1=getattr(args, "y1", None),
    )


def _add_schema_flags(parser: argparse.ArgumentParser, potential: bool = False) -> None:
    parser.add_argument(
        "--features", help="comma-separated covariate column names"
    )
    parser.add_argument("--treatment", default="T", help="treatment column (default T)")
    parser.add_argument("--outcome", default="Y", help="outcome column (default Y)")
    if potential:
        parser.add_argument("--y0", default="y0", help="untreated potential outcome column")
        parser.add_argument("--y1", default="y1", help="treated potential outcome column")


def _load_tree(path) -> Tree:
    return from_json(Path(path).read_text())


# ---------------------------------------------------------------------------
# subcommands


def cmd_fit(args) -> int:
    cfg = build_fit_config(args)
    if not args.features:
        raise ValueError("fit requires --features")
    ds = load_csv(args.data, _schema_from_args(args))
    tree = fit(ds, cfg)
    Path(args.out).write_text(to_json(tree))
    if args.emit_dot:
        Path(args.emit_dot).write_text(to_dot(tree))
    assignment = assign_leaves(tree, ds.X)
    kept = float((~np.isin(assignment, tree.violating_leaf_ids())).mean())
    print(
        f"n={ds.n} leaves={tree.n_leaves} "
        f"violating={len(tree.violating_leaf_ids())} kept_fraction={kept:.4g}"
    )
    print(f"wrote {args.out}")
    return 0


def _print_report(report: EffectReport) -> None:
    for warning in report.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    print(
        f"method={report.method} ate={report.ate:.6g} "
        f"kept_fraction={report.kept_fraction:.4g} excluded={report.n_excluded}"
    )


def cmd_estimate(args) -> int:
    tree = _load_tree(args.tree)
    if not args.features:
        raise ValueError("estimate requires --features")
    schema = _schema_from_args(args)
    ds_test = load_csv(args.data, schema)
    ds_train = None
    if args.estimator == "ipw":
        if not args.train_data:
            raise ValueError("--estimator ipw requires --train-data")
        ds_train = load_csv(args.train_data, schema)
    report = tree_ate(tree, ds_test, args.estimator, ds_train=ds_train)
    header, row = report.csv_row()
    Path(args.out).write_text(header + "\n" + row + "\n")
    if args.json:
        Path(args.json).write_text(report.to_json())
    if args.per_leaf:
        with Path(args.per_leaf).open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["leaf_id", "n_test", "effect", "mu1", "mu0"])
            for leaf in report.per_leaf:
                writer.writerow(
                    [leaf.leaf_id, leaf.n_test, repr(leaf.effect), repr(leaf.mu1), repr(leaf.mu0)]
                )
    _print_report(report)
    return 0


def _audit_payload(tree: Tree, ds, assignment: np.ndarray) -> dict:
    violating = set(tree.violating_leaf_ids())
    leaves = []
    for leaf_id in tree.leaf_ids():
        mask = assignment == leaf_id
        n = int(mask.sum())
        n_treated = int(ds.t[mask].sum())
        leaves.append(
            {
                "leaf_id": leaf_id,
                "rule": " and ".join(tree.path_predicates(leaf_id)),
                "n": n,
                "n_treated": n_treated,
                "prevalence": n_treated / n if n else None,
                "violating": leaf_id in violating,
            }
        )
    kept = float((~np.isin(assignment, sorted(violating))).mean())
    cut = tree.cutoffs
    return {
        "n": ds.n,
        "kept_fraction": kept,
        "cutoffs": None
        if cut is None
        else {"low": cut.low, "high": cut.high, "method": cut.method, "alpha": cut.alpha},
        "violating_rules": [leaf for leaf in leaves if leaf["violating"]],
        "leaves": leaves,
    }


def cmd_audit(args) -> int:
    from .figures import render_calibration_figure

    tree = _load_tree(args.tree)
    if not args.features:
        raise ValueError("audit requires --features")
    ds = load_csv(args.data, _schema_from_args(args))
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    assignment = assign_leaves(tree, ds.X)
    payload = _audit_payload(tree, ds, assignment)
    (out_dir / "audit.json").write_text(json.dumps(payload, indent=2) + "\n")
    with (out_dir / "leaves.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["leaf_id", "n", "n_treated", "prevalence", "violating", "rule"])
        for leaf in payload["leaves"]:
            writer.writerow(
                [
                    leaf["leaf_id"],
                    leaf["n"],
                    leaf["n_treated"],
                    "" if leaf["prevalence"] is None else repr(leaf["prevalence"]),
                    int(leaf["violating"]),
                    leaf["rule"],
                ]
            )
    propensities = tree_propensity(tree, ds)
    usable = ~np.isnan(propensities)
    bins = calibration_curve(propensities[usable], ds.t[usable], args.bins)
    write_calibration_csv(bins, out_dir / "calibration.csv")
    if not args.no_figures:
        render_calibration_figure(bins, out_dir / "calibration.png")
    if args.format == "json":
        print(json.dumps(payload, indent=2))
    else:
        for leaf in payload["violating_rules"]:
            print(
                f"violating leaf {leaf['leaf_id']}: {leaf['rule']} "
                f"(n={leaf['n']}, P(T)={leaf['prevalence']:.4g})"
            )
        print(
            f"leaves={tree.n_leaves} violating={len(payload['violating_rules'])} "
            f"kept_fraction={payload['kept_fraction']:.4g}"
        )
    return 0


def cmd_simulate(args) -> int:
    spec = GeneratorSpec(
        kind=args.kind, n=args.n, seed=args.seed, noise_features=args.noise_features
    )
    ds = generate(spec)
    write_csv(args.out, ds)
    print(f"wrote {args.out} ({ds.n} rows, {ds.n_features} features)")
    return 0


def _benchmark_source(args):
    if args.data:
        if not args.features:
            raise ValueError("--data requires --features")
        return load_csv(args.data, _schema_from_args(args))
    if not args.kind:
        raise ValueError("benchmark needs either --kind or --data")
    return GeneratorSpec(
        kind=args.kind, n=args.n, seed=args.seed, noise_features=args.noise_features
    )


def _parse_methods(text: str) -> tuple[str, ...]:
    if text.strip() == "all":
        return METHODS
    return tuple(m.strip() for m in text.split(",") if m.strip())


def cmd_benchmark(args) -> int:
    from .figures import render_ablation_figure, render_bias_figure, render_depth_figure

    cfg = build_fit_config(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    source = _benchmark_source(args)
    base_seed = args.seed + 1
    if args.mode == "depth-sweep":
        depths = [int(d) for d in args.depths.split(",") if d.strip()]
        sweep = depth_sweep(
            source,
            depths,
            replications=args.reps,
            base_seed=base_seed,
            config=cfg,
            train_fraction=args.train_fraction,
        )
        write_depth_sweep_csvs(sweep, out_dir / "depth_bias.csv", out_dir / "depth_asmd.csv")
        if not args.no_figures:
            render_depth_figure(sweep, out_dir / "depth.png")
        print(f"{'depth':>5} {'|bias| median':>14}")
        for depth in depths:
            print(f"{depth:>5} {sweep.median_abs_bias(depth):>14.5f}")
    elif args.mode == "ablation":
        rows = ablation_feature_selection(
            source,
            replications=args.reps,
            base_seed=base_seed,
            config=cfg,
            train_fraction=args.train_fraction,
        )
        write_ablation_csv(rows, out_dir / "ablation.csv")
        if not args.no_figures:
            render_ablation_figure(rows, out_dir / "ablation.png")
        for mode in ("max_asmd", "random"):
            bias = np.array([r.bias for r in rows if r.mode == mode])
            bias = bias[~np.isnan(bias)]
            print(f"{mode:<10} |bias| median {np.median(np.abs(bias)):.5f}")
    else:
        result = run_bias_benchmark(
            source,
            methods=_parse_methods(args.methods),
            replications=args.reps,
            base_seed=base_seed,
            config=cfg,
            train_fraction=args.train_fraction,
            n_jobs=args.jobs,
        )
        write_bias_csv(result, out_dir / "bias.csv")
        write_summary_csv(result, out_dir / "summary.csv")
        if not args.no_figures:
            render_bias_figure(result, out_dir / "bias.png")
        print(f"{'method':<18} {'median bias':>12} {'|bias| median':>14} {'kept':>7}")
        for method, stats in result.aggregates().items():
            print(
                f"{method:<18} {stats['bias_median']:>12.5f} "
                f"{stats['abs_bias_median']:>14.5f} {stats['kept_fraction_mean']:>7.3f}"
            )
    print(f"wrote {out_dir}")
    return 0


# ---------------------------------------------------------------------------
# parser assembly


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bicausetree",
        description="Interpretable treatment-effect estimation with balancing trees.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit a tree on a CSV dataset")
    p_fit.add_argument("--data", required=True, help="training CSV")
    _add_schema_flags(p_fit)
    p_fit.add_argument("--out", required=True, help="tree JSON output path")
    p_fit.add_argument("--emit-dot", metavar="FILE", help="also write Graphviz DOT")
    p_fit.add_argument("--seed", type=int, default=None)
    _add_config_flags(p_fit)
    p_fit.set_defaults(func=cmd_fit)

    p_est = sub.add_parser("estimate", help="estimate effects with a saved tree")
    p_est.add_argument("--tree", required=True, help="tree JSON from fit")
    p_est.add_argument("--data", required=True, help="CSV to estimate on")
    _add_schema_flags(p_est)
    p_est.add_argument(
        "--estimator", choices=("marginal", "ipw"), default="marginal",
        help="leaf-level estimator",
    )
    p_est.add_argument(
        "--train-data", help="training CSV, required for --estimator ipw"
    )
    p_est.add_argument("--out", required=True, help="summary CSV output path")
    p_est.add_argument("--json", metavar="FILE", help="also write the full report as JSON")
    p_est.add_argument("--per-leaf", metavar="FILE", help="also write per-leaf CSV")
    p_est.set_defaults(func=cmd_estimate)

    p_audit = sub.add_parser("audit", help="positivity and calibration report")
    p_audit.add_argument("--tree", required=True, help="tree JSON from fit")
    p_audit.add_argument("--data", required=True, help="CSV to audit against")
    _add_schema_flags(p_audit)
    p_audit.add_argument("--out-dir", required=True, help="report directory")
    p_audit.add_argument(
        "--format", choices=("text", "json"), default="text",
        help="stdout encoding of the violation report",
    )
    p_audit.add_argument("--bins", type=int, default=10, help="calibration bins")
    p_audit.add_argument("--no-figures", action="store_true", help="skip PNG output")
    p_audit.set_defaults(func=cmd_audit)

    p_sim = sub.add_parser("simulate", help="write a synthetic dataset")
    p_sim.add_argument("kind", choices=GENERATOR_KINDS, help="generator to draw from")
    p_sim.add_argument("--n", type=int, required=True, help="rows to draw")
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--noise-features", type=int, default=0)
    p_sim.add_argument("--out", required=True, help="CSV output path")
    p_sim.set_defaults(func=cmd_simulate)

    p_bench = sub.add_parser("benchmark", help="replicated bias evaluation")
    p_bench.add_argument("--kind", choices=GENERATOR_KINDS, help="generator to draw from")
    p_bench.add_argument("--n", type=int, default=20000, help="rows per generated dataset")
    p_bench.add_argument("--noise-features", type=int, default=0)
    p_bench.add_argument("--data", help="CSV with potential-outcome columns instead of --kind")
    _add_schema_flags(p_bench, potential=True)
    p_bench.add_argument("--reps", type=int, default=50, help="replications")
    p_bench.add_argument(
        "--methods", default="all",
        help="comma-separated subset of: " + ", ".join(METHODS) + " (or 'all')",
    )
    p_bench.add_argument(
        "--mode", choices=("bias", "depth-sweep", "ablation"), default="bias",
    )
    p_bench.add_argument(
        "--depths", default="1,2,3,4,5,6,8,10",
        metavar="D1,D2,...", help="depth caps for --mode depth-sweep",
    )
    p_bench.add_argument("--train-fraction", type=float, default=0.5)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--jobs", type=int, default=1, help="parallel workers")
    p_bench.add_argument("--out-dir", required=True, help="report directory")
    p_bench.add_argument("--no-figures", action="store_true", help="skip PNG output")
    _add_config_flags(p_bench)
    p_bench.set_defaults(func=cmd_benchmark)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SingleArmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
