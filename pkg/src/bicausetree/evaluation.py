"""Benchmark harness: bias replications, partition scoring, diagnostics.

Outputs are plain records and CSV writers; figure rendering lives with the
command-line layer.
"""

from __future__ import annotations

import csv
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .dataset import Dataset, SingleArmError, split_train_test
from .estimators import (
    EstimationError,
    ipw_ate,
    marginal_ate,
    matching_ate,
    tree_ate,
)
from .logistic import fit_logistic
from .rng import CounterRng
from .stats import feature_asmds
from .synthgen import GeneratorSpec, generate
from .tree import FitConfig, Tree, assign_leaves, fit

__all__ = [
    "METHODS",
    "AblationRow",
    "BenchmarkResult",
    "BiasRecord",
    "CalibrationBin",
    "DepthSweepResult",
    "ablation_feature_selection",
    "adjusted_rand_index",
    "asmd_adjustment_demo",
    "calibration_curve",
    "depth_sweep",
    "run_bias_benchmark",
    "weighted_leaf_asmds",
    "write_ablation_csv",
    "write_bias_csv",
    "write_calibration_csv",
    "write_depth_sweep_csvs",
    "write_summary_csv",
]

METHODS = ("bicause-marginal", "bicause-ipw", "ipw-lr", "matching", "marginal")


# ---------------------------------------------------------------------------
# partition scoring


def adjusted_rand_index(labels_a, labels_b) -> float:
    """Chance-corrected pair-counting agreement between two partitions.

    Returns 1.0 for identical partitions, values near 0 for independent
    ones; the degenerate case where both partitions have no distinguishing
    pairs at all counts as perfect agreement.

    Raises:
        ValueError: on empty or unequal-length label vectors.
    """
    a = np.asarray(labels_a).reshape(-1)
    b = np.asarray(labels_b).reshape(-1)
    if a.size == 0 or a.size != b.size:
        raise ValueError("label vectors must be non-empty and equally long")
    _, code_a = np.unique(a, return_inverse=True)
    _, code_b = np.unique(b, return_inverse=True)
    k_a = int(code_a.max()) + 1
    k_b = int(code_b.max()) + 1
    counts = np.bincount(code_a * k_b + code_b, minlength=k_a * k_b).reshape(k_a, k_b)

    def pairs(v: np.ndarray) -> int:
        v = v.astype(np.int64)
        return int((v * (v - 1) // 2).sum())

    index = pairs(counts)
    sum_a = pairs(counts.sum(axis=1))
    sum_b = pairs(counts.sum(axis=0))
    total = a.size * (a.size - 1) // 2
    expected = sum_a * sum_b / total
    max_index = 0.5 * (sum_a + sum_b)
    denom = max_index - expected
    if denom == 0.0:
        return 1.0
    return float((index - expected) / denom)


# ---------------------------------------------------------------------------
# bias benchmark


@dataclass
class BiasRecord:
    replication: int
    method: str
    ate_hat: float
    ate_true: float
    bias: float
    kept_fraction: float
    runtime_seconds: float


@dataclass
class BenchmarkResult:
    """Replication-level records plus per-method aggregates."""

    records: list[BiasRecord] = field(default_factory=list)

    def methods(self) -> list[str]:
        seen: list[str] = []
        for record in self.records:
            if record.method not in seen:
                seen.append(record.method)
        return seen

    def biases(self, method: str) -> np.ndarray:
        vals = np.array(
            [r.bias for r in self.records if r.method == method], dtype=np.float64
        )
        return vals[~np.isnan(vals)]

    def kept_fractions(self, method: str) -> np.ndarray:
        return np.array(
            [r.kept_fraction for r in self.records if r.method == method],
            dtype=np.float64,
        )

    def aggregates(self) -> dict[str, dict[str, float]]:
        out: dict[str, dict[str, float]] = {}
        for method in self.methods():
            bias = self.biases(method)
            runtime = sum(
                r.runtime_seconds for r in self.records if r.method == method
            )
            kept = self.kept_fractions(method)
            out[method] = {
                "n": float(bias.size),
                "bias_median": float(np.median(bias)) if bias.size else np.nan,
                "bias_mean": float(np.mean(bias)) if bias.size else np.nan,
                "bias_sd": float(np.std(bias, ddof=1)) if bias.size > 1 else np.nan,
                "abs_bias_median": float(np.median(np.abs(bias))) if bias.size else np.nan,
                "kept_fraction_mean": float(np.mean(kept)) if kept.size else np.nan,
                "runtime_total": runtime,
            }
        return out


def _resolve_source(source) -> Dataset:
    if isinstance(source, GeneratorSpec):
        return generate(source)
    if isinstance(source, Dataset):
        return source
    raise TypeError("source must be a GeneratorSpec or a Dataset")


def _check_ground_truth(ds: Dataset, true_ate: float | None) -> None:
    if true_ate is None and (ds.y0 is None or ds.y1 is None):
        raise ValueError(
            "ground truth unavailable: provide potential outcomes or true_ate"
        )


def _replication_records(
    ds: Dataset,
    methods: tuple[str, ...],
    replication: int,
    seed: int,
    config: FitConfig,
    train_fraction: float,
    true_ate: float | None,
) -> list[BiasRecord]:
    train, test = split_train_test(ds, train_fraction, seed)
    cfg = replace(config, seed=seed)
    fit_start = time.perf_counter()
    tree = fit(train, cfg)
    fit_seconds = time.perf_counter() - fit_start
    assignment = assign_leaves(tree, test.X)
    violating = tree.violating_leaf_ids()
    kept_mask = ~np.isin(assignment, violating)
    kept = test.subset(np.nonzero(kept_mask)[0])
    kept_fraction = kept.n / test.n
    if true_ate is not None:
        ate_true = float(true_ate)
    else:
        ate_true = float((kept.y1 - kept.y0).mean())
    records = []
    for method in methods:
        start = time.perf_counter()
        try:
            ate_hat = _estimate(method, tree, train, test, kept)
        except (SingleArmError, EstimationError, ValueError):
            ate_hat = np.nan
        runtime = time.perf_counter() - start
        if method.startswith("bicause"):
            # the shared tree fit is part of the method's cost
            runtime += fit_seconds
        bias = ate_hat - ate_true
        records.append(
            BiasRecord(
                replication=replication,
                method=method,
                ate_hat=float(ate_hat),
                ate_true=ate_true,
                bias=float(bias),
                kept_fraction=float(kept_fraction),
                runtime_seconds=runtime,
            )
        )
    return records


def _estimate(method: str, tree: Tree, train: Dataset, test: Dataset, kept: Dataset) -> float:
    if method == "bicause-marginal":
        return tree_ate(tree, test, "marginal").ate
    if method == "bicause-ipw":
        return tree_ate(tree, test, "ipw", ds_train=train).ate
    if method == "ipw-lr":
        model = fit_logistic(train.X, train.t.astype(np.float64))
        return ipw_ate(kept, np.clip(model.predict_proba(kept.X), 0.0, 1.0)).ate
    if method == "matching":
        return matching_ate(kept).ate
    if method == "marginal":
        return marginal_ate(kept).ate
    raise ValueError(f"unknown method {method!r}; valid: {', '.join(METHODS)}")


def _benchmark_worker(args) -> list[BiasRecord]:
    ds, methods, replication, seed, config, train_fraction, true_ate = args
    return _replication_records(
        ds, methods, replication, seed, config, train_fraction, true_ate
    )


def run_bias_benchmark(
    source,
    methods=METHODS,
    replications: int = 50,
    base_seed: int = 0,
    config: FitConfig | None = None,
    train_fraction: float = 0.5,
    true_ate: float | None = None,
    n_jobs: int = 1,
) -> BenchmarkResult:
    """Replicated bias evaluation against known ground truth.

    Replication ``r`` splits with seed ``base_seed + r``, fits the tree on
    the train part, drops test rows in violating leaves, computes the true
    effect on the kept rows from the potential outcomes (or uses
    ``true_ate``), and runs every method on those same kept rows.  A method
    failure yields a NaN record instead of aborting the run.  Replications
    are independent and may run in parallel; record order is by replication
    regardless of ``n_jobs``.

    Raises:
        ValueError: on an unknown method or missing ground truth.
    """
    methods = tuple(methods)
    for method in methods:
        if method not in METHODS:
            raise ValueError(f"unknown method {method!r}; valid: {', '.join(METHODS)}")
    if replications < 1:
        raise ValueError("replications must be positive")
    ds = _resolve_source(source)
    _check_ground_truth(ds, true_ate)
    cfg = config if config is not None else FitConfig()
    cfg.validate()
    jobs = [
        (ds, methods, r, base_seed + r, cfg, train_fraction, true_ate)
        for r in range(replications)
    ]
    result = BenchmarkResult()
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            for batch in pool.map(_benchmark_worker, jobs):
                result.records.extend(batch)
    else:
        for job in jobs:
            result.records.extend(_benchmark_worker(job))
    return result


# ---------------------------------------------------------------------------
# calibration


@dataclass
class CalibrationBin:
    bin_index: int
    low: float
    high: float
    mean_predicted: float
    mean_observed: float
    count: int


def calibration_curve(predicted, actual, n_bins: int = 10) -> list[CalibrationBin]:
    """Equal-width reliability bins over [0, 1]; empty bins are omitted.

    Raises:
        ValueError: if predictions leave [0, 1], lengths differ, or
            ``n_bins`` < 1.
    """
    p = np.asarray(predicted, dtype=np.float64).reshape(-1)
    t = np.asarray(actual, dtype=np.float64).reshape(-1)
    if p.size != t.size:
        raise ValueError("predicted and actual must be equally long")
    if p.size == 0:
        raise ValueError("empty input")
    if np.min(p) < 0.0 or np.max(p) > 1.0:
        raise ValueError("predicted values must lie in [0, 1]")
    if n_bins < 1:
        raise ValueError("n_bins must be positive")
    idx = np.minimum((p * n_bins).astype(np.int64), n_bins - 1)
    bins: list[CalibrationBin] = []
    for b in range(n_bins):
        mask = idx == b
        count = int(mask.sum())
        if count == 0:
            continue
        bins.append(
            CalibrationBin(
                bin_index=b,
                low=b / n_bins,
                high=(b + 1) / n_bins,
                mean_predicted=float(p[mask].mean()),
                mean_observed=float(t[mask].mean()),
                count=count,
            )
        )
    return bins


# ---------------------------------------------------------------------------
# per-feature residual imbalance


def weighted_leaf_asmds(tree: Tree, ds: Dataset) -> np.ndarray:
    """Leaf-size weighted per-feature ASMD over non-violating leaves.

    Weights are leaf row counts normalized over the included leaves, so a
    root-only tree reproduces the global ASMD.  Leaves whose rows cover a
    single arm cannot contribute and are skipped.

    Raises:
        EstimationError: when no leaf is usable.
    """
    assignment = assign_leaves(tree, ds.X)
    violating = set(tree.violating_leaf_ids())
    totals = np.zeros(ds.n_features, dtype=np.float64)
    weight_total = 0
    for leaf_id in tree.leaf_ids():
        if leaf_id in violating:
            continue
        rows = np.nonzero(assignment == leaf_id)[0]
        if rows.size == 0:
            continue
        t_rows = ds.t[rows]
        if (t_rows == 1).all() or (t_rows == 0).all():
            continue
        totals += rows.size * feature_asmds(ds.X[rows], t_rows == 1)
        weight_total += rows.size
    if weight_total == 0:
        raise EstimationError("no non-violating leaf with both arms")
    return totals / weight_total


# ---------------------------------------------------------------------------
# depth sweep


@dataclass
class DepthBiasRow:
    depth: int
    replication: int
    bias: float


@dataclass
class DepthAsmdRow:
    depth: int
    feature: str
    weighted_asmd: float


@dataclass
class DepthSweepResult:
    bias_rows: list[DepthBiasRow] = field(default_factory=list)
    asmd_rows: list[DepthAsmdRow] = field(default_factory=list)

    def biases(self, depth: int) -> np.ndarray:
        vals = np.array(
            [r.bias for r in self.bias_rows if r.depth == depth], dtype=np.float64
        )
        return vals[~np.isnan(vals)]

    def median_abs_bias(self, depth: int) -> float:
        vals = self.biases(depth)
        return float(np.median(np.abs(vals))) if vals.size else np.nan


def depth_sweep(
    source,
    depths,
    replications: int = 20,
    base_seed: int = 0,
    config: FitConfig | None = None,
    train_fraction: float = 0.5,
) -> DepthSweepResult:
    """Bias and residual imbalance of the tree estimator across depth caps.

    For every depth the same replication seeds are reused, so rows are
    paired across depths.  Weighted ASMDs are computed on the training rows
    and averaged over replications.
    """
    ds = _resolve_source(source)
    _check_ground_truth(ds, None)
    cfg = config if config is not None else FitConfig()
    result = DepthSweepResult()
    for depth in depths:
        if depth < 1:
            raise ValueError("depths must be positive")
        depth_cfg = replace(cfg, max_depth=int(depth))
        asmd_sums = np.zeros(ds.n_features, dtype=np.float64)
        asmd_count = 0
        for r in range(replications):
            seed = base_seed + r
            train, test = split_train_test(ds, train_fraction, seed)
            tree = fit(train, replace(depth_cfg, seed=seed))
            assignment = assign_leaves(tree, test.X)
            kept_mask = ~np.isin(assignment, tree.violating_leaf_ids())
            kept = test.subset(np.nonzero(kept_mask)[0])
            ate_true = float((kept.y1 - kept.y0).mean())
            try:
                bias = tree_ate(tree, test, "marginal").ate - ate_true
            except (EstimationError, SingleArmError):
                bias = np.nan
            result.bias_rows.append(DepthBiasRow(int(depth), r, float(bias)))
            try:
                asmd_sums += weighted_leaf_asmds(tree, train)
                asmd_count += 1
            except EstimationError:
                pass
        if asmd_count:
            for j, name in enumerate(ds.feature_names):
                result.asmd_rows.append(
                    DepthAsmdRow(int(depth), name, float(asmd_sums[j] / asmd_count))
                )
    return result


# ---------------------------------------------------------------------------
# feature selection ablation


@dataclass
class AblationRow:
    mode: str
    replication: int
    bias: float
    max_weighted_asmd: float


def ablation_feature_selection(
    source,
    replications: int = 20,
    base_seed: int = 0,
    config: FitConfig | None = None,
    train_fraction: float = 0.5,
    modes: tuple[str, str] = ("max_asmd", "random"),
) -> list[AblationRow]:
    """Paired comparison of feature-selection policies on bias and imbalance.

    Each replication reuses the same split seed across modes; the imbalance
    score is the largest per-feature weighted ASMD after fitting.
    """
    ds = _resolve_source(source)
    _check_ground_truth(ds, None)
    cfg = config if config is not None else FitConfig()
    rows: list[AblationRow] = []
    for mode in modes:
        mode_cfg = replace(cfg, feature_selection=mode)
        for r in range(replications):
            seed = base_seed + r
            train, test = split_train_test(ds, train_fraction, seed)
            tree = fit(train, replace(mode_cfg, seed=seed))
            assignment = assign_leaves(tree, test.X)
            kept_mask = ~np.isin(assignment, tree.violating_leaf_ids())
            kept = test.subset(np.nonzero(kept_mask)[0])
            ate_true = float((kept.y1 - kept.y0).mean())
            try:
                bias = tree_ate(tree, test, "marginal").ate - ate_true
            except (EstimationError, SingleArmError):
                bias = np.nan
            try:
                max_asmd = float(np.max(weighted_leaf_asmds(tree, train)))
            except EstimationError:
                max_asmd = np.nan
            rows.append(AblationRow(mode, r, float(bias), max_asmd))
    return rows


# ---------------------------------------------------------------------------
# adjustment demo


def asmd_adjustment_demo(seed: int = 0, n: int = 100_000) -> dict[str, float]:
    """Treatment coefficients of four linear models on one confounded draw.

    The outcome is ``y = a + x1 + x2`` where only ``x2`` depends on the
    binary ``a``; regressions that omit ``x2`` absorb its shift into the
    treatment coefficient (approximately 2 instead of the true 1).  Models
    are solved by ordinary least squares via the normal equations.
    """
    rng = CounterRng(seed)
    a = rng.bernoulli(0.5, n).astype(np.float64)
    x1 = rng.normal(n)
    x2 = a + rng.normal(n)
    y = a + x1 + x2

    def treatment_coef(columns: list[np.ndarray]) -> float:
        Z = np.column_stack([np.ones(n)] + columns)
        beta = np.linalg.solve(Z.T @ Z, Z.T @ y)
        return float(beta[1])

    return {
        "null": treatment_coef([a]),
        "full": treatment_coef([a, x1, x2]),
        "x1_only": treatment_coef([a, x1]),
        "x2_only": treatment_coef([a, x2]),
    }


# ---------------------------------------------------------------------------
# CSV writers


def _write_rows(path, header: list[str], rows: list[list]) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _num(value: float) -> str:
    return repr(float(value))


def write_bias_csv(result: BenchmarkResult, path) -> None:
    _write_rows(
        path,
        ["replication", "method", "bias", "kept_fraction", "runtime"],
        [
            [r.replication, r.method, _num(r.bias), _num(r.kept_fraction), _num(r.runtime_seconds)]
            for r in result.records
        ],
    )


def write_summary_csv(result: BenchmarkResult, path) -> None:
    aggregates = result.aggregates()
    _write_rows(
        path,
        [
            "method",
            "n",
            "bias_median",
            "bias_mean",
            "bias_sd",
            "abs_bias_median",
            "kept_fraction_mean",
            "runtime_total",
        ],
        [
            [
                method,
                int(stats["n"]),
                _num(stats["bias_median"]),
                _num(stats["bias_mean"]),
                _num(stats["bias_sd"]),
                _num(stats["abs_bias_median"]),
                _num(stats["kept_fraction_mean"]),
                _num(stats["runtime_total"]),
            ]
            for method, stats in aggregates.items()
        ],
    )


def write_calibration_csv(bins: list[CalibrationBin], path) -> None:
    _write_rows(
        path,
        ["bin", "predicted", "observed", "count"],
        [
            [b.bin_index, _num(b.mean_predicted), _num(b.mean_observed), b.count]
            for b in bins
        ],
    )


def write_depth_sweep_csvs(result: DepthSweepResult, bias_path, asmd_path) -> None:
    _write_rows(
        bias_path,
        ["depth", "replication", "bias"],
        [[r.depth, r.replication, _num(r.bias)] for r in result.bias_rows],
    )
    _write_rows(
        asmd_path,
        ["depth", "feature", "weighted_asmd"],
        [[r.depth, r.feature, _num(r.weighted_asmd)] for r in result.asmd_rows],
    )


def write_ablation_csv(rows: list[AblationRow], path) -> None:
    _write_rows(
        path,
        ["mode", "replication", "bias", "max_weighted_asmd"],
        [[r.mode, r.replication, _num(r.bias), _num(r.max_weighted_asmd)] for r in rows],
    )
