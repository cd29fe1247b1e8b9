"""Average treatment effect estimators and their common report format.

The tree-based estimators aggregate leaf-level effects over the non-violating
leaves with test-count weights; baselines (IPW, Mahalanobis matching, the
unadjusted marginal difference) share the same :class:`EffectReport` shape so
benchmarks can treat every method uniformly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset, SingleArmError
from .logistic import fit_logistic
from .tree import Tree, assign_leaves

__all__ = [
    "EffectReport",
    "EstimationError",
    "LeafEffect",
    "ipw_ate",
    "marginal_ate",
    "matching_ate",
    "tree_ate",
    "tree_propensity",
]

DEFAULT_CLIP = (0.001, 0.999)


class EstimationError(ValueError):
    """No usable population remains for estimation."""


@dataclass
class LeafEffect:
    """Effect estimate for one leaf on the evaluation rows."""

    leaf_id: int
    n_test: int
    effect: float
    mu1: float
    mu0: float


@dataclass
class EffectReport:
    """Uniform estimator output.

    Attributes:
        method: estimator tag, e.g. "bicause-marginal" or "ipw".
        ate: the average treatment effect estimate.
        per_leaf: leaf-level contributions (empty for non-tree methods).
        kept_fraction: fraction of input rows that entered the estimate.
        excluded_row_ids: row ids dropped by positivity filtering.
        n_clipped: rows whose propensity hit the clipping bounds.
        warnings: non-fatal issues encountered while estimating.
    """

    method: str
    ate: float
    per_leaf: list[LeafEffect] = field(default_factory=list)
    kept_fraction: float = 1.0
    excluded_row_ids: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    n_clipped: int = 0
    warnings: list[str] = field(default_factory=list)

    @property
    def n_excluded(self) -> int:
        return int(np.asarray(self.excluded_row_ids).size)

    def to_json(self) -> str:
        payload = {
            "method": self.method,
            "ate": self.ate,
            "kept_fraction": self.kept_fraction,
            "n_excluded": self.n_excluded,
            "n_clipped": self.n_clipped,
            "excluded_row_ids": [int(r) for r in np.asarray(self.excluded_row_ids)],
            "per_leaf": [
                {
                    "leaf_id": leaf.leaf_id,
                    "n_test": leaf.n_test,
                    "effect": leaf.effect,
                    "mu1": leaf.mu1,
                    "mu0": leaf.mu0,
                }
                for leaf in self.per_leaf
            ],
            "warnings": list(self.warnings),
        }
        return json.dumps(payload, indent=2)

    def csv_row(self) -> tuple[str, str]:
        """(header, row) pair for the one-line summary format."""
        header = "method,ate,kept_fraction,n_excluded"
        row = f"{self.method},{self.ate!r},{self.kept_fraction!r},{self.n_excluded}"
        return header, row


# ---------------------------------------------------------------------------
# baselines


def marginal_ate(ds: Dataset) -> EffectReport:
    """Unadjusted difference of arm means.

    Raises:
        SingleArmError: if either arm is empty.
    """
    ds.require_both_arms()
    treated = ds.treated_mask
    ate = float(ds.y[treated].mean() - ds.y[~treated].mean())
    return EffectReport(method="marginal", ate=ate)


def ipw_ate(ds: Dataset, propensities, clip: tuple[float, float] = DEFAULT_CLIP) -> EffectReport:
    """Inverse probability weighting with the ratio (self-normalized) form.

    ``mu_hat_1 = sum(T y / e) / sum(T / e)`` and symmetrically for controls;
    propensities are clipped into ``clip`` first and the number of affected
    rows is reported.

    Raises:
        ValueError: on invalid propensities or clip bounds.
        SingleArmError: if either arm is empty.
    """
    ds.require_both_arms()
    e = np.asarray(propensities, dtype=np.float64)
    if e.shape != (ds.n,):
        raise ValueError("propensities must have one entry per row")
    if np.min(e) < 0.0 or np.max(e) > 1.0:
        raise ValueError("propensities must lie in [0, 1]")
    low, high = clip
    if not 0.0 < low < high < 1.0:
        raise ValueError("clip bounds must satisfy 0 < low < high < 1")
    n_clipped = int(((e < low) | (e > high)).sum())
    e = np.clip(e, low, high)
    treated = ds.treated_mask.astype(np.float64)
    w1 = treated / e
    w0 = (1.0 - treated) / (1.0 - e)
    mu1 = float((w1 * ds.y).sum() / w1.sum())
    mu0 = float((w0 * ds.y).sum() / w0.sum())
    return EffectReport(method="ipw", ate=mu1 - mu0, n_clipped=n_clipped)


def matching_ate(ds: Dataset, metric: str = "mahalanobis") -> EffectReport:
    """One-to-one nearest neighbour matching with replacement, both ways.

    Every treated row is matched to its nearest control (covariance taken
    from the control group) to impute its untreated outcome, and every
    control row to its nearest treated (covariance from the treated group);
    the estimate averages the imputed individual effects over all rows.
    Distance ties break toward the lowest row id.

    Raises:
        ValueError: on an unknown metric or a singular covariance matrix
            (use ``metric="euclidean"`` for degenerate features).
        SingleArmError: if either arm is empty.
    """
    if metric not in ("mahalanobis", "euclidean"):
        raise ValueError(f"unknown metric {metric!r}")
    ds.require_both_arms()
    treated = ds.treated_mask
    order_t = np.argsort(ds.row_ids[treated], kind="stable")
    order_c = np.argsort(ds.row_ids[~treated], kind="stable")
    X_t = ds.X[treated][order_t]
    X_c = ds.X[~treated][order_c]
    y_t = ds.y[treated][order_t]
    y_c = ds.y[~treated][order_c]
    if metric == "mahalanobis":
        L_c = _covariance_cholesky(X_c, "control")
        L_t = _covariance_cholesky(X_t, "treated")
        match_t = _nearest(_whiten(X_t, L_c), _whiten(X_c, L_c))
        match_c = _nearest(_whiten(X_c, L_t), _whiten(X_t, L_t))
    else:
        match_t = _nearest(X_t, X_c)
        match_c = _nearest(X_c, X_t)
    effects_t = y_t - y_c[match_t]
    effects_c = y_t[match_c] - y_c
    ate = float((effects_t.sum() + effects_c.sum()) / ds.n)
    return EffectReport(method="matching", ate=ate)


def _covariance_cholesky(X: np.ndarray, arm: str) -> np.ndarray:
    if X.shape[0] < 2:
        raise ValueError(f"{arm} group too small to estimate a covariance")
    cov = np.atleast_2d(np.cov(X, rowvar=False, ddof=1))
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise ValueError(
            f"singular covariance for the {arm} group; "
            "consider metric='euclidean'"
        ) from None


def _whiten(X: np.ndarray, L: np.ndarray) -> np.ndarray:
    return np.linalg.solve(L, X.T).T


def _nearest(queries: np.ndarray, candidates: np.ndarray, block: int = 512) -> np.ndarray:
    """Index of the closest candidate per query row (first index on ties)."""
    cand_sq = (candidates * candidates).sum(axis=1)
    out = np.empty(queries.shape[0], dtype=np.int64)
    for start in range(0, queries.shape[0], block):
        q = queries[start : start + block]
        d2 = (q * q).sum(axis=1)[:, None] + cand_sq[None, :] - 2.0 * (q @ candidates.T)
        out[start : start + q.shape[0]] = np.argmin(d2, axis=1)
    return out


# ---------------------------------------------------------------------------
# tree-based estimators


def tree_propensity(tree: Tree, ds: Dataset) -> np.ndarray:
    """Per-sample propensity: the training prevalence of the sample's leaf."""
    assignment = assign_leaves(tree, ds.X)
    prevalences = np.full(len(tree.nodes), np.nan)
    for leaf_id in tree.leaf_ids():
        estimate = tree.nodes[leaf_id].leaf_estimate
        if estimate is None:
            raise ValueError("tree has no leaf estimates; fit it before use")
        prevalences[leaf_id] = estimate.prevalence
    return prevalences[assignment]


def tree_ate(
    tree: Tree,
    ds_test: Dataset,
    leaf_estimator: str = "marginal",
    ds_train: Dataset | None = None,
    clip: tuple[float, float] = DEFAULT_CLIP,
) -> EffectReport:
    """Tree-stratified ATE over the non-violating leaves.

    Rows falling into violating leaves are excluded; each remaining leaf
    contributes its effect weighted by its test row count.  With
    ``leaf_estimator="marginal"`` the leaf effect is the difference of arm
    means on the leaf's test rows; with ``"ipw"`` it is an in-leaf IPW
    estimate whose propensity model is a logistic fit on the leaf's training
    rows (``ds_train`` required), falling back to the marginal difference
    when that model cannot be fit.  Leaves whose test rows miss an arm are
    skipped with a warning.

    Raises:
        EstimationError: when no leaf yields a usable effect.
        ValueError: on an unknown leaf estimator or missing ``ds_train``.
    """
    if leaf_estimator not in ("marginal", "ipw"):
        raise ValueError(f"unknown leaf estimator {leaf_estimator!r}")
    if leaf_estimator == "ipw" and ds_train is None:
        raise ValueError("leaf_estimator='ipw' needs ds_train to fit leaf models")
    assignment = assign_leaves(tree, ds_test.X)
    train_assignment = (
        assign_leaves(tree, ds_train.X) if ds_train is not None else None
    )
    violating = set(tree.violating_leaf_ids())
    excluded = np.isin(assignment, sorted(violating))
    report = EffectReport(
        method="bicause-marginal" if leaf_estimator == "marginal" else "bicause-ipw",
        ate=np.nan,
        kept_fraction=float((~excluded).sum() / ds_test.n) if ds_test.n else 0.0,
        excluded_row_ids=ds_test.row_ids[excluded].copy(),
    )
    weighted_sum = 0.0
    weight_total = 0
    for leaf_id in tree.leaf_ids():
        if leaf_id in violating:
            continue
        rows = np.nonzero(assignment == leaf_id)[0]
        if rows.size == 0:
            continue
        t_rows = ds_test.t[rows]
        y_rows = ds_test.y[rows]
        n1 = int((t_rows == 1).sum())
        n0 = rows.size - n1
        if n1 == 0 or n0 == 0:
            report.warnings.append(
                f"leaf {leaf_id}: test rows cover a single arm; leaf skipped"
            )
            continue
        if leaf_estimator == "marginal":
            mu1 = float(y_rows[t_rows == 1].mean())
            mu0 = float(y_rows[t_rows == 0].mean())
            effect = mu1 - mu0
        else:
            effect, mu1, mu0, warning = _leaf_ipw(
                tree, ds_train, train_assignment, leaf_id, ds_test, rows, clip
            )
            if warning:
                report.warnings.append(warning)
        report.per_leaf.append(
            LeafEffect(leaf_id=leaf_id, n_test=rows.size, effect=effect, mu1=mu1, mu0=mu0)
        )
        weighted_sum += rows.size * effect
        weight_total += rows.size
    if weight_total == 0:
        raise EstimationError("no leaf produced a usable effect estimate")
    report.ate = weighted_sum / weight_total
    return report


def _leaf_ipw(
    tree: Tree,
    ds_train: Dataset,
    train_assignment: np.ndarray,
    leaf_id: int,
    ds_test: Dataset,
    rows: np.ndarray,
    clip: tuple[float, float],
) -> tuple[float, float, float, str | None]:
    t_rows = ds_test.t[rows]
    y_rows = ds_test.y[rows]

    def fallback(reason: str) -> tuple[float, float, float, str]:
        mu1 = float(y_rows[t_rows == 1].mean())
        mu0 = float(y_rows[t_rows == 0].mean())
        return mu1 - mu0, mu1, mu0, f"leaf {leaf_id}: {reason}; marginal fallback"

    train_rows = np.nonzero(train_assignment == leaf_id)[0]
    train_t = ds_train.t[train_rows]
    if train_rows.size == 0 or (train_t == 1).all() or (train_t == 0).all():
        return fallback("training rows cover a single arm")
    model = fit_logistic(ds_train.X[train_rows], train_t.astype(np.float64))
    if not model.converged:
        return fallback("leaf propensity model did not converge")
    e = np.clip(model.predict_proba(ds_test.X[rows]), clip[0], clip[1])
    treated = (t_rows == 1).astype(np.float64)
    w1 = treated / e
    w0 = (1.0 - treated) / (1.0 - e)
    mu1 = float((w1 * y_rows).sum() / w1.sum())
    mu0 = float((w0 * y_rows).sum() / w0.sum())
    return mu1 - mu0, mu1, mu0, None
