"""Balancing partition tree for interpretable treatment-effect estimation.

The tree recursively splits the covariate with the largest treatment
imbalance (absolute standardized mean difference) at the value whose 2x2
treatment-by-side table has the lowest association p-value, stops when a node
is balanced or too small or too deep, prunes with a Holm correction over all
candidate splits, and finally flags leaves whose treatment prevalence falls
outside positivity cutoffs.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace

import numpy as np

from .dataset import Dataset
from .logistic import fit_logistic
from .positivity import Cutoffs, crump_cutoffs, symmetric_prevalence_cutoffs
from .rng import CounterRng
from .stats import Table2x2, chi2_p, feature_asmds, fisher_exact_p, holm_bonferroni

__all__ = [
    "FEATURE_SELECTION_MODES",
    "POSITIVITY_METHODS",
    "TREE_FORMAT_VERSION",
    "FitConfig",
    "LeafEstimate",
    "Node",
    "Split",
    "Tree",
    "assign_leaf",
    "assign_leaves",
    "fit",
    "from_json",
    "mark_positivity",
    "select_feature",
    "select_split_value",
    "to_dot",
    "to_json",
]

TREE_FORMAT_VERSION = "bicause_tree_v1"
FEATURE_SELECTION_MODES = ("max_asmd", "random", "combined_sq")
POSITIVITY_METHODS = ("crump", "symmetric_prevalence")


@dataclass(frozen=True)
class FitConfig:
    """Frozen fitting parameters.

    Attributes:
        max_depth: maximum number of splits on any root-to-leaf path.
        asmd_threshold: a node whose largest per-feature ASMD is below this
            is considered balanced and becomes a leaf.
        min_treat_group_size: minimum treated and control count required in
            every child a split would create.
        min_leaf_population: nodes smaller than this are not split
            (0 disables the criterion).
        alpha: significance level for the pruning correction.
        correction: multiple-testing correction; only "holm" is supported.
        positivity_method: "crump" or "symmetric_prevalence".
        crump_segments: grid resolution of the Crump cutoff search.
        sp_alpha: trimming level for symmetric prevalence cutoffs.
        feature_selection: "max_asmd", "random", or "combined_sq".
        max_split_candidates: cap on candidate split values per node
            (None means all distinct values are candidates).
        seed: seed for any randomized choices during fitting.
    """

    max_depth: int = 5
    asmd_threshold: float = 0.10
    min_treat_group_size: int = 2
    min_leaf_population: int = 0
    alpha: float = 0.05
    correction: str = "holm"
    positivity_method: str = "crump"
    crump_segments: int = 10_000
    sp_alpha: float = 0.1
    feature_selection: str = "max_asmd"
    max_split_candidates: int | None = None
    seed: int = 0

    def validate(self) -> None:
        if self.max_depth < 1:
            raise ValueError("max_depth must be at least 1")
        if self.asmd_threshold < 0.0:
            raise ValueError("asmd_threshold must be non-negative")
        if self.min_treat_group_size < 0:
            raise ValueError("min_treat_group_size must be non-negative")
        if self.min_leaf_population < 0:
            raise ValueError("min_leaf_population must be non-negative")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.correction != "holm":
            raise ValueError(f"unsupported correction {self.correction!r}")
        if self.positivity_method not in POSITIVITY_METHODS:
            raise ValueError(f"unknown positivity_method {self.positivity_method!r}")
        if self.crump_segments < 1:
            raise ValueError("crump_segments must be at least 1")
        if not 0.0 < self.sp_alpha < 0.5:
            raise ValueError("sp_alpha must lie strictly between 0 and 0.5")
        if self.feature_selection not in FEATURE_SELECTION_MODES:
            raise ValueError(f"unknown feature_selection {self.feature_selection!r}")
        if self.max_split_candidates is not None and self.max_split_candidates < 1:
            raise ValueError("max_split_candidates must be at least 1 or None")


@dataclass
class Split:
    feature_index: int
    value: float
    p_raw: float
    p_adjusted: float | None
    asmd: float


@dataclass
class LeafEstimate:
    """Training-sample summaries for a leaf; None marks an empty arm."""

    mean_treated: float | None
    mean_control: float | None
    effect: float | None
    prevalence: float


@dataclass
class Node:
    id: int
    depth: int
    n: int
    n_treated: int
    n_control: int
    split: Split | None = None
    children: tuple[int, int] | None = None
    violating: bool = False
    leaf_estimate: LeafEstimate | None = None

    @property
    def is_leaf(self) -> bool:
        return self.children is None

    @property
    def prevalence(self) -> float:
        return self.n_treated / self.n


@dataclass
class Tree:
    """Fitted partition tree; ``nodes[i].id == i`` with the root at 0."""

    nodes: list[Node]
    config: FitConfig
    feature_names: tuple[str, ...]
    fit_metadata: dict
    cutoffs: Cutoffs | None = None

    @property
    def n_leaves(self) -> int:
        return sum(1 for node in self.nodes if node.is_leaf)

    def leaf_ids(self) -> list[int]:
        return [node.id for node in self.nodes if node.is_leaf]

    def violating_leaf_ids(self) -> list[int]:
        return [node.id for node in self.nodes if node.is_leaf and node.violating]

    def parents(self) -> dict[int, tuple[int, bool]]:
        """Map child id -> (parent id, went_left)."""
        out: dict[int, tuple[int, bool]] = {}
        for node in self.nodes:
            if node.children is not None:
                left, right = node.children
                out[left] = (node.id, True)
                out[right] = (node.id, False)
        return out

    def path_predicates(self, leaf_id: int) -> list[str]:
        """Human-readable root-to-leaf conditions, e.g. ``["S <= 0", "A > 49.7"]``."""
        if not 0 <= leaf_id < len(self.nodes):
            raise ValueError(f"no node with id {leaf_id}")
        parents = self.parents()
        steps: list[str] = []
        current = leaf_id
        while current in parents:
            parent_id, went_left = parents[current]
            split = self.nodes[parent_id].split
            name = self.feature_names[split.feature_index]
            op = "<=" if went_left else ">"
            steps.append(f"{name} {op} {split.value:g}")
            current = parent_id
        steps.reverse()
        return steps

    def assign_leaves(self, X) -> np.ndarray:
        return assign_leaves(self, X)

    def to_json(self) -> str:
        return to_json(self)

    def to_dot(self) -> str:
        return to_dot(self)


# ---------------------------------------------------------------------------
# split search


def select_feature(X, treated, mode: str = "max_asmd", rng: CounterRng | None = None) -> int:
    """Choose the feature index to split on.

    Modes: ``max_asmd`` takes the most imbalanced feature; ``random`` draws
    uniformly (requires ``rng``); ``combined_sq`` weighs normalized imbalance
    by normalized absolute coefficients of a logistic treatment model on all
    features.  Ties break toward the lowest index.

    Raises:
        ValueError: on an unknown mode, a missing rng for ``random``, or an
            empty treatment arm.
    """
    X = np.asarray(X, dtype=np.float64)
    treated = np.asarray(treated, dtype=bool)
    asmds = feature_asmds(X, treated)
    return _select_feature_given(asmds, X, treated, mode, rng)


def _select_feature_given(
    asmds: np.ndarray,
    X: np.ndarray,
    treated: np.ndarray,
    mode: str,
    rng: CounterRng | None,
) -> int:
    d = asmds.size
    if mode == "max_asmd":
        return int(np.argmax(asmds))
    if mode == "random":
        if rng is None:
            raise ValueError("random feature selection needs an rng")
        return int(rng.integers(d, 1)[0])
    if mode == "combined_sq":
        if np.isinf(asmds).any():
            return int(np.argmax(asmds))
        balance = asmds / asmds.sum() if asmds.sum() > 0.0 else np.full(d, 1.0 / d)
        model = fit_logistic(X, treated.astype(np.float64))
        importance = np.abs(model.coef)
        total = importance.sum()
        importance = importance / total if total > 0.0 else np.full(d, 1.0 / d)
        return int(np.argmax(balance * importance))
    raise ValueError(f"unknown feature selection mode {mode!r}")


def select_split_value(
    x,
    t,
    min_treat_group_size: int = 2,
    max_split_candidates: int | None = None,
) -> tuple[float, float] | None:
    """Pick the split value with the lowest treatment-association p-value.

    Candidates are the distinct values of ``x`` except the maximum (rows with
    ``x <= value`` go left); when there are more than ``max_split_candidates``
    the candidates are empirical quantiles of ``x`` at that resolution.  A
    candidate is discarded when a child it creates would hold fewer than
    ``min_treat_group_size`` treated or control rows.  Each surviving table
    is tested with the chi-square statistic when every expected cell count is
    at least 5 and Fisher's exact test otherwise; the most extreme result
    wins and exact ties break toward the smallest value.

    Returns:
        (value, p) for the best candidate, or None when no candidate survives.

    Raises:
        ValueError: if ``x`` is constant.
    """
    x = np.asarray(x, dtype=np.float64)
    t = np.asarray(t)
    n = x.size
    if n == 0 or np.min(x) == np.max(x):
        raise ValueError("cannot split a constant feature")
    order = np.argsort(x, kind="stable")
    xs = x[order]
    ts = (t[order] == 1).astype(np.int64)
    pos = np.nonzero(xs[:-1] != xs[1:])[0]
    if max_split_candidates is not None and pos.size > max_split_candidates:
        levels = np.linspace(0.0, 1.0, max_split_candidates)
        qvals = np.unique(np.quantile(xs, levels, method="lower"))
        qvals = qvals[qvals < xs[-1]]
        if qvals.size == 0:
            return None
        pos = np.searchsorted(xs, qvals, side="right") - 1
    n_treated = int(ts.sum())
    n_control = n - n_treated
    cum_treated = np.cumsum(ts)
    n_left = pos + 1
    c = cum_treated[pos]  # treated, left
    a = n_left - c  # control, left
    d = n_treated - c
    b = n_control - a
    mtgs = min_treat_group_size
    valid = (a >= mtgs) & (b >= mtgs) & (c >= mtgs) & (d >= mtgs)
    if not valid.any():
        return None
    if n_treated > 0 and n_control > 0:
        min_col = np.minimum(n_left, n - n_left)
        chi_ok = valid & (min(n_control, n_treated) * min_col >= 5 * n)
    else:
        chi_ok = np.zeros_like(valid)
    best_value: float | None = None
    best_p: float | None = None
    for i in np.nonzero(valid & ~chi_ok)[0]:
        p = fisher_exact_p(Table2x2(int(a[i]), int(b[i]), int(c[i]), int(d[i])))
        if best_p is None or p < best_p:
            best_p = p
            best_value = float(xs[pos[i]])
    chi_idx = np.nonzero(chi_ok)[0]
    if chi_idx.size:
        diff = (a[chi_idx] * d[chi_idx] - b[chi_idx] * c[chi_idx]).astype(np.float64)
        row_product = float(n_control) * float(n_treated)
        cols_left = n_left[chi_idx].astype(np.float64)
        denom = (row_product * cols_left) * (float(n) - cols_left)
        stat = ((float(n) * diff) * diff) / denom
        winner = chi_idx[int(np.argmax(stat))]
        p_chi = chi2_p(Table2x2(int(a[winner]), int(b[winner]), int(c[winner]), int(d[winner])))
        if p_chi == 0.0:
            # survival underflow: every such candidate ties at p=0, so take
            # the smallest qualifying value
            for i in chi_idx:
                if chi2_p(Table2x2(int(a[i]), int(b[i]), int(c[i]), int(d[i]))) == 0.0:
                    winner = i
                    break
        value_chi = float(xs[pos[winner]])
        if (
            best_p is None
            or p_chi < best_p
            or (p_chi == best_p and value_chi < best_value)
        ):
            best_p = p_chi
            best_value = value_chi
    if best_p is None:
        return None
    return best_value, best_p


# ---------------------------------------------------------------------------
# growing and pruning


class _GrowNode:
    __slots__ = (
        "depth",
        "n",
        "n_treated",
        "n_control",
        "feature",
        "value",
        "p_raw",
        "p_adjusted",
        "asmd",
        "left",
        "right",
        "reject",
        "keep",
    )

    def __init__(self, depth: int, n: int, n_treated: int) -> None:
        self.depth = depth
        self.n = n
        self.n_treated = n_treated
        self.n_control = n - n_treated
        self.feature: int | None = None
        self.value = 0.0
        self.p_raw = 1.0
        self.p_adjusted: float | None = None
        self.asmd = 0.0
        self.left: "_GrowNode | None" = None
        self.right: "_GrowNode | None" = None
        self.reject = False
        self.keep = False


def _grow(
    X: np.ndarray,
    treated: np.ndarray,
    idx: np.ndarray,
    depth: int,
    cfg: FitConfig,
    rng: CounterRng,
) -> _GrowNode:
    sub_treated = treated[idx]
    n_treated = int(sub_treated.sum())
    node = _GrowNode(depth, idx.size, n_treated)
    if depth >= cfg.max_depth:
        return node
    if node.n < cfg.min_leaf_population:
        return node
    if node.n_treated == 0 or node.n_control == 0:
        return node
    if min(node.n_treated, node.n_control) < cfg.min_treat_group_size:
        return node
    sub_X = X[idx]
    asmds = feature_asmds(sub_X, sub_treated)
    if np.max(asmds) < cfg.asmd_threshold:
        return node
    feature = _select_feature_given(asmds, sub_X, sub_treated, cfg.feature_selection, rng)
    x_col = sub_X[:, feature]
    if np.min(x_col) == np.max(x_col):
        return node
    found = select_split_value(
        x_col, sub_treated, cfg.min_treat_group_size, cfg.max_split_candidates
    )
    if found is None:
        return node
    value, p_raw = found
    node.feature = feature
    node.value = value
    node.p_raw = p_raw
    node.asmd = float(asmds[feature])
    left_mask = x_col <= value
    node.left = _grow(X, treated, idx[left_mask], depth + 1, cfg, rng)
    node.right = _grow(X, treated, idx[~left_mask], depth + 1, cfg, rng)
    return node


def _internal_preorder(root: _GrowNode) -> list[_GrowNode]:
    out: list[_GrowNode] = []

    def walk(node: _GrowNode) -> None:
        if node.feature is not None:
            out.append(node)
            walk(node.left)
            walk(node.right)

    walk(root)
    return out


def _mark_keep(node: _GrowNode) -> bool:
    if node.feature is None:
        return False
    keep_left = _mark_keep(node.left)
    keep_right = _mark_keep(node.right)
    node.keep = bool(node.reject or keep_left or keep_right)
    return node.keep


def _finalize(root: _GrowNode) -> list[Node]:
    """Breadth-first numbering of the pruned tree."""
    nodes: list[Node] = []
    queue: list[tuple[_GrowNode, int]] = [(root, 0)]
    nodes.append(
        Node(id=0, depth=root.depth, n=root.n, n_treated=root.n_treated, n_control=root.n_control)
    )
    head = 0
    while head < len(queue):
        grow_node, node_id = queue[head]
        head += 1
        record = nodes[node_id]
        if grow_node.feature is not None and grow_node.keep:
            left_id = len(nodes)
            right_id = left_id + 1
            for child in (grow_node.left, grow_node.right):
                nodes.append(
                    Node(
                        id=len(nodes),
                        depth=child.depth,
                        n=child.n,
                        n_treated=child.n_treated,
                        n_control=child.n_control,
                    )
                )
            record.split = Split(
                feature_index=grow_node.feature,
                value=grow_node.value,
                p_raw=grow_node.p_raw,
                p_adjusted=grow_node.p_adjusted,
                asmd=grow_node.asmd,
            )
            record.children = (left_id, right_id)
            queue.append((grow_node.left, left_id))
            queue.append((grow_node.right, right_id))
    return nodes


# ---------------------------------------------------------------------------
# fitting


def fit(ds: Dataset, config: FitConfig | None = None) -> Tree:
    """Grow, prune, estimate, and positivity-flag a tree on ``ds``.

    Deterministic: the same dataset and config always produce the same tree.

    Raises:
        SingleArmError: if the dataset has a single treatment arm.
        ValueError: on invalid configuration.
    """
    cfg = config if config is not None else FitConfig()
    cfg.validate()
    ds.require_both_arms()
    rng = CounterRng(cfg.seed)
    treated = ds.treated_mask
    root = _grow(ds.X, treated, np.arange(ds.n), 0, cfg, rng)
    internal = _internal_preorder(root)
    correction = holm_bonferroni(
        np.array([g.p_raw for g in internal], dtype=np.float64), cfg.alpha
    )
    for grow_node, rejected, adjusted in zip(internal, correction.reject, correction.adjusted_p):
        grow_node.reject = bool(rejected)
        grow_node.p_adjusted = float(adjusted)
    _mark_keep(root)
    nodes = _finalize(root)
    tree = Tree(
        nodes=nodes,
        config=replace(cfg),
        feature_names=ds.feature_names,
        fit_metadata={
            "n_train": ds.n,
            "feature_names": list(ds.feature_names),
            "timestamp": None,
        },
    )
    _attach_leaf_estimates(tree, ds)
    mark_positivity(tree, ds, cfg.positivity_method)
    return tree


def _attach_leaf_estimates(tree: Tree, ds: Dataset) -> None:
    assignment = assign_leaves(tree, ds.X)
    for leaf_id in tree.leaf_ids():
        node = tree.nodes[leaf_id]
        rows = np.nonzero(assignment == leaf_id)[0]
        y = ds.y[rows]
        t_rows = ds.t[rows]
        mean_treated = float(y[t_rows == 1].mean()) if (t_rows == 1).any() else None
        mean_control = float(y[t_rows == 0].mean()) if (t_rows == 0).any() else None
        effect = (
            mean_treated - mean_control
            if mean_treated is not None and mean_control is not None
            else None
        )
        node.leaf_estimate = LeafEstimate(
            mean_treated=mean_treated,
            mean_control=mean_control,
            effect=effect,
            prevalence=node.n_treated / node.n,
        )


def mark_positivity(tree: Tree, ds: Dataset, method: str | None = None) -> Cutoffs:
    """Flag leaves whose training prevalence violates the positivity cutoffs.

    The per-sample propensity is the prevalence of the sample's leaf; the
    Crump search runs on that vector, while symmetric prevalence cutoffs
    derive from the overall prevalence.  Flags are stored on the leaves and
    the cutoffs on the tree.
    """
    cfg = tree.config
    method = method if method is not None else cfg.positivity_method
    if method not in POSITIVITY_METHODS:
        raise ValueError(f"unknown positivity_method {method!r}")
    assignment = assign_leaves(tree, ds.X)
    prevalence_by_node = np.array(
        [node.leaf_estimate.prevalence if node.leaf_estimate is not None else np.nan for node in tree.nodes]
    )
    per_sample = prevalence_by_node[assignment]
    if method == "crump":
        cutoffs = crump_cutoffs(per_sample, cfg.crump_segments)
    else:
        cutoffs = symmetric_prevalence_cutoffs(ds.prevalence, cfg.sp_alpha)
    for leaf_id in tree.leaf_ids():
        node = tree.nodes[leaf_id]
        prevalence = node.leaf_estimate.prevalence
        node.violating = not bool(cutoffs.contains(prevalence))
    tree.cutoffs = cutoffs
    return cutoffs


# ---------------------------------------------------------------------------
# application


def assign_leaves(tree: Tree, X) -> np.ndarray:
    """Leaf id for every row of ``X`` (ties at a split boundary go left)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != len(tree.feature_names):
        raise ValueError(
            f"X must have shape (n, {len(tree.feature_names)}) to match the tree"
        )
    out = np.empty(X.shape[0], dtype=np.int64)
    stack: list[tuple[int, np.ndarray]] = [(0, np.arange(X.shape[0]))]
    while stack:
        node_id, idx = stack.pop()
        node = tree.nodes[node_id]
        if node.children is None:
            out[idx] = node_id
            continue
        mask = X[idx, node.split.feature_index] <= node.split.value
        stack.append((node.children[0], idx[mask]))
        stack.append((node.children[1], idx[~mask]))
    return out


def assign_leaf(tree: Tree, x) -> int:
    """Leaf id for a single feature vector."""
    return int(assign_leaves(tree, np.asarray(x, dtype=np.float64).reshape(1, -1))[0])


# ---------------------------------------------------------------------------
# serialization


def to_json(tree: Tree) -> str:
    """Serialize to the versioned JSON format (schema ``bicause_tree_v1``)."""
    cutoffs = None
    if tree.cutoffs is not None:
        cutoffs = {
            "low": tree.cutoffs.low,
            "high": tree.cutoffs.high,
            "method": tree.cutoffs.method,
            "alpha": tree.cutoffs.alpha,
        }
    payload = {
        "version": TREE_FORMAT_VERSION,
        "config": _config_to_dict(tree.config),
        "fit_metadata": {
            "n_train": tree.fit_metadata.get("n_train"),
            "feature_names": list(tree.feature_names),
            "timestamp": tree.fit_metadata.get("timestamp"),
        },
        "cutoffs": cutoffs,
        "nodes": [_node_to_dict(tree, node) for node in tree.nodes],
    }
    return json.dumps(payload, indent=2)


def _config_to_dict(cfg: FitConfig) -> dict:
    return asdict(cfg)


def _node_to_dict(tree: Tree, node: Node) -> dict:
    split = None
    if node.split is not None:
        split = {
            "feature": tree.feature_names[node.split.feature_index],
            "value": node.split.value,
            "p_raw": node.split.p_raw,
            "p_adjusted": node.split.p_adjusted,
            "asmd": node.split.asmd,
        }
    estimate = None
    if node.leaf_estimate is not None:
        estimate = {
            "mean_treated": node.leaf_estimate.mean_treated,
            "mean_control": node.leaf_estimate.mean_control,
            "effect": node.leaf_estimate.effect,
            "prevalence": node.leaf_estimate.prevalence,
        }
    return {
        "id": node.id,
        "depth": node.depth,
        "n": node.n,
        "n_treated": node.n_treated,
        "n_control": node.n_control,
        "split": split,
        "children": list(node.children) if node.children is not None else None,
        "violating": node.violating,
        "leaf_estimate": estimate,
    }


def from_json(text: str) -> Tree:
    """Parse a tree serialized by :func:`to_json`.

    Raises:
        ValueError: on a version mismatch or malformed document.
    """
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed tree JSON: {exc}") from None
    version = payload.get("version")
    if version != TREE_FORMAT_VERSION:
        raise ValueError(
            f"unsupported tree format {version!r}; expected {TREE_FORMAT_VERSION!r}"
        )
    config = FitConfig(**payload["config"])
    config.validate()
    metadata = payload["fit_metadata"]
    feature_names = tuple(metadata["feature_names"])
    name_to_index = {name: i for i, name in enumerate(feature_names)}
    nodes: list[Node] = []
    for raw in payload["nodes"]:
        split = None
        if raw.get("split") is not None:
            s = raw["split"]
            if s["feature"] not in name_to_index:
                raise ValueError(f"split references unknown feature {s['feature']!r}")
            split = Split(
                feature_index=name_to_index[s["feature"]],
                value=float(s["value"]),
                p_raw=float(s["p_raw"]),
                p_adjusted=None if s["p_adjusted"] is None else float(s["p_adjusted"]),
                asmd=float(s["asmd"]),
            )
        estimate = None
        if raw.get("leaf_estimate") is not None:
            e = raw["leaf_estimate"]
            estimate = LeafEstimate(
                mean_treated=None if e["mean_treated"] is None else float(e["mean_treated"]),
                mean_control=None if e["mean_control"] is None else float(e["mean_control"]),
                effect=None if e["effect"] is None else float(e["effect"]),
                prevalence=float(e["prevalence"]),
            )
        children = raw.get("children")
        nodes.append(
            Node(
                id=int(raw["id"]),
                depth=int(raw["depth"]),
                n=int(raw["n"]),
                n_treated=int(raw["n_treated"]),
                n_control=int(raw["n_control"]),
                split=split,
                children=None if children is None else (int(children[0]), int(children[1])),
                violating=bool(raw.get("violating", False)),
                leaf_estimate=estimate,
            )
        )
    if not nodes or nodes[0].id != 0:
        raise ValueError("tree JSON must contain a root node with id 0")
    for i, node in enumerate(nodes):
        if node.id != i:
            raise ValueError("node ids must be contiguous and ordered")
    cutoffs = None
    if payload.get("cutoffs") is not None:
        c = payload["cutoffs"]
        cutoffs = Cutoffs(
            low=float(c["low"]),
            high=float(c["high"]),
            method=str(c["method"]),
            alpha=None if c["alpha"] is None else float(c["alpha"]),
        )
    return Tree(
        nodes=nodes,
        config=config,
        feature_names=feature_names,
        fit_metadata={
            "n_train": metadata.get("n_train"),
            "feature_names": list(feature_names),
            "timestamp": metadata.get("timestamp"),
        },
        cutoffs=cutoffs,
    )


def to_dot(tree: Tree) -> str:
    """Graphviz rendering; violating leaves are filled red."""
    lines = ["digraph bicause_tree {", "  node [shape=box];"]
    for node in tree.nodes:
        prevalence = node.prevalence
        if node.split is not None:
            name = tree.feature_names[node.split.feature_index]
            label = f"{name} <= {node.split.value:g}\\nn={node.n} P(T)={prevalence:.3f}"
            attrs = f'label="{label}"'
        else:
            label = f"n={node.n} P(T)={prevalence:.3f}"
            attrs = f'label="{label}"'
            if node.violating:
                attrs += ', style=filled, fillcolor="red"'
        lines.append(f"  {node.id} [{attrs}];")
    for node in tree.nodes:
        if node.children is not None:
            lines.append(f"  {node.id} -> {node.children[0]};")
            lines.append(f"  {node.id} -> {node.children[1]};")
    lines.append("}")
    return "\n".join(lines) + "\n"
