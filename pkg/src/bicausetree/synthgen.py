"""Synthetic observational benchmarks with known ground truth.

Two generators are provided.  The *natural experiment* has one binary and one
continuous covariate whose four induced cells each carry their own treatment
propensity and potential-outcome rates, giving a true average effect of
-0.2125.  The *positivity* variant has three binary covariates whose eight
cells include one near-always-treated and one near-never-treated cell, so a
correct analysis must exclude about a third of the population.

Both are bit-deterministic given (n, seed).  Draw order per generator is a
documented part of the contract: all covariate vectors first (each as one
batch), then per-cell truncated-normal propensities with cells visited in
ascending lexicographic order of their covariate tuple (rows within a cell in
row order), then the treatment batch, then the control potential outcome
batch, then the treated one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .rng import CounterRng

__all__ = [
    "GENERATOR_KINDS",
    "NATURAL_EXPERIMENT_ATE",
    "GeneratorSpec",
    "augment_noise_features",
    "gen_natural_experiment",
    "gen_positivity",
    "generate",
    "generative_cells",
    "sample_truncnorm",
]

GENERATOR_KINDS = ("natural-experiment", "positivity")

# cell key: (S, A >= 50); values: (propensity mean, propensity sd)
_NE_PROPENSITY = {
    (0, 0): (0.4, 0.1),
    (0, 1): (0.1, 0.1),
    (1, 0): (0.3, 0.1),
    (1, 1): (0.5, 0.1),
}
_NE_Y1 = {(0, 0): 0.15, (0, 1): 0.4, (1, 0): 0.2, (1, 1): 0.1}
_NE_Y0 = {(0, 0): 0.3, (0, 1): 0.8, (1, 0): 0.4, (1, 1): 0.2}

#: Average of the four cell effects of the natural experiment.
NATURAL_EXPERIMENT_ATE = sum(
    _NE_Y1[cell] - _NE_Y0[cell] for cell in _NE_Y1
) / 4.0

# cell key: (S, C, A)
_POS_PROPENSITY = {
    (0, 0, 0): (0.00, 0.02),
    (0, 0, 1): (0.24, 0.10),
    (0, 1, 0): (0.17, 0.10),
    (0, 1, 1): (0.30, 0.10),
    (1, 0, 0): (0.42, 0.10),
    (1, 0, 1): (0.32, 0.10),
    (1, 1, 0): (0.12, 0.10),
    (1, 1, 1): (1.00, 0.02),
}
_POS_Y1 = {
    (0, 0, 0): 0.09,
    (0, 0, 1): 0.24,
    (0, 1, 0): 0.29,
    (0, 1, 1): 0.36,
    (1, 0, 0): 0.1,
    (1, 0, 1): 0.21,
    (1, 1, 0): 0.08,
    (1, 1, 1): 0.13,
}
_POS_Y0 = {
    (0, 0, 0): 0.73,
    (0, 0, 1): 0.43,
    (0, 1, 0): 0.51,
    (0, 1, 1): 0.4,
    (1, 0, 0): 0.45,
    (1, 0, 1): 0.29,
    (1, 1, 0): 0.4,
    (1, 1, 1): 0.31,
}

_NOISE_SEED_OFFSET = 1_000_003


@dataclass(frozen=True)
class GeneratorSpec:
    """Recipe for one synthetic dataset."""

    kind: str
    n: int
    seed: int
    noise_features: int = 0

    def __post_init__(self) -> None:
        if self.kind not in GENERATOR_KINDS:
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.noise_features < 0:
            raise ValueError("noise_features must be non-negative")


def sample_truncnorm(mean: float, sd: float, low: float, high: float, rng: CounterRng) -> float:
    """One draw from a normal conditioned on [low, high]."""
    return float(rng.truncated_normal(mean, sd, low, high, 1)[0])


def generate(spec: GeneratorSpec) -> Dataset:
    """Materialize a spec, including any noise-feature augmentation.

    The noise stream is seeded with ``spec.seed + 1000003`` so it never
    overlaps the data stream.
    """
    if spec.kind == "natural-experiment":
        ds = gen_natural_experiment(spec.n, spec.seed)
    else:
        ds = gen_positivity(spec.n, spec.seed)
    if spec.noise_features:
        ds = augment_noise_features(ds, spec.noise_features, spec.seed + _NOISE_SEED_OFFSET)
    return ds


def _cell_parameter_rows(cells: np.ndarray, table: dict) -> np.ndarray:
    params = np.empty(cells.shape[0], dtype=np.float64)
    for key, value in table.items():
        mask = np.all(cells == np.asarray(key), axis=1)
        params[mask] = value
    return params


def _cell_propensities(cells: np.ndarray, table: dict, rng: CounterRng) -> np.ndarray:
    out = np.empty(cells.shape[0], dtype=np.float64)
    for key in sorted(table):
        mask = np.all(cells == np.asarray(key), axis=1)
        count = int(mask.sum())
        if count:
            mean, sd = table[key]
            out[mask] = rng.truncated_normal(mean, sd, 0.0, 1.0, count)
    return out


def gen_natural_experiment(n: int, seed: int) -> Dataset:
    """Binary S and continuous A with a treatment threshold effect at A=50."""
    rng = CounterRng(seed)
    s = rng.bernoulli(0.5, n).astype(np.float64)
    age = rng.normal(n, 50.0, 20.0)
    cells = np.column_stack([s, (age >= 50.0).astype(np.float64)]).astype(np.int64)
    propensity = _cell_propensities(cells, _NE_PROPENSITY, rng)
    t = rng.bernoulli(propensity)
    y0 = rng.bernoulli(_cell_parameter_rows(cells, _NE_Y0)).astype(np.float64)
    y1 = rng.bernoulli(_cell_parameter_rows(cells, _NE_Y1)).astype(np.float64)
    y = np.where(t == 1, y1, y0)
    return Dataset(
        X=np.column_stack([s, age]),
        t=t,
        y=y,
        feature_names=("S", "A"),
        y0=y0,
        y1=y1,
    )


def gen_positivity(n: int, seed: int) -> Dataset:
    """Three binary covariates with two structurally violating cells."""
    rng = CounterRng(seed)
    s = rng.bernoulli(0.5, n).astype(np.float64)
    c = rng.bernoulli(0.3, n).astype(np.float64)
    a = rng.bernoulli(0.1, n).astype(np.float64)
    cells = np.column_stack([s, c, a]).astype(np.int64)
    propensity = _cell_propensities(cells, _POS_PROPENSITY, rng)
    t = rng.bernoulli(propensity)
    y0 = rng.bernoulli(_cell_parameter_rows(cells, _POS_Y0)).astype(np.float64)
    y1 = rng.bernoulli(_cell_parameter_rows(cells, _POS_Y1)).astype(np.float64)
    y = np.where(t == 1, y1, y0)
    return Dataset(
        X=np.column_stack([s, c, a]),
        t=t,
        y=y,
        feature_names=("S", "C", "A"),
        y0=y0,
        y1=y1,
    )


def augment_noise_features(ds: Dataset, count: int, seed: int) -> Dataset:
    """Append ``count`` standard normal features named ``noise_0..``."""
    if count < 0:
        raise ValueError("count must be non-negative")
    if count == 0:
        return ds
    rng = CounterRng(seed)
    noise = rng.normal(ds.n * count).reshape(ds.n, count)
    names = ds.feature_names + tuple(f"noise_{j}" for j in range(count))
    return Dataset(
        X=np.hstack([ds.X, noise]),
        t=ds.t,
        y=ds.y,
        feature_names=names,
        y0=ds.y0,
        y1=ds.y1,
        row_ids=ds.row_ids,
    )


def generative_cells(kind: str, ds: Dataset) -> np.ndarray:
    """True cell label per row, for partition-recovery scoring."""
    if kind == "natural-experiment":
        s = ds.X[:, ds.feature_names.index("S")]
        age = ds.X[:, ds.feature_names.index("A")]
        return (2 * s.astype(np.int64) + (age >= 50.0)).astype(np.int64)
    if kind == "positivity":
        s = ds.X[:, ds.feature_names.index("S")].astype(np.int64)
        c = ds.X[:, ds.feature_names.index("C")].astype(np.int64)
        a = ds.X[:, ds.feature_names.index("A")].astype(np.int64)
        return 4 * s + 2 * c + a
    raise ValueError(f"unknown generator kind {kind!r}")
