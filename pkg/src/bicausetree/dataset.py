"""Observational dataset container and delimited I/O.

A :class:`Dataset` wraps a numeric feature matrix, a binary treatment vector,
an observed outcome, and (optionally) both potential outcomes for synthetic
data with known ground truth.  Instances are immutable; the underlying arrays
are marked read-only so views can be shared safely across threads.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .rng import CounterRng

__all__ = [
    "ColumnSchema",
    "Dataset",
    "SchemaError",
    "SingleArmError",
    "load_csv",
    "write_csv",
    "split_train_test",
]


class SchemaError(ValueError):
    """Input data violates the declared column schema."""


class SingleArmError(ValueError):
    """Operation requires both treated and control units."""


@dataclass(frozen=True)
class ColumnSchema:
    """Column names binding a CSV file to dataset roles."""

    features: tuple[str, ...]
    treatment: str = "T"
    outcome: str = "Y"
    y0: str | None = None
    y1: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "features", tuple(self.features))
        if not self.features:
            raise SchemaError("schema needs at least one feature column")
        names = list(self.features) + [self.treatment, self.outcome]
        names += [c for c in (self.y0, self.y1) if c is not None]
        if len(set(names)) != len(names):
            raise SchemaError("schema column names must be distinct")


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Dataset:
    """Immutable numeric dataset for effect estimation.

    Attributes:
        X: (n, d) float64 feature matrix.
        t: (n,) treatment indicator with values 0/1.
        y: (n,) observed outcome.
        feature_names: column names for X.
        y0: optional (n,) potential outcome under control.
        y1: optional (n,) potential outcome under treatment.
        row_ids: (n,) stable integer identifiers, preserved by subsetting.
    """

    X: np.ndarray
    t: np.ndarray
    y: np.ndarray
    feature_names: tuple[str, ...]
    y0: np.ndarray | None = None
    y1: np.ndarray | None = None
    row_ids: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        X = np.ascontiguousarray(np.asarray(self.X, dtype=np.float64))
        if X.ndim != 2:
            raise SchemaError("X must be two-dimensional")
        n = X.shape[0]
        t = np.asarray(self.t)
        if t.shape != (n,):
            raise SchemaError("t must have one entry per row")
        t_vals = np.unique(t)
        if not np.all(np.isin(t_vals, (0, 1))):
            raise SchemaError("treatment values must be 0 or 1")
        y = np.asarray(self.y, dtype=np.float64)
        if y.shape != (n,):
            raise SchemaError("y must have one entry per row")
        names = tuple(self.feature_names)
        if len(names) != X.shape[1]:
            raise SchemaError("feature_names must match the number of columns")
        bad = [names[j] for j in np.nonzero(np.isnan(X).any(axis=0))[0]]
        if bad:
            raise SchemaError(f"NaN in feature columns: {', '.join(bad)}")
        if np.isnan(y).any():
            raise SchemaError("NaN in outcome column")
        object.__setattr__(self, "X", _frozen(X))
        object.__setattr__(self, "t", _frozen(t.astype(np.int8)))
        object.__setattr__(self, "y", _frozen(y))
        object.__setattr__(self, "feature_names", names)
        for attr in ("y0", "y1"):
            value = getattr(self, attr)
            if value is not None:
                value = np.asarray(value, dtype=np.float64)
                if value.shape != (n,):
                    raise SchemaError(f"{attr} must have one entry per row")
                object.__setattr__(self, attr, _frozen(value))
        row_ids = self.row_ids
        if row_ids is None:
            row_ids = np.arange(n, dtype=np.int64)
        else:
            row_ids = np.asarray(row_ids, dtype=np.int64)
            if row_ids.shape != (n,):
                raise SchemaError("row_ids must have one entry per row")
        object.__setattr__(self, "row_ids", _frozen(row_ids))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def n_treated(self) -> int:
        return int(self.t.sum())

    @property
    def n_control(self) -> int:
        return self.n - self.n_treated

    @property
    def prevalence(self) -> float:
        if self.n == 0:
            raise ValueError("empty dataset has no prevalence")
        return self.n_treated / self.n

    @property
    def treated_mask(self) -> np.ndarray:
        return self.t == 1

    def has_both_arms(self) -> bool:
        return 0 < self.n_treated < self.n

    def require_both_arms(self) -> None:
        if not self.has_both_arms():
            raise SingleArmError("dataset contains a single treatment arm")

    def subset(self, indices) -> "Dataset":
        """Row subset by positional indices; row_ids travel with the rows."""
        idx = np.asarray(indices)
        return Dataset(
            X=self.X[idx],
            t=self.t[idx],
            y=self.y[idx],
            feature_names=self.feature_names,
            y0=None if self.y0 is None else self.y0[idx],
            y1=None if self.y1 is None else self.y1[idx],
            row_ids=self.row_ids[idx],
        )


def load_csv(path, schema: ColumnSchema) -> Dataset:
    """Load a delimited file against a schema.

    Errors name the offending column and the 1-based file line (the header
    is line 1).

    Raises:
        SchemaError: missing columns, unparseable or NaN cells, or a
            treatment value outside {0, 1}.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        positions: dict[str, int] = {}
        wanted = list(schema.features) + [schema.treatment, schema.outcome]
        wanted += [c for c in (schema.y0, schema.y1) if c is not None]
        missing = [c for c in wanted if c not in header]
        if missing:
            raise SchemaError(f"{path}: missing columns: {', '.join(missing)}")
        for name in wanted:
            positions[name] = header.index(name)
        rows: list[list[float]] = []
        for line_no, record in enumerate(reader, start=2):
            if not record:
                continue
            parsed = []
            for name in wanted:
                try:
                    cell = record[positions[name]]
                    value = float(cell)
                except IndexError:
                    raise SchemaError(
                        f"{path}: line {line_no}: too few fields"
                    ) from None
                except ValueError:
                    raise SchemaError(
                        f"{path}: line {line_no}, column {name!r}: "
                        f"cannot parse {cell!r} as a number"
                    ) from None
                if math.isnan(value):
                    raise SchemaError(
                        f"{path}: line {line_no}, column {name!r}: NaN value"
                    )
                parsed.append(value)
            t_val = parsed[len(schema.features)]
            if t_val not in (0.0, 1.0):
                raise SchemaError(
                    f"{path}: line {line_no}: treatment value {t_val!r} "
                    "is not 0 or 1"
                )
            rows.append(parsed)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    data = np.asarray(rows, dtype=np.float64)
    d = len(schema.features)
    col = d
    t = data[:, col].astype(np.int8)
    col += 1
    y = data[:, col]
    col += 1
    y0 = y1 = None
    if schema.y0 is not None:
        y0 = data[:, col]
        col += 1
    if schema.y1 is not None:
        y1 = data[:, col]
    return Dataset(
        X=data[:, :d],
        t=t,
        y=y,
        feature_names=schema.features,
        y0=y0,
        y1=y1,
    )


def _format_value(value: float) -> str:
    if float(value).is_integer() and abs(value) < 1e16:
        return str(int(value))
    return repr(float(value))


def write_csv(path, ds: Dataset, schema: ColumnSchema | None = None) -> None:
    """Write a dataset as CSV (features, then T, Y, and y0/y1 when present).

    Floats are written in shortest round-trip form, so a load of the output
    reproduces the arrays exactly.
    """
    if schema is None:
        schema = ColumnSchema(
            features=ds.feature_names,
            y0="y0" if ds.y0 is not None else None,
            y1="y1" if ds.y1 is not None else None,
        )
    path = Path(path)
    columns: list[np.ndarray] = [ds.X[:, j] for j in range(ds.n_features)]
    header = list(schema.features) + [schema.treatment, schema.outcome]
    columns += [ds.t.astype(np.float64), ds.y]
    if schema.y0 is not None:
        if ds.y0 is None:
            raise SchemaError("schema names a y0 column but dataset has none")
        header.append(schema.y0)
        columns.append(ds.y0)
    if schema.y1 is not None:
        if ds.y1 is None:
            raise SchemaError("schema names a y1 column but dataset has none")
        header.append(schema.y1)
        columns.append(ds.y1)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(ds.n):
            writer.writerow([_format_value(col[i]) for col in columns])


def split_train_test(ds: Dataset, fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Random train/test split; train gets ``round(n * fraction)`` rows.

    The permutation comes from the seeded counter generator, so a given
    (dataset, fraction, seed) always produces the same split.  Row order
    within each part is ascending by original position.

    Raises:
        ValueError: if fraction is outside (0, 1) or a part would be empty.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must lie strictly between 0 and 1")
    n = ds.n
    n_train = int(round(n * fraction))
    if n_train == 0 or n_train == n:
        raise ValueError(f"fraction {fraction} leaves an empty part for n={n}")
    perm = CounterRng(seed).permutation(n)
    train_idx = np.sort(perm[:n_train])
    test_idx = np.sort(perm[n_train:])
    return ds.subset(train_idx), ds.subset(test_idx)
