import numpy as np
import pytest

from bicausetree import ColumnSchema, Dataset


@pytest.fixture
def schema_sa() -> ColumnSchema:
    return ColumnSchema(features=("S", "A"))


def make_dataset(X, t, y=None, y0=None, y1=None, names=None) -> Dataset:
    """Assemble a Dataset from plain lists for concise test setup."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    t = np.asarray(t)
    if y is None:
        y = np.zeros(X.shape[0])
    if names is None:
        names = tuple(f"x{j}" for j in range(X.shape[1]))
    return Dataset(
        X=X,
        t=t,
        y=np.asarray(y, dtype=np.float64),
        feature_names=tuple(names),
        y0=None if y0 is None else np.asarray(y0, dtype=np.float64),
        y1=None if y1 is None else np.asarray(y1, dtype=np.float64),
    )
