"""Imbalance and contingency-test kernels used by the partition tree.

Everything here is a pure function of its arguments.  The only numeric
building blocks beyond basic arithmetic are ``math.lgamma`` and the
regularized incomplete gamma pair implemented below (series for small
arguments, Lentz continued fraction otherwise).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Table2x2",
    "CorrectionResult",
    "asmd",
    "feature_asmds",
    "fisher_exact_p",
    "chi2_p",
    "chi2_statistic",
    "chi2_survival",
    "holm_bonferroni",
    "regularized_gamma_p",
    "regularized_gamma_q",
    "split_p_value",
]

_FISHER_REL_TOL = 1e-12
_MAX_GAMMA_ITER = 10_000


# ---------------------------------------------------------------------------
# standardized mean differences


def asmd(x_treated, x_control) -> float:
    """Absolute standardized mean difference between two samples.

    The scale is ``sqrt(var_t + var_c)`` with sample (n-1) variances; a
    one-element arm contributes zero variance.  Returns 0.0 when both the
    mean difference and the scale are zero, ``inf`` when only the scale is.

    Raises:
        ValueError: if either arm is empty.
    """
    x_t = np.asarray(x_treated, dtype=np.float64).reshape(-1, 1)
    x_c = np.asarray(x_control, dtype=np.float64).reshape(-1, 1)
    if x_t.shape[0] == 0 or x_c.shape[0] == 0:
        raise ValueError("both arms must be non-empty")
    return float(_asmd_columns(x_t, x_c)[0])


def feature_asmds(X: np.ndarray, treated: np.ndarray) -> np.ndarray:
    """Per-column ASMD for a feature matrix under a boolean treatment mask."""
    X = np.asarray(X, dtype=np.float64)
    treated = np.asarray(treated, dtype=bool)
    x_t = X[treated]
    x_c = X[~treated]
    if x_t.shape[0] == 0 or x_c.shape[0] == 0:
        raise ValueError("both arms must be non-empty")
    return _asmd_columns(x_t, x_c)


def _asmd_columns(x_t: np.ndarray, x_c: np.ndarray) -> np.ndarray:
    diff = np.abs(x_t.mean(axis=0) - x_c.mean(axis=0))
    scale = np.sqrt(_sample_var(x_t) + _sample_var(x_c))
    zero_scale = scale == 0.0
    return np.where(
        zero_scale,
        np.where(diff == 0.0, 0.0, np.inf),
        diff / np.where(zero_scale, 1.0, scale),
    )


def _sample_var(x: np.ndarray) -> np.ndarray:
    n = x.shape[0]
    if n < 2:
        return np.zeros(x.shape[1], dtype=np.float64)
    centered = x - x.mean(axis=0)
    return (centered * centered).sum(axis=0) / (n - 1)


# ---------------------------------------------------------------------------
# 2x2 tables


@dataclass(frozen=True)
class Table2x2:
    """Counts for treatment (rows: control, treated) by side (columns: left, right)."""

    a: int  # control, left
    b: int  # control, right
    c: int  # treated, left
    d: int  # treated, right

    def __post_init__(self) -> None:
        for name in ("a", "b", "c", "d"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 0:
                raise ValueError(f"cell {name} must be a non-negative integer")

    @property
    def n(self) -> int:
        return self.a + self.b + self.c + self.d

    @property
    def row_margins(self) -> tuple[int, int]:
        return (self.a + self.b, self.c + self.d)

    @property
    def col_margins(self) -> tuple[int, int]:
        return (self.a + self.c, self.b + self.d)


def _log_choose(n: int, k: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def fisher_exact_p(table: Table2x2) -> float:
    """Two-sided Fisher exact p-value by the point-probability method.

    Sums hypergeometric probabilities over all tables with the observed
    margins whose point probability is at most the observed one (within
    relative tolerance 1e-12).  Degenerate margins leave a single consistent
    table and give p = 1.
    """
    r0, r1 = table.row_margins
    c0, _ = table.col_margins
    n = table.n
    if n == 0:
        return 1.0
    lo = max(0, c0 - r1)
    hi = min(r0, c0)
    ks = np.arange(lo, hi + 1)
    log_norm = _log_choose(n, c0)
    log_probs = np.array(
        [_log_choose(r0, k) + _log_choose(r1, c0 - k) - log_norm for k in ks]
    )
    probs = np.exp(log_probs)
    observed = probs[table.a - lo]
    total = float(probs[probs <= observed * (1.0 + _FISHER_REL_TOL)].sum())
    return min(1.0, total)


def chi2_statistic(table: Table2x2) -> float:
    """Pearson statistic ``n (ad - bc)^2 / ((a+b)(c+d)(a+c)(b+d))``, no correction.

    Raises:
        ValueError: if any margin is zero.
    """
    a, b, c, d = table.a, table.b, table.c, table.d
    r0, r1 = table.row_margins
    c0, c1 = table.col_margins
    if min(r0, r1, c0, c1) == 0:
        raise ValueError("chi-square requires all margins positive")
    diff = float(a * d - b * c)
    return float(table.n) * diff * diff / (float(r0) * float(r1) * float(c0) * float(c1))


def chi2_p(table: Table2x2) -> float:
    """Chi-square p-value on 1 degree of freedom for a 2x2 table."""
    return chi2_survival(chi2_statistic(table), df=1)


def chi2_survival(x: float, df: int = 1) -> float:
    """Survival function of the chi-square distribution with ``df`` degrees."""
    if df <= 0:
        raise ValueError("df must be positive")
    if x < 0.0:
        raise ValueError("statistic must be non-negative")
    return regularized_gamma_q(df / 2.0, x / 2.0)


# ---------------------------------------------------------------------------
# regularized incomplete gamma


def regularized_gamma_p(s: float, x: float) -> float:
    """Regularized lower incomplete gamma P(s, x)."""
    if s <= 0.0:
        raise ValueError("s must be positive")
    if x < 0.0:
        raise ValueError("x must be non-negative")
    if x == 0.0:
        return 0.0
    if x < s + 1.0:
        return _gamma_p_series(s, x)
    return 1.0 - _gamma_q_contfrac(s, x)


def regularized_gamma_q(s: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(s, x) = 1 - P(s, x)."""
    if s <= 0.0:
        raise ValueError("s must be positive")
    if x < 0.0:
        raise ValueError("x must be non-negative")
    if x == 0.0:
        return 1.0
    if x < s + 1.0:
        return 1.0 - _gamma_p_series(s, x)
    return _gamma_q_contfrac(s, x)


def _gamma_p_series(s: float, x: float) -> float:
    term = 1.0 / s
    total = term
    denom = s
    for _ in range(_MAX_GAMMA_ITER):
        denom += 1.0
        term *= x / denom
        total += term
        if abs(term) < abs(total) * 1e-17:
            break
    return total * math.exp(-x + s * math.log(x) - math.lgamma(s))


def _gamma_q_contfrac(s: float, x: float) -> float:
    tiny = 1e-300
    b = x + 1.0 - s
    c = 1.0 / tiny
    d = 1.0 / b if b != 0.0 else 1.0 / tiny
    h = d
    for i in range(1, _MAX_GAMMA_ITER):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return math.exp(-x + s * math.log(x) - math.lgamma(s)) * h


# ---------------------------------------------------------------------------
# multiple testing


@dataclass(frozen=True)
class CorrectionResult:
    """Rejection decisions and adjusted p-values in the input order."""

    reject: np.ndarray
    adjusted_p: np.ndarray
    alpha: float

    @property
    def n_rejected(self) -> int:
        return int(self.reject.sum())


def holm_bonferroni(p_values, alpha: float = 0.05) -> CorrectionResult:
    """Holm step-down correction.

    Sorted p-values are rejected while ``p_(k) <= alpha / (m - k + 1)``;
    adjusted p-values are the running maximum of ``(m - k + 1) * p_(k)``
    clipped to 1, reported in the original order.

    Raises:
        ValueError: if any p-value lies outside [0, 1] or alpha is not in (0, 1).
    """
    p = np.asarray(p_values, dtype=np.float64)
    if p.ndim != 1:
        raise ValueError("p_values must be one-dimensional")
    if p.size and (np.min(p) < 0.0 or np.max(p) > 1.0):
        raise ValueError("p-values must lie in [0, 1]")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    m = p.size
    if m == 0:
        return CorrectionResult(np.zeros(0, dtype=bool), np.zeros(0), alpha)
    order = np.argsort(p, kind="stable")
    multipliers = np.arange(m, 0, -1, dtype=np.float64)
    adjusted_sorted = np.minimum(np.maximum.accumulate(multipliers * p[order]), 1.0)
    reject_sorted = adjusted_sorted <= alpha
    adjusted = np.empty(m, dtype=np.float64)
    reject = np.empty(m, dtype=bool)
    adjusted[order] = adjusted_sorted
    reject[order] = reject_sorted
    return CorrectionResult(reject, adjusted, alpha)


# ---------------------------------------------------------------------------
# dispatch


def split_p_value(table: Table2x2, policy: str = "auto") -> float:
    """P-value for treatment-by-side association with test dispatch.

    Policies: ``auto`` uses the chi-square test iff every expected cell count
    is at least 5 (and all margins are positive), Fisher otherwise;
    ``fisher`` and ``chi2`` force one test.
    """
    if policy == "fisher":
        return fisher_exact_p(table)
    if policy == "chi2":
        return chi2_p(table)
    if policy != "auto":
        raise ValueError(f"unknown policy {policy!r}")
    if _chi2_eligible(table):
        return chi2_p(table)
    return fisher_exact_p(table)


def _chi2_eligible(table: Table2x2) -> bool:
    r0, r1 = table.row_margins
    c0, c1 = table.col_margins
    if min(r0, r1, c0, c1) == 0:
        return False
    # smallest expected count is min(rows) * min(cols) / n
    return min(r0, r1) * min(c0, c1) >= 5 * table.n
