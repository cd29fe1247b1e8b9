"""Propensity cutoff rules for flagging positivity violations.

Both rules return a closed interval; a propensity (here, a leaf treatment
prevalence) outside it marks the corresponding subgroup as violating.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Cutoffs", "crump_cutoffs", "symmetric_prevalence_cutoffs"]


@dataclass(frozen=True)
class Cutoffs:
    """Inclusive propensity bounds with their provenance.

    ``alpha`` is the trimming level that produced the bounds; None when the
    Crump search found no feasible level and fell back to keeping everything.
    """

    low: float
    high: float
    method: str
    alpha: float | None

    def __post_init__(self) -> None:
        if not 0.0 <= self.low < self.high <= 1.0:
            raise ValueError("cutoffs must satisfy 0 <= low < high <= 1")

    def contains(self, propensity) -> np.ndarray:
        p = np.asarray(propensity, dtype=np.float64)
        return (p >= self.low) & (p <= self.high)


def crump_cutoffs(propensities, segments: int = 10_000) -> Cutoffs:
    """Variance-based trimming bounds via grid search.

    Scans ``alpha`` over (0, 0.5] at ``segments`` evenly spaced levels and
    returns the smallest one satisfying

        1 / (alpha (1 - alpha)) <= 2 * mean{ 1 / (e (1-e)) : e (1-e) >= alpha (1-alpha) }

    yielding bounds (alpha, 1 - alpha).  Falls back to (0, 1) when no level
    qualifies.

    Raises:
        ValueError: if propensities fall outside [0, 1], the vector is empty,
            or segments < 1.
    """
    e = np.asarray(propensities, dtype=np.float64).reshape(-1)
    if e.size == 0:
        raise ValueError("propensities must be non-empty")
    if np.min(e) < 0.0 or np.max(e) > 1.0:
        raise ValueError("propensities must lie in [0, 1]")
    if segments < 1:
        raise ValueError("segments must be at least 1")
    g = np.sort(e * (1.0 - e))
    recip = np.zeros_like(g)
    positive = g > 0.0
    recip[positive] = 1.0 / g[positive]
    # suffix_sums[i] = sum of recip[i:]
    suffix_sums = np.concatenate([np.cumsum(recip[::-1])[::-1], [0.0]])
    alphas = 0.5 * np.arange(1, segments + 1, dtype=np.float64) / segments
    thresholds = alphas * (1.0 - alphas)
    start = np.searchsorted(g, thresholds, side="left")
    counts = g.size - start
    feasible = counts > 0
    means = np.zeros_like(alphas)
    means[feasible] = suffix_sums[start[feasible]] / counts[feasible]
    ok = feasible & (1.0 / thresholds <= 2.0 * means)
    hits = np.nonzero(ok)[0]
    if hits.size == 0:
        return Cutoffs(0.0, 1.0, "crump", None)
    alpha = float(alphas[hits[0]])
    return Cutoffs(alpha, 1.0 - alpha, "crump", alpha)


def symmetric_prevalence_cutoffs(prevalence: float, alpha: float = 0.1) -> Cutoffs:
    """Bounds that discount the treatment odds symmetrically.

    With overall treated prevalence ``mu`` the interval is

        low  = alpha mu / (alpha mu + (1 - alpha)(1 - mu))
        high = (1 - alpha) mu / ((1 - alpha) mu + alpha (1 - mu))

    so 0 < low < mu < high < 1 for any alpha in (0, 0.5).

    Raises:
        ValueError: if prevalence is outside (0, 1) or alpha outside (0, 0.5).
    """
    if not 0.0 < prevalence < 1.0:
        raise ValueError("prevalence must lie strictly between 0 and 1")
    if not 0.0 < alpha < 0.5:
        raise ValueError("alpha must lie strictly between 0 and 0.5")
    mu = prevalence
    low = alpha * mu / (alpha * mu + (1.0 - alpha) * (1.0 - mu))
    high = (1.0 - alpha) * mu / ((1.0 - alpha) * mu + alpha * (1.0 - mu))
    return Cutoffs(low, high, "symmetric_prevalence", alpha)
