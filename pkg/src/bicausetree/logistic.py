"""Unpenalized logistic regression via iteratively reweighted least squares."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["LogisticFit", "fit_logistic"]

_MAX_HALVINGS = 30


@dataclass
class LogisticFit:
    """Fitted logistic model for a binary target.

    Attributes:
        intercept: fitted intercept term.
        coef: (d,) coefficient vector, one entry per feature.
        converged: whether the step-size criterion was met before max_iter.
        n_iter: number of Newton steps taken.
        log_likelihood: log-likelihood at the returned coefficients.
    """

    intercept: float
    coef: np.ndarray
    converged: bool
    n_iter: int
    log_likelihood: float

    def decision_function(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return self.intercept + X @ self.coef

    def predict_proba(self, X) -> np.ndarray:
        """Probability of target 1 for each row of X."""
        return _sigmoid(self.decision_function(X))


def _sigmoid(eta: np.ndarray) -> np.ndarray:
    out = np.empty_like(eta)
    pos = eta >= 0.0
    out[pos] = 1.0 / (1.0 + np.exp(-eta[pos]))
    ez = np.exp(eta[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _log_likelihood(eta: np.ndarray, target: np.ndarray) -> float:
    # sum of t*eta - log(1 + exp(eta)), computed without overflow
    return float(np.sum(target * eta - np.logaddexp(0.0, eta)))


def fit_logistic(X, target, max_iter: int = 500, tol: float = 1e-8) -> LogisticFit:
    """Fit an unpenalized logistic regression by Newton steps with halving.

    Each iteration solves the weighted least squares system for the Newton
    direction and halves the step until the log-likelihood does not decrease,
    so the likelihood path is non-decreasing.  Convergence means the largest
    coefficient update fell below ``tol``; on separable data the coefficients
    diverge and the fit reports ``converged=False`` at ``max_iter``.

    Args:
        X: (n, d) feature matrix.
        target: (n,) binary vector with values 0/1.
        max_iter: Newton step budget.
        tol: infinity-norm threshold on the accepted update.

    Raises:
        ValueError: on shape mismatch or non-binary target values.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be two-dimensional")
    t = np.asarray(target, dtype=np.float64)
    if t.shape != (X.shape[0],):
        raise ValueError("target length must match X rows")
    if not np.all(np.isin(t, (0.0, 1.0))):
        raise ValueError("target values must be 0 or 1")
    n, d = X.shape
    Z = np.hstack([np.ones((n, 1)), X])
    beta = np.zeros(d + 1)
    eta = Z @ beta
    ll = _log_likelihood(eta, t)
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        p = _sigmoid(eta)
        w = p * (1.0 - p)
        gradient = Z.T @ (t - p)
        hessian = (Z * w[:, None]).T @ Z
        try:
            direction = np.linalg.solve(hessian, gradient)
        except np.linalg.LinAlgError:
            direction = np.linalg.lstsq(hessian, gradient, rcond=None)[0]
        step = 1.0
        accepted = False
        for _ in range(_MAX_HALVINGS + 1):
            candidate = beta + step * direction
            eta_new = Z @ candidate
            ll_new = _log_likelihood(eta_new, t)
            if ll_new >= ll:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        update = step * direction
        beta = candidate
        eta = eta_new
        ll = ll_new
        if np.max(np.abs(update)) < tol:
            converged = True
            break
    return LogisticFit(
        intercept=float(beta[0]),
        coef=beta[1:].copy(),
        converged=converged,
        n_iter=iterations,
        log_likelihood=ll,
    )
