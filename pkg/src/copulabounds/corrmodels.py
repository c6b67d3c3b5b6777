"""Structured correlation families C(theta) and their derivatives.

Four built-in families are provided:

- ``exchangeable``: all off-diagonal entries equal to theta,
  domain (-1/(p-1), 1).
- ``circular``: p = 4 circulant matrix with first row (1, theta, theta^2,
  theta) and each following row the one-step cyclic shift of the previous.
- ``ar1``: entries theta^|j-k|, domain (-1, 1).
- ``unstructured``: the p(p-1)/2 off-diagonal entries taken directly from
  theta in row-major upper-triangle order, positive definiteness checked at
  evaluation time.

A ``custom`` family wraps a user-supplied correlation function; its gradient
falls back to central finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DefinitenessError, DomainError

# Open-domain boundaries are rejected within this margin to keep B = C^-1
# numerically stable.
BOUNDARY_MARGIN = 1e-8

# Interior margin used by Cholesky-based positive definiteness checks
# (circular, unstructured, custom): requires lambda_min > this value.
_PD_MARGIN = 1e-8

_FAMILIES = ("exchangeable", "circular", "ar1", "unstructured", "custom")


@dataclass(frozen=True)
class CorrelationModel:
    """A parameterized correlation family of dimension p.

    ``q`` (the parameter count) is derived from the family: 1 for the three
    structured families, p(p-1)/2 for unstructured, explicit for custom.
    """

    family: str
    p: int
    corr_fn: Optional[Callable[[np.ndarray], np.ndarray]] = field(
        default=None, compare=False
    )
    q_custom: Optional[int] = None

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise DomainError(f"unknown family {self.family!r}")
        if self.p < 2:
            raise DomainError("dimension p must be >= 2")
        if self.family == "circular" and self.p != 4:
            raise DomainError("the circular family is defined for p = 4 only")
        if self.family == "custom":
            if self.corr_fn is None or self.q_custom is None:
                raise DomainError("custom family requires corr_fn and q_custom")

    @property
    def q(self) -> int:
        if self.family == "unstructured":
            return self.p * (self.p - 1) // 2
        if self.family == "custom":
            return int(self.q_custom)
        return 1

    def describe(self) -> str:
        return f"{self.family}(p={self.p})"


def _as_theta(model: CorrelationModel, theta) -> np.ndarray:
    t = np.atleast_1d(np.asarray(theta, dtype=float))
    if t.shape != (model.q,):
        raise DomainError(
            f"theta must have length q={model.q} for {model.describe()}, "
            f"got shape {t.shape}"
        )
    return t


def cholesky_lower(mat: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor; raises DefinitenessError with the failing pivot."""
    try:
        return np.linalg.cholesky(mat)
    except np.linalg.LinAlgError:
        # locate the first failing pivot for diagnostics (p is small)
        n = mat.shape[0]
        for k in range(1, n + 1):
            try:
                np.linalg.cholesky(mat[:k, :k])
            except np.linalg.LinAlgError:
                raise DefinitenessError(
                    f"matrix is not positive definite (pivot {k - 1})",
                    pivot=k - 1,
                ) from None
        raise DefinitenessError("matrix is not positive definite") from None


def _upper_indices(p: int):
    return np.triu_indices(p, k=1)


def _circular_pattern(theta: float) -> np.ndarray:
    first = np.array([1.0, theta, theta**2, theta])
    rows = [np.roll(first, k) for k in range(4)]
    return np.array(rows)


def correlation(model: CorrelationModel, theta) -> np.ndarray:
    """Evaluate C(theta) for the family; raises on out-of-domain theta."""
    t = _as_theta(model, theta)
    if not domain_check(model, t):
        raise DomainError(
            f"theta={np.asarray(theta).tolist()} outside the domain of "
            f"{model.describe()}"
        )
    return _correlation_unchecked(model, t)


def _correlation_unchecked(model: CorrelationModel, t: np.ndarray) -> np.ndarray:
    p = model.p
    if model.family == "exchangeable":
        c = np.full((p, p), t[0])
        np.fill_diagonal(c, 1.0)
        return c
    if model.family == "ar1":
        lags = np.abs(np.subtract.outer(np.arange(p), np.arange(p)))
        return t[0] ** lags
    if model.family == "circular":
        return _circular_pattern(t[0])
    if model.family == "unstructured":
        c = np.eye(p)
        iu = _upper_indices(p)
        c[iu] = t
        c[(iu[1], iu[0])] = t
        return c
    return np.asarray(model.corr_fn(t), dtype=float)


def gradient(model: CorrelationModel, theta) -> list[np.ndarray]:
    """Analytic derivative matrices dC/dtheta_k, one p x p matrix per k.

    Custom families use a central finite difference with step
    eps^(1/3) * max(1, |theta_k|).
    """
    t = _as_theta(model, theta)
    if not domain_check(model, t):
        raise DomainError(
            f"theta={np.asarray(theta).tolist()} outside the domain of "
            f"{model.describe()}"
        )
    p = model.p
    if model.family == "exchangeable":
        g = np.ones((p, p)) - np.eye(p)
        return [g]
    if model.family == "ar1":
        lags = np.abs(np.subtract.outer(np.arange(p), np.arange(p)))
        g = np.zeros((p, p), dtype=float)
        off = lags > 0
        g[off] = lags[off] * t[0] ** (lags[off] - 1)
        return [g]
    if model.family == "circular":
        th = t[0]
        first = np.array([0.0, 1.0, 2.0 * th, 1.0])
        g = np.array([np.roll(first, k) for k in range(4)])
        return [g]
    if model.family == "unstructured":
        out = []
        for j, k in zip(*_upper_indices(p)):
            e = np.zeros((p, p))
            e[j, k] = e[k, j] = 1.0
            out.append(e)
        return out
    # custom: central finite difference fallback
    step_base = np.cbrt(np.finfo(float).eps)
    out = []
    for k in range(model.q):
        h = step_base * max(1.0, abs(t[k]))
        tp, tm = t.copy(), t.copy()
        tp[k] += h
        tm[k] -= h
        out.append(
            (np.asarray(model.corr_fn(tp)) - np.asarray(model.corr_fn(tm)))
            / (2.0 * h)
        )
    return out


def precision(c: np.ndarray) -> np.ndarray:
    """B = C^-1 via Cholesky factorization and triangular solves."""
    c = np.asarray(c, dtype=float)
    low = cholesky_lower(c)
    p = c.shape[0]
    # B = L^-T L^-1
    linv = np.linalg.solve(low, np.eye(p))
    b = linv.T @ linv
    return (b + b.T) / 2.0


def domain_check(model: CorrelationModel, theta) -> bool:
    """True iff theta is interior to the family domain (1e-8 boundary margin)."""
    try:
        t = _as_theta(model, theta)
    except DomainError:
        return False
    if not np.all(np.isfinite(t)):
        return False
    if model.family == "exchangeable":
        lo = -1.0 / (model.p - 1)
        return lo + BOUNDARY_MARGIN < t[0] < 1.0 - BOUNDARY_MARGIN
    if model.family == "ar1":
        return -1.0 + BOUNDARY_MARGIN < t[0] < 1.0 - BOUNDARY_MARGIN
    # circular / unstructured / custom: positive definiteness via Cholesky
    if model.family in ("circular", "unstructured") and np.any(np.abs(t) >= 1.0):
        return False
    c = _correlation_unchecked(model, t)
    try:
        cholesky_lower(c - _PD_MARGIN * np.eye(model.p))
    except DefinitenessError:
        return False
    return True


def symmetry_condition(model: CorrelationModel, theta, tol: float = 1e-10) -> np.ndarray:
    """Per-parameter test of the constant-diagonal condition on B C_theta_k.

    Returns a boolean array of length q; entry k is True iff
    max - min of diag(B @ C_theta_k) <= tol.
    """
    c = correlation(model, theta)
    b = precision(c)
    grads = gradient(model, theta)
    out = np.empty(len(grads), dtype=bool)
    for k, g in enumerate(grads):
        d = np.diag(b @ g)
        out[k] = (d.max() - d.min()) <= tol
    return out
