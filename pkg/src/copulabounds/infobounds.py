"""Fisher information blocks and efficient information for copula parameters.

All blocks are evaluated at unit marginal variances; the efficient
information for the correlation parameter is invariant to the variance
scale, so no variance arguments are exposed.

Regimes:

- ``known``: marginal variances known; information is the plain theta block.
- ``equal``: one common unknown variance, adjusted by the scalar variance
  score.
- ``unequal``: p free unknown variances, adjusted by the full p-dimensional
  variance score.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .corrmodels import (
    CorrelationModel,
    cholesky_lower,
    correlation,
    domain_check,
    gradient,
    precision,
)
from .errors import DefinitenessError, DomainError, NotAvailableError

REGIMES = ("known", "equal", "unequal")

# Condition-number guard for inverting the variance-block information.
_COND_LIMIT = 1e12


@dataclass(frozen=True)
class InfoDecomposition:
    """All information blocks at a point theta (unit variances).

    Fields:
        i_tt: q x q theta block, entry (j,k) = tr(B C_j B C_k)/2.
        i_tpsi_eq: length-q cross block with the common-variance score.
        i_psipsi_eq: scalar variance information, p/2.
        i_tpsi_un: q x p cross block with the per-coordinate variance scores.
        i_psipsi_un: p x p variance information, (I + B o C)/4.
    """

    i_tt: np.ndarray
    i_tpsi_eq: np.ndarray
    i_psipsi_eq: float
    i_tpsi_un: np.ndarray
    i_psipsi_un: np.ndarray


@dataclass(frozen=True)
class EfficientInfo:
    regime: str
    value: np.ndarray  # q x q


@dataclass(frozen=True)
class BoundCurve:
    """Inverse efficient information along a theta grid (q = 1 families)."""

    family: str
    p: int
    theta_grid: np.ndarray
    inv_info: dict[str, np.ndarray]  # regime -> per-grid-point scalars

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("theta,inv_info_known,inv_info_equal,inv_info_unequal\n")
        for i, th in enumerate(self.theta_grid):
            row = [th] + [self.inv_info[r][i] for r in REGIMES]
            buf.write(",".join(f"{v:.17g}" for v in row) + "\n")
        return buf.getvalue()


def _require_domain(model: CorrelationModel, theta):
    if not domain_check(model, theta):
        raise DomainError(
            f"theta={np.atleast_1d(theta).tolist()} outside the domain of "
            f"{model.describe()}"
        )


def info_theta(model: CorrelationModel, theta) -> np.ndarray:
    """q x q information for theta with known margins: tr(B C_j B C_k)/2."""
    _require_domain(model, theta)
    b = precision(correlation(model, theta))
    grads = gradient(model, theta)
    bg = [b @ g for g in grads]
    q = len(grads)
    out = np.empty((q, q))
    for j in range(q):
        for k in range(j, q):
            out[j, k] = out[k, j] = np.sum(bg[j] * bg[k].T) / 2.0
    return out


def cross_info_equal(model: CorrelationModel, theta) -> np.ndarray:
    """Length-q cross information with the common-variance score: -tr(B C_k)/2."""
    _require_domain(model, theta)
    b = precision(correlation(model, theta))
    return np.array([-np.trace(b @ g) / 2.0 for g in gradient(model, theta)])


def cross_info_unequal(model: CorrelationModel, theta) -> np.ndarray:
    """q x p cross information; row k = -diag(B C_k)/2 at unit variances."""
    _require_domain(model, theta)
    b = precision(correlation(model, theta))
    return np.array([-np.diag(b @ g) / 2.0 for g in gradient(model, theta)])


def psi_info_unequal(model: CorrelationModel, theta) -> np.ndarray:
    """p x p variance-block information (I + B o C)/4 at unit variances."""
    _require_domain(model, theta)
    c = correlation(model, theta)
    b = precision(c)
    return (np.eye(model.p) + b * c) / 4.0


def decompose(model: CorrelationModel, theta) -> InfoDecomposition:
    """Compute all information blocks at theta."""
    return InfoDecomposition(
        i_tt=info_theta(model, theta),
        i_tpsi_eq=cross_info_equal(model, theta),
        i_psipsi_eq=model.p / 2.0,
        i_tpsi_un=cross_info_unequal(model, theta),
        i_psipsi_un=psi_info_unequal(model, theta),
    )


def _solve_psi_block(i_psipsi: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    if np.linalg.cond(i_psipsi) > _COND_LIMIT:
        raise DefinitenessError(
            "variance-block information is near-singular "
            f"(condition number above {_COND_LIMIT:g})"
        )
    low = cholesky_lower(i_psipsi)
    y = np.linalg.solve(low, rhs)
    return np.linalg.solve(low.T, y)


def efficient_info(model: CorrelationModel, theta, regime: str) -> EfficientInfo:
    """Nuisance-adjusted q x q information for theta under the given regime."""
    if regime not in REGIMES:
        raise DomainError(f"unknown regime {regime!r}")
    i_tt = info_theta(model, theta)
    if regime == "known":
        return EfficientInfo("known", i_tt)
    if regime == "equal":
        i_tp = cross_info_equal(model, theta)
        value = i_tt - np.outer(i_tp, i_tp) / (model.p / 2.0)
        return EfficientInfo("equal", value)
    i_tp = cross_info_unequal(model, theta)  # q x p
    i_pp = psi_info_unequal(model, theta)
    value = i_tt - i_tp @ _solve_psi_block(i_pp, i_tp.T)
    value = (value + value.T) / 2.0
    return EfficientInfo("unequal", value)


def _ar1_blocks(p: int, theta: float):
    """Analytic tridiagonal inverse and derivative diagonal for the AR(1) family.

    Independent of precision()/gradient(): B and d = diag(B C_theta) are
    written out from the known tridiagonal form.
    """
    s = 1.0 - theta**2
    b = np.zeros((p, p))
    for j in range(p):
        interior = 0 < j < p - 1
        b[j, j] = (1.0 + theta**2) / s if interior else 1.0 / s
        if j + 1 < p:
            b[j, j + 1] = b[j + 1, j] = -theta / s
    d = np.full(p, -2.0 * theta / s)
    d[0] = d[-1] = -theta / s
    return b, d


def closed_form_info(model: CorrelationModel, theta, regime: str) -> float:
    """Published closed or reduced forms; an independent oracle for q = 1.

    Supported: exchangeable (any p), circular p = 4, ar1 (reduced via the
    analytic tridiagonal inverse). Raises NotAvailableError otherwise.
    """
    if regime not in REGIMES:
        raise DomainError(f"unknown regime {regime!r}")
    _require_domain(model, theta)
    th = float(np.atleast_1d(theta)[0])
    p = model.p
    if model.family == "exchangeable":
        gam = 1.0 / (1.0 + (p - 1) * th)
        i_tt = p * (p * gam**2 - 2.0 * gam + 1.0) / (2.0 * (1.0 - th) ** 2)
        if regime == "known":
            return i_tt
        # equal and unequal coincide: rows are permutations of one another
        return p * (p - 1) / (2.0 * ((p - 1) * th + 1.0) ** 2 * (1.0 - th) ** 2)
    if model.family == "circular":
        s = (1.0 - th**2) ** 2
        if regime == "known":
            return 4.0 * (1.0 + 2.0 * th**2) / s
        return 4.0 / s
    if model.family == "ar1":
        i_tt = (p - 1) * (1.0 + th**2) / (1.0 - th**2) ** 2
        if regime == "known":
            return i_tt
        b, d = _ar1_blocks(p, th)
        if regime == "equal":
            return i_tt - np.sum(d) ** 2 / (2.0 * p)
        c = _ar1_corr(p, th)
        m = b * c + np.eye(p)
        return i_tt - d @ np.linalg.solve(m, d)
    raise NotAvailableError(
        f"no closed form available for family {model.family!r}"
    )


def _ar1_corr(p: int, theta: float) -> np.ndarray:
    lags = np.abs(np.subtract.outer(np.arange(p), np.arange(p)))
    return theta**lags


def default_grid(model: CorrelationModel, count: int = 101) -> np.ndarray:
    """Equally spaced interior grid, trimmed 1e-3 from the domain boundaries."""
    if model.q != 1:
        raise DomainError("grids are defined for one-parameter families only")
    if model.family == "exchangeable":
        lo, hi = -1.0 / (model.p - 1), 1.0
    else:
        lo, hi = -1.0, 1.0
    return np.linspace(lo + 1e-3, hi - 1e-3, count)


def bound_curve(model: CorrelationModel, theta_grid, regimes=REGIMES) -> BoundCurve:
    """Inverse efficient information per regime along a strictly increasing grid."""
    if model.q != 1:
        raise DomainError("bound curves are defined for one-parameter families only")
    grid = np.asarray(theta_grid, dtype=float)
    if grid.ndim != 1 or np.any(np.diff(grid) <= 0):
        raise DomainError("theta grid must be one-dimensional and strictly increasing")
    for th in grid:
        if not domain_check(model, th):
            raise DomainError(
                f"grid point theta={th!r} outside the domain of {model.describe()}"
            )
    inv_info = {}
    for regime in regimes:
        vals = np.array(
            [efficient_info(model, th, regime).value[0, 0] for th in grid]
        )
        inv_info[regime] = 1.0 / vals
    return BoundCurve(model.family, model.p, grid, inv_info)
