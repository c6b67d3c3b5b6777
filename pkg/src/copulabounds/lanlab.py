"""Local log-likelihood ratios, their rank-measurable approximations, and
the quadratic-form statistics used to verify the convergence claims by
Monte Carlo.

The exact ratio lambda_y is computed from two full log-likelihood
evaluations (no expansion); the rank approximation lambda_hat uses the
score expansion evaluated at the normal scores, with the nuisance
direction fixed at its information-optimal contraction.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import infobounds
from .corrmodels import (
    CorrelationModel,
    cholesky_lower,
    correlation,
    domain_check,
    gradient,
    precision,
)
from .errors import DataError, DomainError
from .sampling import (
    IDENTITY_MARGINS,
    MarginSpec,
    apply_margins,
    column_ranks,
    normal_scores,
    replicate_seed,
    sample_gaussian,
)

_LOG_2PI = math.log(2.0 * math.pi)

# Construction-time tolerance for the zero-diagonal invariant of the
# centering matrices; a violation indicates a formula/regime mismatch.
_A_DIAG_TOL = 1e-8


@dataclass(frozen=True)
class LocalPerturbation:
    """A sqrt(n)-local move (s, t): s in the copula direction, t in the
    variance direction (scalar for the equal regime, p-vector for unequal)."""

    s: np.ndarray
    t: np.ndarray
    n: int


@dataclass(frozen=True)
class AMatrixStack:
    """Quadratic-form matrices A_k, one per copula parameter, with
    diag((A_k + A_k^T) C) = 0 enforced at construction."""

    matrices: list[np.ndarray]
    regime: str


@dataclass(frozen=True)
class QuadStats:
    s_n: float
    q_n: float
    l_n: float


@dataclass(frozen=True)
class LLRSample:
    lambda_y: float
    lambda_hat: float
    diff: float
    seed: int


@dataclass(frozen=True)
class McReport:
    """Aggregated Monte Carlo results with full seed provenance."""

    replicates: int
    n: int
    master_seed: int
    predicted_mean: float
    predicted_variance: float
    mean_lambda_hat: float
    var_lambda_hat: float
    mean_lambda_y: float
    var_lambda_y: float
    mean_exp_lambda_y: float
    abs_diff_quantiles: dict[float, float]
    skewness_lambda_hat: float
    excess_kurtosis_lambda_hat: float
    ks_distance: float
    samples: list[LLRSample] = field(repr=False)
    quad_stats: list[QuadStats] = field(repr=False)

    def replicates_csv(self) -> str:
        buf = io.StringIO()
        buf.write("rep,seed,lambda_y,lambda_hat,diff,s_n,q_n,l_n\n")
        for r, (smp, qs) in enumerate(zip(self.samples, self.quad_stats)):
            vals = (smp.lambda_y, smp.lambda_hat, smp.diff, qs.s_n, qs.q_n, qs.l_n)
            buf.write(f"{r},{smp.seed}," + ",".join(f"{v:.17g}" for v in vals) + "\n")
        return buf.getvalue()

    def summary_csv(self) -> str:
        rows = [
            ("replicates", self.replicates),
            ("n", self.n),
            ("master_seed", self.master_seed),
            ("predicted_mean", self.predicted_mean),
            ("predicted_variance", self.predicted_variance),
            ("mean_lambda_hat", self.mean_lambda_hat),
            ("var_lambda_hat", self.var_lambda_hat),
            ("mean_lambda_y", self.mean_lambda_y),
            ("var_lambda_y", self.var_lambda_y),
            ("mean_exp_lambda_y", self.mean_exp_lambda_y),
            ("skewness_lambda_hat", self.skewness_lambda_hat),
            ("excess_kurtosis_lambda_hat", self.excess_kurtosis_lambda_hat),
            ("ks_distance", self.ks_distance),
        ]
        rows += [
            (f"abs_diff_q{int(q * 100):02d}", v)
            for q, v in sorted(self.abs_diff_quantiles.items())
        ]
        buf = io.StringIO()
        buf.write("statistic,value\n")
        for name, v in rows:
            sval = f"{v:.17g}" if isinstance(v, float) else str(v)
            buf.write(f"{name},{sval}\n")
        return buf.getvalue()


def loglik(data, model: CorrelationModel, theta, variances) -> float:
    """Gaussian log likelihood summed over rows.

    ``variances`` holds marginal precisions: a scalar for the equal-variance
    model, a length-p vector for the unequal-variance model. The log
    determinant of B comes from its Cholesky factor.
    """
    data = np.asarray(data, dtype=float)
    p = model.p
    if data.ndim != 2 or data.shape[1] != p:
        raise DataError(f"data must be n x {p}")
    if not domain_check(model, theta):
        raise DomainError(f"theta outside the domain of {model.describe()}")
    psi = np.atleast_1d(np.asarray(variances, dtype=float))
    if np.any(psi <= 0):
        raise DomainError("marginal precisions must be strictly positive")
    b = precision(correlation(model, theta))
    logdet_b = 2.0 * np.sum(np.log(np.diag(cholesky_lower(b))))
    n = data.shape[0]
    if psi.size == 1:
        quad = np.einsum("ij,jk,ik->", data, b, data)
        return 0.5 * (
            n * (-p * _LOG_2PI + p * math.log(psi[0]) + logdet_b) - psi[0] * quad
        )
    if psi.size != p:
        raise DomainError(f"precision vector must have length {p}")
    scaled = data * np.sqrt(psi)
    quad = np.einsum("ij,jk,ik->", scaled, b, scaled)
    return 0.5 * (n * (-p * _LOG_2PI + np.sum(np.log(psi)) + logdet_b) - quad)


def h_vector(model: CorrelationModel, theta, regime: str) -> list[np.ndarray]:
    """Information-optimal variance coupling per copula parameter.

    Equal regime: scalar h_k = tr(B C_k)/p per parameter (returned as
    0-d arrays). Unequal regime: p-vector h_k = 2 (I + B o C)^-1 diag(B C_k).
    """
    if regime == "known":
        raise DomainError("h vectors exist only for the equal and unequal regimes")
    if regime not in ("equal", "unequal"):
        raise DomainError(f"unknown regime {regime!r}")
    c = correlation(model, theta)
    b = precision(c)
    grads = gradient(model, theta)
    if regime == "equal":
        return [np.asarray(np.trace(b @ g) / model.p) for g in grads]
    m = np.eye(model.p) + b * c
    return [2.0 * np.linalg.solve(m, np.diag(b @ g)) for g in grads]


def a_matrices(model: CorrelationModel, theta, regime: str) -> AMatrixStack:
    """Centering matrices A_k = (B C_k B - D(h_k) B)/2 for the regime.

    Construction fails loudly if diag((A_k + A_k^T) C) exceeds 1e-8,
    which would indicate a formula/regime mismatch.
    """
    c = correlation(model, theta)
    b = precision(c)
    grads = gradient(model, theta)
    hs = h_vector(model, theta, regime)
    mats = []
    for g, h in zip(grads, hs):
        bgb = b @ g @ b
        if regime == "equal":
            a = (bgb - float(h) * b) / 2.0
        else:
            a = (bgb - np.diag(h) @ b) / 2.0
        resid = np.abs(np.diag((a + a.T) @ c)).max()
        if resid > _A_DIAG_TOL:
            raise DataError(
                "zero-diagonal invariant violated "
                f"(max |diag((A+A^T)C)| = {resid:.3g}); formula/regime mismatch"
            )
        mats.append(a)
    return AMatrixStack(matrices=mats, regime=regime)


def contraction(model: CorrelationModel, theta, s, regime: str) -> np.ndarray:
    """The optimal variance direction t for a copula direction s."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    hs = h_vector(model, theta, regime)
    if regime == "equal":
        return np.asarray(sum(float(h) * sk for h, sk in zip(hs, s)))
    return sum(h * sk for h, sk in zip(hs, s))


def perturbation(model: CorrelationModel, theta, s, regime: str, n: int) -> LocalPerturbation:
    """Local move with t fixed at its information-optimal contraction."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    t = contraction(model, theta, s, regime)
    return LocalPerturbation(s=s, t=np.atleast_1d(t), n=n)


def lambda_y(data, model: CorrelationModel, theta, pert: LocalPerturbation,
             regime: str) -> float:
    """Exact local log-likelihood ratio from two log-likelihood evaluations."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    rn = math.sqrt(pert.n)
    theta_pert = theta + pert.s / rn
    if not domain_check(model, theta_pert):
        raise DomainError("perturbed theta leaves the parameter domain")
    psi_pert = 1.0 + np.asarray(pert.t, dtype=float) / rn
    if np.any(psi_pert <= 0):
        raise DomainError("perturbed precisions must stay positive")
    base = np.ones(model.p) if psi_pert.size > 1 else np.ones(1)
    return loglik(data, model, theta_pert, psi_pert) - loglik(data, model, theta, base)


def _score_terms(scores, model, theta, s, regime):
    """Per-row score contributions s' ldot_theta + t' ldot_psi at unit variances."""
    c = correlation(model, theta)
    b = precision(c)
    grads = gradient(model, theta)
    s = np.atleast_1d(np.asarray(s, dtype=float))
    t = contraction(model, theta, s, regime)
    yb = scores @ b
    total = np.zeros(scores.shape[0])
    for sk, g in zip(s, grads):
        # ldot_theta_k(y) = (-tr(B C_k) + y' B C_k B y)/2
        quad = np.einsum("ij,jk,ik->i", yb, g, yb)
        total += sk * 0.5 * (-np.trace(b @ g) + quad)
    if regime == "equal":
        ypsi = 0.5 * (model.p - np.einsum("ij,ij->i", scores, yb))
        total += float(t) * ypsi
    else:
        # ldot_psi_j(y) = (1 - y_j (B y)_j)/2, contracted with t
        per_coord = 0.5 * (1.0 - scores * yb)
        total += per_coord @ np.asarray(t)
    return total, np.atleast_1d(t)


def _full_quadratic_penalty(model, theta, s, t, regime):
    dec = infobounds.decompose(model, theta)
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if regime == "equal":
        u = np.concatenate([s, np.asarray(t, dtype=float).reshape(-1)])
        i_full = np.block([
            [dec.i_tt, dec.i_tpsi_eq[:, None]],
            [dec.i_tpsi_eq[None, :], np.array([[dec.i_psipsi_eq]])],
        ])
    else:
        u = np.concatenate([s, np.asarray(t, dtype=float)])
        i_full = np.block([
            [dec.i_tt, dec.i_tpsi_un],
            [dec.i_tpsi_un.T, dec.i_psipsi_un],
        ])
    return float(u @ i_full @ u) / 2.0


def lambda_hat(scores, model: CorrelationModel, theta, s, regime: str) -> float:
    """Rank-measurable approximation: score expansion at the normal scores.

    t is set internally to the h-contraction of s; the quadratic penalty
    uses the full information matrix over (theta, variance) directions.
    """
    if regime not in ("equal", "unequal"):
        raise DomainError("lambda_hat is defined for the equal and unequal regimes")
    scores = np.asarray(scores, dtype=float)
    n = scores.shape[0]
    terms, t = _score_terms(scores, model, theta, s, regime)
    penalty = _full_quadratic_penalty(model, theta, s, t, regime)
    return float(np.sum(terms) / math.sqrt(n) - penalty)


def quad_diff_stats(data, scores, a: np.ndarray) -> QuadStats:
    """The scaled quadratic-form differences between scores and data.

    Uses the symmetrized matrix for the pure-difference and cross terms, so
    s_n = q_n + 2 l_n holds as an algebraic identity.
    """
    data = np.asarray(data, dtype=float)
    scores = np.asarray(scores, dtype=float)
    if data.shape != scores.shape:
        raise DataError("data and scores must be row-aligned with equal shapes")
    a_sym = (np.asarray(a, dtype=float) + np.asarray(a, dtype=float).T) / 2.0
    rn = math.sqrt(data.shape[0])
    s_n = (
        np.einsum("ij,jk,ik->", scores, a_sym, scores)
        - np.einsum("ij,jk,ik->", data, a_sym, data)
    ) / rn
    d = scores - data
    q_n = np.einsum("ij,jk,ik->", d, a_sym, d) / rn
    l_n = np.einsum("ij,jk,ik->", d, a_sym, data) / rn
    return QuadStats(s_n=float(s_n), q_n=float(q_n), l_n=float(l_n))


def _moments(x: np.ndarray):
    mean = float(np.mean(x))
    var = float(np.var(x, ddof=1))
    std = math.sqrt(var)
    z = (x - mean) / std
    skew = float(np.mean(z**3))
    kurt = float(np.mean(z**4) - 3.0)
    return mean, var, skew, kurt


def _ks_distance(x: np.ndarray, mean: float, var: float) -> float:
    from .sampling import norm_cdf

    xs = np.sort(x)
    n = xs.size
    cdf = norm_cdf((xs - mean) / math.sqrt(var))
    upper = np.arange(1, n + 1) / n - cdf
    lower = cdf - np.arange(0, n) / n
    return float(max(upper.max(), lower.max()))


def mc_lan_experiment(
    model: CorrelationModel,
    theta,
    s,
    regime: str,
    n: int,
    replicates: int,
    master_seed: int,
    margins: MarginSpec = IDENTITY_MARGINS,
) -> McReport:
    """Seeded Monte Carlo comparison of lambda_y and lambda_hat.

    Each replicate r draws from substream (master_seed, r), so the report
    is identical for any execution order. Any replicate failure aborts
    with the replicate seed attached.
    """
    if replicates < 100:
        raise DomainError("at least 100 replicates are required")
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    c = correlation(model, theta)
    pert = perturbation(model, theta, s, regime, n)
    stack = a_matrices(model, theta, regime)
    s_vec = np.atleast_1d(np.asarray(s, dtype=float))
    a_combined = sum(sk * a for sk, a in zip(s_vec, stack.matrices))

    eff = infobounds.efficient_info(model, theta, regime).value
    sigma2 = float(s_vec @ eff @ s_vec)

    samples: list[LLRSample] = []
    quads: list[QuadStats] = []
    for r in range(replicates):
        seed = replicate_seed(master_seed, r)
        try:
            data = sample_gaussian(c, n, seed)
            data = apply_margins(data, margins)
            ly = lambda_y(data, model, theta, pert, regime)
            scores = normal_scores(column_ranks(data))
            lh = lambda_hat(scores, model, theta, s, regime)
            quads.append(quad_diff_stats(data, scores, a_combined))
            samples.append(LLRSample(ly, lh, ly - lh, seed))
        except Exception as exc:
            raise RuntimeError(f"replicate {r} (seed {seed}) failed: {exc}") from exc

    lh_arr = np.array([smp.lambda_hat for smp in samples])
    ly_arr = np.array([smp.lambda_y for smp in samples])
    diff_arr = np.abs(ly_arr - lh_arr)
    mean_lh, var_lh, skew, kurt = _moments(lh_arr)
    mean_ly, var_ly, _, _ = _moments(ly_arr)
    quantiles = {
        q: float(np.quantile(diff_arr, q)) for q in (0.25, 0.5, 0.75, 0.9)
    }
    return McReport(
        replicates=replicates,
        n=n,
        master_seed=master_seed,
        predicted_mean=-sigma2 / 2.0,
        predicted_variance=sigma2,
        mean_lambda_hat=mean_lh,
        var_lambda_hat=var_lh,
        mean_lambda_y=mean_ly,
        var_lambda_y=var_ly,
        mean_exp_lambda_y=float(np.mean(np.exp(ly_arr))),
        abs_diff_quantiles=quantiles,
        skewness_lambda_hat=skew,
        excess_kurtosis_lambda_hat=kurt,
        ks_distance=_ks_distance(lh_arr, -sigma2 / 2.0, sigma2),
        samples=samples,
        quad_stats=quads,
    )
