import math

import numpy as np
import pytest

from copulabounds import (
    CorrelationModel,
    DataError,
    DomainError,
    LocalPerturbation,
    a_matrices,
    apply_margins,
    column_ranks,
    contraction,
    correlation,
    h_vector,
    lambda_hat,
    lambda_y,
    loglik,
    mc_lan_experiment,
    normal_scores,
    perturbation,
    quad_diff_stats,
    sample_gaussian,
)
from copulabounds.sampling import MarginSpec

BIV = CorrelationModel("exchangeable", 2)
EXCH4 = CorrelationModel("exchangeable", 4)
CIRC4 = CorrelationModel("circular", 4)
AR1_4 = CorrelationModel("ar1", 4)


def _dense_loglik_oracle(data, c, psi):
    """Independent oracle: dense per-row density evaluation with explicit
    inverse/determinant of the full covariance D(psi)^{-1/2} C D(psi)^{-1/2}."""
    psi = np.atleast_1d(np.asarray(psi, dtype=float))
    if psi.size == 1:
        psi = np.full(c.shape[0], psi[0])
    cov = c / np.sqrt(np.outer(psi, psi))
    inv = np.linalg.inv(cov)
    _, logdet = np.linalg.slogdet(cov)
    p = c.shape[0]
    total = 0.0
    for row in np.atleast_2d(data):
        total += -0.5 * (p * math.log(2 * math.pi) + logdet + row @ inv @ row)
    return total


def test_loglik_single_zero_row():
    assert loglik(np.zeros((1, 2)), BIV, 0.0, 1.0) == pytest.approx(
        -math.log(2 * math.pi), rel=1e-14
    )


def test_loglik_matches_dense_oracle():
    c = correlation(BIV, 0.5)
    data = np.array([[1.0, 1.0]])
    assert loglik(data, BIV, 0.5, 1.0) == pytest.approx(
        _dense_loglik_oracle(data, c, 1.0), abs=1e-12
    )


def test_loglik_matches_dense_oracle_unequal_multirow():
    c = correlation(AR1_4, 0.4)
    data = sample_gaussian(c, 25, 9)
    psi = np.array([0.8, 1.1, 1.3, 0.9])
    assert loglik(data, AR1_4, 0.4, psi) == pytest.approx(
        _dense_loglik_oracle(data, c, psi), rel=1e-12
    )


def test_loglik_equal_at_unit_equals_unequal_at_unit():
    data = sample_gaussian(correlation(AR1_4, 0.3), 10, 4)
    assert loglik(data, AR1_4, 0.3, 1.0) == loglik(data, AR1_4, 0.3, np.ones(4))


def test_loglik_rejects_bad_inputs():
    with pytest.raises(DomainError):
        loglik(np.zeros((1, 2)), BIV, 0.5, -1.0)
    with pytest.raises(DataError):
        loglik(np.zeros((1, 3)), BIV, 0.5, 1.0)


def test_h_vector_bivariate_equal():
    h = h_vector(BIV, 0.5, "equal")[0]
    assert float(h) == pytest.approx(-2 / 3, rel=1e-12)


def test_h_vector_zero_at_independence():
    for m in (BIV, EXCH4, CIRC4, AR1_4):
        for regime in ("equal", "unequal"):
            np.testing.assert_allclose(h_vector(m, 0.0, regime)[0], 0.0, atol=1e-14)


def test_h_vector_unequal_constant_for_symmetry_families():
    for m in (EXCH4, CIRC4):
        h_un = h_vector(m, 0.5, "unequal")[0]
        h_eq = float(h_vector(m, 0.5, "equal")[0])
        np.testing.assert_allclose(h_un, np.full(m.p, h_eq), atol=1e-12)


def test_h_vector_matches_info_block_identity():
    # h_k = -I_psipsi^-1 I_psi,thetak (equal); matrix analogue for unequal
    from copulabounds import cross_info_equal, cross_info_unequal, psi_info_unequal

    for m, th in ((AR1_4, 0.5), (CIRC4, -0.3)):
        h_eq = float(h_vector(m, th, "equal")[0])
        assert h_eq == pytest.approx(-cross_info_equal(m, th)[0] / (m.p / 2), abs=1e-10)
        h_un = h_vector(m, th, "unequal")[0]
        expected = -np.linalg.solve(psi_info_unequal(m, th), cross_info_unequal(m, th)[0])
        np.testing.assert_allclose(h_un, expected, atol=1e-10)


def test_h_vector_rejects_known_regime():
    with pytest.raises(DomainError):
        h_vector(BIV, 0.5, "known")


def test_a_matrix_bivariate_closed_form():
    th = 0.5
    a = a_matrices(BIV, th, "equal").matrices[0]
    expected = np.array([[-th, 1.0], [1.0, -th]]) / (2 * (1 - th**2) ** 2)
    np.testing.assert_allclose(a, expected, rtol=1e-12)
    # diagonal of A C vanishes
    np.testing.assert_allclose(np.diag(a @ correlation(BIV, th)), 0.0, atol=1e-14)


def test_a_matrix_diag_invariant_on_grids():
    grids = {
        "exchangeable": np.linspace(-0.3, 0.9, 20),
        "circular": np.linspace(-0.9, 0.9, 20),
        "ar1": np.linspace(-0.9, 0.9, 20),
    }
    for m in (BIV, EXCH4, CIRC4, AR1_4):
        c_grid = grids[m.family]
        for th in c_grid:
            for regime in ("equal", "unequal"):
                if regime == "equal" and m is AR1_4:
                    continue  # scalar-h construction needs the symmetry condition
                stack = a_matrices(m, th, regime)
                c = correlation(m, th)
                for a in stack.matrices:
                    resid = np.abs(np.diag((a + a.T) @ c)).max()
                    assert resid <= 1e-10, (m.family, th, regime)


def test_a_matrix_equal_regime_rejects_non_symmetry_family():
    # scalar-h centering cannot zero the diagonal unless diag(B C_theta) is
    # constant; construction must fail loudly instead of returning a bad A
    with pytest.raises(DataError):
        a_matrices(AR1_4, 0.5, "equal")


def test_contraction_matches_h():
    t = contraction(AR1_4, 0.5, 1.0, "unequal")
    np.testing.assert_allclose(t, h_vector(AR1_4, 0.5, "unequal")[0])
    t_eq = contraction(BIV, 0.5, 2.0, "equal")
    assert float(t_eq) == pytest.approx(-4 / 3, rel=1e-12)


def test_lambda_y_zero_perturbation():
    data = sample_gaussian(correlation(BIV, 0.5), 40, 17)
    pert = LocalPerturbation(s=np.array([0.0]), t=np.array([0.0]), n=40)
    assert lambda_y(data, BIV, 0.5, pert, "equal") == 0.0


def test_lambda_y_deterministic():
    data = sample_gaussian(correlation(BIV, 0.5), 40, 17)
    pert = perturbation(BIV, 0.5, 1.0, "equal", 40)
    assert lambda_y(data, BIV, 0.5, pert, "equal") == lambda_y(
        data, BIV, 0.5, pert, "equal"
    )


def test_lambda_y_domain_error_on_boundary_crossing():
    data = sample_gaussian(correlation(BIV, 0.9), 4, 1)
    pert = LocalPerturbation(s=np.array([1.0]), t=np.array([0.0]), n=4)
    with pytest.raises(DomainError):
        lambda_y(data, BIV, 0.9, pert, "equal")


def test_lambda_y_unit_mean_small_study():
    # mean of exp(lambda_y) ~ 1 (unit-mean likelihood ratio), 300 replicates
    rep = mc_lan_experiment(BIV, 0.5, 1.0, "equal", n=500, replicates=300,
                            master_seed=505)
    vals = np.exp([smp.lambda_y for smp in rep.samples])
    se = vals.std(ddof=1) / math.sqrt(vals.size)
    assert abs(rep.mean_exp_lambda_y - 1.0) < 3 * se


def test_lambda_hat_zero_direction():
    scores = normal_scores(column_ranks(sample_gaussian(correlation(BIV, 0.5), 50, 3)))
    assert lambda_hat(scores, BIV, 0.5, 0.0, "equal") == pytest.approx(0.0, abs=1e-15)


def test_lambda_hat_margin_invariance_bitwise():
    data = sample_gaussian(correlation(AR1_4, 0.5), 120, 88)
    base = lambda_hat(
        normal_scores(column_ranks(data)), AR1_4, 0.5, 1.0, "unequal"
    )
    for tag in ("exponential", "cube", "logistic-quantile"):
        moved = apply_margins(data, MarginSpec.uniform(tag))
        val = lambda_hat(
            normal_scores(column_ranks(moved)), AR1_4, 0.5, 1.0, "unequal"
        )
        assert val == base


def test_lambda_hat_equal_unequal_agree_for_symmetry_families():
    for m, th in ((BIV, 0.5), (EXCH4, 0.3), (CIRC4, 0.4)):
        data = sample_gaussian(correlation(m, th), 200, 1234)
        scores = normal_scores(column_ranks(data))
        eq = lambda_hat(scores, m, th, 1.0, "equal")
        un = lambda_hat(scores, m, th, 1.0, "unequal")
        assert eq == pytest.approx(un, abs=1e-9)


def test_quad_stats_zero_matrix():
    data = sample_gaussian(np.eye(2), 30, 1)
    qs = quad_diff_stats(data, data + 1.0, np.zeros((2, 2)))
    assert (qs.s_n, qs.q_n, qs.l_n) == (0.0, 0.0, 0.0)


def test_quad_stats_scores_equal_data():
    data = sample_gaussian(np.eye(2), 30, 1)
    a = a_matrices(BIV, 0.5, "equal").matrices[0]
    qs = quad_diff_stats(data, data, a)
    assert (qs.s_n, qs.q_n, qs.l_n) == (0.0, 0.0, 0.0)


def test_quad_stats_identity_s_equals_q_plus_2l():
    data = sample_gaussian(correlation(BIV, 0.5), 300, 21)
    scores = normal_scores(column_ranks(data))
    a = a_matrices(BIV, 0.5, "equal").matrices[0]
    qs = quad_diff_stats(data, scores, a)
    assert qs.s_n == pytest.approx(qs.q_n + 2 * qs.l_n, rel=1e-9)


def test_quad_stats_shape_mismatch():
    with pytest.raises(DataError):
        quad_diff_stats(np.zeros((3, 2)), np.zeros((4, 2)), np.zeros((2, 2)))


def test_mc_report_predictions_at_independence():
    rep = mc_lan_experiment(BIV, 0.0, 1.0, "equal", n=100, replicates=100,
                            master_seed=7)
    assert rep.predicted_mean == pytest.approx(-0.5)
    assert rep.predicted_variance == pytest.approx(1.0)


def test_mc_report_margin_invariance_of_lambda_hat():
    kwargs = dict(n=200, replicates=100, master_seed=99)
    base = mc_lan_experiment(BIV, 0.5, 1.0, "equal", **kwargs)
    moved = mc_lan_experiment(
        BIV, 0.5, 1.0, "equal", margins=MarginSpec.uniform("exponential"), **kwargs
    )
    lh_base = [smp.lambda_hat for smp in base.samples]
    lh_moved = [smp.lambda_hat for smp in moved.samples]
    assert lh_base == lh_moved
    ly_base = [smp.lambda_y for smp in base.samples]
    ly_moved = [smp.lambda_y for smp in moved.samples]
    assert ly_base != ly_moved


def test_mc_report_rejects_few_replicates():
    with pytest.raises(DomainError):
        mc_lan_experiment(BIV, 0.5, 1.0, "equal", n=100, replicates=50,
                          master_seed=1)


def test_mc_report_csv_round_trip():
    rep = mc_lan_experiment(BIV, 0.3, 1.0, "equal", n=100, replicates=100,
                            master_seed=12)
    lines = rep.replicates_csv().strip().split("\n")
    assert lines[0] == "rep,seed,lambda_y,lambda_hat,diff,s_n,q_n,l_n"
    assert len(lines) == 101
    first = lines[1].split(",")
    assert float(first[2]) == rep.samples[0].lambda_y
    assert float(first[4]) == pytest.approx(
        rep.samples[0].lambda_y - rep.samples[0].lambda_hat
    )
    summary = rep.summary_csv()
    assert summary.startswith("statistic,value\n")
    assert "predicted_variance" in summary


def test_mc_report_statistics_recomputable():
    rep = mc_lan_experiment(AR1_4, 0.5, 1.0, "unequal", n=200, replicates=100,
                            master_seed=314)
    lh = np.array([smp.lambda_hat for smp in rep.samples])
    assert rep.mean_lambda_hat == pytest.approx(lh.mean(), rel=1e-12)
    assert rep.var_lambda_hat == pytest.approx(lh.var(ddof=1), rel=1e-12)
    diffs = np.abs([smp.diff for smp in rep.samples])
    assert rep.abs_diff_quantiles[0.5] == pytest.approx(np.median(diffs))
