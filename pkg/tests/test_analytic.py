import numpy as np
import pytest
from conftest import dense_phi

import ratecorr as rc
from ratecorr.analytic import (
    NoiseSpec,
    circulant_chaos_covariance,
    correlation,
    cov_term_initial,
    cov_term_noise,
    cov_term_weights,
    covariance,
    covariance_report,
    higher_order_correlation_fc,
    variance,
)
from ratecorr.errors import (
    ConfigError,
    DegenerateVariance,
    NotFullyConnected,
    ZeroInDegree,
)
from ratecorr.neuron import sigmoid, sigmoid_d1, stationary_state
from ratecorr.propagator import build_propagator

FIG6 = NoiseSpec(s1=0.01, s2=0.1, s3=0.1, c1=0.3, c2=0.4, c3=0.5)


def test_terms_at_time_zero(cl10_handle):
    assert cov_term_noise(cl10_handle, 0, 1, 0.0, 0.3) == 0.0
    assert abs(cov_term_initial(cl10_handle, 0, 1, 0.0, 0.4) - 0.4) < 1e-12
    assert abs(cov_term_initial(cl10_handle, 0, 0, 0.0, 0.4) - 1.0) < 1e-12
    assert cov_term_weights(cl10_handle, 0, 1, 0.0, 0.5) == 0.0


def test_decoupled_initial_term_decays():
    params = rc.NetworkParams(1.5, 0.0, 0.0, rc.SigmoidParams())
    h = build_propagator(rc.Circulant(5, frozenset()), params, 0.0)
    for t in (0.0, 1.0, 4.0):
        decay = np.exp(-2 * t / 1.5)
        assert abs(cov_term_initial(h, 2, 2, t, 0.4) - decay) < 1e-12
        assert abs(cov_term_initial(h, 0, 1, t, 0.4) - 0.4 * decay) < 1e-12


def test_fully_connected_c1_closed_form(table1, mu1):
    # the correlated-noise part has an explicit two-exponential closed form
    n = 30
    h = build_propagator(rc.complete(n), table1, mu1)
    sp = sigmoid_d1(mu1, table1.sigmoid)
    alpha = 1.0 / table1.tau - table1.lam * sp
    beta = 1.0 / table1.tau + table1.lam * sp / (n - 1)
    c1 = 0.3
    for t in (0.5, 1.0, 3.0):
        off = c1 / 2 * ((1 - 1 / n) / alpha * (1 - np.exp(-2 * alpha * t))
                        + (1 / n) / beta * (1 - np.exp(-2 * beta * t)))
        diag = c1 / 2 * (1 - 1 / n) * ((1 - np.exp(-2 * alpha * t)) / alpha
                                       - (1 - np.exp(-2 * beta * t)) / beta)
        got_off = cov_term_noise(h, 0, 1, t, c1) - cov_term_noise(h, 0, 1, t, 0.0)
        got_diag = cov_term_noise(h, 0, 0, t, c1) - cov_term_noise(h, 0, 0, t, 0.0)
        assert abs(got_off - off) < 1e-12
        assert abs(got_diag - diag) < 1e-12


def quad_terms(spec, params, mu, i, j, t, noise, du=1e-3):
    """Trapezoidal quadrature of the defining double integrals (oracle)."""
    us = np.arange(0.0, t + du / 2, du)
    phis = np.stack([dense_phi(spec, params, mu, u) for u in us])
    diag1 = np.trapezoid(np.einsum("uk,uk->u", phis[:, i, :], phis[:, j, :]), us)
    full1 = np.trapezoid(phis[:, i, :].sum(axis=1) * phis[:, j, :].sum(axis=1), us)
    t1 = diag1 + noise.c1 * (full1 - diag1)
    pt = dense_phi(spec, params, mu, t)
    diag2 = float(pt[i] @ pt[j])
    t2 = diag2 + noise.c2 * (pt[i].sum() * pt[j].sum() - diag2)
    pint = np.trapezoid(phis, us, axis=0)
    m = rc.realize(spec, params.lam).m
    smu2 = float(sigmoid(mu, params.sigmoid)) ** 2
    diag3 = float(pint[i] @ pint[j])
    t3 = smu2 * (diag3 / m + noise.c3 * (pint[i].sum() * pint[j].sum() - diag3 / m))
    return t1, t2, t3


def test_cl10_terms_vs_quadrature(cl10, table1, mu1, cl10_handle):
    t = 1.0
    q1, q2, q3 = quad_terms(cl10, table1, mu1, 0, 1, t, FIG6)
    assert abs(cov_term_noise(cl10_handle, 0, 1, t, FIG6.c1) - q1) < 1e-6
    assert abs(cov_term_initial(cl10_handle, 0, 1, t, FIG6.c2) - q2) < 1e-10
    assert abs(cov_term_weights(cl10_handle, 0, 1, t, FIG6.c3) - q3) < 1e-6


def test_torus_initial_term_vs_dense(table1, mu1):
    spec = rc.GraphProduct("cartesian", (rc.Cycle(4), rc.Cycle(4)))
    h = build_propagator(spec, table1, mu1)
    t = 0.5
    pt = dense_phi(spec, table1, mu1, t)
    for (i, j) in ((0, 0), (0, 1), (3, 9)):
        diag = float(pt[i] @ pt[j])
        want = diag + 0.4 * (pt[i].sum() * pt[j].sum() - diag)
        assert abs(cov_term_initial(h, i, j, t, 0.4) - want) < 1e-10


def test_zero_noise_gives_zero_covariance(cl10_handle):
    noise = NoiseSpec()
    for t in (0.0, 1.0, 5.0):
        assert covariance(cl10_handle, noise, 0, 1, t) == 0.0


def test_correlation_at_zero_equals_c2(cl10_handle):
    assert abs(correlation(cl10_handle, FIG6, 0, 1, 0.0) - 0.4) < 1e-12


def test_degenerate_variance_raises(cl10_handle):
    with pytest.raises(DegenerateVariance):
        correlation(cl10_handle, NoiseSpec(s1=0.1), 0, 1, 0.0)


def test_zero_indegree_weight_term():
    params = rc.NetworkParams(1.0, 0.0, 0.0, rc.SigmoidParams())
    h = build_propagator(rc.Circulant(4, frozenset()), params, 0.0)
    with pytest.raises(ZeroInDegree):
        cov_term_weights(h, 0, 1, 1.0, 0.0)
    # but a noise spec with s3 = 0 never touches the weight term
    assert covariance(h, NoiseSpec(s1=0.1), 0, 1, 1.0) == pytest.approx(0.0, abs=1e-15)


def test_exchange_invariance_over_lags(table1, mu1):
    n = 12
    h = build_propagator(rc.Circulant(n, frozenset({1, 3})), table1, mu1)
    t = 1.0
    for lag in (1, 3, 5):
        vals = [covariance(h, FIG6, i, (i + lag) % n, t) for i in range(n)]
        assert np.ptp(vals) <= 1e-10


def test_covariance_symmetry(cl10_handle):
    for (i, j) in ((0, 1), (2, 13), (5, 6)):
        assert covariance(cl10_handle, FIG6, i, j, 1.3) \
            == covariance(cl10_handle, FIG6, j, i, 1.3)


def test_correlation_bounded(cl10_handle):
    ts = np.arange(0.0, 10.01, 0.1)
    rep = covariance_report(cl10_handle, FIG6, 0, 1, ts)
    assert np.nanmax(np.abs(rep.corr)) <= 1.0 + 1e-12


def test_report_decomposition_sums(cl10_handle):
    ts = np.array([0.0, 0.7, 2.0])
    rep = covariance_report(cl10_handle, FIG6, 0, 1, ts)
    np.testing.assert_allclose(
        rep.cov, rep.term_noise + rep.term_initial + rep.term_weights, atol=1e-15)
    np.testing.assert_allclose(rep.var_i, rep.var_j, atol=1e-12)


def test_full_covariance_matrix_psd(cl10_handle):
    n = cl10_handle.n
    t = 1.0
    cov = np.array([[covariance(cl10_handle, FIG6, i, j, t) for j in range(n)]
                    for i in range(n)])
    evals = np.linalg.eigvalsh(cov)
    assert evals.min() >= -1e-10


def test_chaos_covariance_matches_generic(table1, mu1):
    noise = NoiseSpec(s1=0.1, s2=0.1, s3=0.1)
    for nu, n in ((1, 10), (2, 9), (5, 10)):
        spec = rc.Circulant(n, frozenset(range(1, nu + 1)))
        h = build_propagator(spec, table1, mu1)
        for t in (0.5, 1.0, 2.5):
            a = circulant_chaos_covariance(0, 1, t, nu, n, noise, h)
            b = covariance(h, noise, 0, 1, t)
            assert abs(a - b) <= 1e-10


def test_chaos_covariance_requires_uncorrelated(cl10_handle):
    with pytest.raises(ConfigError):
        circulant_chaos_covariance(0, 1, 1.0, 1, 20, FIG6, cl10_handle)


def test_cycle_correlation_never_vanishes(table1, mu1):
    # nu = 1 keeps neighbors correlated at any size
    noise = NoiseSpec(s1=0.1, s2=0.1, s3=0.1)
    n = 1000
    h = build_propagator(rc.cycle(n), table1, mu1)
    c = circulant_chaos_covariance(0, 1, 1.0, 1, n, noise, h)
    v = circulant_chaos_covariance(0, 0, 1.0, 1, n, noise, h)
    assert c / v > 0.05


def test_fully_connected_correlation_decays_with_n(table1, mu1):
    noise = NoiseSpec(s1=0.1, s2=0.1, s3=0.1)
    prev = None
    for n in (8, 16, 32, 64):
        h = build_propagator(rc.complete(n), table1, mu1)
        c = circulant_chaos_covariance(0, 1, 1.0, n // 2, n, noise, h)
        v = circulant_chaos_covariance(0, 0, 1.0, n // 2, n, noise, h)
        corr = c / v
        if prev is not None:
            assert corr < prev
        prev = corr


def test_input_damping_is_monotone():
    # strong baseline input flattens the sigmoid slope and decorrelates
    noise = NoiseSpec(s1=0.1, s2=0.1, s3=0.1)
    ts = np.arange(0.1, 10.01, 0.1)
    peaks = {}
    for i_base in (0.0, 5.0, -5.0):
        params = rc.NetworkParams(1.0, 1.0, i_base, rc.SigmoidParams())
        (mu,) = stationary_state(params)
        h = build_propagator(rc.cycle(5), params, mu)
        rep = covariance_report(h, noise, 0, 1, ts)
        peaks[i_base] = np.abs(rep.corr).max()
    assert peaks[5.0] < peaks[0.0]
    assert peaks[-5.0] < peaks[0.0]


def test_higher_order_fully_connected(table1, mu1):
    h = build_propagator(rc.complete(10), table1, mu1)
    noise = NoiseSpec(s1=0.1, s2=0.1, s3=0.1, c1=0.3, c2=0.4, c3=0.5)
    t = 1.0
    pair = correlation(h, noise, 0, 1, t)
    assert higher_order_correlation_fc(h, noise, 2, t) == pytest.approx(pair, abs=1e-14)
    assert higher_order_correlation_fc(h, noise, 3, t) == 0.0
    assert higher_order_correlation_fc(h, noise, 5, t) == 0.0
    assert higher_order_correlation_fc(h, noise, 4, t) == pytest.approx(pair ** 2,
                                                                        abs=1e-14)


def test_higher_order_needs_complete_graph(cl10_handle):
    with pytest.raises(NotFullyConnected):
        higher_order_correlation_fc(cl10_handle, FIG6, 4, 1.0)


def test_noise_spec_validation():
    with pytest.raises(ConfigError):
        NoiseSpec(s1=-0.1)
    NoiseSpec(c1=0.3).validate(5)
    with pytest.raises(ConfigError):
        NoiseSpec(c1=-0.5).validate(5)   # below 1/(1-5)
    with pytest.raises(ConfigError):
        NoiseSpec(c2=1.2).validate(5)
    with pytest.raises(ConfigError):
        NoiseSpec(c3=-0.1).validate(5, n_connections=100)
