import numpy as np
import pytest

import ratecorr as rc
from ratecorr import simulate as sim
from ratecorr.analytic import NoiseSpec, covariance_report
from ratecorr.errors import ConfigError, NotPSD, NumericalBlowup
from ratecorr.propagator import build_propagator

TABLE1_NOISE = dict(c1=0.3, c2=0.4, c3=0.5)


def _config(**kw):
    base = dict(
        topology=rc.cycle(5),
        params=rc.NetworkParams(1.0, 1.0, 0.0, rc.SigmoidParams()),
        noise=NoiseSpec(s1=0.1, s2=0.1, s3=0.1, **TABLE1_NOISE),
        t_max=2.0, dt=0.1, n_trials=200, seed=0,
    )
    base.update(kw)
    return sim.SimConfig(**base)


# --- samplers ---------------------------------------------------------------

def test_brownian_increments_iid_when_uncorrelated():
    rng = sim.trial_rng(1, 0)
    d = sim.sample_brownian_increments(4, 0.0, 0.25, rng, steps=20000)
    assert d.shape == (20000, 4)
    assert abs(d.var() - 0.25) < 0.01
    c = np.corrcoef(d.T)
    assert np.abs(c - np.eye(4)).max() < 0.05


def test_brownian_increments_fully_correlated():
    rng = sim.trial_rng(1, 1)
    d = sim.sample_brownian_increments(5, 1.0, 0.1, rng, steps=50)
    assert np.ptp(d, axis=1).max() < 1e-12   # rank one: all coordinates equal


def test_brownian_increment_correlation_level():
    rng = sim.trial_rng(2, 0)
    d = sim.sample_brownian_increments(5, 0.3, 1.0, rng, steps=100_000)
    c = np.corrcoef(d.T)
    off = c[~np.eye(5, dtype=bool)]
    assert np.abs(off - 0.3).max() < 0.01


def test_negative_correlation_factor_route():
    rng = sim.trial_rng(3, 0)
    c_neg = -0.2
    d = sim.sample_brownian_increments(4, c_neg, 1.0, rng, steps=100_000)
    c = np.corrcoef(d.T)
    off = c[~np.eye(4, dtype=bool)]
    assert np.abs(off - c_neg).max() < 0.01
    with pytest.raises(NotPSD):
        sim.sample_brownian_increments(4, -0.5, 1.0, rng)   # below 1/(1-4)


def test_initial_conditions_sampler():
    rng = sim.trial_rng(4, 0)
    v = sim.sample_initial_conditions(6, 1.5, 0.0, 0.4, rng)
    np.testing.assert_allclose(v, 1.5, atol=1e-15)
    rng = sim.trial_rng(4, 1)
    draws = np.stack([sim.sample_initial_conditions(6, -1.0, 2.0, 0.0, sim.trial_rng(4, t))
                      for t in range(20000)])
    assert abs(draws.mean() + 1.0) < 0.05
    assert abs(draws.var() - 4.0) < 0.1


def test_weight_perturbation_masked_and_correlated():
    adj = rc.realize(rc.GraphProduct("cartesian", (rc.Cycle(10), rc.Path(2))), 1.0)
    rng = sim.trial_rng(5, 0)
    w1 = sim.sample_weight_perturbation(adj, 1.0, rng)
    vals = w1[adj.mask]
    assert np.ptp(vals) < 1e-12               # c3 = 1: all connections identical
    assert np.all(w1[~adj.mask] == 0.0)
    slots = []
    for t in range(30000):
        w = sim.sample_weight_perturbation(adj, 0.5, sim.trial_rng(5, t))
        slots.append(w[adj.mask][:6])
    slots = np.stack(slots)
    c = np.corrcoef(slots.T)
    off = c[~np.eye(6, dtype=bool)]
    assert np.abs(off - 0.5).max() < 0.02
    assert np.abs(slots.var(axis=0) - 1.0).max() < 0.03


# --- run mechanics ----------------------------------------------------------

def test_same_seed_bitwise_identical():
    a = sim.run(_config())
    b = sim.run(_config())
    assert np.array_equal(a.mean, b.mean)
    assert np.array_equal(a.cov, b.cov)
    assert np.array_equal(a.var, b.var)
    assert np.nanmax(np.abs(a.corr)) <= 1.0 + 1e-9


def test_trials_independent_of_batch_size():
    # trajectory of trial k depends only on (seed, k), not on n_trials
    small = sim.run(_config(n_trials=3, tuples=((0, 1),)))
    large = sim.run(_config(n_trials=8, tuples=((0, 1),)))
    for node in (0, 1):
        np.testing.assert_array_equal(small.tuple_samples[node],
                                      large.tuple_samples[node][:3])


def test_stationary_run_stays_exactly_put():
    cfg = _config(noise=NoiseSpec(), n_trials=2, record_first_trajectory=True)
    stats = sim.run(cfg)
    (mu,) = rc.stationary_state(cfg.params)
    assert np.abs(stats.first_trajectory - mu).max() <= 1e-12


def test_order1_matches_linear_recursion_exactly():
    # s2 only, decoupled: V_n = mu + s2 Y2(0) (1 - dt/tau)^n, bit for bit
    params = rc.NetworkParams(2.0, 0.0, 0.5, rc.SigmoidParams())
    cfg = sim.SimConfig(topology=rc.Circulant(3, frozenset()), params=params,
                        noise=NoiseSpec(s2=0.3), t_max=1.0, dt=0.1, n_trials=1,
                        seed=9, order="order1", record_first_trajectory=True)
    stats = sim.run(cfg)
    mu = 2.0 * 0.5
    y0 = (stats.first_trajectory[0] - mu) / 0.3
    n_steps = np.arange(11)
    decay = (1.0 - 0.1 / 2.0) ** n_steps
    expected = mu + 0.3 * np.outer(decay, y0)
    assert np.abs(stats.first_trajectory - expected).max() <= 1e-10
    # the geometric factor approximates exp(-t/tau) at first order in dt
    assert np.abs(decay - np.exp(-n_steps * 0.1 / 2.0)).max() < 0.01


def test_y4_y5_deterministic_across_trials():
    from ratecorr._backend import kernels
    n, steps = 4, 30
    jeff = 0.2 * rc.realize(rc.cycle(4), 1.0).matrix
    z_src = 0.5 * np.exp(-np.arange(steps) * 0.1)
    h_src = np.sin(2 * np.pi * np.arange(steps) * 0.1)
    outs = []
    for trial in range(2):
        rng = sim.trial_rng(11, trial)
        y20 = rng.standard_normal(n)
        noise = np.sqrt(0.1) * rng.standard_normal((steps, n))
        traj, blow = kernels.order1_path(y20, jeff, np.zeros(n), z_src, h_src,
                                         1.0, 0.1, noise, 1e6)
        assert blow == 0
        outs.append(traj)
    np.testing.assert_array_equal(outs[0][:, 3], outs[1][:, 3])   # Y4
    np.testing.assert_array_equal(outs[0][:, 4], outs[1][:, 4])   # Y5
    assert np.abs(outs[0][:, 0] - outs[1][:, 0]).max() > 0.0      # Y1 stochastic


def test_order1_covariance_matches_analytic(cl10, table1, mu1, cl10_handle):
    noise = NoiseSpec(s1=0.01, s2=0.1, s3=0.1, **TABLE1_NOISE)
    cfg = sim.SimConfig(topology=cl10, params=table1, noise=noise, t_max=1.0,
                        dt=0.1, n_trials=4000, seed=21, order="order1")
    stats = sim.run(cfg)
    rep = covariance_report(cl10_handle, noise, 0, 1, stats.times)
    k = -1   # t = 1
    assert abs(stats.cov[k, 0] - rep.cov[k]) <= 5 * stats.sem_cov[k, 0]
    assert abs(stats.var[k, 0] - rep.var_i[k]) <= 5 * stats.sem_var[k, 0]


def test_order2_reduces_to_order1_without_modulation(cl10, table1):
    noise = NoiseSpec(s1=0.01, s2=0.1, s3=0.1, **TABLE1_NOISE)
    kw = dict(topology=cl10, params=table1, noise=noise, t_max=5.0, dt=0.1,
              n_trials=1500, seed=33)
    s1 = sim.run(sim.SimConfig(order="order1", **kw))
    s2 = sim.run(sim.SimConfig(order="order2", **kw))
    assert np.nanmax(np.abs(s1.corr - s2.corr)) <= 0.02


def test_order2_tracks_exact_with_strong_modulation(cl10, table1):
    # weight and input modulation at full strength, matched seeds
    noise = NoiseSpec(s1=0.01, s2=0.1, s3=0.1, s4=1.0, s5=1.0, **TABLE1_NOISE)
    kw = dict(topology=cl10, params=table1, noise=noise, t_max=5.0, dt=0.1,
              n_trials=2500, seed=8, z_kind="exp_decay_J", h_kind="sine_uniform")
    exact = sim.run(sim.SimConfig(order="exact", **kw))
    second = sim.run(sim.SimConfig(order="order2", **kw))
    z = np.abs(exact.corr[1:, 0] - second.corr[1:, 0]) \
        / np.hypot(exact.sem_corr[1:, 0], second.sem_corr[1:, 0])
    assert np.nanquantile(z, 0.95) <= 5.0


def test_order2_silent_without_noise(cl10, table1):
    cfg = sim.SimConfig(topology=cl10, params=table1, noise=NoiseSpec(),
                        t_max=1.0, dt=0.1, n_trials=2, seed=1, order="order2",
                        record_first_trajectory=True)
    stats = sim.run(cfg)
    (mu,) = rc.stationary_state(table1)
    assert np.abs(stats.first_trajectory - mu).max() <= 1e-12


def test_cross_source_independence(cl10, table1, mu1):
    # Y1 (Brownian) and Y2 (initial) and Y3 (weights) are pairwise independent
    from ratecorr._backend import kernels
    from ratecorr.neuron import sigmoid, sigmoid_d1
    adj = rc.realize(cl10, 1.0)
    jeff = float(sigmoid_d1(mu1, table1.sigmoid)) * adj.matrix
    smu = float(sigmoid(mu1, table1.sigmoid))
    steps = 10
    y1 = np.empty(3000)
    y2 = np.empty(3000)
    y3 = np.empty(3000)
    zeros = np.zeros(steps)
    for trial in range(3000):
        rng = sim.trial_rng(77, trial)
        y20 = rng.standard_normal(20)
        w = sim.sample_weight_perturbation(adj, 0.5, rng) / 3.0
        noise = np.sqrt(0.1) * rng.standard_normal((steps, 20))
        traj, _ = kernels.order1_path(y20, jeff, smu * w.sum(axis=1), zeros,
                                      zeros, 1.0, 0.1, noise, 1e6)
        y1[trial], y2[trial], y3[trial] = traj[-1, 0, 0], traj[-1, 1, 1], traj[-1, 2, 0]

    def z_corr(a, b):
        r = np.corrcoef(a, b)[0, 1]
        return abs(r) * np.sqrt(len(a) - 3)

    assert z_corr(y1, y2) < 3.0
    assert z_corr(y2, y3) < 3.0


def test_perturbative_error_shrinks_with_sigma(table1):
    gaps = {}
    for s in (0.2, 0.02):
        noise = NoiseSpec(s1=s, s2=s, s3=s, **TABLE1_NOISE)
        kw = dict(topology=rc.cycle(5), params=table1, noise=noise, t_max=5.0,
                  dt=0.1, n_trials=2000, seed=13)
        ex = sim.run(sim.SimConfig(order="exact", **kw))
        o1 = sim.run(sim.SimConfig(order="order1", **kw))
        gaps[s] = np.nanmax(np.abs(ex.corr - o1.corr))
    assert gaps[0.02] < gaps[0.2]


def test_half_step_consistency(table1):
    noise = NoiseSpec(s1=0.1, s2=0.1, s3=0.1, **TABLE1_NOISE)
    kw = dict(topology=rc.cycle(5), params=table1, noise=noise, t_max=2.0,
              n_trials=2000, seed=3)
    coarse = sim.run(sim.SimConfig(dt=0.1, **kw))
    fine = sim.run(sim.SimConfig(dt=0.05, **kw))
    # compare the shared grid points
    z = np.abs(coarse.mean - fine.mean[::2]) \
        / np.hypot(coarse.sem_mean, fine.sem_mean[::2])
    assert np.nanmax(z) < 3.0


def test_numerical_blowup_reported():
    # middle stationary branch of a steep sigmoid is linearly unstable
    params = rc.NetworkParams(1.0, 1.0, 0.0, rc.SigmoidParams(1.0, 10.0, 0.5))
    cfg = sim.SimConfig(topology=rc.complete(4), params=params,
                        noise=NoiseSpec(s1=1.0), t_max=60.0, dt=0.1,
                        n_trials=1, seed=0, order="order1", mu_branch=1)
    with pytest.raises(NumericalBlowup) as err:
        sim.run(cfg)
    assert err.value.trial == 0
    assert err.value.step is not None


def test_branch_must_be_chosen_when_ambiguous():
    params = rc.NetworkParams(1.0, 1.0, 0.0, rc.SigmoidParams(1.0, 10.0, 0.5))
    with pytest.raises(ConfigError):
        sim.run(_config(params=params, n_trials=1))


def test_irregular_topology_simulates_with_flag(table1):
    ladder = rc.GraphProduct("cartesian", (rc.Path(6), rc.Path(2)))
    cfg = _config(topology=ladder, allow_irregular=True, n_trials=20)
    stats = sim.run(cfg)
    assert np.isfinite(stats.mean).all()
    with pytest.raises(rc.errors.IrregularDegree):
        sim.run(_config(topology=ladder, n_trials=5))


def test_estimate_higher_order_reduces_to_pearson():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((5000, 2))
    x[:, 1] = 0.6 * x[:, 0] + 0.8 * x[:, 1]
    est, se = sim.estimate_higher_order(x)
    want = np.corrcoef(x.T)[0, 1]
    assert abs(est - want) < 1e-12
    assert 0 < se < 0.05


def test_estimate_higher_order_perfect_duplication():
    rng = np.random.default_rng(1)
    col = rng.standard_normal(2000)
    est, _ = sim.estimate_higher_order(np.stack([col, col, col, col], axis=1))
    assert abs(est - 1.0) < 1e-12


def test_higher_order_sample_matches_closed_form(table1, mu1):
    # complete graph at first order: Corr_4 = Corr_2^2, Corr_3 = 0
    noise = NoiseSpec(s1=0.1, s2=0.1, s3=0.1, **TABLE1_NOISE)
    cfg = sim.SimConfig(topology=rc.complete(10), params=table1, noise=noise,
                        t_max=1.0, dt=0.1, n_trials=4000, seed=101,
                        order="order1", tuples=((0, 1, 2), (0, 1, 2, 3)))
    stats = sim.run(cfg)
    t_idx = len(stats.times) - 1
    est3, se3 = sim.estimate_higher_order(stats.tuple_samples_at((0, 1, 2), t_idx))
    assert abs(est3) <= 3 * se3
    est4, se4 = sim.estimate_higher_order(stats.tuple_samples_at((0, 1, 2, 3), t_idx))
    est2, se2 = sim.estimate_higher_order(stats.tuple_samples_at((0, 1), t_idx))
    gate = 3 * np.hypot(se4, 2 * abs(est2) * se2)
    assert abs(est4 - est2 ** 2) <= gate
