import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from oracles import brute_transition_law
from rwre.env import JumpRange, make_counterexample, make_iid_balanced, uniform_environment
from rwre.errors import ConfigError
from rwre.walk import (covariance_from_samples, empirical_covariance, exit_time_constant, gaussianity_report,
                       n_step_kernel, sample_index, simulate, simulate_many, tau1_statistic, write_paths_csv)

NN1 = JumpRange.nearest_neighbor(1, lazy=True)
NN2 = JumpRange.nearest_neighbor(2, lazy=True)


def test_sample_index_inverse_cdf():
    W = np.array([[0.2, 0.3, 0.5]] * 5)
    u = np.array([0.0, 0.19, 0.2, 0.55, 0.999])
    assert sample_index(W, u).tolist() == [0, 0, 1, 2, 2]


def test_replicas_do_not_interact():
    env = make_iid_balanced(NN2, 4)
    both = simulate_many(env, 40, 9, [3, 7])
    alone = simulate_many(env, 40, 9, [7])
    assert np.array_equal(both[1], alone[0])
    assert np.array_equal(simulate_many(env, 40, 9, 500, chunk=64), simulate_many(env, 40, 9, 500))


def test_simulate_path_shape_and_steps():
    env = make_iid_balanced(NN2, 4)
    p = simulate(env, (2, -1), 30, seed=1, replica=5, start_time=3)
    assert p.horizon == 30 and p.start == ((2, -1), 3)
    assert np.array_equal(p.positions[0], [2, -1])
    assert np.abs(np.diff(p.positions, axis=0)).sum(axis=1).max() <= 1
    assert np.array_equal(p.positions[-1], simulate_many(env, 30, 1, [5], start=(2, -1), start_time=3)[0])
    buf = io.StringIO()
    write_paths_csv([p], buf)
    assert buf.getvalue().splitlines()[0] == "replica,step,x1,x2"


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31), st.integers(0, 20), st.integers(1, 6))
def test_n_step_kernel_matches_brute_force(seed, n0, m):
    env = make_iid_balanced(NN2, seed)
    ker = n_step_kernel(env, (1, -2), n0, m)
    law = brute_transition_law(lambda n, x: env.weights(n0 + n, x[None])[0], env.U.vectors, (1, -2), m)
    assert ker.total == pytest.approx(1.0, abs=1e-14)
    assert set(ker.as_dict()) == set(law)
    for y, q in law.items():
        assert ker.prob(y) == pytest.approx(q, abs=1e-15)


def test_simulation_matches_exact_kernel():
    env = make_iid_balanced(NN2, 17, floor=0.02)
    m, M = 4, 40_000
    ker = n_step_kernel(env, (0, 0), 0, m)
    X = simulate_many(env, m, 3, M)
    pts, counts = np.unique(X, axis=0, return_counts=True)
    emp = dict(zip(map(tuple, pts.tolist()), counts))
    expected = ker.probs * M
    observed = np.array([emp.get(tuple(p), 0) for p in ker.points.tolist()])
    big = expected >= 5
    chi2 = (((observed - expected) ** 2) / expected)[big].sum()
    assert stats.chi2.sf(chi2, big.sum() - 1) > 1e-3


def test_exit_constants():
    assert exit_time_constant(1, 1.0) == 89
    assert exit_time_constant(2, 1.0) == 355


def test_tau1_rejects_inadmissible_n():
    env = uniform_environment(2)
    with pytest.raises(ConfigError):
        tau1_statistic(env, 10, 355, 100, seed=0)
    with pytest.raises(ConfigError):
        tau1_statistic(env, 7, 1, 100, seed=0)


def _exact_tau_law_1d(N, hold):
    # absorbing chain on {-N..N}, lazy symmetric steps; returns P(tau = i) for i = 1..N^2 and P(tau > N^2)
    size = 2 * N + 1
    Q = np.zeros((size, size))
    for i in range(size):
        Q[i, i] = hold
        if i > 0:
            Q[i, i - 1] = (1 - hold) / 2
        if i < size - 1:
            Q[i, i + 1] = (1 - hold) / 2
    v = np.zeros(size)
    v[N] = 1.0
    surv = [1.0]
    for _ in range(N * N):
        v = v @ Q
        surv.append(v.sum())
    surv = np.array(surv)
    return surv[:-1] - surv[1:], surv[-1]


def test_tau1_matches_exact_absorbing_chain():
    N, c = 4, 3.0
    p_exit, p_tail = _exact_tau_law_1d(N, 1 / 3)
    rho = 1 - c / N**2
    exact = (p_exit * rho ** np.arange(1, N * N + 1)).sum() + p_tail * rho ** (N * N + 1)
    st_ = tau1_statistic(uniform_environment(1), N, c, 20_000, seed=4)
    assert abs(st_.mean - exact) < 4 * st_.stderr


def test_tau1_without_discount_is_one():
    st_ = tau1_statistic(make_iid_balanced(NN1, 2), 6, 0.0, 200, seed=1)
    assert st_.mean == 1.0 and st_.rho == 1.0 and st_.max_tau <= 37


def test_covariance_from_samples_against_numpy():
    rng = np.random.default_rng(0)
    S = rng.multivariate_normal([0, 0], [[2, 0.5], [0.5, 1]], size=5000)
    est = covariance_from_samples(S, scale=4.0)
    assert np.allclose(est.matrix, np.cov(S.T) / 4.0, atol=1e-14)
    with pytest.raises(ConfigError):
        covariance_from_samples(S[:1])


def test_uniform_covariance_is_isotropic():
    est = empirical_covariance(uniform_environment(2), 20_000, 50, seed=2)
    assert np.all(np.abs(est.matrix - np.diag([0.4, 0.4])) < 5 * est.stderr + 1e-3)


def test_counterexample_xi_prime_is_anisotropic():
    est = empirical_covariance(make_counterexample("xi_prime"), 20_000, 400, seed=3)
    assert est.matrix[1, 1] > est.matrix[0, 0] + 0.15


def test_gaussianity_report():
    rng = np.random.default_rng(1)
    assert gaussianity_report(rng.normal(size=(20_000, 2))).passed
    two_point = rng.choice([-1.0, 1.0], size=(20_000, 2))
    assert not gaussianity_report(two_point).passed
