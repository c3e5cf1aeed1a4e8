import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rwre.ctime import (LocalRates, RateFunction, local_rate_samples, occupation_law, partition_function,
                        sample_mu_alpha, simulate_zero_range, zero_range_env, zrp_slowed_walkers,
                        ZeroRangeEnvironment)
from rwre.errors import ConfigError


@settings(max_examples=40, deadline=None)
@given(st.floats(0.01, 0.95))
def test_constant_rate_gives_geometric_law(alpha):
    pmf, Z, K = occupation_law({"kind": "constant"}, alpha)
    assert Z == pytest.approx(1 / (1 - alpha), rel=1e-10)
    k = np.arange(K + 1)
    assert np.allclose(pmf, (1 - alpha) * alpha**k, rtol=1e-10, atol=0)
    assert 1 - pmf.sum() < 1e-11


def test_linear_rate_gives_poisson_law():
    pmf, Z, K = occupation_law({"kind": "linear", "rate": 2.0}, 3.0)
    assert Z == pytest.approx(math.exp(1.5), rel=1e-12)
    assert pmf[4] == pytest.approx(math.exp(-1.5) * 1.5**4 / 24, rel=1e-12)


def test_table_rate_function():
    g = RateFunction.from_spec({"kind": "table", "values": [0.5, 1.0, 2.0]})
    assert g(np.arange(6)).tolist() == [0.0, 0.5, 1.0, 2.0, 2.0, 2.0]
    assert g.alpha_star == 2.0
    assert RateFunction.from_spec(g.to_spec()) == g
    assert partition_function(g, 1.0) == pytest.approx(1 + 2 + 2 + 2 * sum(0.5**j for j in range(1, 200)),
                                                       rel=1e-12)
    with pytest.raises(ConfigError):
        RateFunction("table", (1.0, 0.5))


@pytest.mark.parametrize("alpha", [1.0, 1.5, 0.0])
def test_alpha_outside_range_is_rejected(alpha):
    with pytest.raises(ConfigError):
        occupation_law({"kind": "constant"}, alpha)


def test_initial_state_has_the_right_density():
    st_ = sample_mu_alpha({"kind": "constant"}, 0.5, 64, 2, seed=3)
    eta = st_.eta
    # geometric(1/2): mean 1, variance 2
    assert abs(eta.mean() - 1.0) < 4 * math.sqrt(2 / eta.size)
    assert abs((eta == 0).mean() - 0.5) < 4 * math.sqrt(0.25 / eta.size)


def test_particles_are_conserved_and_log_replays():
    st0 = sample_mu_alpha({"kind": "constant"}, 0.4, 10, 2, seed=1)
    times, src, dst, final = simulate_zero_range(st0, 50.0, seed=2)
    assert final.particles == st0.particles
    assert np.all(np.diff(times) >= 0) and times[-1] <= 50.0
    eta = st0.eta.copy()
    np.subtract.at(eta, src, 1)
    np.add.at(eta, dst, 1)
    assert np.array_equal(eta, final.eta)
    # every move is between torus neighbours
    a, b = np.unravel_index(src, (10, 10)), np.unravel_index(dst, (10, 10))
    dist = np.minimum(np.abs(a[0] - b[0]) % 10, (-np.abs(a[0] - b[0])) % 10) + \
        np.minimum(np.abs(a[1] - b[1]) % 10, (-np.abs(a[1] - b[1])) % 10)
    assert np.all(dist == 1)


def test_product_measure_is_stationary():
    alpha, L = 0.5, 24
    empty = []
    for seed in range(4):
        st0 = sample_mu_alpha({"kind": "constant"}, alpha, L, 2, seed)
        _, _, _, final = simulate_zero_range(st0, 1e3, seed)
        empty.append((final.eta == 0).mean())
    n = 4 * L * L
    assert abs(np.mean(empty) - (1 - alpha)) < 4 * math.sqrt(alpha * (1 - alpha) / n)


def test_environment_occupation_matches_replay():
    st0 = sample_mu_alpha({"kind": "constant"}, 0.6, 6, 2, seed=5)
    times, src, dst, _ = simulate_zero_range(st0, 40.0, seed=5)
    u = {"base": 1.0, "self": 0.5, "axis": 0.25, "cap": 3}
    # small snapshot spacing so the queries cross several snapshots
    env = ZeroRangeEnvironment(st0, u, times, src, dst, 40.0, 5, every=64)
    assert env.times.size > 256
    for t in (0.0, 3.3, 17.0, 39.9):
        k = np.searchsorted(env.times, t, side="right")
        eta = env.state0.eta.copy()
        np.subtract.at(eta, env.src[:k], 1)
        np.add.at(eta, env.dst[:k], 1)
        occ = env.occupation([[2, 3]], t)[0]
        grid = eta.reshape(6, 6)
        assert occ.tolist() == [grid[2, 3], grid[3, 3], grid[1, 3], grid[2, 4], grid[2, 2]]
        R = env.rates([[2, 3]], t)[0]
        want = 1.0 + 0.5 * min(grid[2, 3], 3) + 0.25 * (min(grid[3, 3], 3) + min(grid[1, 3], 3))
        assert R[0] == R[1] == pytest.approx(want)
    assert env.next_breakpoint([[0, 0]], 0.0)[0] == env.times[0]


def test_local_rates():
    u = LocalRates.from_spec({"base": 1.0, "self": 0.5, "axis": 0.25, "cap": 4})
    assert u.evaluate(10, 1, 2) == pytest.approx(1 + 2 + 0.75)
    assert u.max_rate == pytest.approx(1 + 4 * 1.0)
    assert LocalRates.from_spec(u.to_spec()) == u
    with pytest.raises(ConfigError):
        LocalRates(base=0.0)
    R = local_rate_samples({"kind": "constant"}, 0.5, u, 1000, seed=1)
    assert R.shape == (1000, 4) and np.all(R[:, 0] == R[:, 1]) and np.all(R >= 1.0) and np.all(R <= u.max_rate)


def test_unit_local_rates_give_exact_clock():
    # u = 1 makes every walker the homogeneous rate-1 walk: upsilon = 4, T_t = t / 5
    res = zrp_slowed_walkers(8, {"kind": "constant"}, 0.5, {"base": 1.0}, 200.0, 20, seed=3)
    assert res.conserved
    assert np.allclose(res.T, res.checkpoints[None, :] / 5, rtol=1e-12)
    assert res.report().limit == pytest.approx(0.2, rel=1e-12)


def test_zero_range_env_wrapper():
    env = zero_range_env(5, {"kind": "constant"}, 0.5, {"base": 2.0}, 10.0, seed=1)
    assert env.final_state.particles == env.state0.particles
    assert np.all(env.rates([[0, 0], [3, 4]], 5.0) == 2.0)
    assert env.descriptor()["params"]["L"] == 5
