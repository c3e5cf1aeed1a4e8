import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import exit_time_expectation_mc
from rwre.ctime import ConstantRates, ModulatedRates
from rwre.env import JumpRange, make_iid_balanced, uniform_environment
from rwre.errors import ConfigError, DomainError
from rwre.parabolic import ParabolicDomain, explicit_constant, step2_constant
from rwre.parabolic.battery import (grid_cases, grid_vectors, random_battery, random_environment, run_grid_case,
                                    summarize)
from rwre.parabolic.continuous import max_total_rate, uniformized_max_principle
from rwre.parabolic.domain import (adversarial_forcing, apply_L, forcing_norm, residual, solve_dirichlet, sup_ratio,
                                   verify_max_principle)

NN1 = JumpRange.nearest_neighbor(1, lazy=True)
NN2 = JumpRange.nearest_neighbor(2, lazy=True)


def test_explicit_constant_hand_values():
    # d = 2, #U = 5: (2^7 * 5 * 4 / (9 pi))^(1/3); d = 1, #U = 3: (16 / (2 * 2))^(1/2) = 2
    assert explicit_constant(NN2) == pytest.approx((2560 / (9 * math.pi)) ** (1 / 3), rel=1e-14)
    assert explicit_constant(NN2) == pytest.approx(4.4904, abs=1e-4)
    assert explicit_constant(NN1) == pytest.approx(2.0, rel=1e-14)
    assert step2_constant(NN2) == 400.0


def test_domain_boundary_of_a_cylinder():
    dom = ParabolicDomain.cylinder(uniform_environment(2), 1.0, 3)
    assert dom.nD == 5 * 3
    # boundary: the 8 points at l1-distance 2 at times 1 and 2, and the whole l1 ball of radius 2 at time 3
    later = dom.n[dom.nD:]
    assert np.sum(later == 3) == 13
    assert np.sum(later == 1) == 8 and np.sum(later == 2) == 8
    assert dom.T == 3 and dom.R == pytest.approx(math.sqrt(4))


def test_constant_boundary_gives_constant_solution():
    dom = ParabolicDomain.cylinder(make_iid_balanced(NN2, 1), 3.5, 6)
    u = dom.solve(np.zeros(dom.nD), np.full(dom.nB, 2.5))
    assert np.allclose(u, 2.5, atol=1e-14)
    assert residual(dom, u, np.zeros(dom.nD)) <= 1e-14


def test_apply_L_on_squared_norm():
    # for the uniform lazy walk E|x + Z|^2 - |x|^2 = E|Z|^2 = 4/5 everywhere
    dom = ParabolicDomain.box(uniform_environment(2), 3, 4)
    u = (dom.x.astype(float) ** 2).sum(axis=1)
    assert np.allclose(dom.apply_L(u), 0.8, atol=1e-14)
    assert apply_L(dom, u, (1, -2), 2) == pytest.approx(0.8, abs=1e-14)
    with pytest.raises(DomainError):
        apply_L(dom, u, (9, 9), 0)
    with pytest.raises(DomainError):
        dom.apply_L(u[:-1])


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31), st.floats(1.0, 5.0), st.integers(1, 10))
def test_solver_residual_and_linearity(seed, R, T):
    rng = np.random.default_rng(seed)
    env = random_environment(rng, seed)
    dom = ParabolicDomain.cylinder(env, R, T)
    f = rng.exponential(size=dom.nD)
    g = rng.normal(size=dom.nB)
    u = solve_dirichlet(dom, f, g)
    assert residual(dom, u, f) <= 1e-12
    assert np.allclose(dom.solve(2 * f), 2 * dom.solve(f), atol=1e-12)
    assert np.allclose(u, dom.solve(f) + dom.solve(np.zeros(dom.nD), g), atol=1e-12)
    batch = dom.solve(np.stack([f, 2 * f], axis=1), g)
    assert np.allclose(batch[:, 0], u, atol=1e-13)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31))
def test_comparison_principle(seed):
    rng = np.random.default_rng(seed)
    dom = ParabolicDomain.cylinder(random_environment(rng, seed), 3.0, 5)
    f1 = rng.normal(size=dom.nD)
    f2 = f1 + rng.exponential(size=dom.nD)
    g1 = rng.normal(size=dom.nB)
    g2 = g1 + rng.exponential(size=dom.nB)
    assert np.all(dom.solve(f1, g1) <= dom.solve(f2, g2) + 1e-12)


def test_unit_forcing_is_expected_exit_time():
    env = make_iid_balanced(NN2, 44, floor=0.02)
    R, T = 3.0, 12
    dom = ParabolicDomain.cylinder(env, R, T)
    u = dom.solve(np.ones(dom.nD))
    i0 = dom.index((0, 0), 0)[0]
    rng = np.random.default_rng(5)
    mean, se = exit_time_expectation_mc(rng, lambda n, x: env.weights(n, x[None])[0], env.U.vectors,
                                        lambda x: x @ x <= R * R, T, 4000)
    assert abs(u[i0] - mean) < 4 * se


def test_green_rows_and_matrix_agree():
    dom = ParabolicDomain.cylinder(make_iid_balanced(NN2, 3), 2.0, 4)
    G = dom.green()
    for i in (0, 3, dom.nD - 1):
        assert np.allclose(dom.green_row(i), G[i], atol=1e-14)
    f = np.random.default_rng(0).random(dom.nD)
    assert np.allclose(G @ f, dom.solve(f)[: dom.nD], atol=1e-13)


def test_adversarial_forcing_attains_the_row_norm():
    dom = ParabolicDomain.cylinder(make_iid_balanced(NN2, 7, floor=0.02), 3.0, 6)
    fa = adversarial_forcing(dom)
    u = dom.solve(fa)
    i0 = dom.index((0, 0), 0)[0]
    q = 3 / 2
    row = (dom.green_row(i0) * dom.eps_a())
    expected = (row**q).sum() ** (1 / q)
    assert u[i0] / forcing_norm(dom, fa) == pytest.approx(expected, rel=1e-10)
    assert sup_ratio(dom) >= expected - 1e-12


def test_verify_flags_non_subsolutions():
    dom = ParabolicDomain.cylinder(uniform_environment(2), 2.0, 3)
    f = np.ones(dom.nD)
    u = dom.solve(f)
    rep = verify_max_principle(dom, u, f)
    assert rep.subsolution and rep.passed and 0 < rep.normalized < 1
    assert rep.C == explicit_constant(NN2)
    # a non-subsolution is reported as failing
    bad = u.copy()
    bad[0] += 1.0
    assert not verify_max_principle(dom, bad, f).subsolution


def test_forcing_norm_uniform_value():
    dom = ParabolicDomain.cylinder(uniform_environment(2), 1.0, 2)
    eps_a = (2 / 625) ** (1 / 3)
    assert forcing_norm(dom, np.ones(dom.nD)) == pytest.approx((dom.nD / eps_a**3) ** (1 / 3), rel=1e-12)
    assert forcing_norm(dom, np.zeros(dom.nD)) == 0.0


def test_uniformized_checks_pass_for_constant_and_modulated_rates():
    U = JumpRange.nearest_neighbor(2, lazy=False)
    ct = ConstantRates(U)
    assert max_total_rate(ct, 2.0, 1.0) == pytest.approx(4.0)
    out = uniformized_max_principle(ct, 2.0, 1.0)
    assert [c.h for c in out] == pytest.approx([0.125, 0.0625, 0.03125])
    assert all(c.passed for c in out)
    mod = uniformized_max_principle(ModulatedRates(U, seed=2), 2.0, 1.0, f=lambda x, t: 1.0 + t)
    assert all(c.passed for c in mod)
    with pytest.raises(ConfigError):
        uniformized_max_principle(ct, 2.0, 1.0, f=-1.0)


def test_grid_vectors_are_the_balanced_eighths():
    vecs = grid_vectors(NN2)
    assert len(vecs) == 15
    for v in vecs:
        assert v.sum() == pytest.approx(1.0) and v[1] == v[2] and v[3] == v[4]
        assert np.allclose(v * 8, np.round(v * 8))


def test_small_batteries():
    res = random_battery(6, seed=3, R_max=4.0, T_max=6)
    s = summarize(res)
    assert s["instances"] == 6 and s["all_passed"] and s["max_residual"] <= 1e-12
    assert [r.instance for r in res] == list(range(6))
    cases = grid_cases(radii=(1,), times=(2,), period3_times=(), n_random=3)
    assert len(cases) == 15 + 15 * 15 + 15 * 14 + 3
    g = [run_grid_case(c) for c in cases[:20] + cases[-3:]]
    assert all(r.pure_pass and r.residual <= 1e-12 and r.normalized <= 1 for r in g)
