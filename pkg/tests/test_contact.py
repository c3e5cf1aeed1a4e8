import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import pick_area
from rwre.env import JumpRange, make_iid_balanced, uniform_environment
from rwre.errors import ConfigError
from rwre.parabolic import ParabolicDomain, contact_sets, lambda_inclusion_check, sample_cone, step2_bound_check
from rwre.parabolic.battery import random_environment
from rwre.parabolic.contact import constraints, gamma_plus_search, l_star, polytope_volume

NN2 = JumpRange.nearest_neighbor(2, lazy=True)


def _normalized_solution(seed, R=3.0, T=5):
    rng = np.random.default_rng(seed)
    dom = ParabolicDomain.cylinder(random_environment(rng, seed), R, T)
    f = np.where(rng.random(dom.nD) < 0.4, rng.exponential(size=dom.nD), 0.0)
    f[0] += 1.0
    return dom, dom.solve(f, -rng.random(dom.nB))


def test_zero_function_has_no_upper_contact_points_above_the_cone():
    dom = ParabolicDomain.cylinder(uniform_environment(2), 2.0, 3)
    cs = contact_sets(dom, np.zeros(dom.size))
    assert cs.feasible.all()
    assert cs.gamma_plus_indices.size == 0 and not cs.undecided


def test_single_peak_is_in_gamma_plus():
    dom = ParabolicDomain.cylinder(uniform_environment(2), 2.0, 3)
    u = np.zeros(dom.size)
    i0 = dom.index((0, 0), 0)[0]
    u[i0] = 1.0
    cs = contact_sets(dom, u)
    assert cs.gamma_plus_indices.tolist() == [i0]
    A, b = constraints(dom, u, i0)
    assert np.all(A @ cs.gp_witness[i0] <= b + 1e-9)


def test_polytope_volumes():
    square = np.array([[1.0, 0], [-1, 0], [0, 1], [0, -1]])
    assert polytope_volume(square, np.ones(4)) == pytest.approx(4.0, abs=1e-12)
    assert polytope_volume(square[:3], np.ones(3)) == np.inf
    assert polytope_volume(square, np.array([1.0, -1.0, 1.0, 1.0])) == 0.0
    assert polytope_volume(np.array([[1.0], [-1.0]]), np.array([2.0, 1.0])) == pytest.approx(3.0)
    # lattice triangle with vertices (0,0), (4,0), (0,3)
    tri = np.array([[-1.0, 0], [0, -1], [3, 4]])
    assert polytope_volume(tri, np.array([0.0, 0.0, 12.0])) == pytest.approx(pick_area([(0, 0), (4, 0), (0, 3)], 1))


def test_gamma_plus_search_bounds_bracket_the_optimum():
    # I = [-1, 1]^2, x = 0, ux = 1, R = 2: sup (1 - 2|p|) = 1 at p = 0
    A = np.array([[1.0, 0], [-1, 0], [0, 1], [0, -1]])
    res = gamma_plus_search(A, np.ones(4), np.zeros(2), 1.0, 2.0)
    assert res.member is True and res.lower <= 1.0 + 1e-12 and res.upper >= res.lower
    assert gamma_plus_search(A, np.ones(4), np.zeros(2), -0.5, 2.0).member is False


def test_l_star_on_squared_norm():
    dom = ParabolicDomain.box(uniform_environment(2), 2, 3)
    u = (dom.x.astype(float) ** 2).sum(axis=1)
    assert np.allclose(l_star(dom, u), -0.8, atol=1e-14)


def test_sample_cone_is_inside_and_deterministic():
    xi, h = sample_cone(2.0, 3.0, 2, 500, seed=9)
    assert np.all(3.0 * np.linalg.norm(xi, axis=1) < h) and np.all(h < 1.0)
    xi2, h2 = sample_cone(2.0, 3.0, 2, 500, seed=9)
    assert np.array_equal(xi, xi2) and np.array_equal(h, h2)


@settings(max_examples=8, deadline=None)
@given(st.integers(0, 2**31))
def test_cone_covering_and_step2_bound(seed):
    dom, u = _normalized_solution(seed)
    M = float(u[: dom.nD].max())
    lam = lambda_inclusion_check(dom, u, sample_cone(M, dom.R, 2, 40, seed))
    assert lam.passed and lam.n_checked == 40
    rep = step2_bound_check(dom, u)
    assert rep.passed and not rep.unbounded


def test_lambda_check_requires_normalized_function():
    dom = ParabolicDomain.cylinder(make_iid_balanced(NN2, 1), 2.0, 3)
    u = dom.solve(np.ones(dom.nD), np.ones(dom.nB))
    with pytest.raises(ConfigError):
        lambda_inclusion_check(dom, u, sample_cone(1.0, 2.0, 2, 5, 0))
