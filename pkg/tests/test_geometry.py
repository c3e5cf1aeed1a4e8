import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import grid_volume_3d, pick_area, polar_vertices_brute, raster_area
from rwre.env import JumpRange, ParityEnvironment, uniform_environment
from rwre.errors import UnsupportedDimension
from rwre.geometry import (affine_rank, epsilon_a, epsilon_batch, epsilon_from_weights, epsilon_n, hull_areas_2d,
                           hull_volume, hull_volumes_scaled, mahler_check, polar_volume, symmetrize,
                           unit_ball_volume)

NN2 = JumpRange.nearest_neighbor(2, lazy=True)

coords = st.integers(-12, 12)
int_points = st.lists(st.tuples(coords, coords), min_size=1, max_size=12)


@settings(max_examples=80, deadline=None)
@given(int_points)
def test_hull_area_matches_pick(pts):
    assert hull_volume(np.array(pts)) == pytest.approx(pick_area(pts, 1), abs=1e-9)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.tuples(st.floats(-1, 1), st.floats(-1, 1)), min_size=3, max_size=8))
def test_hull_area_matches_pixel_coverage(pts):
    P = np.round(np.array(pts), 6)
    assert hull_volume(P) == pytest.approx(raster_area(P, h=1 / 20), abs=1e-9)


def test_known_volumes():
    assert hull_volume([[1, 0], [-1, 0], [0, 1], [0, -1]]) == 2.0
    assert hull_volume(np.array([[1, 0], [-1, 0], [0, 1], [0, -1]]) * 0.2) == pytest.approx(0.08, abs=1e-15)
    octa = np.array([[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]])
    assert hull_volume(octa) == pytest.approx(4 / 3, abs=1e-12)
    assert hull_volume([[-1], [2], [0]]) == 3.0
    assert hull_volume([[0, 0], [1, 1], [2, 2]]) == 0.0
    assert affine_rank([[0, 0], [1, 1], [2, 2]]) == 1
    with pytest.raises(UnsupportedDimension):
        hull_volume(np.zeros((5, 4)))


def test_3d_volume_against_grid_count():
    rng = np.random.default_rng(3)
    P = rng.uniform(-1, 1, size=(9, 3))
    assert hull_volume(P) == pytest.approx(grid_volume_3d(P, h=1 / 60), rel=0.03)


def test_batched_areas_match_single():
    rng = np.random.default_rng(0)
    B = rng.normal(size=(200, 6, 2))
    got = hull_areas_2d(B)
    want = np.array([hull_volume(b) for b in B])
    assert np.allclose(got, want, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.floats(-3, 3), st.floats(-3, 3)), min_size=2, max_size=6))
def test_polar_volume_against_brute_force(pts):
    P = symmetrize(np.array(pts))
    if affine_rank(P) < 2 or np.min(np.linalg.norm(P, axis=1)) < 1e-3:
        return
    brute = polar_vertices_brute(P)
    assert polar_volume(P) == pytest.approx(hull_volume(brute), rel=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 3), st.integers(0, 10**6))
def test_mahler_bound(d, seed):
    rng = np.random.default_rng(seed)
    P = symmetrize(rng.normal(size=(int(rng.integers(d, 7)), d)))
    rep = mahler_check(P)
    assert rep.passed and rep.product <= 4**d + 1e-9


def test_mahler_products_of_cross_and_square():
    assert mahler_check([[1, 0], [-1, 0], [0, 1], [0, -1]]).product == pytest.approx(8.0, abs=1e-12)
    assert mahler_check([[1, 1], [1, -1], [-1, 1], [-1, -1]]).product == pytest.approx(8.0, abs=1e-12)
    cube = np.array([[a, b, c] for a in (1, -1) for b in (1, -1) for c in (1, -1)])
    assert mahler_check(cube).product == pytest.approx(8 * 4 / 3, abs=1e-9)


def test_polar_requires_symmetry():
    with pytest.raises(ValueError):
        polar_volume([[1, 0], [0, 1], [-1, -1]])


def test_uniform_epsilons():
    env = uniform_environment(2)
    assert epsilon_n(env, (0, 0), 1).epsilon == pytest.approx((2 / 125) ** (1 / 3), abs=1e-15)
    assert epsilon_a(env, (0, 0), 0).epsilon == pytest.approx((2 / 625) ** (1 / 3), abs=1e-15)


def test_eps_n_two_steps_matches_hand_computation():
    # p_2(0, 0) = 1/25 + 4/25 = 1/5; V_2 is spanned by {2/25 (±2e_i), 2/25 (±e_i), 2/25 (±e1±e2)}
    env = uniform_environment(2)
    val = epsilon_n(env, (0, 0), 2)
    pts = [[0, 0]]
    for z, p in [((1, 0), 2 / 25), ((2, 0), 1 / 25), ((1, 1), 2 / 25)]:
        for sx in (1, -1):
            for sy in (1, -1):
                for v in ((z[0] * sx, z[1] * sy), (z[1] * sx, z[0] * sy)):
                    pts.append([p * v[0], p * v[1]])
    area = raster_area(pts, h=1 / 100)
    assert val.mass_at_zero == pytest.approx(1 / 5, abs=1e-15)
    assert val.epsilon == pytest.approx((area / 5) ** (1 / 3), abs=1e-9)


def test_eps_vanishes_without_holding():
    env = ParityEnvironment(JumpRange.nearest_neighbor(2), [0.25] * 4, [0.25] * 4)
    assert epsilon_n(env, (0, 0), 1).epsilon == 0.0
    U = JumpRange.nearest_neighbor(2, lazy=True)
    assert epsilon_from_weights(U, [1.0, 0, 0, 0, 0]).epsilon == 0.0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_eps_formula_and_batch_agree(seed):
    rng = np.random.default_rng(seed)
    a = rng.dirichlet(np.ones(3))
    w = np.array([a[0], a[1] / 2, a[1] / 2, a[2] / 2, a[2] / 2])
    e = epsilon_from_weights(NN2, w, 5)
    assert e.epsilon ** 3 == pytest.approx(e.mass_at_zero * e.hull_volume / 5, rel=1e-12)
    W = np.stack([w, w])
    assert np.allclose(epsilon_batch(NN2, W, 5), e.epsilon)
    assert np.allclose(hull_volumes_scaled(NN2, W), e.hull_volume)


def test_unit_ball_volume():
    assert unit_ball_volume(1) == pytest.approx(2.0, abs=1e-15)
    assert unit_ball_volume(2) == pytest.approx(math.pi)
    assert unit_ball_volume(3) == pytest.approx(4 * math.pi / 3)
