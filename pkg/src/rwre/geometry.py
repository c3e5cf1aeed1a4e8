"""Convex-hull volumes, polar bodies and ellipticity functionals.

Exact volumes are provided for ``d <= 3``: interval length for ``d = 1``,
monotone-chain hull plus shoelace for ``d = 2`` and a fan triangulation of
the Qhull facets for ``d = 3``.  Inputs whose affine hull has dimension
below ``d`` have volume zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull

from .errors import ConfigError, UnsupportedDimension

RANK_TOL = 1e-12


def _as_points(points):
    p = np.asarray(points, dtype=np.float64)
    if p.ndim == 1:
        p = p[:, None]
    if p.ndim != 2 or p.shape[0] == 0:
        raise ConfigError("expected a nonempty (k, d) point array")
    if p.shape[1] > 3:
        raise UnsupportedDimension(f"exact hull volume is implemented for d <= 3, got d = {p.shape[1]}")
    return p


def affine_rank(points, tol=RANK_TOL):
    p = np.asarray(points, dtype=np.float64)
    if p.shape[0] < 2:
        return 0
    diff = p[1:] - p[0]
    scale = max(np.abs(diff).max(), np.abs(p).max(), 1.0)
    s = np.linalg.svd(diff, compute_uv=False)
    return int(np.sum(s > tol * scale))


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def hull_2d(points):
    """Counter-clockwise hull vertices of a planar point set (no collinear points)."""
    pts = sorted(set(map(tuple, np.asarray(points, dtype=np.float64).tolist())))
    if len(pts) <= 2:
        return np.array(pts, dtype=np.float64).reshape(-1, 2)
    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1], dtype=np.float64)


def _shoelace(v):
    x, y = v[:, 0], v[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def hull_vertices(points):
    """Vertices of ``conv(points)``; counter-clockwise in ``d = 2``."""
    p = _as_points(points)
    d = p.shape[1]
    if d == 1:
        return np.array([[p.min()], [p.max()]])
    if d == 2:
        return hull_2d(p)
    if affine_rank(p) < 3:
        raise ConfigError("degenerate point set has no full-dimensional hull")
    h = ConvexHull(p)
    return p[h.vertices]


def hull_volume(points):
    """Lebesgue measure of ``conv(points)`` in ``R^d``, ``d <= 3``."""
    p = _as_points(points)
    d = p.shape[1]
    if affine_rank(p) < d:
        return 0.0
    if d == 1:
        return float(p.max() - p.min())
    if d == 2:
        return float(_shoelace(hull_2d(p)))
    h = ConvexHull(p)
    c = p[h.vertices].mean(axis=0)
    tri = p[h.simplices] - c
    return float(np.abs(np.linalg.det(tri)).sum() / 6.0)


def hull_areas_2d(batch):
    """Hull areas for a batch of planar point sets, shape ``(k, m, 2) -> (k,)``.

    Vectorized over the batch: for every ordered pair ``(i, j)`` the segment
    ``p_i -> p_j`` is a counter-clockwise hull edge iff no point lies strictly
    to its right and every collinear point lies inside the segment.  Duplicate
    points keep only their first copy.  The area is the shoelace sum over
    hull edges.
    """
    p = np.asarray(batch, dtype=np.float64)
    k, m, _ = p.shape
    if m < 3:
        return np.zeros(k)
    scale = np.maximum(np.abs(p).max(axis=(1, 2)), 1e-300)
    eps = 1e-13 * scale[:, None, None, None] ** 2
    same = np.all(p[:, :, None, :] == p[:, None, :, :], axis=3)
    tri = np.tril(np.ones((m, m), dtype=bool), -1)
    dup = np.any(same & tri[None], axis=2)
    a = p[:, :, None, None, :]
    b = p[:, None, :, None, :]
    c = p[:, None, None, :, :]
    ab = b - a
    ac = c - a
    cr = ab[..., 0] * ac[..., 1] - ab[..., 1] * ac[..., 0]
    right = cr < -eps
    col = np.abs(cr) <= eps
    t = (ab * ac).sum(-1)
    L2 = (ab * ab).sum(-1)
    outside = col & ((t < 0) | (t > L2))
    valid = ~dup[:, :, None] & ~dup[:, None, :] & ~np.eye(m, dtype=bool)[None]
    bad = (right | outside) & ~dup[:, None, None, :]
    edge = valid & ~np.any(bad, axis=3) & (L2[..., 0] > 0)
    xi, yi = p[:, :, None, 0], p[:, :, None, 1]
    xj, yj = p[:, None, :, 0], p[:, None, :, 1]
    contrib = np.where(edge, xi * yj - xj * yi, 0.0)
    return 0.5 * contrib.sum(axis=(1, 2))


def hull_facets(points):
    """Facet inequalities ``A z <= b`` of a full-dimensional hull."""
    p = _as_points(points)
    d = p.shape[1]
    if affine_rank(p) < d:
        raise ConfigError("degenerate point set has no facets")
    if d == 1:
        return np.array([[1.0], [-1.0]]), np.array([p.max(), -p.min()])
    if d == 2:
        v = hull_2d(p)
        w = np.roll(v, -1, axis=0)
        A = np.stack([w[:, 1] - v[:, 1], v[:, 0] - w[:, 0]], axis=1)
        b = (A * v).sum(axis=1)
        return A, b
    h = ConvexHull(p)
    eq = np.unique(np.round(h.equations, 12), axis=0)
    return eq[:, :-1], -eq[:, -1]


def symmetrize(points):
    """``points`` together with their negatives."""
    p = _as_points(points)
    return np.concatenate([p, -p])


def _check_symmetric(p, tol=1e-12):
    for q in -p:
        if np.min(np.abs(p - q).max(axis=1)) > tol * max(1.0, np.abs(p).max()):
            raise ConfigError("point set is not symmetric under negation")


def polar_vertices(points):
    """Vertices of the polar ``{z : z.y <= 1 for all y in points}``.

    For a full-dimensional body containing the origin in its interior the
    polar is the convex hull of ``a_i / b_i`` over its facets ``a_i . z <= b_i``.
    """
    A, b = hull_facets(points)
    scale = max(1.0, np.abs(_as_points(points)).max())
    if np.any(b <= RANK_TOL * scale * np.linalg.norm(A, axis=1)):
        raise ConfigError("origin is not interior; the polar body is unbounded")
    return A / b[:, None]


def polar_volume(points):
    """Volume of the polar body of a symmetric full-dimensional point set."""
    p = _as_points(points)
    _check_symmetric(p)
    if affine_rank(p) < p.shape[1]:
        raise ConfigError("degenerate hull: the polar body has infinite volume")
    return hull_volume(polar_vertices(p))


@dataclass
class MahlerReport:
    volume: float
    polar_volume: float
    product: float
    bound: float
    passed: bool


def mahler_check(points, tol=1e-9):
    """Compare ``|V| |V°|`` with ``4^d`` for a symmetric body ``V``."""
    p = _as_points(points)
    vol = hull_volume(p)
    pol = polar_volume(p)
    prod = vol * pol
    bound = 4.0 ** p.shape[1]
    return MahlerReport(vol, pol, prod, bound, bool(prod <= bound + tol))


@dataclass
class EllipticityValue:
    """``epsilon = (mass_at_zero * hull_volume / normalization)^(1/(d+1))``."""

    epsilon: float
    mass_at_zero: float
    hull_volume: float
    normalization: float
    d: int

    def to_dict(self):
        return {"epsilon": self.epsilon, "mass_at_zero": self.mass_at_zero,
                "hull_volume": self.hull_volume, "normalization": self.normalization, "d": self.d}


def _ellipticity(mass0, vol, norm, d):
    eps = (mass0 * vol / norm) ** (1.0 / (d + 1)) if mass0 > 0 and vol > 0 else 0.0
    return EllipticityValue(float(eps), float(mass0), float(vol), float(norm), int(d))


def epsilon_n(env, x, n, kernel=None):
    """``eps_n(x) = (p_n(x, x) |conv V_n(x)|)^(1/(d+1))``.

    ``V_n(x) = {p_n(x, x+z) z}``.  The kernel ``p_n`` is the law of ``X_n``
    for the walk started at ``(x, 0)``; pass a :class:`rwre.walk.StepKernel`
    to reuse one, otherwise it is computed exactly.
    """
    if kernel is None:
        from .walk import n_step_kernel
        kernel = n_step_kernel(env, x, 0, n)
    x = np.asarray(x, dtype=np.int64).reshape(-1)
    z = kernel.points - x
    V = np.concatenate([kernel.probs[:, None] * z, np.zeros((1, env.d))])
    at0 = np.all(z == 0, axis=1)
    mass0 = float(kernel.probs[at0].sum())
    return _ellipticity(mass0, hull_volume(V), 1.0, env.d)


def epsilon_a(env, x, n):
    """``eps_a(x, n) = (a_n(x, 0) v(x, n) / #U)^(1/(d+1))``, ``v = |conv{a_n(x,z) z}|``."""
    a = env.weights(n, x)[0]
    return epsilon_from_weights(env.U, a, normalization=env.U.size)


def epsilon_from_weights(U, a, normalization=1.0):
    """One-step ellipticity of a single weight vector ``a`` on ``U``."""
    a = np.asarray(a, dtype=np.float64)
    V = a[:, None] * U.vectors
    mass0 = a[U.zero_index] if U.zero_index is not None else 0.0
    return _ellipticity(mass0, hull_volume(V), normalization, U.d)


def hull_volumes_scaled(U, W):
    """``|conv{w_e e : e in U}|`` for each row ``w`` of ``W`` (shape ``(k, #U)``)."""
    W = np.asarray(W, dtype=np.float64)
    d = U.d
    pts = W[:, :, None] * U.vectors[None, :, :]
    if d == 1:
        return pts[..., 0].max(axis=1) - pts[..., 0].min(axis=1)
    if d == 2:
        out = np.empty(W.shape[0])
        step = max(1, 2_000_000 // max(1, U.size**3))
        for s in range(0, W.shape[0], step):
            out[s: s + step] = hull_areas_2d(pts[s: s + step])
        return np.maximum(out, 0.0)
    return np.array([hull_volume(q) for q in pts])


def epsilon_batch(U, W, normalization=1.0):
    """Vectorized one-step ellipticity for rows of ``W``.

    ``normalization=1`` gives ``eps_1``; ``normalization=#U`` gives ``eps_a``.
    Rows without a zero jump (or with zero mass there) give 0.
    """
    W = np.asarray(W, dtype=np.float64)
    if U.zero_index is None:
        return np.zeros(W.shape[0])
    mass0 = W[:, U.zero_index]
    vol = hull_volumes_scaled(U, W)
    prod = np.where((mass0 > 0) & (vol > 0), mass0 * vol / normalization, 0.0)
    return prod ** (1.0 / (U.d + 1))


def unit_ball_volume(d):
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)
