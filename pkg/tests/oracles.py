"""Independent reference computations used only by the tests.

None of these share code with the package: hulls by gift wrapping, areas by
exact pixel coverage and by Pick's theorem, polar bodies by brute-force
line intersection, volumes in 3-d by grid counting.
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np


def jarvis_hull(points):
    """Counter-clockwise hull vertices by gift wrapping (collinear points dropped)."""
    pts = sorted(set(map(tuple, np.asarray(points, dtype=float).tolist())))
    if len(pts) < 3:
        return pts
    start = min(pts)
    hull = [start]
    while True:
        cand = pts[0] if pts[0] != hull[-1] else pts[1]
        for p in pts:
            o = hull[-1]
            cr = (cand[0] - o[0]) * (p[1] - o[1]) - (cand[1] - o[1]) * (p[0] - o[0])
            if cr < 0 or (cr == 0 and math.dist(o, p) > math.dist(o, cand)):
                cand = p
        if cand == start:
            break
        hull.append(cand)
    return hull


def _clip(poly, a, b, c):
    """Sutherland-Hodgman: keep ``a x + b y <= c``."""
    out = []
    n = len(poly)
    for i in range(n):
        p, q = poly[i], poly[(i + 1) % n]
        fp, fq = a * p[0] + b * p[1] - c, a * q[0] + b * q[1] - c
        if fp <= 0:
            out.append(p)
        if fp * fq < 0:
            t = fp / (fp - fq)
            out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
    return out


def _poly_area(poly):
    s = 0.0
    for i in range(len(poly)):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % len(poly)]
        s += x0 * y1 - x1 * y0
    return abs(s) / 2


def raster_area(points, h=1 / 200):
    """Area of the convex hull as the sum of exact pixel coverages on a grid of step ``h``."""
    hull = jarvis_hull(points)
    if len(hull) < 3:
        return 0.0
    edges = []
    for i in range(len(hull)):
        (x0, y0), (x1, y1) = hull[i], hull[(i + 1) % len(hull)]
        a, b = y1 - y0, x0 - x1
        edges.append((a, b, a * x0 + b * y0))
    xs, ys = [p[0] for p in hull], [p[1] for p in hull]
    total = 0.0
    for i in range(math.floor(min(xs) / h), math.ceil(max(xs) / h)):
        for j in range(math.floor(min(ys) / h), math.ceil(max(ys) / h)):
            cell = [(i * h, j * h), ((i + 1) * h, j * h), ((i + 1) * h, (j + 1) * h), (i * h, (j + 1) * h)]
            for a, b, c in edges:
                cell = _clip(cell, a, b, c)
                if not cell:
                    break
            if cell:
                total += _poly_area(cell)
    return total


def pick_area(points, scale):
    """Hull area via Pick's theorem after scaling rational points by ``scale`` onto the lattice."""
    P = [(int(round(p[0] * scale)), int(round(p[1] * scale))) for p in np.asarray(points, dtype=float)]
    hull = jarvis_hull(P)
    hull = [(int(x), int(y)) for x, y in hull]
    if len(hull) < 3:
        return 0.0
    B = sum(math.gcd(abs(hull[(i + 1) % len(hull)][0] - hull[i][0]), abs(hull[(i + 1) % len(hull)][1] - hull[i][1]))
            for i in range(len(hull)))
    xs, ys = [p[0] for p in hull], [p[1] for p in hull]
    interior = 0
    for x in range(min(xs), max(xs) + 1):
        for y in range(min(ys), max(ys) + 1):
            strictly = True
            for i in range(len(hull)):
                (x0, y0), (x1, y1) = hull[i], hull[(i + 1) % len(hull)]
                if (x1 - x0) * (y - y0) - (y1 - y0) * (x - x0) <= 0:
                    strictly = False
                    break
            interior += strictly
    area = Fraction(interior) + Fraction(B, 2) - 1
    return float(area) / scale**2


def polar_vertices_brute(points):
    """Vertices of ``{y : y.v <= 1 for all v}`` in d=2 from all pairwise line intersections."""
    V = np.asarray(points, dtype=float)
    out = []
    for i, j in itertools.combinations(range(len(V)), 2):
        M = np.array([V[i], V[j]])
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        y = np.linalg.solve(M, np.ones(2))
        if np.all(V @ y <= 1 + 1e-9):
            out.append(y)
    return np.array(out)


def grid_volume_3d(points, h=1 / 100):
    """3-d hull volume by counting cell centres inside all facet half-spaces."""
    from itertools import combinations
    P = np.asarray(points, dtype=float)
    planes = []
    for i, j, k in combinations(range(len(P)), 3):
        nrm = np.cross(P[j] - P[i], P[k] - P[i])
        if np.linalg.norm(nrm) < 1e-12:
            continue
        s = (P - P[i]) @ nrm
        if np.all(s <= 1e-12):
            planes.append((nrm, nrm @ P[i]))
        elif np.all(s >= -1e-12):
            planes.append((-nrm, -nrm @ P[i]))
    lo, hi = P.min(axis=0), P.max(axis=0)
    axes = [np.arange(lo[a] + h / 2, hi[a], h) for a in range(3)]
    X, Y, Z = np.meshgrid(*axes, indexing="ij")
    C = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)
    inside = np.ones(C.shape[0], dtype=bool)
    for nrm, c in planes:
        inside &= C @ nrm <= c + 1e-12
    return inside.sum() * h**3


def brute_transition_law(weights_fn, U, x0, steps):
    """Exact n-step law by dictionary convolution: ``{point: probability}``."""
    law = {tuple(x0): 1.0}
    for n in range(steps):
        new = {}
        for x, p in law.items():
            w = weights_fn(n, np.array(x))
            for e, q in zip(U, w):
                if q > 0:
                    y = tuple(int(a + b) for a, b in zip(x, e))
                    new[y] = new.get(y, 0.0) + p * q
        law = new
    return law


def exit_time_expectation_mc(rng, weights_fn, U, inside, T, M):
    """Monte Carlo ``E[min(tau_exit, T)]`` from the origin at time 0 (python loop)."""
    U = np.asarray(U)
    total = np.zeros(M)
    for m in range(M):
        x = np.zeros(U.shape[1], dtype=int)
        k = 0
        for n in range(T):
            if not inside(x):
                break
            k += 1
            w = weights_fn(n, x)
            x = x + U[rng.choice(len(U), p=w)]
        total[m] = k
    return total.mean(), total.std(ddof=1) / math.sqrt(M)
