"""Verification batteries for the discrete parabolic maximum principle.

``random_battery`` draws balanced environments, cylinders ``B_R x [0, T)``
and forcings, and checks the pure maximum principle, the inequality with the
explicit constant and solver exactness.  ``grid_battery`` runs structured
environments built from all balanced weight vectors on a rational grid and
evaluates the exact supremum of the ratio over every forcing and boundary
datum through the Green matrix.
"""
from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .._parallel import pmap
from ..env import (IIDBalancedEnvironment, JumpRange, LookupEnvironment, ParityEnvironment,
                   TimePeriodicEnvironment, box_points)
from .abp import explicit_constant
from .domain import ParabolicDomain, adversarial_forcing, residual, sup_ratio, verify_max_principle

KING = [[0, 0], [1, 0], [-1, 0], [0, 1], [0, -1], [1, 1], [-1, -1], [1, -1], [-1, 1]]


def random_balanced_vector(U, rng, concentration=1.0, floor=0.01):
    """Symmetric (hence balanced) positive vector with Gamma pair-class masses."""
    classes = U.pair_classes()
    g = rng.gamma(concentration, size=len(classes))
    w = np.empty(U.size)
    for m, c in zip(g / g.sum(), classes):
        w[list(c)] = m / len(c)
    return floor + (1 - floor * U.size) * w


def random_environment(rng, seed):
    """One of: i.i.d. balanced, parity, time-periodic; on the lazy nearest-neighbour or king range."""
    U = JumpRange.nearest_neighbor(2, lazy=True) if rng.random() < 0.6 else JumpRange(KING)
    kind = rng.choice(["iid", "iid", "parity", "periodic"])
    if kind == "iid":
        floor = rng.uniform(0, 0.5 / U.size)
        return IIDBalancedEnvironment(U, seed, floor=floor, concentration=rng.uniform(0.3, 3.0))
    c = rng.uniform(0.3, 3.0)
    if kind == "parity":
        return ParityEnvironment(U, random_balanced_vector(U, rng, c), random_balanced_vector(U, rng, c), seed)
    L = int(rng.integers(2, 5))
    return TimePeriodicEnvironment(U, [random_balanced_vector(U, rng, c) for _ in range(L)], seed)


@dataclass
class InstanceResult:
    instance: int
    generator: str
    U_size: int
    R: float
    T: int
    n_D: int
    n_Dp: int
    pure_lhs: float
    pure_boundary: float
    pure_pass: bool
    lhs: float
    boundary_max: float
    rhs_norm: float
    ratio: float
    normalized: float
    adversarial_normalized: float
    residual: float
    passed: bool

    def to_dict(self):
        return dict(self.__dict__)


def run_instance(args):
    """Run one random instance; ``args = (seed, i, R_max, T_max)``."""
    seed, i, R_max, T_max = args
    rng = np.random.default_rng([seed, i])
    env = random_environment(rng, int(rng.integers(2**31)))
    R = float(rng.uniform(1.0, R_max))
    T = int(rng.integers(1, T_max + 1))
    dom = ParabolicDomain.cylinder(env, R, T)
    C = explicit_constant(env.U)
    res = 0.0

    g = rng.normal(size=dom.nB)
    f0 = np.zeros(dom.nD)
    u0 = dom.solve(f0, g)
    res = max(res, residual(dom, u0, f0))
    pure_lhs, pure_b = float(u0[: dom.nD].max()), float(g.max())

    mask = rng.random(dom.nD) < rng.uniform(0.05, 1.0)
    f = np.where(mask, rng.exponential(size=dom.nD), 0.0)
    u = dom.solve(f, rng.normal(size=dom.nB) * rng.uniform(0, 2))
    res = max(res, residual(dom, u, f))
    rep = verify_max_principle(dom, u, f, C)

    fa = adversarial_forcing(dom)
    ua = dom.solve(fa)
    res = max(res, residual(dom, ua, fa))
    adv = verify_max_principle(dom, ua, fa, C)

    pure_pass = pure_lhs <= pure_b + 1e-10
    ok = pure_pass and rep.passed and adv.passed and res <= 1e-12
    return InstanceResult(i, env.generator, env.U.size, R, T, dom.nD, dom.nB, pure_lhs, pure_b, bool(pure_pass),
                          rep.lhs, rep.boundary_max, rep.rhs_norm, rep.ratio, rep.normalized, adv.normalized,
                          res, bool(ok))


def random_battery(n_instances=1000, seed=0, R_max=10.0, T_max=30, workers=1):
    """Results for ``n_instances`` random instances, in instance order."""
    return pmap(run_instance, [(seed, i, R_max, T_max) for i in range(n_instances)], workers)


def grid_vectors(U, denominator=8):
    """All balanced probability vectors on ``U`` with entries in ``(1/denominator) Z``."""
    U = U if isinstance(U, JumpRange) else JumpRange(U)
    return [v.copy() for v in _grid_vectors(tuple(map(tuple, U.to_list())), denominator)]


@functools.lru_cache(maxsize=None)
def _grid_vectors(elements, denominator):
    U = JumpRange(elements)
    out = []
    for combo in itertools.product(range(denominator + 1), repeat=U.size):
        if sum(combo) != denominator:
            continue
        w = np.array(combo, dtype=np.int64)
        if np.any(w @ U.vectors != 0):
            continue
        out.append(np.array([float(Fraction(c, denominator)) for c in combo]))
    return out


def _pattern_table(pattern, vecs, r, T, rng=None):
    sites = box_points(r, 2)
    par = np.abs(sites).sum(axis=1)
    tab = np.empty((T, sites.shape[0], vecs[0].size))
    kind, idx = pattern
    for n in range(T):
        if kind == "constant":
            tab[n] = vecs[idx[0]]
        elif kind == "parity":
            tab[n] = np.where(((par + n) % 2 == 0)[:, None], vecs[idx[0]], vecs[idx[1]])
        elif kind == "periodic":
            tab[n] = vecs[idx[n % len(idx)]]
        elif kind == "random":
            tab[n] = np.stack(vecs)[rng.integers(len(vecs), size=sites.shape[0])]
    return tab


@dataclass
class GridResult:
    pattern: str
    indices: tuple
    radius: int
    T: int
    n_D: int
    sup_ratio: float
    normalized: float
    residual: float
    pure_pass: bool

    def to_dict(self):
        d = dict(self.__dict__)
        d["indices"] = list(self.indices)
        return d


def run_grid_case(args):
    """One structured environment on one cylinder; ``args = (pattern, indices, r, T, seed)``."""
    kind, idx, r, T, seed = args
    U = JumpRange.nearest_neighbor(2, lazy=True)
    vecs = grid_vectors(U)
    rng = np.random.default_rng([seed, r, T, *idx]) if kind == "random" else None
    env = LookupEnvironment(U, _pattern_table((kind, idx), vecs, r, T, rng), r)
    dom = ParabolicDomain.cylinder(env, r, T)
    full = dom.solve(np.eye(dom.nD))
    res = float(np.abs(dom.apply_L(full) + np.eye(dom.nD)).max())
    G = full[: dom.nD]
    s = sup_ratio(dom, G)
    norm = s / (dom.R ** (2 / 3) * explicit_constant(U))
    # pure principle: u = H g with H stochastic, checked with g = -1 at one boundary point, +1 elsewhere
    g = np.ones(dom.nB)
    g[0] = -1.0
    u = dom.solve(np.zeros(dom.nD), g)
    return GridResult(kind, tuple(idx), r, T, dom.nD, s, norm, res, bool(u[: dom.nD].max() <= 1.0 + 1e-10))


def grid_cases(radii=(1, 2, 3, 4), times=tuple(range(1, 9)), period3_times=(3, 8), n_random=2000, seed=0):
    """Work list of the grid battery.

    Patterns: every constant vector, every (even, odd) parity pair, every
    time-periodic sequence of length 2 on all cylinders, every sequence of
    length 3 on ``period3_times``, and ``n_random`` site-wise random tables.
    """
    m = len(grid_vectors(JumpRange.nearest_neighbor(2, lazy=True)))
    cases = []
    for r in radii:
        for T in times:
            cases += [("constant", (a,), r, T, seed) for a in range(m)]
            cases += [("parity", (a, b), r, T, seed) for a in range(m) for b in range(m)]
            cases += [("periodic", (a, b), r, T, seed) for a in range(m) for b in range(m) if a != b]
        for T in period3_times:
            cases += [("periodic", c, r, T, seed) for c in itertools.product(range(m), repeat=3)
                      if len(set(c)) == 3]
    rng = np.random.default_rng(seed)
    for k in range(n_random):
        cases.append(("random", (k,), int(rng.choice(radii)), int(rng.choice(times)), seed))
    return cases


def grid_battery(workers=1, **kwargs):
    return pmap(run_grid_case, grid_cases(**kwargs), workers, chunksize=64)


def summarize(results):
    """Counts and worst values of a battery."""
    rows = [r.to_dict() for r in results]
    out = {"instances": len(rows)}
    for key in ("normalized", "adversarial_normalized", "residual", "sup_ratio"):
        vals = [r[key] for r in rows if key in r]
        if vals:
            out["max_" + key] = float(max(vals))
    for key in ("passed", "pure_pass"):
        vals = [r[key] for r in rows if key in r]
        if vals:
            out["all_" + key] = bool(all(vals))
    return out
