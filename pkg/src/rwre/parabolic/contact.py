"""Upper contact sets and the geometric objects behind the maximum principle.

For a grid function ``u`` on ``D u Dp`` and ``(x, n)`` in ``D``:

* ``I_u(x, n) = {p : u(x,n) - u(y,m) >= p.(x - y) for all (y,m) with m > n}``;
* ``Gamma`` is the set of points where ``I_u`` is nonempty;
* ``Gamma+`` keeps the points having some ``p in I_u`` with
  ``R|p|_2 < u(x,n) - p.x``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import HalfspaceIntersection

from .. import _rng
from ..errors import ConfigError
from ..geometry import hull_volume
from .abp import step2_constant

WITNESS_TOL = 1e-9


def constraints(dom, u, i):
    """Rows ``A p <= b`` defining ``I_u`` at point ``i`` of ``D``."""
    later = dom.n > dom.n[i]
    A = (dom.x[i] - dom.x[later]).astype(np.float64)
    b = u[i] - u[later]
    return A, b


def _verify(A, b, p, tol=WITNESS_TOL):
    return bool(A.shape[0] == 0 or np.all(A @ p <= b + tol * max(1.0, np.abs(b).max())))


def _feasible(A, b, d):
    if A.shape[0] == 0:
        return np.zeros(d)
    res = linprog(np.zeros(d), A_ub=A, b_ub=b, bounds=[(None, None)] * d, method="highs")
    if res.status == 0:
        return res.x
    return None


def _directions(d, k=8):
    if d == 1:
        return np.array([[1.0], [-1.0]])
    if d == 2:
        t = 2 * np.pi * np.arange(k) / k
        return np.stack([np.cos(t), np.sin(t)], axis=1)
    pts = np.array([[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]], dtype=float)
    corners = np.array(np.meshgrid([-1, 1], [-1, 1], [-1, 1])).reshape(3, -1).T / math.sqrt(3)
    return np.vstack([pts, corners])


@dataclass
class GammaPlusResult:
    member: object
    witness: object
    lower: float
    upper: float
    iterations: int


def gamma_plus_search(A, b, x, ux, R, p0=None, gap_tol=1e-9, max_iter=200):
    """Decide ``sup_{p in I} (ux - p.x - R|p|) > 0`` by outer linearization.

    The Euclidean norm is replaced by ``s >= c_k . p`` over unit vectors
    ``c_k``; each LP gives an upper bound, its solution a lower bound, and a
    new cut is added along the solution until the gap is below ``gap_tol``.

    Returns ``member`` True/False, or None when the budget runs out.
    """
    d = x.shape[0]
    rx = float(np.linalg.norm(x))
    if ux <= 0:
        return GammaPlusResult(False, None, -math.inf, ux, 0)
    box = ux / (R - rx) + 1.0 if R > rx else 1e6
    cuts = list(_directions(d))
    best_p, lower, upper = None, -math.inf, math.inf
    c = np.concatenate([x, [R]])
    nA = A.shape[0]
    for it in range(1, max_iter + 1):
        C = np.array(cuts)
        A_ub = np.vstack([np.hstack([A, np.zeros((nA, 1))]), np.hstack([C, -np.ones((C.shape[0], 1))])])
        b_ub = np.concatenate([b, np.zeros(C.shape[0])])
        res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=[(-box, box)] * d + [(0, None)], method="highs")
        if res.status != 0:
            return GammaPlusResult(False, None, -math.inf, -math.inf, it)
        p = res.x[:d]
        upper = min(upper, ux - res.fun)
        val = ux - p @ x - R * np.linalg.norm(p)
        if val > lower:
            lower, best_p = val, p
        if lower > 0 and _verify(A, b, best_p):
            return GammaPlusResult(True, best_p, lower, upper, it)
        if upper <= 0:
            return GammaPlusResult(False, None, lower, upper, it)
        if upper - lower <= gap_tol:
            return GammaPlusResult(False, best_p, lower, upper, it)
        nrm = np.linalg.norm(p)
        if nrm == 0:
            return GammaPlusResult(False, best_p, lower, upper, it)
        cuts.append(p / nrm)
    return GammaPlusResult(None, best_p, lower, upper, max_iter)


@dataclass
class ContactSet:
    """Per-point results; ``gamma_plus`` entries are True, False or None (undecided)."""

    feasible: np.ndarray
    witness: np.ndarray
    gamma_plus: list
    gp_witness: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    R: float

    @property
    def undecided(self):
        return [i for i, g in enumerate(self.gamma_plus) if g is None]

    @property
    def gamma_plus_indices(self):
        return np.array([i for i, g in enumerate(self.gamma_plus) if g], dtype=np.int64)

    def to_rows(self, dom):
        rows = []
        for i in range(dom.nD):
            rows.append({"x": dom.x[i].tolist(), "n": int(dom.n[i]), "gamma": bool(self.feasible[i]),
                         "gamma_plus": self.gamma_plus[i], "witness": self.witness[i].tolist()})
        return rows


def contact_sets(dom, u, R=None, gap_tol=1e-9, max_iter=200, points=None):
    """``Gamma`` and ``Gamma+`` with certified witnesses.

    Parameters
    ----------
    dom : ParabolicDomain
    u : ndarray
        Grid function on ``D u Dp``.
    R : float, optional
        Radius in the ``Gamma+`` condition (``dom.R`` by default).
    points : array_like, optional
        Subset of ``D`` indices to examine (all by default).
    """
    u = np.asarray(u, dtype=np.float64)
    R = dom.R if R is None else float(R)
    d = dom.d
    idx = range(dom.nD) if points is None else points
    feas = np.zeros(dom.nD, dtype=bool)
    wit = np.full((dom.nD, d), np.nan)
    gp = [False] * dom.nD
    gpw = np.full((dom.nD, d), np.nan)
    lo = np.full(dom.nD, np.nan)
    hi = np.full(dom.nD, np.nan)
    for i in idx:
        A, b = constraints(dom, u, i)
        p = _feasible(A, b, d)
        if p is None or not _verify(A, b, p):
            continue
        feas[i] = True
        wit[i] = p
        r = gamma_plus_search(A, b, dom.x[i].astype(np.float64), u[i], R, p, gap_tol, max_iter)
        gp[i] = r.member
        lo[i], hi[i] = r.lower, r.upper
        if r.member:
            gpw[i] = r.witness
    return ContactSet(feas, wit, gp, gpw, lo, hi, R)


@dataclass
class LambdaSample:
    xi: np.ndarray
    h: float
    inside: bool
    point: int = -1
    in_I: bool = False
    in_interval: bool = False
    in_gamma_plus: bool = False

    @property
    def passed(self):
        return (not self.inside) or (self.in_I and self.in_interval and self.in_gamma_plus)


@dataclass
class LambdaReport:
    samples: list
    M: float
    R: float
    failures: list = field(default_factory=list)

    @property
    def n_checked(self):
        return sum(s.inside for s in self.samples)

    @property
    def passed(self):
        return not self.failures


def sample_cone(M, R, d, k, seed):
    """``k`` uniform samples of ``{(xi, h) : R|xi| < h < M/2}``."""
    j = np.arange(k)
    uh = _rng.uniform(seed, _rng.TAG_SAMPLER, j, 0)
    h = 0.5 * M * uh ** (1.0 / (d + 1))
    g = np.stack([_rng.uniform(seed, _rng.TAG_SAMPLER, j, 1 + i) for i in range(d)], axis=1)
    from scipy.special import ndtri
    z = ndtri(g)
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    r = _rng.uniform(seed, _rng.TAG_SAMPLER, j, d + 1) ** (1.0 / d)
    xi = z * (r * h / R)[:, None]
    return xi, h


def lambda_inclusion_check(dom, u, samples, R=None, tol=1e-9):
    """Run the constructive covering argument for each ``(xi, h)``.

    For ``phi = u - xi.x - h`` take the latest time ``n1`` at which ``phi >= 0``
    somewhere in ``D``, and a point ``x1`` there; then check
    ``xi in I_u(x1, n1)``, ``h + xi.x1 in (u(x1, n1+1), u(x1, n1)]`` and the
    ``Gamma+`` inequality ``R|xi| < u(x1, n1) - xi.x1``.

    ``u`` must satisfy ``max_D u = M > 0 >= max_Dp u``.
    """
    u = np.asarray(u, dtype=np.float64)
    R = dom.R if R is None else float(R)
    M = float(u[: dom.nD].max())
    if not M > 0 or (dom.nB and u[dom.nD:].max() > 0):
        raise ConfigError("normalize u first: need max_D u > 0 >= max_Dp u")
    X = dom.x.astype(np.float64)
    xi_all, h_all = samples
    out = []
    fails = []
    for xi, h in zip(np.atleast_2d(xi_all), np.atleast_1d(h_all)):
        inside = bool(R * np.linalg.norm(xi) < h < M / 2)
        s = LambdaSample(np.asarray(xi), float(h), inside)
        if inside:
            phi = u - X @ xi - h
            nonneg = np.flatnonzero(phi >= 0)
            n1 = dom.n[nonneg].max()
            cand = nonneg[dom.n[nonneg] == n1]
            i1 = int(cand[0])
            s.point = i1
            A, b = constraints(dom, u, i1)
            s.in_I = _verify(A, b, xi, tol)
            j = dom.index(dom.x[i1], n1 + 1)[0]
            q = h + xi @ X[i1]
            scale = tol * max(1.0, abs(u[i1]))
            s.in_interval = bool(i1 < dom.nD and j >= 0 and u[j] - scale < q <= u[i1] + scale)
            s.in_gamma_plus = bool(R * np.linalg.norm(xi) < u[i1] - xi @ X[i1] + scale)
            if not s.passed:
                fails.append(s)
        out.append(s)
    return LambdaReport(out, M, R, fails)


def polytope_volume(A, b):
    """Volume of ``{p : A p <= b}``; ``inf`` if unbounded, 0 if lower-dimensional."""
    d = A.shape[1]
    for i in range(d):
        for sgn in (1.0, -1.0):
            c = np.zeros(d)
            c[i] = -sgn
            res = linprog(c, A_ub=A, b_ub=b, bounds=[(None, None)] * d, method="highs")
            if res.status == 3:
                return math.inf
            if res.status != 0:
                return 0.0
    norms = np.linalg.norm(A, axis=1)
    c = np.zeros(d + 1)
    c[-1] = -1.0
    res = linprog(c, A_ub=np.hstack([A, norms[:, None]]), b_ub=b,
                  bounds=[(None, None)] * d + [(0, None)], method="highs")
    if res.status != 0 or res.x[-1] <= 1e-12:
        return 0.0
    inner = res.x[:d]
    if d == 1:
        a = A[:, 0]
        upper = np.min(b[a > 0] / a[a > 0])
        lower = np.max(b[a < 0] / a[a < 0])
        return float(max(upper - lower, 0.0))
    hs = HalfspaceIntersection(np.hstack([A, -b[:, None]]), inner)
    return hull_volume(hs.intersections)


def l_star(dom, u):
    """``L*u(x,n) = sum_{z != 0} a_n(x,z) (u(x,n) - u(x+z,n+1))`` on ``D``."""
    U = dom.env.U
    nz = np.ones(U.size, dtype=bool)
    if U.zero_index is not None:
        nz[U.zero_index] = False
    idx = np.where(dom.succ >= 0, dom.succ, 0)
    diff = u[: dom.nD, None] - u[idx]
    return np.where((dom.a > 0) & nz[None], dom.a * diff, 0.0).sum(axis=1)


@dataclass
class Step2Report:
    indices: np.ndarray
    volumes: np.ndarray
    bounds: np.ndarray
    ratios: np.ndarray
    unbounded: list

    @property
    def max_ratio(self):
        return float(self.ratios.max()) if self.ratios.size else 0.0

    @property
    def passed(self):
        return bool(self.max_ratio <= 1.0 + 1e-9)


def step2_bound_check(dom, u, contact=None):
    """Compare ``|I_u(x,n)|`` with ``4^d (#U)^d (L*u)^d / |conv U_{x,n}|`` on ``Gamma+``."""
    u = np.asarray(u, dtype=np.float64)
    if contact is None:
        contact = contact_sets(dom, u)
    U = dom.env.U
    ls = l_star(dom, u)
    const = step2_constant(U)
    idx = contact.gamma_plus_indices
    vols, bnds, rats, unb = [], [], [], []
    for i in idx:
        A, b = constraints(dom, u, i)
        vol = polytope_volume(A, b)
        if math.isinf(vol):
            unb.append(int(i))
            continue
        v = hull_volume(dom.a[i][:, None] * U.vectors)
        bound = const * max(ls[i], 0.0) ** dom.d / v if v > 0 else math.inf
        vols.append(vol)
        bnds.append(bound)
        rats.append(0.0 if vol == 0 else (vol / bound if bound > 0 else math.inf))
    keep = np.array([i for i in idx if int(i) not in unb], dtype=np.int64)
    return Step2Report(keep, np.array(vols), np.array(bnds), np.array(rats), unb)
