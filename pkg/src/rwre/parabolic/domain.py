"""Finite space-time domains, the operator L_a and the backward Dirichlet solver.

A grid function on ``D u Dp`` is a flat array: entries ``0..|D|-1`` follow
the order of the points of ``D`` as given, the remaining entries are the
parabolic boundary ``Dp`` in lexicographic ``(n, x)`` order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..env import _points
from ..errors import ConfigError, DomainError
from ..geometry import epsilon_batch
from .abp import explicit_constant


class ParabolicDomain:
    """Domain ``D`` with its parabolic boundary for a given environment.

    ``Dp = {(x+z, n+1) not in D : (x, n) in D, a_n(x, z) > 0}``.

    Parameters
    ----------
    env : Environment
    x : array_like
        ``(k, d)`` spatial coordinates of the points of ``D``.
    n : array_like
        ``(k,)`` times.
    """

    def __init__(self, env, x, n):
        self.env = env
        d = env.d
        x = _points(x, d)
        n = np.broadcast_to(np.asarray(n, dtype=np.int64), (x.shape[0],)).copy()
        if x.shape[0] == 0:
            raise ConfigError("domain must be nonempty")
        a = env.weights(n, x)
        U = env.U.vectors
        sx = x[:, None, :] + U[None]
        sn = np.broadcast_to((n + 1)[:, None], a.shape)
        lo = np.minimum(x.min(axis=0), sx.reshape(-1, d).min(axis=0))
        hi = np.maximum(x.max(axis=0), sx.reshape(-1, d).max(axis=0))
        self._lo = np.concatenate([[n.min()], lo])
        self._dims = tuple((np.concatenate([[n.max() + 1], hi]) - self._lo + 1).tolist())
        codeD = self._encode(n, x)
        if np.unique(codeD).size != codeD.size:
            raise ConfigError("domain points must be distinct")
        codeS = self._encode(sn.ravel(), sx.reshape(-1, d)).reshape(a.shape)
        live = a > 0
        bnd = np.setdiff1d(codeS[live], codeD)
        bn, bx = self._decode(bnd)
        self.nD, self.nB = x.shape[0], bnd.size
        self.x = np.concatenate([x, bx])
        self.n = np.concatenate([n, bn])
        codes = np.concatenate([codeD, bnd])
        order = np.argsort(codes)
        pos = np.searchsorted(codes[order], codeS)
        pos = np.minimum(pos, codes.size - 1)
        found = codes[order][pos] == codeS
        self.succ = np.where(found, order[pos], -1)
        if np.any(live & ~found):
            raise DomainError("ill-posed domain: a successor lies in neither D nor Dp")
        self.a = a
        self._codes_sorted = codes[order]
        self._order = order
        self.R = float(np.sqrt((self.x.astype(np.float64) ** 2).sum(axis=1)).max())
        self.T = int(self.n.max() - self.n.min())
        self._slices = None
        self._eps = None

    def _encode(self, n, x):
        cols = [np.asarray(n) - self._lo[0]] + [x[:, i] - self._lo[i + 1] for i in range(x.shape[1])]
        return np.ravel_multi_index(tuple(cols), self._dims)

    def _decode(self, codes):
        cols = np.unravel_index(codes, self._dims)
        n = cols[0] + self._lo[0]
        x = np.stack([c + l for c, l in zip(cols[1:], self._lo[1:])], axis=1) if len(cols) > 1 else None
        return n.astype(np.int64), x.astype(np.int64).reshape(-1, len(self._dims) - 1)

    @property
    def d(self):
        return self.env.d

    @property
    def size(self):
        return self.nD + self.nB

    def index(self, x, n):
        """Position of ``(x, n)`` in a grid function, or -1."""
        x = _points(x, self.d)
        n = np.broadcast_to(np.asarray(n, dtype=np.int64), (x.shape[0],))
        inside = np.all((x >= self._lo[1:]) & (x < self._lo[1:] + self._dims[1:]), axis=1)
        inside &= (n >= self._lo[0]) & (n < self._lo[0] + self._dims[0])
        out = np.full(x.shape[0], -1, dtype=np.int64)
        if inside.any():
            c = self._encode(n[inside], x[inside])
            p = np.minimum(np.searchsorted(self._codes_sorted, c), self._codes_sorted.size - 1)
            hit = self._codes_sorted[p] == c
            idx = np.where(hit, self._order[p], -1)
            out[np.flatnonzero(inside)] = idx
        return out

    def slices(self):
        """Indices of ``D`` grouped by time, latest time first."""
        if self._slices is None:
            nD = self.n[: self.nD]
            times = np.unique(nD)[::-1]
            self._slices = [np.flatnonzero(nD == t) for t in times]
        return self._slices

    def eps_a(self):
        """``eps_a`` at every point of ``D``."""
        if self._eps is None:
            self._eps = epsilon_batch(self.env.U, self.a, normalization=self.env.U.size)
        return self._eps

    def _gather(self, u):
        idx = np.where(self.succ >= 0, self.succ, 0)
        vals = u[idx]
        if vals.ndim == 2:
            return np.where(self.a > 0, self.a * vals, 0.0)
        return np.where((self.a > 0)[..., None], self.a[..., None] * vals, 0.0)

    def apply_L(self, u):
        """``L_a u(x,n) = sum_z a_n(x,z) u(x+z,n+1) - u(x,n)`` on ``D``."""
        u = np.asarray(u, dtype=np.float64)
        if u.shape[0] != self.size:
            raise DomainError("grid function has the wrong length")
        if not np.all(np.isfinite(u)):
            raise DomainError("grid function has non-finite values")
        return self._gather(u).sum(axis=1) - u[: self.nD]

    def apply_L_at(self, u, x, n):
        i = self.index(x, n)[0]
        if i < 0 or i >= self.nD:
            raise DomainError(f"({x}, {n}) is not a point of D")
        return float(self.apply_L(u)[i])

    def solve(self, f, g=None):
        """Backward recursion ``u = sum_z a u(x+z, n+1) + f`` with ``u = g`` on ``Dp``.

        ``f`` may be ``(|D|,)`` or ``(|D|, c)`` for ``c`` right-hand sides.
        """
        f = np.asarray(f, dtype=np.float64)
        if f.shape[0] != self.nD:
            raise DomainError("f must be given on D")
        u = np.zeros((self.size,) + f.shape[1:])
        if g is not None:
            g = np.asarray(g, dtype=np.float64)
            u[self.nD:] = g if g.ndim == f.ndim else g[:, None]
        for idx in self.slices():
            su = u[self.succ[idx]] if f.ndim == 1 else u[self.succ[idx]]
            a = self.a[idx]
            if f.ndim == 1:
                acc = np.where(a > 0, a * su, 0.0).sum(axis=1)
            else:
                acc = np.where((a > 0)[..., None], a[..., None] * su, 0.0).sum(axis=1)
            u[idx] = acc + f[idx]
        return u

    def green_row(self, i0):
        """Expected visits ``G(p0, .)`` to points of ``D`` before leaving, from point ``i0``."""
        mass = np.zeros(self.size)
        mass[i0] = 1.0
        for idx in self.slices()[::-1]:
            m = mass[idx]
            live = m > 0
            if not live.any():
                continue
            src = idx[live]
            w = self.a[src] * m[live][:, None]
            tgt = self.succ[src]
            ok = tgt >= 0
            mass += np.bincount(tgt[ok], weights=w[ok], minlength=self.size)
        return mass[: self.nD]

    def green(self):
        """Dense Green matrix on ``D`` (``u_D = G f`` when ``g = 0``)."""
        return self.solve(np.eye(self.nD))[: self.nD]

    @classmethod
    def cylinder(cls, env, R, T, t0=0):
        """``D = {x : |x|_2 <= R} x {t0, ..., t0+T-1}``."""
        r = int(math.floor(R))
        side = np.arange(-r, r + 1)
        mesh = np.stack([m.ravel() for m in np.meshgrid(*([side] * env.d), indexing="ij")], axis=1)
        ball = mesh[(mesh.astype(np.float64) ** 2).sum(axis=1) <= R * R + 1e-12]
        xs = np.tile(ball, (T, 1))
        ns = np.repeat(np.arange(t0, t0 + T), ball.shape[0])
        return cls(env, xs, ns)

    @classmethod
    def box(cls, env, N, T, t0=0):
        """``D = {|x|_inf <= N} x {t0, ..., t0+T-1}``."""
        from ..env import box_points
        grid = box_points(N, env.d)
        return cls(env, np.tile(grid, (T, 1)), np.repeat(np.arange(t0, t0 + T), grid.shape[0]))

    def to_dict(self, u=None, f=None):
        out = {"env": self.env.descriptor(), "D": np.column_stack([self.x[: self.nD], self.n[: self.nD]]).tolist()}
        if f is not None:
            out["f"] = np.asarray(f).tolist()
        if u is not None:
            out["g"] = np.asarray(u)[self.nD:].tolist()
        return out


def solve_dirichlet(dom, f, g=None):
    return dom.solve(f, g)


def apply_L(dom, u, x, n):
    return dom.apply_L_at(u, x, n)


def residual(dom, u, f):
    """``||L_a u + f||_inf`` on ``D``."""
    return float(np.abs(dom.apply_L(u) + np.asarray(f)).max())


@dataclass
class MaxPrincipleReport:
    lhs: float
    boundary_max: float
    rhs_norm: float
    ratio: float
    C: float
    normalized: float
    subsolution: bool
    unbounded: bool
    passed: bool

    def to_dict(self):
        return dict(self.__dict__)


def forcing_norm(dom, f):
    """``||f / eps_a||_{D, d+1}``; infinite where ``eps_a = 0`` and ``f != 0``."""
    f = np.asarray(f, dtype=np.float64)
    eps = dom.eps_a()
    nz = f != 0
    if np.any(nz & (eps <= 0)):
        return math.inf
    p = dom.d + 1
    q = np.zeros_like(f)
    q[nz] = np.abs(f[nz] / eps[nz])
    s = q.max()
    if s == 0:
        return 0.0
    return float(s * (((q / s) ** p).sum()) ** (1.0 / p))


def verify_max_principle(dom, u, f, C=None, tol=1e-12):
    """Check ``max_D u <= max_Dp u + C R^(d/(d+1)) ||f / eps_a||_{D,d+1}``.

    ``ratio`` is ``(max_D u - max_Dp u)^+ / (R^(d/(d+1)) ||f/eps_a||)``;
    ``normalized = ratio / C`` and the check passes when it is at most 1.
    """
    u = np.asarray(u, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64)
    if C is None:
        C = explicit_constant(dom.env.U)
    scale = max(1.0, np.abs(u).max())
    sub = bool(np.all(dom.apply_L(u) >= -f - tol * scale))
    lhs = float(u[: dom.nD].max())
    bmax = float(u[dom.nD:].max()) if dom.nB else -math.inf
    norm = forcing_norm(dom, f)
    d = dom.d
    rhs = dom.R ** (d / (d + 1)) * norm
    excess = max(lhs - bmax, 0.0)
    unbounded = math.isinf(norm)
    if excess <= tol * scale:
        ratio = 0.0
    elif rhs == 0:
        ratio = math.inf
    else:
        ratio = excess / rhs
    normalized = ratio / C if not unbounded else 0.0
    return MaxPrincipleReport(lhs, bmax, rhs, ratio, C, normalized, sub, unbounded,
                              bool(sub and normalized <= 1.0 + 1e-12))


def adversarial_forcing(dom, i0=None):
    """Forcing ``f >= 0`` maximizing ``u(p0) / ||f / eps_a||_{D,d+1}`` for ``g = 0``.

    By Hoelder duality the optimum is ``f = eps_a (G(p0,.) eps_a)^(1/d)`` and
    the attained ratio is ``||G(p0,.) eps_a||_{(d+1)/d}``.  The default
    ``p0`` is the earliest point of ``D`` closest to the origin.
    """
    if i0 is None:
        nD = dom.n[: dom.nD]
        first = np.flatnonzero(nD == nD.min())
        r2 = (dom.x[first].astype(np.float64) ** 2).sum(axis=1)
        i0 = int(first[np.argmin(r2)])
    w = dom.green_row(i0) * dom.eps_a()
    return dom.eps_a() * w ** (1.0 / dom.d)


def sup_ratio(dom, G=None):
    """Exact ``sup_f (max_D u - max_Dp u)^+ / ||f/eps_a||_{D,d+1}`` over all ``f`` and ``g``.

    Equals ``max_p0 ||G(p0, .) eps_a||_{(d+1)/d}`` because ``u = G f + H g``
    with ``H`` a substochastic averaging of ``g``.
    """
    if G is None:
        G = dom.green()
    q = (dom.d + 1) / dom.d
    w = G * dom.eps_a()[None, :]
    return float(((w**q).sum(axis=1) ** (1 / q)).max())
