"""Stationary measure of the environment chain on a periodized torus.

For a periodized environment the process ``theta_{n, X_n} omega^(N)`` is a
finite Markov chain on ``K_N``.  Its time coordinate advances by one each
step, so the chain is periodic; we iterate the composed one-period map on
the time-0 slice (with lazy averaging, which removes any residual spatial
periodicity), then push the fixed point through the slices and give each
slice mass ``1/(N^2+1)``.
"""
from __future__ import annotations

import hashlib
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from . import _rng
from .env import budget_bytes, periodize
from .errors import BudgetExceeded, ConfigError, NonConvergence
from .geometry import epsilon_batch
from .parabolic.abp import explicit_constant
from .walk import exit_time_constant


@dataclass
class PeriodChain:
    """Sparse one-step kernel of the environment chain on ``K_N``.

    ``targets[m, s, j]`` is the flat spatial index of ``x_s + e_j`` wrapped
    onto the torus and ``weights[m, s, j] = omega^(N)_m(x_s, e_j)``; the
    target time is ``(m + 1) mod (N^2 + 1)``.
    """

    pe: object
    targets: np.ndarray
    weights: np.ndarray
    slices: list
    _P: object = None

    @property
    def N(self):
        return self.pe.N

    @property
    def n_sites(self):
        return self.targets.shape[1]

    @property
    def period(self):
        return self.targets.shape[0]

    @property
    def n_states(self):
        return self.period * self.n_sites

    @property
    def P(self):
        """Full ``(T S) x (T S)`` transition matrix, state index ``m * S + s``."""
        if self._P is None:
            T, S, k = self.targets.shape
            rows = np.repeat(np.arange(T * S), k)
            nxt = (np.arange(T)[:, None, None] + 1) % T
            cols = (nxt * S + self.targets).ravel()
            self._P = sparse.csr_matrix((self.weights.ravel(), (rows, cols)), shape=(T * S, T * S))
        return self._P


def build_chain(pe):
    """Kernel of the environment chain for a :class:`PeriodizedEnvironment`."""
    T, S, k = pe.table.shape
    need = T * S * k * 8 * 4
    if need > budget_bytes():
        raise BudgetExceeded(f"build_chain: needs {need / 2**20:.1f} MB")
    grid = pe.grid
    tg = np.stack([pe.flat_index(grid + e) for e in pe.U.vectors], axis=1)
    targets = np.broadcast_to(tg, (T, S, k))
    weights = np.asarray(pe.table)
    rows = np.repeat(np.arange(S), k)
    slices = [sparse.csr_matrix((weights[m].ravel(), (rows, tg.ravel())), shape=(S, S)) for m in range(T)]
    return PeriodChain(pe, targets, weights, slices)


@dataclass
class StationaryMeasure:
    """Density ``phi_N`` over ``K_N`` (shape ``(N^2+1, (2N+1)^d)``)."""

    phi: np.ndarray
    N: int
    d: int
    residual: float
    init_gap: float
    iterations: int
    n_classes: int
    converged: bool
    U: list = field(default_factory=list)

    @property
    def irreducible(self):
        return self.n_classes == 1

    def flat(self):
        return self.phi.ravel()

    def header(self):
        blob = np.ascontiguousarray(self.phi, dtype="<f8").tobytes()
        return {"N": self.N, "d": self.d, "U": self.U, "shape": list(self.phi.shape),
                "dtype": "<f8", "checksum": hashlib.sha256(blob).hexdigest()}

    def dump(self, path_bin, path_json, extra=None):
        """Write ``phi`` as raw little-endian doubles plus a JSON header."""
        blob = np.ascontiguousarray(self.phi, dtype="<f8").tobytes()
        with open(path_bin, "wb") as fh:
            fh.write(blob)
        head = self.header()
        head["residual"] = self.residual
        head["init_gap"] = self.init_gap
        if extra:
            head.update(extra)
        with open(path_json, "w") as fh:
            json.dump(head, fh, indent=2, sort_keys=True)
        return head


def _period_map(slicesT, v):
    for Pt in slicesT:
        v = Pt @ v
    return v


def _fixed_point(slicesT, v, tol, max_iter):
    res = math.inf
    for it in range(1, max_iter + 1):
        w = _period_map(slicesT, v)
        res = np.abs(w - v).sum()
        v = 0.5 * (v + w)
        v /= v.sum()
        if res <= tol:
            return v, res, it, True
    return v, res, max_iter, False


def recurrent_classes(P):
    """Number of closed strongly connected classes of a sparse kernel."""
    n, lab = connected_components(P, directed=True, connection="strong")
    if n == 1:
        return 1
    coo = P.tocoo()
    leaving = lab[coo.row] != lab[coo.col]
    open_cls = np.unique(lab[coo.row[leaving & (coo.data > 0)]])
    return int(n - open_cls.size)


def stationary(chain, tol=1e-12, max_iter=100_000, seed=0, n_inits=2, raise_on_failure=True):
    """Stationary density of the environment chain.

    The fixed point of the one-period map is found by lazy power iteration
    from the uniform vector and from ``n_inits`` random positive vectors; the
    reported ``init_gap`` is the largest L1 distance between results.
    ``residual`` is ``||phi P - phi||_1`` for the full space-time kernel.
    """
    T, S = chain.period, chain.n_sites
    slicesT = [Pm.T.tocsr() for Pm in chain.slices]
    inner_tol = tol * 1e-2
    v, res0, iters, ok = _fixed_point(slicesT, np.full(S, 1.0 / S), inner_tol, max_iter)
    gap = 0.0
    for j in range(n_inits):
        u0 = _rng.uniform(seed, _rng.TAG_INIT, j, np.arange(S))
        w, _, it2, ok2 = _fixed_point(slicesT, u0 / u0.sum(), inner_tol, max_iter)
        gap = max(gap, float(np.abs(w - v).sum()))
        iters = max(iters, it2)
        ok = ok and ok2
    phi = np.empty((T, S))
    phi[0] = v
    for m in range(1, T):
        phi[m] = slicesT[m - 1] @ phi[m - 1]
    phi /= T * math.fsum(phi[0])
    residual = float(np.abs(chain.P.T @ phi.ravel() - phi.ravel()).sum())
    n_cls = recurrent_classes(chain.P)
    if n_cls > 1:
        warnings.warn(f"environment chain has {n_cls} closed classes; the stationary measure is not unique",
                      RuntimeWarning, stacklevel=2)
    converged = bool(ok and residual <= tol)
    sm = StationaryMeasure(phi, chain.N, chain.pe.d, residual, gap, iters, n_cls, converged, chain.pe.U.to_list())
    if not converged and raise_on_failure:
        raise NonConvergence(f"stationary: residual {residual:.3e} after {iters} period iterations", residual)
    return sm


@dataclass
class EffectiveCovariance:
    A: np.ndarray
    N: int
    mass: np.ndarray

    def to_dict(self):
        return {"A": self.A.tolist(), "N": self.N, "mass": self.mass.tolist()}


def covariance_A(sm, pe):
    """``a_ij = sum_e e_i e_j sum_{K_N} phi(x, n) omega_n(x, e)``."""
    # compensated sums keep constant environments exact to rounding
    prod = sm.phi[:, :, None] * pe.table
    mass = np.array([math.fsum(prod[..., j].ravel()) for j in range(pe.U.size)])
    U = pe.U.vectors.astype(np.float64)
    A = (U * mass[:, None]).T @ U
    return EffectiveCovariance(0.5 * (A + A.T), pe.N, mass)


def covariance_from_weights(U, w):
    """``sum_e e e^T w(e)`` for a single weight vector."""
    V = U.vectors.astype(np.float64)
    return (V * np.asarray(w, dtype=np.float64)[:, None]).T @ V


def integrate(sm, pe, g):
    """``int g d nu_N`` for a cylinder function ``g`` of the local weights."""
    T, S, k = pe.table.shape
    vals = np.asarray(g(pe.table.reshape(-1, k)), dtype=np.float64)
    return math.fsum(sm.phi.ravel() * vals)


def exit_domain_radius(U, N):
    """Largest Euclidean norm over the box ``|x|_inf <= N`` and its exits."""
    V = np.vstack([np.zeros(U.d), U.vectors])
    return float(np.max(np.sqrt(((N + np.abs(V)) ** 2).sum(axis=1))))


def density_constant(U, N, c2=None):
    """Constant ``C`` with ``int g d nu_N <= C ||g / eps_1||_{L^{d+1}(P_N)}``.

    From the resolvent bound ``int g d nu_N <= 2 (1 - rho) max f(0, 0)`` with
    ``rho = max(1/2, 1 - c2/N^2)``, the maximum principle on the exit domain
    ``D = {|y|_inf <= N} x {0..N^2}`` with radius ``R``, and
    ``||G/eps_a||_{D,d+1} = (#U)^(1/(d+1)) |K_N|^(1/(d+1)) ||g/eps_1||_{L^{d+1}(P_N)}``.
    """
    d = U.d
    if c2 is None:
        c2 = exit_time_constant(d, U.C_U)
    rho = max(0.5, 1.0 - c2 / N**2)
    R = exit_domain_radius(U, N)
    K = (2 * N + 1) ** d * (N * N + 1)
    return 2 * (1 - rho) * explicit_constant(U) * R ** (d / (d + 1)) * U.size ** (1 / (d + 1)) * K ** (1 / (d + 1))


@dataclass
class DensityBoundReport:
    integral: float
    norm: float
    ratio: float
    C: float
    unbounded: bool
    passed: bool

    def to_dict(self):
        return dict(self.__dict__)


def density_bound_check(sm, pe, g, C=None):
    """Ratio ``int g d nu_N / ||g / eps_1||_{L^{d+1}(P_N)}`` and comparison with ``C``."""
    T, S, k = pe.table.shape
    W = pe.table.reshape(-1, k)
    gv = np.asarray(g(W), dtype=np.float64)
    if np.any(gv < 0):
        raise ConfigError("g must be nonnegative")
    integral = math.fsum(sm.phi.ravel() * gv)
    eps = epsilon_batch(pe.U, W, 1.0)
    d = pe.d
    pos = gv > 0
    unbounded = bool(np.any(pos & (eps <= 0)))
    if unbounded:
        norm = math.inf
    else:
        q = np.zeros_like(gv)
        q[pos] = (gv[pos] / eps[pos]) ** (d + 1)
        norm = float(q.mean() ** (1 / (d + 1)))
    if integral == 0:
        ratio = 0.0
    elif norm == 0:
        ratio = math.inf
    else:
        ratio = integral / norm
    if C is None:
        C = density_constant(pe.U, pe.N)
    return DensityBoundReport(integral, norm, ratio, float(C), unbounded, bool(ratio <= C))


def _kernel(chain):
    return chain.P if hasattr(chain, "P") else sparse.csr_matrix(chain)


def r_operator(measure, chain):
    """One step of the environment chain applied to a measure (row vector)."""
    P = _kernel(chain)
    return P.T @ np.asarray(measure, dtype=np.float64)


def k_average(nu_k, chain, k):
    """``(1/k) sum_{i<k} nu_k R^i``."""
    P = _kernel(chain)
    acc = np.zeros_like(np.asarray(nu_k, dtype=np.float64))
    v = np.asarray(nu_k, dtype=np.float64)
    for _ in range(k):
        acc += v
        v = P.T @ v
    return acc / k


def invariant_k(chain, k, init=None, tol=1e-14, max_iter=100_000):
    """Fixed point of ``R^k`` followed by ``k``-averaging, which is ``R``-invariant."""
    P = _kernel(chain)
    n = P.shape[0]
    v = np.full(n, 1.0 / n) if init is None else np.asarray(init, dtype=np.float64) / np.sum(init)
    for _ in range(max_iter):
        w = v
        for _ in range(k):
            w = P.T @ w
        res = np.abs(w - v).sum()
        v = 0.5 * (v + w)
        if res <= tol:
            break
    else:
        raise NonConvergence("invariant_k did not converge", res)
    return k_average(v, P, k)


@dataclass
class NSweepReport:
    N: list
    A: list
    residuals: list
    differences: list
    decreasing: bool
    order: float
    extrapolated: list

    def to_dict(self):
        return {"N": self.N, "A": [a.tolist() for a in self.A], "residuals": self.residuals,
                "differences": self.differences, "decreasing": self.decreasing,
                "order": self.order, "extrapolated": self.extrapolated}


def n_sweep(env, N_list, tol=1e-12):
    """Effective covariance ``A(N)`` over increasing ``N``.

    Reports successive Frobenius differences and, when three values are
    available, a Richardson-style estimate assuming ``|A(N) - A| ~ N^-p``.
    The extrapolated value is a trend indicator, not a limit.
    """
    N_list = list(N_list)
    if any(b <= a for a, b in zip(N_list, N_list[1:])):
        raise ConfigError("N_list must be increasing")
    As, res = [], []
    for N in N_list:
        pe = periodize(env, N)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            sm = stationary(build_chain(pe), tol=tol)
        As.append(covariance_A(sm, pe).A)
        res.append(sm.residual)
    diffs = [float(np.linalg.norm(b - a)) for a, b in zip(As, As[1:])]
    dec = all(b <= a + 1e-15 for a, b in zip(diffs, diffs[1:]))
    order, extra = float("nan"), As[-1].tolist()
    if len(diffs) >= 2 and diffs[-1] > 1e-14 and diffs[-2] > 1e-14:
        n0, n1, n2 = N_list[-3:]
        r = diffs[-2] / diffs[-1]
        if r > 1:
            order = math.log(r) / math.log(n2 / n1)
            q = (n2 / n1) ** order
            extra = (As[-1] + (As[-1] - As[-2]) / (q - 1)).tolist()
    return NSweepReport(N_list, As, res, diffs, dec, order, extra)
