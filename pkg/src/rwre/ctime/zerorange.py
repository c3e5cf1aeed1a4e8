"""Zero-range process on a torus and the walk environment it induces.

A site holding ``k`` particles emits one at rate ``g(k)`` to a uniformly
chosen nearest neighbour.  The product measures
``mu_alpha(k) = alpha^k / (Z(alpha) g(1) ... g(k))`` are invariant for
``alpha < alpha* = lim g``.  The walker sees the rates
``omega_t(x, ±e_i) = u(e_i, theta_x eta_t)`` with the affine local function

``u(e_i, eta) = base + self * min(eta(0), cap) + axis * (min(eta(e_i), cap) + min(eta(-e_i), cap))``

which is positive, symmetric in ``±e_i`` (hence balanced) and bounded.

Dynamics run in compiled kernels: a Gillespie loop with a Fenwick tree over
site rates.  ``zero_range_env`` records the event log for random-access
queries; ``zrp_slowed_walkers`` co-simulates walkers with the particle
system and records ``T_t / t`` without storing the log.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .. import _rng
from ..env import JumpRange, budget_bytes
from ..errors import BudgetExceeded, ConfigError
from .environment import ContinuousEnvironment
from .simulate import explosion_report

G_TABLE, G_LINEAR = 0, 1


@dataclass(frozen=True)
class RateFunction:
    """Jump rate ``g`` of the particle system.

    ``kind="table"`` uses ``g(k) = values[min(k, len) - 1]`` for ``k >= 1``
    (constant beyond the table); ``kind="linear"`` uses ``g(k) = rate * k``.
    """

    kind: str
    values: tuple = (1.0,)
    rate: float = 1.0

    def __post_init__(self):
        if self.kind == "table":
            v = np.asarray(self.values, dtype=np.float64)
            if v.size == 0 or v[0] <= 0 or np.any(np.diff(v) < 0):
                raise ConfigError("g must be positive and nondecreasing")
        elif self.kind == "linear":
            if self.rate <= 0:
                raise ConfigError("linear rate must be positive")
        else:
            raise ConfigError(f"unknown g kind {self.kind!r}")

    @classmethod
    def from_spec(cls, spec):
        if isinstance(spec, RateFunction):
            return spec
        kind = spec.get("kind", "table")
        if kind == "constant":
            return cls("table", (float(spec.get("rate", 1.0)),))
        if kind == "table":
            return cls("table", tuple(float(v) for v in spec["values"]))
        if kind == "linear":
            return cls("linear", rate=float(spec.get("rate", 1.0)))
        raise ConfigError(f"unknown g kind {kind!r}")

    def to_spec(self):
        if self.kind == "linear":
            return {"kind": "linear", "rate": self.rate}
        return {"kind": "table", "values": list(self.values)}

    def __call__(self, k):
        k = np.asarray(k, dtype=np.int64)
        if self.kind == "linear":
            return self.rate * k
        v = np.concatenate([[0.0], np.asarray(self.values, dtype=np.float64)])
        return v[np.minimum(k, len(self.values))]

    @property
    def alpha_star(self):
        return math.inf if self.kind == "linear" else float(self.values[-1])

    def kernel_args(self):
        if self.kind == "linear":
            return G_LINEAR, self.rate, np.zeros(1)
        return G_TABLE, 0.0, np.concatenate([[0.0], np.asarray(self.values, dtype=np.float64)])


def occupation_law(g, alpha, tail=1e-12):
    """Truncated ``mu_alpha``: returns ``(pmf, Z, K)`` with tail mass below ``tail``.

    ``pmf[k]`` for ``k = 0..K`` is normalized by the full partition function
    (the neglected tail is bounded by a geometric series).
    """
    g = RateFunction.from_spec(g)
    if not 0 < alpha < g.alpha_star:
        raise ConfigError(f"alpha must lie in (0, alpha*) = (0, {g.alpha_star})")
    terms = [1.0]
    k = 0
    while True:
        k += 1
        terms.append(terms[-1] * alpha / float(g(k)))
        ratio_bound = alpha / float(g(k + 1))
        # g may stay below alpha for a while; the geometric bound only applies once it exceeds it
        tail_bound = terms[-1] * ratio_bound / (1 - ratio_bound) if ratio_bound < 1 else math.inf
        if tail_bound < tail * sum(terms) or k > 100_000:
            break
    Z = math.fsum(terms) + tail_bound
    pmf = np.array(terms) / Z
    return pmf, Z, k


def partition_function(g, alpha, tail=1e-15):
    return occupation_law(g, alpha, tail)[1]


@dataclass
class ZeroRangeState:
    L: int
    d: int
    eta: np.ndarray
    g: RateFunction
    alpha: float
    truncation: int

    @property
    def particles(self):
        return int(self.eta.sum())


def sample_mu_alpha(g, alpha, L, d, seed):
    """Product ``mu_alpha`` on the torus ``Z_L^d`` by per-site inverse CDF."""
    g = RateFunction.from_spec(g)
    pmf, _, K = occupation_law(g, alpha)
    cdf = np.cumsum(pmf)
    u = _rng.uniform(seed, _rng.TAG_ZRP_INIT, np.arange(L**d))
    eta = np.minimum(np.searchsorted(cdf, u * cdf[-1], side="right"), K).astype(np.int64)
    return ZeroRangeState(int(L), int(d), eta, g, float(alpha), int(K))


@dataclass(frozen=True)
class LocalRates:
    """Affine local function ``u`` (see module docstring)."""

    base: float = 1.0
    self_coef: float = 0.0
    axis_coef: float = 0.0
    cap: int = 8

    def __post_init__(self):
        if self.base <= 0 or self.self_coef < 0 or self.axis_coef < 0 or self.cap < 0:
            raise ConfigError("u needs base > 0 and nonnegative coefficients")

    @classmethod
    def from_spec(cls, spec):
        if isinstance(spec, LocalRates):
            return spec
        return cls(float(spec.get("base", 1.0)), float(spec.get("self", 0.0)), float(spec.get("axis", 0.0)),
                   int(spec.get("cap", 8)))

    def to_spec(self):
        return {"kind": "affine", "base": self.base, "self": self.self_coef, "axis": self.axis_coef, "cap": self.cap}

    def evaluate(self, center, plus, minus):
        """``u(e_i, eta)`` from occupations at ``0``, ``e_i`` and ``-e_i``; arrays broadcast."""
        c = self.cap
        return (self.base + self.self_coef * np.minimum(center, c)
                + self.axis_coef * (np.minimum(plus, c) + np.minimum(minus, c)))

    @property
    def max_rate(self):
        return self.base + (self.self_coef + 2 * self.axis_coef) * self.cap


@njit(cache=True)
def _g(k, kind, rate, tab):
    if k <= 0:
        return 0.0
    if kind == 1:
        return rate * k
    if k >= tab.shape[0]:
        return tab[tab.shape[0] - 1]
    return tab[k]


@njit(cache=True)
def _fen_add(tree, i, delta):
    n = tree.shape[0] - 1
    i += 1
    while i <= n:
        tree[i] += delta
        i += i & (-i)


@njit(cache=True)
def _fen_build(vals):
    n = vals.shape[0]
    tree = np.zeros(n + 1)
    for i in range(n):
        _fen_add(tree, i, vals[i])
    return tree


@njit(cache=True)
def _fen_find(tree, target):
    # smallest i with prefix sum (0..i) > target
    n = tree.shape[0] - 1
    pos = 0
    step = 1
    while step * 2 <= n:
        step *= 2
    while step > 0:
        nxt = pos + step
        if nxt <= n and tree[nxt] <= target:
            pos = nxt
            target -= tree[nxt]
        step //= 2
    if pos >= n:
        pos = n - 1
    return pos


@njit(cache=True)
def _neighbor(site, L, d, axis, sgn):
    stride = 1
    for _ in range(d - 1 - axis):
        stride *= L
    c = (site // stride) % L
    nc = (c + sgn) % L
    return site + (nc - c) * stride


@njit(cache=True)
def _site_of(pos, L, d):
    s = 0
    for i in range(d):
        s = s * L + (pos[i] % L)
    return s


@njit(cache=True)
def _zrp_step(eta, rates, tree, L, d, kind, grate, gtab, prefix, counter):
    total = _fen_total(tree)
    r = _rng.uniform_nb(prefix, counter, 1) * total
    src = _fen_find(tree, r)
    while eta[src] == 0:
        # guard against rounding landing on an empty site
        src = (src + 1) % eta.shape[0]
    k = int(_rng.uniform_nb(prefix, counter, 2) * 2 * d)
    axis, sgn = k // 2, 1 - 2 * (k % 2)
    dst = _neighbor(src, L, d, axis, sgn)
    eta[src] -= 1
    eta[dst] += 1
    for s in (src, dst):
        nr = _g(eta[s], kind, grate, gtab)
        _fen_add(tree, s, nr - rates[s])
        rates[s] = nr
    return src, dst


@njit(cache=True)
def _fen_total(tree):
    n = tree.shape[0] - 1
    tot = 0.0
    i = n
    while i > 0:
        tot += tree[i]
        i -= i & (-i)
    return tot


@njit(cache=True)
def _zrp_log_kernel(eta, L, d, kind, grate, gtab, horizon, seed, max_events):
    n = eta.shape[0]
    rates = np.empty(n)
    for i in range(n):
        rates[i] = _g(eta[i], kind, grate, gtab)
    tree = _fen_build(rates)
    prefix = _rng.prefix_nb(seed, 6)
    times = np.empty(max_events)
    srcs = np.empty(max_events, dtype=np.int64)
    dsts = np.empty(max_events, dtype=np.int64)
    t = 0.0
    m = 0
    while True:
        total = _fen_total(tree)
        if total <= 0:
            break
        t += -math.log(_rng.uniform_nb(prefix, m, 0)) / total
        if t > horizon:
            break
        if m >= max_events:
            return times, srcs, dsts, -1
        s, q = _zrp_step(eta, rates, tree, L, d, kind, grate, gtab, prefix, m)
        times[m] = t
        srcs[m] = s
        dsts[m] = q
        m += 1
        if m % 65536 == 0:
            tree = _fen_build(rates)
    return times, srcs, dsts, m


def simulate_zero_range(state, horizon, seed, max_events=None):
    """Run the particle system on ``[0, horizon]``.

    Returns the event log ``(times, src, dst)`` and the final state; the
    initial state is not modified.
    """
    eta = state.eta.copy()
    kind, grate, gtab = state.g.kernel_args()
    if max_events is None:
        max_events = max(1024, budget_bytes() // 48)
    times, src, dst, m = _zrp_log_kernel(eta, state.L, state.d, kind, grate, gtab, float(horizon), int(seed),
                                         int(max_events))
    if m < 0:
        raise BudgetExceeded(f"zero-range event log exceeds {max_events} events")
    final = ZeroRangeState(state.L, state.d, eta, state.g, state.alpha, state.truncation)
    return times[:m].copy(), src[:m].copy(), dst[:m].copy(), final


@njit(cache=True)
def _local_counts(snaps, src, dst, every, ev, sites):
    k, q = sites.shape
    out = np.empty((k, q), dtype=np.int64)
    for i in range(k):
        e = ev[i]
        c = e // every
        for j in range(q):
            s = sites[i, j]
            v = snaps[c, s]
            for m in range(c * every, e):
                if src[m] == s:
                    v -= 1
                if dst[m] == s:
                    v += 1
            out[i, j] = v
    return out


class ZeroRangeEnvironment(ContinuousEnvironment):
    """Piecewise-constant rate field driven by a recorded zero-range path.

    Rates change only at particle events, so ``next_breakpoint`` is the next
    event time; the field is defined on ``[0, time_horizon]``.
    """

    generator = "zero_range"

    def __init__(self, state0, u, times, src, dst, horizon, seed, every=4096):
        super().__init__(JumpRange.nearest_neighbor(state0.d), seed)
        self.state0, self.u = state0, LocalRates.from_spec(u)
        self.times, self.src, self.dst = times, src, dst
        self.time_horizon = float(horizon)
        self.every = int(every)
        eta = state0.eta.copy()
        snaps = [eta.copy()]
        for c in range(1, times.size // every + 1):
            lo, hi = (c - 1) * every, c * every
            np.subtract.at(eta, src[lo:hi], 1)
            np.add.at(eta, dst[lo:hi], 1)
            snaps.append(eta.copy())
        self.snaps = np.stack(snaps)

    @property
    def L(self):
        return self.state0.L

    def _sites(self, x):
        L, d = self.L, self.d
        base = np.zeros(x.shape[0], dtype=np.int64)
        for i in range(d):
            base = base * L + np.mod(x[:, i], L)
        cols = [base]
        for i in range(d):
            stride = L ** (d - 1 - i)
            c = (base // stride) % L
            cols.append(base + (((c + 1) % L) - c) * stride)
            cols.append(base + (((c - 1) % L) - c) * stride)
        return np.stack(cols, axis=1)

    def occupation(self, x, t):
        x, t = self._coerce(x, t)
        ev = np.searchsorted(self.times, t, side="right")
        return _local_counts(self.snaps, self.src, self.dst, self.every, ev, self._sites(x))

    def _rates(self, x, t):
        occ = self.occupation(x, t)
        out = np.empty((x.shape[0], 2 * self.d))
        for i in range(self.d):
            r = self.u.evaluate(occ[:, 0], occ[:, 1 + 2 * i], occ[:, 2 + 2 * i])
            out[:, 2 * i] = r
            out[:, 2 * i + 1] = r
        return out

    def next_breakpoint(self, x, t):
        x, t = self._coerce(x, t)
        ev = np.searchsorted(self.times, t, side="right")
        nxt = np.full(t.shape[0], self.time_horizon)
        has = ev < self.times.size
        nxt[has] = self.times[ev[has]]
        return nxt

    def params(self):
        return {"L": self.L, "g": self.state0.g.to_spec(), "alpha": self.state0.alpha, "u": self.u.to_spec(),
                "horizon": self.time_horizon}


def zero_range_env(L, g, alpha, u, horizon, seed, d=2):
    """Sample ``eta_0 ~ mu_alpha``, run the particle system and wrap it as an environment."""
    state = sample_mu_alpha(g, alpha, L, d, seed)
    times, src, dst, final = simulate_zero_range(state, horizon, seed)
    env = ZeroRangeEnvironment(state, u, times, src, dst, horizon, seed)
    env.final_state = final
    return env


@njit(cache=True)
def _walker_rates(eta, site, L, d, ub, us, ua, cap, out):
    c0 = min(eta[site], cap)
    tot = 0.0
    for i in range(d):
        p = min(eta[_neighbor(site, L, d, i, 1)], cap)
        m = min(eta[_neighbor(site, L, d, i, -1)], cap)
        r = ub + us * c0 + ua * (p + m)
        out[2 * i] = r
        out[2 * i + 1] = r
        tot += 2 * r
    return tot


@njit(cache=True)
def _zrp_walkers_kernel(eta, L, d, kind, grate, gtab, ub, us, ua, cap, M, seed, clock_h, checkpoints,
                        max_jumps):
    n = eta.shape[0]
    rates = np.empty(n)
    for i in range(n):
        rates[i] = _g(eta[i], kind, grate, gtab)
    tree = _fen_build(rates)
    prefix = _rng.prefix_nb(seed, 6)
    wpref = _rng.prefix_nb(seed, 4)
    C = checkpoints.shape[0]
    pos = np.zeros((M, d), dtype=np.int64)
    wr = np.zeros((M, 2 * d))
    ups = np.zeros(M)
    clock = np.zeros(M)
    Tcp = np.full((M, C), np.nan)
    nxt = np.zeros(M, dtype=np.int64)
    jumps = np.zeros(M, dtype=np.int64)
    exploded = np.zeros(M, dtype=np.bool_)
    active = np.ones(M, dtype=np.bool_)
    for w in range(M):
        ups[w] = _walker_rates(eta, _site_of(pos[w], L, d), L, d, ub, us, ua, cap, wr[w])
    n_active = M
    s = 0.0
    m = 0
    zev = 0
    while n_active > 0:
        gz = _fen_total(tree)
        gw = 0.0
        for w in range(M):
            if active[w]:
                gw += ups[w]
        tot = gz + gw
        dt = -math.log(_rng.uniform_nb(prefix, m, 10)) / tot
        for w in range(M):
            if not active[w]:
                continue
            slope = ups[w] + 1.0
            newc = clock[w] + slope * dt
            while nxt[w] < C and checkpoints[nxt[w]] <= newc:
                Tcp[w, nxt[w]] = s + (checkpoints[nxt[w]] - clock[w]) / slope
                nxt[w] += 1
            clock[w] = newc
            if newc >= clock_h:
                active[w] = False
                n_active -= 1
        s += dt
        r = _rng.uniform_nb(prefix, m, 11) * tot
        if r < gz:
            src, dst = _zrp_step(eta, rates, tree, L, d, kind, grate, gtab, prefix, m)
            zev += 1
            if zev % 65536 == 0:
                tree = _fen_build(rates)
            for w in range(M):
                if active[w]:
                    ups[w] = _walker_rates(eta, _site_of(pos[w], L, d), L, d, ub, us, ua, cap, wr[w])
        else:
            r -= gz
            chosen = -1
            acc = 0.0
            last = -1
            for w in range(M):
                if active[w]:
                    last = w
                    acc += ups[w]
                    if r < acc:
                        chosen = w
                        break
            if chosen < 0:
                chosen = last
            if chosen >= 0 and active[chosen]:
                q = _rng.uniform_nb(wpref, m, chosen) * ups[chosen]
                acc = 0.0
                k = 2 * d - 1
                for j in range(2 * d):
                    acc += wr[chosen, j]
                    if q < acc:
                        k = j
                        break
                axis, sgn = k // 2, 1 - 2 * (k % 2)
                pos[chosen, axis] += sgn
                jumps[chosen] += 1
                ups[chosen] = _walker_rates(eta, _site_of(pos[chosen], L, d), L, d, ub, us, ua, cap, wr[chosen])
                if jumps[chosen] >= max_jumps:
                    exploded[chosen] = True
                    active[chosen] = False
                    n_active -= 1
        m += 1
    return Tcp, jumps, exploded, pos, s, zev


@dataclass
class ZRPWalkerResult:
    checkpoints: np.ndarray
    T: np.ndarray
    jumps: np.ndarray
    exploded: np.ndarray
    positions: np.ndarray
    particles_initial: int
    particles_final: int
    env_time: float
    zrp_events: int
    truncation: int

    @property
    def conserved(self):
        return self.particles_initial == self.particles_final

    def report(self):
        """``T_t / t`` summary as an :class:`ExplosionReport`."""
        return explosion_report(self.checkpoints, self.T, self.jumps, self.exploded)


def zrp_slowed_walkers(L, g, alpha, u, horizon, M, seed, d=2, checkpoints=None, max_jumps=10**8):
    """Slowed walkers co-simulated with the zero-range process.

    The particle system and the walkers share one Gillespie clock in
    environment time; each walker's slowed clock ``t`` grows at rate
    ``upsilon + 1`` and ``T_t`` is recorded at the given clock checkpoints.
    All walkers start at the origin of the same ``eta_0 ~ mu_alpha``.
    """
    g = RateFunction.from_spec(g)
    u = LocalRates.from_spec(u)
    state = sample_mu_alpha(g, alpha, L, d, seed)
    if checkpoints is None:
        checkpoints = horizon * np.array([1 / 16, 1 / 8, 1 / 4, 1 / 2, 3 / 4, 1.0])
    cp = np.asarray(checkpoints, dtype=np.float64)
    eta = state.eta.copy()
    kind, grate, gtab = g.kernel_args()
    Tcp, jumps, exploded, pos, s, zev = _zrp_walkers_kernel(
        eta, state.L, d, kind, grate, gtab, u.base, u.self_coef, u.axis_coef, u.cap, int(M), int(seed),
        float(horizon), cp, int(max_jumps))
    return ZRPWalkerResult(cp, Tcp, jumps, exploded, pos, state.particles, int(eta.sum()), float(s), int(zev),
                           state.truncation)


def local_rate_samples(g, alpha, u, M, seed, d=2):
    """Rate vectors ``u(±e_i, eta)`` under ``eta ~ mu_alpha``, one row per sample.

    Only the occupations at ``0`` and ``±e_i`` enter ``u``; they are drawn
    independently from the one-site marginal.
    """
    g, u = RateFunction.from_spec(g), LocalRates.from_spec(u)
    pmf, _, K = occupation_law(g, alpha)
    cdf = np.cumsum(pmf)
    w = _rng.uniform(seed, _rng.TAG_SAMPLER, np.arange(M)[:, None], np.arange(2 * d + 1)[None, :])
    occ = np.minimum(np.searchsorted(cdf, w * cdf[-1], side="right"), K)
    out = np.empty((M, 2 * d))
    for i in range(d):
        r = u.evaluate(occ[:, 0], occ[:, 1 + 2 * i], occ[:, 2 + 2 * i])
        out[:, 2 * i] = r
        out[:, 2 * i + 1] = r
    return out
