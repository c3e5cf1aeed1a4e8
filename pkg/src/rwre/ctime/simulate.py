"""Event-driven simulation of continuous-time walks and the slowed process.

The engine advances a batch of independent walkers in environment time
``s``.  For piecewise-constant environments each iteration draws an
exponential holding time at the current total rate ``upsilon`` and truncates
it at the next breakpoint, so no event is ever rejected.  Other
environments are simulated by thinning against ``rate_bound`` over a
window.

Alongside ``s`` every walker carries the clock ``t(s) = int_0^s (upsilon + 1)``,
integrated exactly between events.  The slowed process is
``Y_t = X_{T_t}`` with ``T`` the inverse of this clock, so
``T_t = int_0^t dr / (upsilon(Y_r, T_r) + 1)``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .. import _rng
from ..errors import ConfigError, ExplosionSuspect
from ..walk import covariance_from_samples, sample_index

EV_JUMP, EV_BREAK, EV_REJECT, EV_END = 0, 1, 2, 3
EVENT_NAMES = {EV_JUMP: "jump", EV_BREAK: "breakpoint", EV_REJECT: "thinning-reject", EV_END: "end"}


@dataclass
class BatchResult:
    x: np.ndarray
    s: np.ndarray
    clock: np.ndarray
    jumps: np.ndarray
    exploded: np.ndarray
    truncated: np.ndarray
    rejections: np.ndarray
    tau: np.ndarray
    records: dict = None


def run_batch(env, seed, replicas, start=None, t0=0.0, horizon=math.inf, clock_horizon=math.inf,
              exit_radius=None, exit_time=math.inf, record=False, max_events=1_000_000, window=1.0):
    """Advance walkers until a stopping rule fires.

    Parameters
    ----------
    horizon : float
        Stop at environment time ``horizon``.
    clock_horizon : float
        Stop when the slowed clock reaches this value (piecewise-constant
        environments only).
    exit_radius, exit_time : optional
        Stop at the first jump with ``|X - X_0|_inf > exit_radius`` or when
        the environment time exceeds ``exit_time``; ``tau`` records the clock.
    max_events : int
        Per-walker jump budget; walkers exceeding it are flagged ``exploded``.
    """
    if not env.piecewise_constant and math.isfinite(clock_horizon):
        raise ConfigError("the slowed clock needs a piecewise-constant environment")
    replicas = np.arange(replicas) if np.isscalar(replicas) else np.asarray(replicas, dtype=np.int64)
    k, d = replicas.shape[0], env.d
    pref = _rng.hash_keys(seed, _rng.TAG_CT, replicas)
    x0 = np.zeros(d, dtype=np.int64) if start is None else np.asarray(start, dtype=np.int64)
    x = np.array(np.broadcast_to(x0, (k, d)))
    xs = x.copy()
    s = np.full(k, float(t0))
    clock = np.zeros(k)
    jumps = np.zeros(k, dtype=np.int64)
    counter = np.zeros(k, dtype=np.int64)
    rej = np.zeros(k, dtype=np.int64)
    exploded = np.zeros(k, dtype=bool)
    truncated = np.zeros(k, dtype=bool)
    tau = np.full(k, np.nan)
    active = np.ones(k, dtype=bool)
    s_end = min(horizon, exit_time, env.time_horizon)
    rec = {"w": [], "s": [], "clock": [], "x": [], "type": [], "ups": []} if record else None
    if record:
        _log(rec, np.arange(k), s, clock, x, EV_BREAK, np.full(k, np.nan))
    vecs = env.U.vectors
    while active.any():
        a = np.flatnonzero(active)
        R = env.rates(x[a], s[a])
        ups = R.sum(axis=1)
        if env.piecewise_constant:
            bp = env.next_breakpoint(x[a], s[a])
            bound = ups
        else:
            bp = s[a] + window
            bound = env.rate_bound(x[a], s[a], bp)
        u1 = _rng.to_unit(_rng.extend(pref[a], counter[a], np.int64(0)))
        with np.errstate(divide="ignore"):
            E = -np.log(u1) / bound
        cand = s[a] + E
        lim_clock = s[a] + (clock_horizon - clock[a]) / (ups + 1.0) if math.isfinite(clock_horizon) else np.full(a.size, math.inf)
        lims = np.stack([np.full(a.size, s_end), bp, lim_clock], axis=1)
        which = np.argmin(lims, axis=1)
        s_lim = lims[np.arange(a.size), which]
        jump = cand < s_lim
        # walkers reaching a limit first
        nj = ~jump
        if nj.any():
            b = a[nj]
            dt = s_lim[nj] - s[b]
            clock[b] += (ups[nj] + 1.0) * dt
            s[b] = s_lim[nj]
            stop = which[nj] != 1
            hit_clock = which[nj] == 2
            clock[b[hit_clock]] = clock_horizon
            if exit_radius is not None:
                timed = stop & (s[b] >= exit_time)
                tau[b[timed]] = clock[b[timed]]
            trunc = stop & (s[b] >= env.time_horizon) & (env.time_horizon < min(horizon, exit_time))
            truncated[b[trunc]] = True
            active[b[stop]] = False
            if record:
                _log(rec, b, s, clock, x, np.where(stop, EV_END, EV_BREAK), ups[nj])
        if jump.any():
            b = a[jump]
            dt = E[jump]
            if env.piecewise_constant:
                clock[b] += (ups[jump] + 1.0) * dt
            else:
                clock[b] = np.nan
            s[b] = cand[jump]
            u2 = _rng.to_unit(_rng.extend(pref[b], counter[b], np.int64(1)))
            if env.piecewise_constant:
                W = R[jump]
                accept = np.ones(b.size, dtype=bool)
            else:
                W = env.rates(x[b], s[b])
                u3 = _rng.to_unit(_rng.extend(pref[b], counter[b], np.int64(2)))
                accept = u3 * bound[jump] < W.sum(axis=1)
                rej[b[~accept]] += 1
                if record and (~accept).any():
                    _log(rec, b[~accept], s, clock, x, EV_REJECT, ups[jump][~accept])
            if accept.any():
                c = b[accept]
                x[c] += vecs[sample_index(W[accept], u2[accept])]
                jumps[c] += 1
                if record:
                    _log(rec, c, s, clock, x, EV_JUMP, ups[jump][accept])
                boom = jumps[c] >= max_events
                exploded[c[boom]] = True
                active[c[boom]] = False
                if exit_radius is not None:
                    out = np.abs(x[c] - xs[c]).max(axis=1) > exit_radius
                    tau[c[out]] = clock[c[out]]
                    active[c[out]] = False
        counter[a] += 1
    return BatchResult(x, s, clock, jumps, exploded, truncated, rej, tau, _pack(rec) if record else None)


def _log(rec, w, s, clock, x, typ, ups):
    rec["w"].append(np.asarray(w))
    rec["s"].append(s[w].copy())
    rec["clock"].append(clock[w].copy())
    rec["x"].append(x[w].copy())
    rec["type"].append(np.broadcast_to(typ, (len(w),)).copy())
    rec["ups"].append(np.broadcast_to(ups, (len(w),)).copy())


def _pack(rec):
    out = {key: np.concatenate(val) for key, val in rec.items()}
    order = np.argsort(out["w"], kind="stable")
    return {key: val[order] for key, val in out.items()}


@dataclass
class CTPath:
    """Jump times and positions of one walker (first entry is the start)."""

    times: np.ndarray
    positions: np.ndarray
    horizon: float
    rejections: int
    exploded: bool
    log: list = field(default_factory=list)

    @property
    def events(self):
        return self.times.shape[0] - 1

    def write_log(self, fh):
        w = csv.writer(fh)
        d = self.positions.shape[1]
        w.writerow(["t"] + [f"x{i + 1}" for i in range(d)] + ["event"])
        for t, x, kind in self.log:
            w.writerow([repr(float(t))] + list(x) + [kind])


@dataclass
class SlowedPath:
    """Slowed process: ``Y`` jumps at clock times, ``T`` piecewise linear.

    ``clock_t`` / ``clock_T`` are the clock and environment time at every
    event (including breakpoints), so ``T`` is linear between consecutive
    entries with slope ``1 / (upsilon + 1)``.
    """

    jump_times: np.ndarray
    positions: np.ndarray
    clock_t: np.ndarray
    clock_T: np.ndarray
    horizon: float
    exploded: bool

    def T(self, t):
        return np.interp(t, self.clock_t, self.clock_T)

    def Y(self, t):
        i = np.searchsorted(self.jump_times, t, side="right") - 1
        return self.positions[i]


def _split(records, k):
    w = records["w"]
    bounds = np.searchsorted(w, np.arange(k + 1))
    return [{key: val[bounds[i]: bounds[i + 1]] for key, val in records.items()} for i in range(k)]


def simulate_ct(env, horizon, seed, replica=0, start=None, t0=0.0, max_events=1_000_000):
    """One path on ``[t0, horizon]``; raises :class:`ExplosionSuspect` past the event budget."""
    res = run_batch(env, seed, [replica], start, t0, horizon=horizon, record=True, max_events=max_events)
    r = _split(res.records, 1)[0]
    if res.exploded[0]:
        raise ExplosionSuspect(f"simulate_ct: more than {max_events} jumps before t = {horizon}")
    jm = r["type"] == EV_JUMP
    times = np.concatenate([[t0], r["s"][jm]])
    pos = np.concatenate([r["x"][:1], r["x"][jm]])
    log = [(t, xx.tolist(), EVENT_NAMES[int(ty)]) for t, xx, ty in zip(r["s"], r["x"], r["type"])]
    return CTPath(times, pos, float(horizon), int(res.rejections[0]), False, log)


def simulate_ct_batch(env, horizon, seed, M, start=None, max_events=1_000_000):
    """Final positions of ``M`` walkers at time ``horizon``."""
    return run_batch(env, seed, M, start, horizon=horizon, max_events=max_events)


def _slowed_from_records(r, horizon, exploded):
    jm = r["type"] == EV_JUMP
    return SlowedPath(np.concatenate([[0.0], r["clock"][jm]]), np.concatenate([r["x"][:1], r["x"][jm]]),
                      r["clock"], r["s"], float(horizon), bool(exploded))


def slowed_process(env, horizon, seed, replica=0, start=None, max_events=1_000_000):
    """The slowed process ``(Y_t, T_t)`` for ``t in [0, horizon]``."""
    res = run_batch(env, seed, [replica], start, clock_horizon=horizon, record=True, max_events=max_events)
    if res.truncated[0]:
        raise ConfigError("environment time horizon reached before the clock horizon")
    if res.exploded[0]:
        raise ExplosionSuspect(f"slowed_process: more than {max_events} jumps before t = {horizon}")
    return _slowed_from_records(_split(res.records, 1)[0], horizon, False)


def slowed_batch(env, horizon, seed, M, start=None, max_events=1_000_000, record=False):
    """Run ``M`` slowed walkers to clock time ``horizon``."""
    res = run_batch(env, seed, M, start, clock_horizon=horizon, max_events=max_events, record=record)
    if res.truncated.any():
        raise ConfigError("environment time horizon reached before the clock horizon")
    return res


def slowed_paths(env, horizon, seed, M, max_events=1_000_000):
    res = slowed_batch(env, horizon, seed, M, max_events=max_events, record=True)
    return [_slowed_from_records(r, horizon, e) for r, e in zip(_split(res.records, M), res.exploded)]


def unslow(spath):
    """Inverse time change: the ``X`` jump times ``T(t_k)`` of a slowed path."""
    return spath.T(spath.jump_times[1:]), spath.positions[1:]


@dataclass
class ExplosionReport:
    event_counts: np.ndarray
    exploded: np.ndarray
    checkpoints: np.ndarray
    ratio_mean: np.ndarray
    ratio_band: np.ndarray
    limit: float
    band: float
    stabilized: bool
    in_unit_interval: bool

    @property
    def passed(self):
        return bool(self.in_unit_interval and not self.exploded.any())

    def to_dict(self):
        return {"event_counts": self.event_counts.tolist(), "exploded": self.exploded.tolist(),
                "checkpoints": self.checkpoints.tolist(), "ratio_mean": self.ratio_mean.tolist(),
                "ratio_band": self.ratio_band.tolist(), "limit": self.limit, "band": self.band,
                "stabilized": self.stabilized, "in_unit_interval": self.in_unit_interval}


def explosion_report(checkpoints, T_values, event_counts, exploded, stabilize_tol=None):
    """Summaries of ``T_t / t`` over walkers.

    Parameters
    ----------
    checkpoints : ndarray
        Clock times ``t_j``, increasing.
    T_values : ndarray
        ``(M, J)`` environment times ``T_{t_j}`` per walker.
    event_counts, exploded : ndarray
        Per-walker jump counts and budget flags; flagged walkers are
        excluded from every average.

    ``band`` is the width of the 95% confidence interval of the mean ratio
    at the last checkpoint.  ``stabilized`` compares the means at the last
    two checkpoints with ``stabilize_tol`` (default: the band).
    """
    cp = np.asarray(checkpoints, dtype=np.float64)
    T = np.asarray(T_values, dtype=np.float64)
    ok = ~np.asarray(exploded, dtype=bool)
    ratio = T[ok] / cp[None, :]
    n = max(int(ok.sum()), 1)
    mean = ratio.mean(axis=0) if ok.any() else np.full(cp.shape, np.nan)
    sd = ratio.std(axis=0, ddof=1) if ok.sum() > 1 else np.full(cp.shape, np.nan)
    band = 2 * 1.96 * sd / math.sqrt(n)
    tol = band[-1] if stabilize_tol is None else stabilize_tol
    stab = bool(cp.size >= 2 and abs(mean[-1] - mean[-2]) <= max(tol, band[-2]))
    lim = float(mean[-1])
    return ExplosionReport(np.asarray(event_counts), np.asarray(exploded, dtype=bool), cp, mean, band, lim,
                           float(band[-1]), stab, bool(0.0 < lim < 1.0))


def clock_checkpoints(paths, checkpoints):
    """``T`` at the given clock times for a list of :class:`SlowedPath`."""
    return np.array([p.T(checkpoints) for p in paths])


def ct_covariance(env, M, t, seed, max_events=1_000_000, slowed=False):
    """Sample covariance of ``X_t / sqrt(t)`` (or ``Y_t / sqrt(t)`` when ``slowed``)."""
    if M < 100:
        raise ConfigError("M must be at least 100")
    if slowed:
        res = run_batch(env, seed, M, clock_horizon=t, max_events=max_events)
    else:
        res = run_batch(env, seed, M, horizon=t, max_events=max_events)
    if res.exploded.any():
        raise ExplosionSuspect(f"ct_covariance: {int(res.exploded.sum())} paths exceeded the event budget")
    est = covariance_from_samples(res.x, t)
    est.batch = res
    return est


def slowed_exit_constant(C_U):
    """``c = ceil(4 C_U^2 ln 4)``.

    The slowed walk is a martingale whose generator has total rate
    ``upsilon / (upsilon + 1) < 1`` and jumps of norm at most ``C_U``, so
    ``|Y_t|^2 - C_U^2 t`` is a supermartingale and Doob's inequality gives
    ``P(sup_{t <= K} |Y_t| > N) <= C_U^2 K / N^2``.  Since ``T_K <= K``, the
    choice ``K = N^2 / (4 C_U^2)`` yields ``P(tau_1 <= K) <= 1/4``, and
    ``E[rho^tau_1] <= 1/4 + rho^K <= 1/2`` once ``c >= 4 C_U^2 ln 4``.
    """
    return int(math.ceil(4 * C_U * C_U * math.log(4) - 1e-9))


@dataclass
class SlowedExitStatistic:
    mean: float
    stderr: float
    rho: float
    N: int
    c: float
    exploded: int

    def to_dict(self):
        return dict(self.__dict__)


def slowed_exit_statistic(env, N, c, M, seed, max_events=1_000_000):
    """Monte Carlo ``E[(1 - c/N^2)^tau_1]`` for the slowed process.

    ``tau_1`` is the first clock time with ``|Y_t - Y_0|_inf > N`` or ``T_t > N^2``.
    """
    rho = 1.0 - c / N**2
    if not 0.0 < rho <= 1.0:
        raise ConfigError(f"rho = {rho:.4g} is outside (0, 1]")
    res = run_batch(env, seed, M, exit_radius=N, exit_time=float(N * N), max_events=max_events)
    if res.exploded.any():
        raise ExplosionSuspect("slowed_exit_statistic: event budget exceeded")
    vals = rho ** res.tau
    return SlowedExitStatistic(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(M)), rho, int(N), float(c),
                               int(res.exploded.sum()))
