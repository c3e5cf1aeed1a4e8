"""Quenched walk simulation, exact n-step kernels and CLT statistics.

Step ``k`` of replica ``r`` uses the uniform keyed by ``(seed, r, k)``, so a
replica's path does not depend on which other replicas are simulated with
it or in which order.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import _rng
from .env import _points, budget_bytes
from .errors import BudgetExceeded, ConfigError


def sample_index(W, u):
    """Categorical draw per row of ``W`` from uniforms ``u`` (inverse CDF)."""
    cum = np.cumsum(W, axis=1)
    target = u * cum[:, -1]
    idx = (target[:, None] >= cum[:, :-1]).sum(axis=1)
    return idx


@dataclass
class WalkPath:
    start: tuple
    positions: np.ndarray
    seed: int
    replica: int

    @property
    def horizon(self):
        return self.positions.shape[0] - 1


def _replica_prefix(seed, replicas):
    return _rng.hash_keys(seed, _rng.TAG_WALK, np.asarray(replicas, dtype=np.int64))


def simulate_many(env, horizon, seed, replicas, start=None, start_time=0, record=False, chunk=None):
    """Simulate independent replicas in lockstep.

    Parameters
    ----------
    env : Environment
    horizon : int
        Number of steps.
    seed : int
    replicas : int or array_like
        Replica ids (``int`` means ``range(replicas)``).
    start : array_like, optional
        Start point(s), broadcast to ``(k, d)``; the origin by default.
    start_time : int
    record : bool
        Keep full paths, shape ``(horizon + 1, k, d)``.

    Returns
    -------
    ndarray
        Final positions ``(k, d)``, or the recorded paths.
    """
    if horizon < 0:
        raise ConfigError("horizon must be nonnegative")
    replicas = np.arange(replicas) if np.isscalar(replicas) else np.asarray(replicas, dtype=np.int64)
    k, d = replicas.shape[0], env.d
    if start is None:
        start = np.zeros(d, dtype=np.int64)
    pos = np.array(np.broadcast_to(np.asarray(start, dtype=np.int64), (k, d)))
    if chunk is not None and k > chunk and not record:
        return np.concatenate([
            simulate_many(env, horizon, seed, replicas[s: s + chunk], pos[s: s + chunk], start_time)
            for s in range(0, k, chunk)])
    prefix = _replica_prefix(seed, replicas)
    steps = env.U.vectors
    path = [pos.copy()] if record else None
    for step in range(horizon):
        W = env.weights(start_time + step, pos)
        u = _rng.to_unit(_rng.extend(prefix, np.int64(step)))
        pos += steps[sample_index(W, u)]
        if record:
            path.append(pos.copy())
    return np.stack(path) if record else pos


def simulate(env, start, horizon, seed, replica=0, start_time=0):
    """Single quenched path of length ``horizon`` from ``(start, start_time)``."""
    start = _points(start, env.d)[0]
    path = simulate_many(env, horizon, seed, [replica], start, start_time, record=True)
    return WalkPath((tuple(start.tolist()), int(start_time)), path[:, 0, :], int(seed), int(replica))


def write_paths_csv(paths, fh):
    """CSV rows ``replica, step, x1..xd`` for a list of :class:`WalkPath`."""
    w = csv.writer(fh)
    d = paths[0].positions.shape[1] if paths else 0
    w.writerow(["replica", "step"] + [f"x{i + 1}" for i in range(d)])
    for p in paths:
        for s, x in enumerate(p.positions.tolist()):
            w.writerow([p.replica, s] + x)


@dataclass
class StepKernel:
    """Exact law of ``X_m`` for the walk started at ``base``."""

    base: tuple
    horizon: int
    points: np.ndarray
    probs: np.ndarray

    def prob(self, y):
        y = np.asarray(y, dtype=np.int64).reshape(-1)
        hit = np.all(self.points == y, axis=1)
        return float(self.probs[hit].sum())

    def as_dict(self):
        return {tuple(p): float(q) for p, q in zip(self.points.tolist(), self.probs)}

    @property
    def total(self):
        return float(self.probs.sum())


def n_step_kernel(env, x, n0, m, max_support=None):
    """Forward convolution of the one-step kernels over ``m`` steps.

    Points are kept in lexicographic order (``np.unique``), so the summation
    order is canonical.
    """
    if m < 0:
        raise ConfigError("m must be nonnegative")
    d = env.d
    x = _points(x, d)[0]
    if max_support is None:
        max_support = budget_bytes() // (8 * (d + 2) * env.U.size)
    pts = x[None, :].copy()
    probs = np.ones(1)
    for k in range(m):
        if pts.shape[0] * env.U.size > max_support:
            raise BudgetExceeded(f"n_step_kernel: support {pts.shape[0]} after {k} steps exceeds the budget")
        W = env.weights(n0 + k, pts)
        tgt = (pts[:, None, :] + env.U.vectors[None]).reshape(-1, d)
        mass = (probs[:, None] * W).ravel()
        pts, inv = np.unique(tgt, axis=0, return_inverse=True)
        probs = np.bincount(inv.ravel(), weights=mass, minlength=pts.shape[0])
        keep = probs > 0
        pts, probs = pts[keep], probs[keep]
    return StepKernel((tuple(x.tolist()), int(n0)), int(m), pts, probs)


def exit_time_constant(d, C_U):
    """``c2 = ceil(64 d^2 C_U^2 ln 4)``.

    With ``K = (N / (8 d C_U))^2`` the exit time from the box of radius ``N``
    exceeds ``K`` with probability at most ``1/4``; ``(1 - c/N^2)^K <= 1/4``
    for every ``c >= c2`` then gives ``E[(1 - c/N^2)^tau] <= 1/2``.
    """
    return int(math.ceil(64 * d * d * C_U * C_U * math.log(4) - 1e-9))


@dataclass
class ExitStatistic:
    mean: float
    stderr: float
    rho: float
    N: int
    c: float
    per_start: list
    max_tau: int

    def to_dict(self):
        return dict(self.__dict__)


def tau1_statistic(env, N, c, M, seed, starts=None):
    """Monte Carlo ``E[(1 - c/N^2)^tau_1]`` from one or more starting states.

    ``tau_1`` is the first ``i`` with ``|X_i - X_0|_inf > N`` or ``i > N^2``.
    Each start ``(x, n)`` stands for the shifted environment
    ``theta_{n,x} env``; the reported mean is the largest over starts.
    """
    if N <= 0 or N % 2:
        raise ConfigError("N must be a positive even integer")
    rho = 1.0 - c / N**2
    if not 0.0 < rho <= 1.0:
        raise ConfigError(f"rho = 1 - c/N^2 = {rho:.4g} is outside (0, 1]: N is below the admissible range for c = {c}")
    if starts is None:
        starts = [(np.zeros(env.d, dtype=np.int64), 0)]
    per_start = []
    max_tau = 0
    for j, (x0, n0) in enumerate(starts):
        x0 = _points(x0, env.d)[0]
        replicas = np.arange(j * M, (j + 1) * M, dtype=np.int64)
        prefix = _replica_prefix(seed, replicas)
        pos = np.broadcast_to(x0, (M, env.d)).copy()
        tau = np.full(M, N * N + 1, dtype=np.int64)
        alive = np.ones(M, dtype=bool)
        for i in range(1, N * N + 1):
            idx = np.flatnonzero(alive)
            if idx.size == 0:
                break
            W = env.weights(n0 + i - 1, pos[idx])
            u = _rng.to_unit(_rng.extend(prefix[idx], np.int64(i - 1)))
            pos[idx] += env.U.vectors[sample_index(W, u)]
            out = np.abs(pos[idx] - x0).max(axis=1) > N
            tau[idx[out]] = i
            alive[idx[out]] = False
        vals = rho ** tau.astype(np.float64)
        per_start.append((float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(M))))
        max_tau = max(max_tau, int(tau.max()))
    j = int(np.argmax([p[0] for p in per_start]))
    return ExitStatistic(per_start[j][0], per_start[j][1], rho, int(N), float(c), per_start, max_tau)


@dataclass
class CovarianceEstimate:
    """Sample covariance of ``X / sqrt(scale)`` with per-entry standard errors."""

    matrix: np.ndarray
    stderr: np.ndarray
    M: int
    scale: float
    mean: np.ndarray
    mean_stderr: np.ndarray

    @property
    def drift(self):
        return float(np.linalg.norm(self.mean))

    def to_dict(self):
        return {"matrix": self.matrix.tolist(), "stderr": self.stderr.tolist(), "M": self.M,
                "scale": self.scale, "mean": self.mean.tolist(), "mean_stderr": self.mean_stderr.tolist(),
                "drift": self.drift}


def covariance_from_samples(samples, scale=1.0):
    """Covariance estimate of ``samples / sqrt(scale)`` (rows are replicas)."""
    s = np.asarray(samples, dtype=np.float64) / math.sqrt(scale)
    M = s.shape[0]
    if M < 2:
        raise ConfigError("need at least two samples")
    mu = s.mean(axis=0)
    c = s - mu
    prod = c[:, :, None] * c[:, None, :]
    cov = prod.sum(axis=0) / (M - 1)
    se = prod.std(axis=0, ddof=1) / math.sqrt(M)
    return CovarianceEstimate(cov, se, M, float(scale), mu, s.std(axis=0, ddof=1) / math.sqrt(M))


def empirical_covariance(env, M, n, seed, start=None, chunk=50_000):
    """Sample covariance of ``X_n / sqrt(n)`` over ``M`` replicas."""
    if M < 100:
        raise ConfigError("M must be at least 100")
    X = simulate_many(env, n, seed, M, start, chunk=chunk)
    if start is not None:
        X = X - np.asarray(start, dtype=np.int64)
    est = covariance_from_samples(X, n)
    est.samples = X / math.sqrt(n)
    return est


@dataclass
class GaussianityReport:
    kurtosis: np.ndarray
    kurtosis_stderr: float
    chi2: np.ndarray
    pvalues: np.ndarray
    alpha: float
    passed: bool

    def to_dict(self):
        return {"kurtosis": self.kurtosis.tolist(), "kurtosis_stderr": self.kurtosis_stderr,
                "chi2": self.chi2.tolist(), "pvalues": self.pvalues.tolist(), "alpha": self.alpha,
                "passed": self.passed}


def gaussianity_report(samples, alpha=0.01, bins=20, kurtosis_sigmas=4.0):
    """Standardized fourth moments and chi-square tests against a fitted Gaussian.

    Samples are whitened with the sample covariance; each coordinate is binned
    into ``bins`` equiprobable standard-normal cells.  The test passes when
    every kurtosis is within ``kurtosis_sigmas`` standard errors of 3 and the
    smallest chi-square p-value exceeds ``alpha / d`` (Bonferroni).
    """
    s = np.asarray(samples, dtype=np.float64)
    if s.ndim == 1:
        s = s[:, None]
    M, d = s.shape
    c = s - s.mean(axis=0)
    cov = c.T @ c / (M - 1)
    try:
        L = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        nan = np.full(d, np.nan)
        return GaussianityReport(nan, float("nan"), nan, np.zeros(d), alpha, False)
    z = np.linalg.solve(L, c.T).T
    kurt = (z**4).mean(axis=0)
    kse = math.sqrt(24.0 / M)
    edges = stats.norm.ppf(np.linspace(0, 1, bins + 1)[1:-1])
    expected = M / bins
    chi2 = np.empty(d)
    for i in range(d):
        counts = np.bincount(np.searchsorted(edges, z[:, i]), minlength=bins)
        chi2[i] = ((counts - expected) ** 2 / expected).sum()
    pvals = stats.chi2.sf(chi2, bins - 3)
    ok = bool(np.all(np.abs(kurt - 3) <= kurtosis_sigmas * kse) and pvals.min() > alpha / d)
    return GaussianityReport(kurt, kse, chi2, pvals, alpha, ok)
