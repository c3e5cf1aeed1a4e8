"""Monte Carlo estimate of the moment ``E[(upsilon^(d+1) + 1) / eps^(d+1)]``.

For a rate vector ``omega`` on ``U``, ``upsilon = sum_e omega(e)`` and
``eps^(d+1) = |conv{omega(e) e}|``.  A sampler returns ``(U, R)`` with ``R``
of shape ``(M, #U)``: rate vectors at independent space-time points.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..env import JumpRange
from ..errors import ConfigError
from ..geometry import hull_volumes_scaled
from .environment import IIDRates
from .zerorange import local_rate_samples


@dataclass
class MomentReport:
    mean: float
    stderr: float
    M: int
    max_sum_ratio: float
    running: np.ndarray
    running_at: np.ndarray
    stable: bool
    infinite: bool

    @property
    def finite(self):
        return not self.infinite and self.stable

    def to_dict(self):
        return {"mean": self.mean, "stderr": self.stderr, "M": self.M, "max_sum_ratio": self.max_sum_ratio,
                "running": self.running.tolist(), "running_at": self.running_at.tolist(),
                "stable": self.stable, "finite": self.finite}


def moment_statistic(U, R):
    """Per-sample ``(upsilon^(d+1) + 1) / |conv{omega(e) e}|``; ``inf`` on degenerate hulls."""
    U = U if isinstance(U, JumpRange) else JumpRange(U)
    R = np.asarray(R, dtype=np.float64)
    d = U.d
    ups = R.sum(axis=1)
    vol = hull_volumes_scaled(U, R)
    with np.errstate(divide="ignore"):
        return np.where(vol > 0, (ups ** (d + 1) + 1) / np.where(vol > 0, vol, 1.0), np.inf)


def moment_condition_ct(sampler, M, seed, heavy_ratio=0.05, drift_sigmas=4.0):
    """Estimate the moment and flag heavy tails.

    The running mean is recorded at ``M/16, M/8, ..., M``.  The estimate is
    called unstable when the mean over the first half and the full mean
    differ by more than ``drift_sigmas`` standard errors, or when one sample
    carries more than ``heavy_ratio`` of the total.
    """
    if M < 16:
        raise ConfigError("M must be at least 16")
    U, R = sampler(M, seed)
    s = moment_statistic(U, R)
    if not np.all(np.isfinite(s)):
        return MomentReport(math.inf, math.inf, M, 1.0, np.full(5, math.inf), M // 2 ** (4 - np.arange(5)), False,
                            True)
    at = np.array([M // 16, M // 8, M // 4, M // 2, M])
    csum = np.cumsum(s)
    running = csum[at - 1] / at
    mean = float(running[-1])
    se = float(s.std(ddof=1) / math.sqrt(M))
    ratio = float(s.max() / csum[-1])
    drift = abs(running[-2] - mean)
    stable = bool(ratio <= heavy_ratio and drift <= drift_sigmas * max(se, 1e-300))
    return MomentReport(mean, se, M, ratio, running, at, stable, False)


def constant_sampler(U, rates):
    U = U if isinstance(U, JumpRange) else JumpRange(U)
    r = np.asarray(rates, dtype=np.float64)

    def sample(M, seed):
        return U, np.broadcast_to(r, (M, U.size)).copy()
    return sample


def iid_sampler(U, **kwargs):
    """Local rates of :class:`IIDRates` (``law="pareto"`` for heavy tails)."""
    env = IIDRates(U, **kwargs)

    def sample(M, seed):
        return env.U, env.sample_local(M, seed)
    return sample


def zrp_sampler(g, alpha, u, d=2):
    """Rates ``u(e, eta)`` under the invariant product measure ``mu_alpha``."""
    U = JumpRange.nearest_neighbor(d, lazy=False)

    def sample(M, seed):
        return U, local_rate_samples(g, alpha, u, M, seed, d)
    return sample


def make_sampler(spec):
    """Sampler from a JSON descriptor ``{"kind": "constant" | "iid" | "zrp", ...}``."""
    kind = spec["kind"]
    d = int(spec.get("d", 2))
    if kind == "constant":
        U = JumpRange.nearest_neighbor(d, lazy=False)
        return constant_sampler(U, spec.get("rates", [1.0] * U.size))
    if kind == "iid":
        U = JumpRange.nearest_neighbor(d, lazy=False)
        kw = {k: spec[k] for k in ("low", "high", "law", "shape") if k in spec}
        return iid_sampler(U, **kw)
    if kind == "zrp":
        return zrp_sampler(spec.get("g", {"kind": "constant"}), float(spec["alpha"]), spec.get("u", {}), d)
    raise ConfigError(f"unknown sampler kind {kind!r}")
