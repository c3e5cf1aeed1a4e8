"""Continuous-time environments: positive, balanced jump rates ``omega_t(x, e)``.

Rates are queried in batches: ``rates(x, t)`` with ``x`` of shape ``(k, d)``
and ``t`` of shape ``(k,)`` returns ``(k, #U)``.  Piecewise-constant
environments also report ``next_breakpoint(x, t)``, the first time after
``t`` at which the rates at ``x`` may change; other environments provide
``rate_bound`` for thinning.
"""
from __future__ import annotations

import math

import numpy as np

from .. import _rng
from ..env import Environment, JumpRange, _points
from ..errors import ConfigError


class ContinuousEnvironment:
    piecewise_constant = True
    time_horizon = math.inf
    generator = "abstract"

    def __init__(self, U, seed=0):
        self.U = U if isinstance(U, JumpRange) else JumpRange(U)
        self.seed = int(seed)

    @property
    def d(self):
        return self.U.d

    def _coerce(self, x, t):
        x = _points(x, self.d)
        t = np.broadcast_to(np.asarray(t, dtype=np.float64), (x.shape[0],))
        return x, t

    def rates(self, x, t):
        x, t = self._coerce(x, t)
        return self._rates(x, t)

    def next_breakpoint(self, x, t):
        x, t = self._coerce(x, t)
        return np.full(x.shape[0], math.inf)

    def rate_bound(self, x, t0, t1):
        """Upper bound on the total rate over ``[t0, t1]``."""
        return self.rates(x, t0).sum(axis=1)

    def total_rate(self, x, t):
        return self.rates(x, t).sum(axis=1)

    def params(self):
        return {}

    def descriptor(self):
        return {"generator": self.generator, "d": self.d, "U": self.U.to_list(),
                "params": self.params(), "seed": self.seed}


class ConstantRates(ContinuousEnvironment):
    """The same rate vector everywhere."""

    generator = "ct_constant"

    def __init__(self, U, rates=None, seed=0):
        super().__init__(U, seed)
        r = np.ones(self.U.size) if rates is None else np.asarray(rates, dtype=np.float64).reshape(-1)
        if r.shape[0] != self.U.size or np.any(r < 0):
            raise ConfigError("rates must be nonnegative, one per element of U")
        self.r = r

    def _rates(self, x, t):
        return np.broadcast_to(self.r, (x.shape[0], self.U.size)).copy()

    def params(self):
        return {"rates": self.r.tolist()}


class IIDRates(ContinuousEnvironment):
    """Independent symmetric rates, refreshed on a time grid of step ``dt``.

    Each pair class ``{e, -e}`` receives one rate drawn from ``law``:
    ``"uniform"`` on ``[low, high]`` or ``"pareto"`` with scale ``low`` and
    tail index ``shape``.  ``dt=None`` gives a static environment.
    """

    generator = "ct_iid"

    def __init__(self, U, seed=0, low=0.5, high=1.5, dt=None, law="uniform", shape=2.0):
        super().__init__(U, seed)
        if not self.U.symmetric:
            raise ConfigError("balanced i.i.d. rates require a symmetric jump range")
        if not 0 < low <= high:
            raise ConfigError("need 0 < low <= high")
        self.low, self.high, self.dt, self.law, self.shape = float(low), float(high), dt, law, float(shape)
        classes = [c for c in self.U.pair_classes() if len(c) == 2]
        self._cls = np.full(self.U.size, -1, dtype=np.int64)
        for j, c in enumerate(classes):
            self._cls[list(c)] = j
        self._ncls = len(classes)

    def _epoch(self, t):
        if self.dt is None:
            return np.zeros(t.shape[0], dtype=np.int64)
        ep = np.floor(t / self.dt).astype(np.int64)
        # breakpoints are the floats (k + 1) * dt; make sure each one opens epoch k + 1
        ep += (ep + 1) * self.dt <= t
        ep -= ep * self.dt > t
        return ep

    def _rates(self, x, t):
        ep = self._epoch(t)
        keys = [x[:, i][:, None] for i in range(self.d)]
        cls = np.arange(self._ncls, dtype=np.int64)[None, :]
        u = _rng.uniform(self.seed, _rng.TAG_CT + 100, ep[:, None], *keys, cls)
        if self.law == "uniform":
            r = self.low + (self.high - self.low) * u
        elif self.law == "pareto":
            r = self.low * u ** (-1.0 / self.shape)
        else:
            raise ConfigError(f"unknown rate law {self.law!r}")
        out = np.zeros((x.shape[0], self.U.size))
        m = self._cls >= 0
        out[:, m] = r[:, self._cls[m]]
        return out

    def next_breakpoint(self, x, t):
        x, t = self._coerce(x, t)
        if self.dt is None:
            return np.full(x.shape[0], math.inf)
        return (self._epoch(t) + 1) * self.dt

    def sample_local(self, M, seed):
        """Rate vectors at ``M`` independent space-time points."""
        j = np.arange(M, dtype=np.int64)
        x = np.stack([j] + [np.full(M, seed, dtype=np.int64)] * (self.d - 1), axis=1)
        return self._rates(x, np.zeros(M))

    def params(self):
        return {"low": self.low, "high": self.high, "dt": self.dt, "law": self.law, "shape": self.shape}


class ModulatedRates(ContinuousEnvironment):
    """Smoothly time-varying symmetric rates (not piecewise constant).

    ``omega_t(x, ±e_i) = base_i (1 + amplitude sin(frequency t + phase(x, i)))``
    with ``amplitude < 1``; simulated by thinning against
    ``base_i (1 + amplitude)``.
    """

    piecewise_constant = False
    generator = "ct_modulated"

    def __init__(self, U, base=None, amplitude=0.5, frequency=1.0, seed=0):
        super().__init__(U, seed)
        if not self.U.symmetric or not 0 <= amplitude < 1:
            raise ConfigError("need symmetric U and amplitude in [0, 1)")
        self.base = np.ones(self.U.size) if base is None else np.asarray(base, dtype=np.float64)
        self.amplitude, self.frequency = float(amplitude), float(frequency)
        classes = [c for c in self.U.pair_classes() if len(c) == 2]
        self._cls = np.zeros(self.U.size, dtype=np.int64)
        for j, c in enumerate(classes):
            self._cls[list(c)] = j
        if self.U.zero_index is not None:
            self.base = self.base.copy()
            self.base[self.U.zero_index] = 0.0

    def _rates(self, x, t):
        keys = [x[:, i][:, None] for i in range(self.d)]
        ph = 2 * np.pi * _rng.uniform(self.seed, _rng.TAG_CT + 200, *keys, self._cls[None, :])
        return self.base * (1 + self.amplitude * np.sin(self.frequency * t[:, None] + ph))

    def next_breakpoint(self, x, t):
        return None

    def rate_bound(self, x, t0, t1):
        x = _points(x, self.d)
        return np.full(x.shape[0], self.base.sum() * (1 + self.amplitude))

    def params(self):
        return {"base": self.base.tolist(), "amplitude": self.amplitude, "frequency": self.frequency}


def check_balanced_ct(env, x, t):
    """Largest ``|sum_e e omega_t(x, e)|_inf`` over sampled points."""
    R = env.rates(x, t)
    return float(np.abs(R @ env.U.vectors).max())


class JumpChainEnvironment(Environment):
    """Discrete environment ``omega / upsilon`` of a time-homogeneous rate field."""

    generator = "jump_chain"

    def __init__(self, ct_env):
        super().__init__(ct_env.U, ct_env.seed)
        self.ct = ct_env

    def _weights(self, n, x):
        R = self.ct.rates(x, np.zeros(x.shape[0]))
        return R / R.sum(axis=1, keepdims=True)

    def params(self):
        return {"ct": self.ct.descriptor()}


class UniformizedEnvironment(Environment):
    """Discrete-time chain with step ``h``: ``a(z) = h omega_{nh}(x, z)``, ``a(0) = 1 - h upsilon``.

    The jump range gains the zero vector if it lacks it.
    """

    generator = "uniformized"

    def __init__(self, ct_env, h):
        U = ct_env.U
        if U.zero_index is None:
            U = JumpRange(np.vstack([np.zeros((1, U.d), dtype=np.int64), U.vectors]))
        super().__init__(U, ct_env.seed)
        self.ct, self.h = ct_env, float(h)
        self._map = np.array([U.index(e) for e in ct_env.U.vectors])

    def _weights(self, n, x):
        R = self.ct.rates(x, n * self.h)
        W = np.zeros((x.shape[0], self.U.size))
        W[:, self._map] += self.h * R
        stay = 1.0 - self.h * R.sum(axis=1)
        if np.any(stay <= 0):
            raise ConfigError("uniformization step too large: h * upsilon >= 1")
        W[:, self.U.zero_index] += stay
        return W

    def params(self):
        return {"ct": self.ct.descriptor(), "h": self.h}
