"""Jump ranges, probability vectors and seeded environment generators.

An environment assigns to every space-time point ``(n, x)`` a probability
vector on a finite jump range ``U``.  All generators here are pure functions
of ``(seed, n, x)``: randomness comes from the counter-based hash in
:mod:`rwre._rng`, so queries can be made in any order and from any worker.

The query interface is vectorized: ``env.weights(n, x)`` takes ``k`` points
and returns a ``(k, #U)`` array whose columns follow ``env.U.vectors``.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaincinv

from . import _rng
from .errors import BudgetExceeded, ConfigError

BALANCE_TOL = 1e-12
SUM_TOL = 1e-12


def budget_bytes():
    """Memory budget in bytes, from ``RWRE_BUDGET_MB`` (default 2048)."""
    return int(float(os.environ.get("RWRE_BUDGET_MB", "2048")) * 2**20)


def _lex_positive(v):
    nz = np.flatnonzero(v)
    return nz.size > 0 and v[nz[0]] > 0


class JumpRange:
    """A finite set ``U`` of distinct integer vectors in ``Z^d``.

    Parameters
    ----------
    elements : array_like
        ``(m, d)`` integer array, or a flat sequence of integers for ``d = 1``.
    """

    def __init__(self, elements):
        arr = np.asarray(elements)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
            raise ConfigError("jump range must be a nonempty (m, d) array")
        if not np.all(np.equal(np.mod(arr, 1), 0)):
            raise ConfigError("jump range elements must have integer coordinates")
        arr = arr.astype(np.int64)
        if np.unique(arr, axis=0).shape[0] != arr.shape[0]:
            raise ConfigError("jump range elements must be distinct")
        arr.setflags(write=False)
        self.vectors = arr
        self.C_U = float(np.max(np.linalg.norm(arr, axis=1)))
        self.elliptic = bool(np.linalg.matrix_rank(arr.astype(float)) == arr.shape[1])
        rows = {tuple(v): i for i, v in enumerate(arr.tolist())}
        self._rows = rows
        self.zero_index = rows.get((0,) * self.d)
        self.symmetric = all(tuple(-v) in rows for v in arr)
        if self.symmetric:
            self.negation = np.array([rows[tuple(-v)] for v in arr], dtype=np.int64)
        else:
            self.negation = None

    @property
    def d(self):
        return self.vectors.shape[1]

    @property
    def size(self):
        """Cardinality ``#U``, counting the zero vector when present."""
        return self.vectors.shape[0]

    def __len__(self):
        return self.size

    def index(self, e):
        key = tuple(int(c) for c in np.atleast_1d(e))
        try:
            return self._rows[key]
        except KeyError:
            raise KeyError(f"{key} is not in the jump range") from None

    def pair_classes(self):
        """Group indices into ``{0}`` and ``{e, -e}`` classes (symmetric U only).

        Returns
        -------
        classes : list of tuple of int
            The zero class (if present) first, then one pair per
            lexicographically positive representative.
        """
        if not self.symmetric:
            raise ConfigError("pair classes require a symmetric jump range")
        classes = []
        if self.zero_index is not None:
            classes.append((self.zero_index,))
        for i, v in enumerate(self.vectors):
            if _lex_positive(v):
                classes.append((i, int(self.negation[i])))
        return classes

    def to_list(self):
        return self.vectors.tolist()

    def __eq__(self, other):
        return isinstance(other, JumpRange) and np.array_equal(self.vectors, other.vectors)

    def __hash__(self):
        return hash(self.vectors.tobytes())

    def __repr__(self):
        return f"JumpRange({self.to_list()})"

    @classmethod
    def nearest_neighbor(cls, d, lazy=False):
        """``{±e_1, ..., ±e_d}``, preceded by ``0`` when ``lazy``."""
        rows = [[0] * d] if lazy else []
        for i in range(d):
            for s in (1, -1):
                v = [0] * d
                v[i] = s
                rows.append(v)
        return cls(rows)


@dataclass(frozen=True, eq=False)
class ProbabilityVector:
    """Weights on a jump range.

    ``strict=False`` allows zero weights; this is only meant for degenerate
    test inputs and is never produced by the generators.
    """

    U: JumpRange
    weights: np.ndarray
    strict: bool = True

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        if w.shape[0] != self.U.size:
            raise ConfigError("weight vector length does not match the jump range")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ConfigError("weights must be finite and nonnegative")
        if self.strict and np.any(w <= 0):
            raise ConfigError("weights must be strictly positive")
        if abs(w.sum() - 1.0) > SUM_TOL:
            raise ConfigError(f"weights sum to {w.sum()!r}, not 1")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def drift(self):
        return self.weights @ self.U.vectors

    @property
    def balanced(self):
        return bool(np.max(np.abs(self.drift)) <= BALANCE_TOL)

    def __getitem__(self, e):
        return float(self.weights[self.U.index(e)])

    @classmethod
    def from_mapping(cls, mapping, strict=True):
        keys = [tuple(np.atleast_1d(k).tolist()) for k in mapping]
        U = JumpRange(keys)
        return cls(U, np.array(list(mapping.values()), dtype=float), strict=strict)


def _points(x, d):
    """Coerce ``x`` to a ``(k, d)`` int64 array."""
    x = np.asarray(x, dtype=np.int64)
    if x.ndim == 0:
        x = x.reshape(1, 1)
    elif x.ndim == 1:
        x = x.reshape(-1, 1) if d == 1 else x.reshape(1, d)
    if x.shape[1] != d:
        raise ConfigError(f"expected points of dimension {d}, got {x.shape[1]}")
    return x


_REGISTRY = {}


def _register(cls):
    _REGISTRY[cls.generator] = cls
    return cls


class Environment:
    """Base class for environments with a vectorized query.

    Subclasses implement ``_weights(n, x)`` for ``n`` of shape ``(k,)`` and
    ``x`` of shape ``(k, d)``, plus ``params()`` and ``_from_params``.
    """

    generator = "abstract"

    def __init__(self, U, seed=0):
        self.U = U if isinstance(U, JumpRange) else JumpRange(U)
        self.seed = int(seed)

    @property
    def d(self):
        return self.U.d

    def weights(self, n, x):
        """Weights ``omega_n(x, .)`` for a batch of points, shape ``(k, #U)``."""
        x = _points(x, self.d)
        n = np.broadcast_to(np.asarray(n, dtype=np.int64), (x.shape[0],))
        return self._weights(n, x)

    def vector(self, n, x, strict=True):
        return ProbabilityVector(self.U, self.weights(n, x)[0], strict=strict)

    def window(self, times, radius):
        """Weights on ``times x [-radius, radius]^d``, shape ``(T, (2r+1)^d, #U)``."""
        grid = box_points(radius, self.d)
        return np.stack([self.weights(t, grid) for t in times])

    def shift(self, m, y):
        """The space-time shift ``theta_{m,y}``."""
        return ShiftedEnvironment(self, m, y)

    def params(self):
        raise NotImplementedError

    def descriptor(self):
        return {
            "generator": self.generator,
            "d": int(self.d),
            "U": self.U.to_list(),
            "params": self.params(),
            "seed": self.seed,
        }

    def to_json(self):
        return json.dumps(self.descriptor(), sort_keys=True)

    @staticmethod
    def from_descriptor(desc):
        if isinstance(desc, str):
            desc = json.loads(desc)
        try:
            cls = _REGISTRY[desc["generator"]]
        except KeyError:
            raise ConfigError(f"unknown generator {desc.get('generator')!r}") from None
        U = JumpRange(desc["U"])
        if U.d != desc.get("d", U.d):
            raise ConfigError("descriptor dimension does not match U")
        return cls._from_params(U, desc.get("params", {}), desc.get("seed", 0))

    def __repr__(self):
        return f"{type(self).__name__}({self.to_json()})"


def box_points(radius, d):
    """Lattice points of ``[-radius, radius]^d`` in C order."""
    side = np.arange(-radius, radius + 1, dtype=np.int64)
    mesh = np.meshgrid(*([side] * d), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


@_register
class ConstantEnvironment(Environment):
    """The same vector at every point (uniform on U by default)."""

    generator = "constant"

    def __init__(self, U, weights=None, seed=0, strict=True):
        super().__init__(U, seed)
        if weights is None:
            weights = np.full(self.U.size, 1.0 / self.U.size)
        self.vec = ProbabilityVector(self.U, weights, strict=strict)

    def _weights(self, n, x):
        return np.broadcast_to(self.vec.weights, (x.shape[0], self.U.size)).copy()

    def params(self):
        return {"weights": self.vec.weights.tolist(), "strict": self.vec.strict}

    @classmethod
    def _from_params(cls, U, params, seed):
        return cls(U, params.get("weights"), seed, params.get("strict", True))


def uniform_environment(d=2, lazy=True):
    """Uniform walk on ``{0, ±e_i}`` (or ``{±e_i}`` when not lazy)."""
    return ConstantEnvironment(JumpRange.nearest_neighbor(d, lazy=lazy))


@_register
class IIDBalancedEnvironment(Environment):
    """Independent balanced vectors at each space-time point.

    Each pair class ``{e, -e}`` (and ``{0}``) receives a Gamma(concentration)
    mass; masses are normalized and split equally inside a pair, then mixed
    with the floor: ``w = floor + (1 - floor * #U) * w_raw``.
    """

    generator = "iid_balanced"

    def __init__(self, U, seed=0, floor=0.0, concentration=1.0):
        super().__init__(U, seed)
        if not self.U.symmetric:
            raise ConfigError("i.i.d. balanced generation requires a symmetric jump range")
        if not 0.0 <= floor * self.U.size < 1.0:
            raise ConfigError("floor * #U must lie in [0, 1)")
        if concentration <= 0:
            raise ConfigError("concentration must be positive")
        self.floor = float(floor)
        self.concentration = float(concentration)
        classes = self.U.pair_classes()
        self._n_classes = len(classes)
        self._class_of = np.empty(self.U.size, dtype=np.int64)
        self._class_size = np.empty(self.U.size)
        for j, c in enumerate(classes):
            self._class_of[list(c)] = j
            self._class_size[list(c)] = len(c)

    def _weights(self, n, x):
        keys = [x[:, i] for i in range(self.d)]
        cls = np.arange(self._n_classes, dtype=np.int64)
        u = _rng.uniform(self.seed, _rng.TAG_ENV, n[:, None], *[k[:, None] for k in keys], cls[None, :])
        if self.concentration == 1.0:
            g = -np.log1p(-u)
        else:
            g = gammaincinv(self.concentration, u)
        raw = g / g.sum(axis=1, keepdims=True)
        w = raw[:, self._class_of] / self._class_size
        return self.floor + (1.0 - self.floor * self.U.size) * w

    def mean_weight(self, e):
        """Law mean of ``omega_0(0, e)``."""
        i = self.U.index(e)
        raw = 1.0 / (self._n_classes * self._class_size[i])
        return self.floor + (1.0 - self.floor * self.U.size) * raw

    def params(self):
        return {"floor": self.floor, "concentration": self.concentration}

    @classmethod
    def _from_params(cls, U, params, seed):
        return cls(U, seed, params.get("floor", 0.0), params.get("concentration", 1.0))


def make_iid_balanced(U, seed, floor=0.0, concentration=1.0):
    """Seeded i.i.d. balanced environment on a symmetric jump range."""
    return IIDBalancedEnvironment(U, seed, floor=floor, concentration=concentration)


@_register
class ParityEnvironment(Environment):
    """``even`` where ``|x|_1 + n`` is even, ``odd`` elsewhere."""

    generator = "parity"

    def __init__(self, U, even, odd, seed=0):
        super().__init__(U, seed)
        self.even = ProbabilityVector(self.U, even)
        self.odd = ProbabilityVector(self.U, odd)

    def _weights(self, n, x):
        par = (np.abs(x).sum(axis=1) + n) % 2
        return np.where(par[:, None] == 0, self.even.weights, self.odd.weights)

    def params(self):
        return {"even": self.even.weights.tolist(), "odd": self.odd.weights.tolist()}

    @classmethod
    def _from_params(cls, U, params, seed):
        return cls(U, params["even"], params["odd"], seed)


COUNTEREXAMPLE_U = JumpRange([[1, 0], [-1, 0], [0, 1], [0, -1]])
COUNTEREXAMPLE_P = np.array([0.25, 0.25, 0.25, 0.25])
COUNTEREXAMPLE_Q = np.array([1 / 6, 1 / 6, 1 / 3, 1 / 3])


def make_counterexample(variant="xi"):
    """Parity environment with a non-unique effective covariance.

    ``variant="xi"`` uses the uniform vector ``p`` on even sites and ``q``
    (``q(±e1) = 1/6``, ``q(±e2) = 1/3``) on odd sites; ``"xi_prime"`` swaps
    them.  Shifting ``xi`` by one time step gives ``xi_prime``.
    """
    if variant in ("xi", "ξ"):
        return ParityEnvironment(COUNTEREXAMPLE_U, COUNTEREXAMPLE_P, COUNTEREXAMPLE_Q)
    if variant in ("xi_prime", "xi'", "ξ′"):
        return ParityEnvironment(COUNTEREXAMPLE_U, COUNTEREXAMPLE_Q, COUNTEREXAMPLE_P)
    raise ConfigError(f"unknown counterexample variant {variant!r}")


@_register
class TimePeriodicEnvironment(Environment):
    """Space-homogeneous environment cycling through a list of vectors."""

    generator = "time_periodic"

    def __init__(self, U, vectors, seed=0):
        super().__init__(U, seed)
        vs = [ProbabilityVector(self.U, v) for v in vectors]
        if not vs:
            raise ConfigError("need at least one vector")
        self.table = np.stack([v.weights for v in vs])

    def _weights(self, n, x):
        return self.table[n % self.table.shape[0]]

    def params(self):
        return {"vectors": self.table.tolist()}

    @classmethod
    def _from_params(cls, U, params, seed):
        return cls(U, params["vectors"], seed)


@_register
class LookupEnvironment(Environment):
    """Explicit weights on ``{0..T-1} x [-radius, radius]^d``, ``default`` elsewhere.

    Zero entries are allowed, so degenerate (non-elliptic) points can be
    placed deliberately.

    ``table`` has shape ``(T, (2 radius + 1)^d, #U)`` with sites in
    :func:`box_points` order.
    """

    generator = "lookup"

    def __init__(self, U, table, radius, default=None, seed=0):
        super().__init__(U, seed)
        table = np.asarray(table, dtype=np.float64)
        self.radius = int(radius)
        side = 2 * self.radius + 1
        if table.ndim != 3 or table.shape[1:] != (side**self.d, self.U.size):
            raise ConfigError("table must have shape (T, (2r+1)^d, #U)")
        if np.any(table < 0) or not np.all(np.isfinite(table)) or np.any(np.abs(table.sum(axis=2) - 1) > SUM_TOL):
            raise ConfigError("table rows must be probability vectors")
        self.table = table
        if default is None:
            default = np.full(self.U.size, 1.0 / self.U.size)
        self.default = ProbabilityVector(self.U, default)

    def _weights(self, n, x):
        r, side = self.radius, 2 * self.radius + 1
        inside = np.all(np.abs(x) <= r, axis=1) & (n >= 0) & (n < self.table.shape[0])
        out = np.broadcast_to(self.default.weights, (x.shape[0], self.U.size)).copy()
        if inside.any():
            flat = np.zeros(int(inside.sum()), dtype=np.int64)
            for i in range(self.d):
                flat = flat * side + (x[inside, i] + r)
            out[inside] = self.table[n[inside], flat]
        return out

    def params(self):
        return {"table": self.table.tolist(), "radius": self.radius, "default": self.default.weights.tolist()}

    @classmethod
    def _from_params(cls, U, params, seed):
        return cls(U, params["table"], params["radius"], params.get("default"), seed)


@_register
class CompositeStaticEnvironment(Environment):
    """Static environment autonomous in the first ``d1`` coordinates.

    The first block follows ``alpha``, an i.i.d. conductance walk on
    ``Z^{d1}`` made lazy with probability ``r``; a move in the second block
    (or a pause) happens with probability ``alpha(x1, 0)`` and is then
    distributed by ``beta``, i.i.d. balanced weights on the lazy
    nearest-neighbour range of ``Z^{d2}`` drawn independently at every ``x``.
    Weights are

    * ``omega(x, e) = alpha(x1, e1)`` for first-block moves,
    * ``omega(x, e) = alpha(x1, 0) * beta(x, e2)`` for ``e = 0`` and
      second-block moves.
    """

    generator = "composite_static"

    def __init__(self, d1, d2, r=0.5, conductance=(0.5, 1.5), beta_floor=0.05, seed=0):
        if not 0.0 < r <= 1.0:
            raise ConfigError("laziness r must lie in (0, 1]")
        lo, hi = conductance
        if not 0.0 < lo <= hi:
            raise ConfigError("conductances must be positive")
        rows = [[0] * (d1 + d2)]
        for i in range(d1):
            for s in (1, -1):
                v = [0] * (d1 + d2)
                v[i] = s
                rows.append(v)
        for i in range(d2):
            for s in (1, -1):
                v = [0] * (d1 + d2)
                v[d1 + i] = s
                rows.append(v)
        super().__init__(JumpRange(rows), seed)
        self.d1, self.d2, self.r = int(d1), int(d2), float(r)
        self.conductance = (float(lo), float(hi))
        if not 0.0 <= beta_floor * (1 + 2 * d2) < 1.0:
            raise ConfigError("beta_floor * (1 + 2 d2) must lie in [0, 1)")
        self.beta_floor = float(beta_floor)

    def _edge(self, x1, axis):
        # conductance of the edge {x1, x1 + e_axis}
        lo, hi = self.conductance
        u = _rng.uniform(self.seed, _rng.TAG_COMPOSITE, axis, *[x1[:, i] for i in range(self.d1)])
        return lo + (hi - lo) * u

    def alpha(self, x1):
        """First-block weights ``(k, 1 + 2 d1)`` ordered as ``0, +e1, -e1, ...``."""
        x1 = np.asarray(x1, dtype=np.int64).reshape(-1, self.d1)
        cond = []
        for i in range(self.d1):
            back = x1.copy()
            back[:, i] -= 1
            cond.append(self._edge(x1, i))
            cond.append(self._edge(back, i))
        cond = np.stack(cond, axis=1)
        moves = (1.0 - self.r) * cond / cond.sum(axis=1, keepdims=True)
        return np.concatenate([np.full((x1.shape[0], 1), self.r), moves], axis=1)

    def _weights(self, n, x):
        a = self.alpha(x[:, : self.d1])
        b = self._beta(x)
        out = np.empty((x.shape[0], self.U.size))
        out[:, 0] = a[:, 0] * b[:, 0]
        out[:, 1: 1 + 2 * self.d1] = a[:, 1:]
        out[:, 1 + 2 * self.d1:] = a[:, :1] * b[:, 1:]
        return out

    def _beta(self, x):
        # i.i.d. balanced weights on the lazy second-block range, keyed by the full point
        salt = _rng.hash_keys(self.seed, _rng.TAG_COMPOSITE, -1, *[x[:, i] for i in range(self.d1)])
        z = x[:, self.d1:]
        keys = [z[:, i] for i in range(self.d2)]
        cls = np.arange(self.d2 + 1, dtype=np.int64)
        u = _rng.to_unit(_rng.extend(salt[:, None], *[k[:, None] for k in keys], cls[None, :]))
        g = -np.log1p(-u)
        raw = g / g.sum(axis=1, keepdims=True)
        w = np.empty((x.shape[0], 1 + 2 * self.d2))
        w[:, 0] = raw[:, 0]
        w[:, 1::2] = raw[:, 1:] / 2
        w[:, 2::2] = raw[:, 1:] / 2
        m = 1 + 2 * self.d2
        return self.beta_floor + (1.0 - self.beta_floor * m) * w

    def params(self):
        return {"d1": self.d1, "d2": self.d2, "r": self.r,
                "conductance": list(self.conductance), "beta_floor": self.beta_floor}

    @classmethod
    def _from_params(cls, U, params, seed):
        env = cls(params["d1"], params["d2"], params.get("r", 0.5),
                  tuple(params.get("conductance", (0.5, 1.5))), params.get("beta_floor", 0.05), seed)
        if env.U != U:
            raise ConfigError("descriptor U does not match the composite construction")
        return env


def make_composite_static(d1, d2, r=0.5, conductance=(0.5, 1.5), beta_floor=0.05, seed=0):
    return CompositeStaticEnvironment(d1, d2, r, conductance, beta_floor, seed)


@_register
class ShiftedEnvironment(Environment):
    """``(theta_{m,y} omega)_n(x) = omega_{n+m}(x+y)``; nested shifts collapse."""

    generator = "shifted"

    def __init__(self, base, m, y):
        y = np.asarray(y, dtype=np.int64).reshape(-1)
        if isinstance(base, ShiftedEnvironment):
            m, y, base = m + base.m, y + base.y, base.base
        super().__init__(base.U, base.seed)
        if y.shape[0] != base.d:
            raise ConfigError("shift vector has the wrong dimension")
        self.base, self.m, self.y = base, int(m), y

    def _weights(self, n, x):
        return self.base._weights(n + self.m, x + self.y)

    def params(self):
        return {"base": self.base.descriptor(), "m": self.m, "y": self.y.tolist()}

    @classmethod
    def _from_params(cls, U, params, seed):
        return cls(Environment.from_descriptor(params["base"]), params["m"], params["y"])


@_register
class PeriodizedEnvironment(Environment):
    """Wrap-around copy of ``base`` restricted to ``K_N``.

    ``K_N = {|z|_inf <= N} x {0, ..., N^2}``; the periods are ``2N+1`` in
    each space direction and ``N^2+1`` in time.  ``table`` has shape
    ``(N^2+1, (2N+1)^d, #U)`` with space in C order starting at ``-N``.
    """

    generator = "periodized"

    def __init__(self, base, N):
        N = int(N)
        if N < 2 or N % 2:
            raise ConfigError("N must be an even integer >= 2")
        super().__init__(base.U, base.seed)
        d = base.d
        side, period = 2 * N + 1, N * N + 1
        nbytes = side**d * period * base.U.size * 8
        if nbytes > budget_bytes():
            raise BudgetExceeded(
                f"periodize: table needs {nbytes / 2**20:.1f} MB, budget is {budget_bytes() / 2**20:.0f} MB")
        self.base, self.N, self.side, self.period = base, N, side, period
        self.grid = box_points(N, d)
        table = np.stack([base.weights(t, self.grid) for t in range(period)])
        table.setflags(write=False)
        self.table = table
        self._strides = side ** np.arange(d - 1, -1, -1, dtype=np.int64)

    @property
    def n_sites(self):
        return self.side**self.d

    def flat_index(self, x):
        """Flat spatial index of the wrapped points ``x``."""
        x = _points(x, self.d)
        return ((x + self.N) % self.side) @ self._strides

    def _weights(self, n, x):
        return self.table[n % self.period, self.flat_index(x)]

    def params(self):
        return {"N": self.N, "base": self.base.descriptor()}

    @classmethod
    def _from_params(cls, U, params, seed):
        return cls(Environment.from_descriptor(params["base"]), params["N"])


def periodize(env, N):
    """Periodized environment on the space-time torus of ``K_N``."""
    return PeriodizedEnvironment(env, N)


@dataclass
class BalanceReport:
    max_abs_drift: float
    worst_point: tuple
    n_points: int
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = bool(self.max_abs_drift <= BALANCE_TOL)


def check_balanced(env, x, n):
    """Largest drift ``|sum_e e omega_n(x, e)|_inf`` over the given points.

    Parameters
    ----------
    env : Environment
    x : array_like
        ``(k, d)`` points (or a single point).
    n : array_like
        Times, broadcast against ``x``.
    """
    x = _points(x, env.d)
    if x.shape[0] == 0:
        raise ConfigError("region must be nonempty")
    n = np.broadcast_to(np.asarray(n, dtype=np.int64), (x.shape[0],))
    drift = np.abs(env.weights(n, x) @ env.U.vectors).max(axis=1)
    i = int(np.argmax(drift))
    return BalanceReport(float(drift[i]), (tuple(x[i].tolist()), int(n[i])), x.shape[0])


def check_vector_balanced(vec):
    """Balance report for a single :class:`ProbabilityVector`."""
    drift = np.abs(vec.drift)
    return BalanceReport(float(drift.max()), (), 1)
