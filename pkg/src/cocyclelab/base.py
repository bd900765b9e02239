"""Hyperbolic base dynamics: two-sided full shift and toral automorphism.

Both realizations expose the same small surface: orbit stepping, the base
metric, measure sampling with per-point seed substreams, the local bracket
(stable/unstable intersection), and a leaf-contraction diagnostic.  Shift
points carry an explicit finite symbol window; stepping or reading past the
window is a hard error, never a silent fallback.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import gcd
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import ConfigError, HorizonExceeded, PointsTooFar

_WINDOW_DTYPE = np.int16
_LATTICE_DENOM = 2**26
_STATIONARY_TOL = 1e-14
_LEAF_TOL = 1e-9


# ---------------------------------------------------------------------------
# measures


@dataclass(frozen=True, eq=False)
class BernoulliMeasure:
    """Product measure on the shift given by one weight per symbol."""

    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size < 2:
            raise ConfigError("Bernoulli weights need at least two entries")
        if np.any(w < 0.0):
            raise ConfigError("Bernoulli weights must be nonnegative")
        if abs(float(w.sum()) - 1.0) > 1e-12:
            raise ConfigError("Bernoulli weights must sum to 1")
        if not np.any(w > 0.0):
            raise ConfigError("Bernoulli weights must have a positive entry")
        object.__setattr__(self, "weights", tuple(float(x) for x in w))

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(np.asarray(self.weights, dtype=float))


@dataclass(frozen=True, eq=False)
class MarkovMeasure:
    """Stationary Markov measure from an irreducible aperiodic row-stochastic
    transition matrix; the stationary vector is found by power iteration."""

    matrix: tuple[tuple[float, ...], ...]
    stationary: tuple[float, ...] = field(init=False)

    def __post_init__(self) -> None:
        p = np.asarray(self.matrix, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1] or p.shape[0] < 2:
            raise ConfigError("Markov matrix must be square, size >= 2")
        if np.any(p < 0.0) or np.any(np.abs(p.sum(axis=1) - 1.0) > 1e-12):
            raise ConfigError("Markov matrix rows must be probability vectors")
        _require_irreducible_aperiodic(p > 0.0)
        pi = np.full(p.shape[0], 1.0 / p.shape[0])
        for _ in range(200_000):
            nxt = pi @ p
            nxt /= nxt.sum()
            if float(np.abs(nxt - pi).sum()) < _STATIONARY_TOL:
                pi = nxt
                break
            pi = nxt
        else:
            raise ConfigError("Markov stationary vector did not converge")
        object.__setattr__(
            self, "matrix", tuple(tuple(float(x) for x in row) for row in p)
        )
        object.__setattr__(self, "stationary", tuple(float(x) for x in pi))


@dataclass(frozen=True)
class LebesgueMeasure:
    """Normalized area measure on the torus."""


MeasureSpec = Union[BernoulliMeasure, MarkovMeasure, LebesgueMeasure]


def _require_irreducible_aperiodic(adj: np.ndarray) -> None:
    n = adj.shape[0]
    reach_fwd = _reachable(adj, 0)
    reach_bwd = _reachable(adj.T, 0)
    if not (reach_fwd.all() and reach_bwd.all()):
        raise ConfigError("Markov matrix is not irreducible")
    # Period = gcd of (level[u] + 1 - level[v]) over edges of a BFS layering.
    level = np.full(n, -1, dtype=int)
    level[0] = 0
    queue = [0]
    while queue:
        u = queue.pop()
        for v in np.nonzero(adj[u])[0]:
            if level[v] < 0:
                level[v] = level[u] + 1
                queue.append(int(v))
    g = 0
    for u in range(n):
        for v in np.nonzero(adj[u])[0]:
            g = gcd(g, level[u] + 1 - level[int(v)])
    if abs(g) != 1:
        raise ConfigError("Markov matrix is not aperiodic")


def _reachable(adj: np.ndarray, start: int) -> np.ndarray:
    seen = np.zeros(adj.shape[0], dtype=bool)
    seen[start] = True
    queue = [start]
    while queue:
        u = queue.pop()
        for v in np.nonzero(adj[u])[0]:
            if not seen[v]:
                seen[v] = True
                queue.append(int(v))
    return seen


# ---------------------------------------------------------------------------
# systems


@dataclass(frozen=True, eq=False)
class ShiftSystem:
    """Two-sided full shift on ``alphabet_size`` symbols.

    The metric is d(x, y) = lambda0 ** k with k the smallest |i| where the
    symbol sequences disagree.  With this metric the shift is hyperbolic
    with constants C1 = 1 and contraction rate exactly lambda0.
    """

    alphabet_size: int
    measure: MeasureSpec
    lambda0: float = 0.5
    local_scale: float = 0.2
    bracket_scale: float = 0.2
    c1: float = 1.0

    def __post_init__(self) -> None:
        if not 2 <= self.alphabet_size <= 1000:
            raise ConfigError("alphabet_size must be in [2, 1000]")
        if not 0.0 < self.lambda0 < 1.0:
            raise ConfigError("lambda0 must lie in (0, 1)")
        if self.local_scale <= 0.0 or self.bracket_scale <= 0.0:
            raise ConfigError("local_scale and bracket_scale must be positive")
        if isinstance(self.measure, BernoulliMeasure):
            if len(self.measure.weights) != self.alphabet_size:
                raise ConfigError("Bernoulli weights do not match alphabet")
        elif isinstance(self.measure, MarkovMeasure):
            if len(self.measure.matrix) != self.alphabet_size:
                raise ConfigError("Markov matrix does not match alphabet")
        else:
            raise ConfigError("shift base needs a Bernoulli or Markov measure")

    @property
    def contraction(self) -> float:
        return self.lambda0


@dataclass(frozen=True, eq=False)
class TorusSystem:
    """Hyperbolic automorphism of the 2-torus from an integer matrix with
    |det| = 1 and no eigenvalue on the unit circle.

    The metric is the max of the two circle distances; stable/unstable
    leaves are the eigenlines, along which that metric contracts or expands
    by exactly the eigenvalue modulus (C1 = 1 while orbits stay local).
    """

    matrix: tuple[tuple[int, int], tuple[int, int]]
    measure: MeasureSpec = LebesgueMeasure()
    local_scale: float = 0.2
    bracket_scale: float = 0.2
    c1: float = 1.0

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix)
        if m.shape != (2, 2) or not np.issubdtype(m.dtype, np.integer):
            if m.shape == (2, 2) and np.all(m == np.round(m)):
                m = m.astype(int)
            else:
                raise ConfigError("torus matrix must be 2x2 integer")
        det = int(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])
        if abs(det) != 1:
            raise ConfigError("torus matrix must have determinant +-1")
        evals, evecs = np.linalg.eig(m.astype(float))
        if np.any(np.abs(evals.imag) > 1e-12):
            raise ConfigError("torus matrix must have real eigenvalues")
        evals = evals.real
        if np.any(np.abs(np.abs(evals) - 1.0) < 1e-9):
            raise ConfigError("torus matrix has an eigenvalue on the unit circle")
        if not isinstance(self.measure, LebesgueMeasure):
            raise ConfigError("torus base uses the Lebesgue measure")
        if self.local_scale <= 0.0 or self.bracket_scale <= 0.0:
            raise ConfigError("local_scale and bracket_scale must be positive")
        order = np.argsort(np.abs(evals))  # contracting first
        e_s = _sign_normalized(evecs.real[:, order[0]])
        e_u = _sign_normalized(evecs.real[:, order[1]])
        object.__setattr__(self, "matrix", tuple(tuple(int(v) for v in row) for row in m))
        object.__setattr__(self, "_det", det)
        object.__setattr__(self, "_eval_s", float(evals[order[0]]))
        object.__setattr__(self, "_eval_u", float(evals[order[1]]))
        object.__setattr__(self, "_evec_s", e_s)
        object.__setattr__(self, "_evec_u", e_u)

    @property
    def contraction(self) -> float:
        return abs(self._eval_s)

    @property
    def expansion(self) -> float:
        return abs(self._eval_u)

    @property
    def stable_vector(self) -> np.ndarray:
        return self._evec_s.copy()

    @property
    def unstable_vector(self) -> np.ndarray:
        return self._evec_u.copy()

    @property
    def int_matrix(self) -> np.ndarray:
        return np.asarray(self.matrix, dtype=np.int64)

    @property
    def int_inverse(self) -> np.ndarray:
        (a, b), (c, d) = self.matrix
        det = self._det
        return np.asarray([[d * det, -b * det], [-c * det, a * det]], dtype=np.int64)


BaseSystem = Union[ShiftSystem, TorusSystem]


def _sign_normalized(v: np.ndarray) -> np.ndarray:
    v = v / np.linalg.norm(v)
    lead = v[0] if v[0] != 0.0 else v[1]
    out = v if lead > 0 else -v
    out.setflags(write=False)
    return out


# ---------------------------------------------------------------------------
# points


@dataclass(frozen=True, eq=False)
class ShiftPoint:
    """A shift orbit segment: symbols on the index range [-H, H] plus the
    current offset of the distinguished coordinate inside that window."""

    window: np.ndarray
    offset: int = 0

    def __post_init__(self) -> None:
        w = np.asarray(self.window)
        if w.ndim != 1 or w.size % 2 != 1:
            raise ConfigError("shift window must be 1-d with odd length")
        if not np.issubdtype(w.dtype, np.integer):
            raise ConfigError("shift window must hold integer symbols")
        if w.dtype != _WINDOW_DTYPE:
            w = w.astype(_WINDOW_DTYPE)
        if not w.flags.writeable:
            pass
        else:
            w = w.copy()
            w.setflags(write=False)
        object.__setattr__(self, "window", w)
        if abs(self.offset) > self.horizon:
            raise HorizonExceeded(
                f"offset {self.offset} outside window horizon {self.horizon}"
            )

    @property
    def horizon(self) -> int:
        return (self.window.size - 1) // 2

    @property
    def future_horizon(self) -> int:
        """Largest relative index readable forward of the current position."""
        return self.horizon - self.offset

    @property
    def past_horizon(self) -> int:
        return self.horizon + self.offset

    def symbol(self, i: int) -> int:
        j = self.offset + i
        if abs(j) > self.horizon:
            raise HorizonExceeded(
                f"symbol access at relative index {i} leaves the window"
            )
        return int(self.window[self.horizon + j])


@dataclass(frozen=True, eq=False)
class TorusPoint:
    u: float
    v: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "u", float(self.u) % 1.0)
        object.__setattr__(self, "v", float(self.v) % 1.0)

    @property
    def coords(self) -> np.ndarray:
        return np.array([self.u, self.v], dtype=float)


BasePoint = Union[ShiftPoint, TorusPoint]


# ---------------------------------------------------------------------------
# dynamics


def apply_f(sys: BaseSystem, x: BasePoint, j: int = 1) -> BasePoint:
    """Apply f^j.  Shift points move their offset inside the fixed window
    (hard error past the horizon); torus points step one matrix application
    at a time with mod-1 reduction, which keeps composition exact."""
    j = int(j)
    if isinstance(sys, ShiftSystem):
        if not isinstance(x, ShiftPoint):
            raise ConfigError("shift system expects shift points")
        target = x.offset + j
        if abs(target) > x.horizon:
            raise HorizonExceeded(
                f"orbit access at offset {target} exceeds horizon {x.horizon}"
            )
        return ShiftPoint(window=x.window, offset=target)
    if not isinstance(x, TorusPoint):
        raise ConfigError("torus system expects torus points")
    step = sys.int_matrix if j >= 0 else sys.int_inverse
    u, v = x.u, x.v
    for _ in range(abs(j)):
        u, v = (
            (step[0, 0] * u + step[0, 1] * v) % 1.0,
            (step[1, 0] * u + step[1, 1] * v) % 1.0,
        )
    return TorusPoint(u, v)


def base_distance(sys: BaseSystem, x: BasePoint, y: BasePoint) -> float:
    if isinstance(sys, ShiftSystem):
        common = min(
            x.future_horizon, x.past_horizon, y.future_horizon, y.past_horizon
        )
        if common < 0:
            raise HorizonExceeded("windows share no common index range")
        cx = x.horizon + x.offset
        cy = y.horizon + y.offset
        xs = x.window[cx - common : cx + common + 1]
        ys = y.window[cy - common : cy + common + 1]
        mismatch = np.nonzero(xs != ys)[0]
        if mismatch.size == 0:
            # Windows agree on everything both can see.
            return 0.0
        k = int(np.min(np.abs(mismatch - common)))
        return sys.lambda0 ** k
    du = _circle_dist(x.u, y.u)
    dv = _circle_dist(x.v, y.v)
    return max(du, dv)


def _circle_dist(a: float, b: float) -> float:
    d = abs(a - b) % 1.0
    return min(d, 1.0 - d)


def _circle_delta(a: float, b: float) -> float:
    """Signed representative of b - a in [-1/2, 1/2)."""
    return (b - a + 0.5) % 1.0 - 0.5


def bracket(sys: BaseSystem, x: BasePoint, y: BasePoint) -> BasePoint:
    """Local product bracket: the unique point on the stable set of x and
    the unstable set of y, defined when d(x, y) <= bracket_scale."""
    d = base_distance(sys, x, y)
    if d > sys.bracket_scale:
        raise PointsTooFar(
            f"bracket needs d(x, y) <= {sys.bracket_scale}, got {d}"
        )
    if isinstance(sys, ShiftSystem):
        k = min(x.future_horizon, y.past_horizon)
        if k < 0:
            raise HorizonExceeded("bracket windows share no usable range")
        out = np.empty(2 * k + 1, dtype=_WINDOW_DTYPE)
        for i in range(-k, 0):
            out[k + i] = y.symbol(i)
        for i in range(0, k + 1):
            out[k + i] = x.symbol(i)
        return ShiftPoint(window=out, offset=0)
    delta = np.array(
        [_circle_delta(x.u, y.u), _circle_delta(x.v, y.v)], dtype=float
    )
    cols = np.column_stack([sys.stable_vector, -sys.unstable_vector])
    s, _t = np.linalg.solve(cols, delta)
    e_s = sys.stable_vector
    return TorusPoint(x.u + s * e_s[0], x.v + s * e_s[1])


@dataclass(frozen=True, eq=False)
class LeafReport:
    side: str
    distances: np.ndarray
    bounds: np.ndarray
    violation: bool


def local_leaf_check(
    sys: BaseSystem, x: BasePoint, y: BasePoint, side: str, n_max: int
) -> LeafReport:
    """Iterate forward (stable side) or backward (unstable side) and compare
    d(f^n x, f^n y) against the contraction bound C1 * lambda^n * d(x, y)."""
    if side not in ("stable", "unstable"):
        raise ConfigError("side must be 'stable' or 'unstable'")
    sign = 1 if side == "stable" else -1
    d0 = base_distance(sys, x, y)
    lam = sys.contraction
    distances = np.empty(n_max + 1)
    bounds = np.empty(n_max + 1)
    for n in range(n_max + 1):
        xn = apply_f(sys, x, sign * n)
        yn = apply_f(sys, y, sign * n)
        distances[n] = base_distance(sys, xn, yn)
        bounds[n] = sys.c1 * (lam ** n) * d0
    violation = bool(np.any(distances > bounds + _LEAF_TOL))
    return LeafReport(side=side, distances=distances, bounds=bounds, violation=violation)


# ---------------------------------------------------------------------------
# sampling


def substream(seed: int, index: int) -> np.random.SeedSequence:
    """The index-th child stream of a master seed.  Children are a pure
    function of (seed, index), so parallel draws never depend on scheduling
    or on how many samples a batch requests."""
    return np.random.SeedSequence(entropy=int(seed), spawn_key=(int(index),))


def sample_point(sys: BaseSystem, horizon: int, rng_stream) -> BasePoint:
    """Draw one point of the invariant measure; shift points get a symbol
    window of half-width ``horizon``.  Deterministic given the stream."""
    return _sample_batch(sys, horizon, [_as_seedseq(rng_stream)])[0]


def sample_points(
    sys: BaseSystem, count: int, horizon: int, seed: int
) -> list[BasePoint]:
    """Draw ``count`` points using per-point substreams of ``seed``; entry i
    equals sample_point(sys, horizon, substream(seed, i)) bit for bit."""
    seqs = [substream(seed, i) for i in range(count)]
    return _sample_batch(sys, horizon, seqs)


def _as_seedseq(stream) -> np.random.SeedSequence:
    if isinstance(stream, np.random.SeedSequence):
        return stream
    if isinstance(stream, (int, np.integer)):
        return np.random.SeedSequence(int(stream))
    raise ConfigError("rng_stream must be an int seed or a SeedSequence")


def _sample_batch(
    sys: BaseSystem, horizon: int, seqs: Sequence[np.random.SeedSequence]
) -> list[BasePoint]:
    count = len(seqs)
    if isinstance(sys, TorusSystem):
        # Draw on the dyadic lattice 2**-26 Z^2 / Z^2 instead of raw floats.
        # Integer-matrix steps keep lattice points on the lattice with every
        # product, sum, and mod-1 exactly representable in float64, so f and
        # f^-1 are exact mutual inverses along sampled orbits; raw uniforms
        # would pick up a rounding eps per step that hyperbolicity amplifies
        # by lambda^k across a backward/forward round trip.
        out: list[BasePoint] = []
        for sq in seqs:
            ju, jv = np.random.default_rng(sq).integers(0, _LATTICE_DENOM, size=2)
            out.append(TorusPoint(ju / _LATTICE_DENOM, jv / _LATTICE_DENOM))
        return out
    if horizon < 0:
        raise ConfigError("horizon must be nonnegative")
    length = 2 * horizon + 1
    uniforms = np.empty((count, length), dtype=float)
    for i, sq in enumerate(seqs):
        uniforms[i] = np.random.default_rng(sq).random(length)
    measure = sys.measure
    if isinstance(measure, BernoulliMeasure):
        cum = measure.cumulative
        symbols = np.searchsorted(cum, uniforms.ravel(), side="right")
        windows = symbols.reshape(count, length).astype(_WINDOW_DTYPE)
    else:
        cum_rows = np.cumsum(np.asarray(measure.matrix, dtype=float), axis=1)
        cum_pi = np.cumsum(np.asarray(measure.stationary, dtype=float))
        windows = np.empty((count, length), dtype=_WINDOW_DTYPE)
        state = (cum_pi[None, :] <= uniforms[:, :1]).sum(axis=1)
        windows[:, 0] = state
        for t in range(1, length):
            rows = cum_rows[state]
            state = (rows <= uniforms[:, t : t + 1]).sum(axis=1)
            windows[:, t] = state
    windows.setflags(write=False)
    return [ShiftPoint(window=windows[i], offset=0) for i in range(count)]
