"""GL(2, R)-valued cocycle specifications and their orbit products.

A cocycle spec is a serializable description of a matrix map A(x).  Specs
expose two batched evaluation hooks, ``values_at_symbols`` (shift bases,
reading a block of forward symbols) and ``values_at_coords`` (torus bases),
both returning four entry arrays; the iteration kernels are written against
those hooks only.  Products over orbit windows come in a plain flavor, kept
for cross-checks at moderate n, and a renormalized flavor that rescales to
unit operator norm at every step and accumulates the log scale.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import ceil, log
from typing import Sequence, Union

import numpy as np

from . import engine, mat2
from .base import (
    BaseSystem,
    BasePoint,
    ShiftPoint,
    ShiftSystem,
    TorusPoint,
    TorusSystem,
    apply_f,
    base_distance,
    sample_points,
)
from .errors import ConfigError, SingularValueError

_DET_FLOOR = 1e-12
_TWO_PI = 2.0 * np.pi


# ---------------------------------------------------------------------------
# scalar expressions for pointwise specs


@dataclass(frozen=True)
class TrigExpr:
    """Scalar field on the torus: const + linear part + first trig modes.

    The linear part is only admissible inside rotation angles, where a full
    turn is the identity; validation of that restriction happens in the
    factor constructors.
    """

    const: float = 0.0
    lin_u: float = 0.0
    lin_v: float = 0.0
    sin_u: float = 0.0
    cos_u: float = 0.0
    sin_v: float = 0.0
    cos_v: float = 0.0

    def __call__(self, u, v):
        out = self.const + self.lin_u * u + self.lin_v * v
        if self.sin_u:
            out = out + self.sin_u * np.sin(_TWO_PI * u)
        if self.cos_u:
            out = out + self.cos_u * np.cos(_TWO_PI * u)
        if self.sin_v:
            out = out + self.sin_v * np.sin(_TWO_PI * v)
        if self.cos_v:
            out = out + self.cos_v * np.cos(_TWO_PI * v)
        return out

    @property
    def is_constant(self) -> bool:
        return not any(
            (self.lin_u, self.lin_v, self.sin_u, self.cos_u, self.sin_v, self.cos_v)
        )

    @property
    def has_linear(self) -> bool:
        return bool(self.lin_u or self.lin_v)


def _require_trig_only(expr: TrigExpr, where: str) -> None:
    if expr.has_linear:
        raise ConfigError(
            f"{where} must be continuous on the torus: no bare linear terms"
        )


def _require_winding(expr: TrigExpr, where: str) -> None:
    for coef in (expr.lin_u, expr.lin_v):
        if coef and abs(coef / _TWO_PI - round(coef / _TWO_PI)) > 1e-9:
            raise ConfigError(
                f"{where} linear coefficient must be a multiple of 2*pi"
            )


# ---------------------------------------------------------------------------
# factors for pointwise specs


@dataclass(frozen=True)
class RotationFactor:
    angle: TrigExpr

    def __post_init__(self) -> None:
        _require_winding(self.angle, "rotation angle")

    def values(self, u, v):
        th = self.angle(u, v)
        ct, st = np.cos(th), np.sin(th)
        return ct, -st, st, ct


@dataclass(frozen=True)
class DiagonalFactor:
    """diag(exp(log_d1), exp(log_d2)); the exponentials keep it invertible."""

    log_d1: TrigExpr
    log_d2: TrigExpr

    def __post_init__(self) -> None:
        _require_trig_only(self.log_d1, "diagonal entry")
        _require_trig_only(self.log_d2, "diagonal entry")

    def values(self, u, v):
        d1 = np.exp(self.log_d1(u, v))
        d2 = np.exp(self.log_d2(u, v))
        zero = np.zeros_like(np.asarray(d1, dtype=float))
        return d1, zero, zero, d2


@dataclass(frozen=True, eq=False)
class ConstantFactor:
    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (2, 2):
            raise ConfigError("constant factor must be 2x2")
        if abs(float(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])) < _DET_FLOOR:
            raise SingularValueError("constant factor is singular")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def values(self, u, v):
        m = self.matrix
        return m[0, 0], m[0, 1], m[1, 0], m[1, 1]


PointwiseFactor = Union[RotationFactor, DiagonalFactor, ConstantFactor]


def _factor_is_constant(f: PointwiseFactor) -> bool:
    if isinstance(f, ConstantFactor):
        return True
    if isinstance(f, RotationFactor):
        return f.angle.is_constant
    return f.log_d1.is_constant and f.log_d2.is_constant


# ---------------------------------------------------------------------------
# cocycle specs


@dataclass(frozen=True, eq=False)
class ConstantCocycle:
    """The same invertible matrix at every base point; valid over any base."""

    matrix: np.ndarray
    r: float = 1.0

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (2, 2):
            raise ConfigError("cocycle matrix must be 2x2")
        if abs(float(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])) < _DET_FLOOR:
            raise SingularValueError("constant cocycle matrix is singular")
        if not 0.0 < self.r <= 1.0:
            raise ConfigError("Holder exponent r must lie in (0, 1]")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    symbol_depth = 0
    is_constant = True

    def constant_value(self) -> np.ndarray:
        return self.matrix

    def values_at_symbols(self, block):
        m = self.matrix
        ones = np.ones(block.shape[0])
        return m[0, 0] * ones, m[0, 1] * ones, m[1, 0] * ones, m[1, 1] * ones

    def values_at_coords(self, coords):
        m = self.matrix
        ones = np.ones(coords.shape[0])
        return m[0, 0] * ones, m[0, 1] * ones, m[1, 0] * ones, m[1, 1] * ones


@dataclass(frozen=True, eq=False)
class LocallyConstantCocycle:
    """Shift cocycle reading the forward symbols x_0 .. x_{depth-1}.

    ``table`` lists one matrix per word, ordered lexicographically with x_0
    the most significant symbol; for depth 1 that is simply one matrix per
    symbol.
    """

    table: np.ndarray
    r: float = 1.0
    depth: int = 1
    alphabet_size: int | None = None

    def __post_init__(self) -> None:
        tab = np.asarray(self.table, dtype=float)
        if tab.ndim != 3 or tab.shape[1:] != (2, 2):
            raise ConfigError("table must be a sequence of 2x2 matrices")
        if self.depth < 1:
            raise ConfigError("depth must be >= 1")
        a = self.alphabet_size
        if a is None:
            if self.depth != 1:
                raise ConfigError("alphabet_size is required when depth > 1")
            a = tab.shape[0]
        if a ** self.depth != tab.shape[0]:
            raise ConfigError(
                f"table length {tab.shape[0]} != alphabet^depth = {a}^{self.depth}"
            )
        if not 0.0 < self.r <= 1.0:
            raise ConfigError("Holder exponent r must lie in (0, 1]")
        dets = tab[:, 0, 0] * tab[:, 1, 1] - tab[:, 0, 1] * tab[:, 1, 0]
        if np.any(np.abs(dets) < _DET_FLOOR):
            raise SingularValueError("locally constant table has a singular entry")
        tab = tab.copy()
        tab.setflags(write=False)
        object.__setattr__(self, "table", tab)
        object.__setattr__(self, "alphabet_size", int(a))
        powers = a ** np.arange(self.depth - 1, -1, -1, dtype=np.int64)
        object.__setattr__(self, "_powers", powers)
        object.__setattr__(self, "_ta", np.ascontiguousarray(tab[:, 0, 0]))
        object.__setattr__(self, "_tb", np.ascontiguousarray(tab[:, 0, 1]))
        object.__setattr__(self, "_tc", np.ascontiguousarray(tab[:, 1, 0]))
        object.__setattr__(self, "_td", np.ascontiguousarray(tab[:, 1, 1]))

    @property
    def symbol_depth(self) -> int:
        return self.depth

    @property
    def is_constant(self) -> bool:
        return bool(np.all(self.table == self.table[0]))

    def constant_value(self) -> np.ndarray:
        return self.table[0]

    def values_at_symbols(self, block):
        idx = block.astype(np.int64) @ self._powers
        return self._ta[idx], self._tb[idx], self._tc[idx], self._td[idx]

    def values_at_coords(self, coords):
        raise ConfigError("locally constant cocycles live over shift bases")


@dataclass(frozen=True, eq=False)
class PointwiseCocycle:
    """Torus cocycle given by an ordered product of closed-form factors."""

    factors: tuple[PointwiseFactor, ...]
    r: float = 1.0

    def __post_init__(self) -> None:
        if not self.factors:
            raise ConfigError("pointwise cocycle needs at least one factor")
        if not 0.0 < self.r <= 1.0:
            raise ConfigError("Holder exponent r must lie in (0, 1]")
        object.__setattr__(self, "factors", tuple(self.factors))

    symbol_depth = 0

    @property
    def is_constant(self) -> bool:
        return all(_factor_is_constant(f) for f in self.factors)

    def constant_value(self) -> np.ndarray:
        a, b, c, d = self.values_at_coords(np.zeros((1, 2)))
        return np.array([[a[0], b[0]], [c[0], d[0]]])

    def values_at_symbols(self, block):
        raise ConfigError("pointwise cocycles live over torus bases")

    def values_at_coords(self, coords):
        u = coords[:, 0]
        v = coords[:, 1]
        a, b, c, d = self.factors[0].values(u, v)
        ones = np.ones_like(u)
        a, b, c, d = a * ones, b * ones, c * ones, d * ones
        for f in self.factors[1:]:
            fa, fb, fc, fd = f.values(u, v)
            a, b, c, d = mat2.matmul_batch(a, b, c, d, fa, fb, fc, fd)
        return a, b, c, d


# ---------------------------------------------------------------------------
# direction fields (perturbation directions; invertibility not required)


@dataclass(frozen=True, eq=False)
class ConstantField:
    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (2, 2):
            raise ConfigError("field matrix must be 2x2")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    symbol_depth = 0
    is_constant = True

    def values_at_symbols(self, block):
        m = self.matrix
        ones = np.ones(block.shape[0])
        return m[0, 0] * ones, m[0, 1] * ones, m[1, 0] * ones, m[1, 1] * ones

    def values_at_coords(self, coords):
        m = self.matrix
        ones = np.ones(coords.shape[0])
        return m[0, 0] * ones, m[0, 1] * ones, m[1, 0] * ones, m[1, 1] * ones


@dataclass(frozen=True, eq=False)
class LocallyConstantField:
    """Symbol-indexed matrix field with the same table layout as
    LocallyConstantCocycle but no invertibility requirement."""

    table: np.ndarray
    depth: int = 1
    alphabet_size: int | None = None

    def __post_init__(self) -> None:
        tab = np.asarray(self.table, dtype=float)
        if tab.ndim != 3 or tab.shape[1:] != (2, 2):
            raise ConfigError("field table must be a sequence of 2x2 matrices")
        a = self.alphabet_size
        if a is None:
            if self.depth != 1:
                raise ConfigError("alphabet_size is required when depth > 1")
            a = tab.shape[0]
        if a ** self.depth != tab.shape[0]:
            raise ConfigError("field table length does not match alphabet^depth")
        tab = tab.copy()
        tab.setflags(write=False)
        object.__setattr__(self, "table", tab)
        object.__setattr__(self, "alphabet_size", int(a))
        powers = a ** np.arange(self.depth - 1, -1, -1, dtype=np.int64)
        object.__setattr__(self, "_powers", powers)

    @property
    def symbol_depth(self) -> int:
        return self.depth

    @property
    def is_constant(self) -> bool:
        return bool(np.all(self.table == self.table[0]))

    def values_at_symbols(self, block):
        idx = block.astype(np.int64) @ self._powers
        tab = self.table
        return (
            tab[idx, 0, 0],
            tab[idx, 0, 1],
            tab[idx, 1, 0],
            tab[idx, 1, 1],
        )

    def values_at_coords(self, coords):
        raise ConfigError("locally constant fields live over shift bases")


@dataclass(frozen=True)
class PointwiseEntriesField:
    """Matrix field on the torus with one trig expression per entry."""

    e00: TrigExpr
    e01: TrigExpr
    e10: TrigExpr
    e11: TrigExpr

    def __post_init__(self) -> None:
        for name in ("e00", "e01", "e10", "e11"):
            _require_trig_only(getattr(self, name), "field entry")

    symbol_depth = 0

    @property
    def is_constant(self) -> bool:
        return all(
            getattr(self, n).is_constant for n in ("e00", "e01", "e10", "e11")
        )

    def values_at_symbols(self, block):
        raise ConfigError("pointwise fields live over torus bases")

    def values_at_coords(self, coords):
        u = coords[:, 0]
        v = coords[:, 1]
        ones = np.ones_like(u)
        return (
            self.e00(u, v) * ones,
            self.e01(u, v) * ones,
            self.e10(u, v) * ones,
            self.e11(u, v) * ones,
        )


MatrixField = Union[ConstantField, LocallyConstantField, PointwiseEntriesField]


@dataclass(frozen=True, eq=False)
class PerturbedCocycle:
    """base composed with a scaled direction field.

    rule 'multiplicative_exp' gives A(x) @ expm(t * B(x)), which stays
    invertible for free; rule 'additive' gives A(x) + t * B(x) and relies on
    the construction-time invertibility checks in the perturbation driver.
    """

    base: "CocycleSpec"
    direction: MatrixField
    t: float
    rule: str
    r: float = field(init=False)

    def __post_init__(self) -> None:
        if self.rule not in ("multiplicative_exp", "additive"):
            raise ConfigError("rule must be 'multiplicative_exp' or 'additive'")
        object.__setattr__(self, "r", self.base.r)

    @property
    def symbol_depth(self) -> int:
        return max(self.base.symbol_depth, self.direction.symbol_depth)

    @property
    def is_constant(self) -> bool:
        return self.base.is_constant and self.direction.is_constant

    def constant_value(self) -> np.ndarray:
        a, b, c, d = self.values_at_coords(np.zeros((1, 2)))
        return np.array([[a[0], b[0]], [c[0], d[0]]])

    def _compose(self, base_vals, dir_vals):
        ba, bb, bc, bd = base_vals
        fa, fb, fc, fd = dir_vals
        if self.rule == "additive":
            return ba + self.t * fa, bb + self.t * fb, bc + self.t * fc, bd + self.t * fd
        ea, eb, ec, ed = mat2.expm_batch(
            self.t * fa, self.t * fb, self.t * fc, self.t * fd
        )
        return mat2.matmul_batch(ba, bb, bc, bd, ea, eb, ec, ed)

    def values_at_symbols(self, block):
        return self._compose(
            self.base.values_at_symbols(block),
            self.direction.values_at_symbols(block),
        )

    def values_at_coords(self, coords):
        return self._compose(
            self.base.values_at_coords(coords),
            self.direction.values_at_coords(coords),
        )


CocycleSpec = Union[
    ConstantCocycle, LocallyConstantCocycle, PointwiseCocycle, PerturbedCocycle
]


# ---------------------------------------------------------------------------
# evaluation and products


def evaluate(a_spec: CocycleSpec, x: BasePoint) -> np.ndarray:
    """The matrix A(x), with invertibility enforced to |det| >= 1e-12."""
    if isinstance(x, ShiftPoint):
        depth = a_spec.symbol_depth
        block = np.array(
            [[x.symbol(i) for i in range(depth)]], dtype=np.int64
        ).reshape(1, depth)
        va, vb, vc, vd = a_spec.values_at_symbols(block)
    elif isinstance(x, TorusPoint):
        va, vb, vc, vd = a_spec.values_at_coords(x.coords.reshape(1, 2))
    else:
        raise ConfigError("unknown base point type")
    m = np.array(
        [[float(np.asarray(va).ravel()[0]), float(np.asarray(vb).ravel()[0])],
         [float(np.asarray(vc).ravel()[0]), float(np.asarray(vd).ravel()[0])]]
    )
    if abs(float(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])) < _DET_FLOOR:
        raise SingularValueError("cocycle value is singular at the given point")
    return m


def product(a_spec: CocycleSpec, sys: BaseSystem, x: BasePoint, n: int) -> np.ndarray:
    """Plain (unrenormalized) orbit product, kept as a cross-check for
    moderate n: A(f^{n-1}x) ... A(x) for n > 0, identity for n = 0, and the
    inverse of the product along the backward orbit for n < 0."""
    n = int(n)
    if n == 0:
        return np.eye(2)
    if n < 0:
        # Multiply per-step inverses instead of inverting the assembled
        # window product: each step is well conditioned, so the product
        # keeps an O(n eps) entrywise error, while any inverse of the full
        # window loses its small singular value at O(kappa n eps).
        out = np.eye(2)
        pt = x
        for _ in range(-n):
            pt = apply_f(sys, pt, -1)
            out = _inverse_step(evaluate(a_spec, pt)) @ out
        return out
    out = np.eye(2)
    pt = x
    for j in range(n):
        out = evaluate(a_spec, pt) @ out
        if j + 1 < n:
            pt = apply_f(sys, pt, 1)
    return out


def _inverse_step(m: np.ndarray) -> np.ndarray:
    det = float(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])
    return np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]]) / det


def product_renormalized(
    a_spec: CocycleSpec, sys: BaseSystem, x: BasePoint, n: int
) -> tuple[np.ndarray, float]:
    """Orbit product as (normalized, log_scale) with unit operator norm.

    Rescaling happens at every step, so nothing overflows for any window
    length of practical size.  Constant specs take a repeated-squaring path
    that needs no orbit access at all.
    """
    n = int(n)
    if n == 0:
        return np.eye(2), 0.0
    if a_spec.is_constant:
        return _constant_power(a_spec.constant_value(), n)
    batch = engine.batch_of(sys, [x])
    if n > 0:
        scan = engine.forward_scan(a_spec, sys, batch, n)
        norm = mat2.opnorm_batch(scan.a, scan.b, scan.c, scan.d)
        m = np.array(
            [[scan.a[0], scan.b[0]], [scan.c[0], scan.d[0]]]
        ) / norm[0]
        return m, float(scan.log_scale[0] + np.log(norm[0]))
    # Accumulate per-step inverses over the backward window through the
    # scan's independently renormalized inverse track; inverting the
    # assembled window product instead would lose the small singular value
    # at O(kappa eps).
    engine.step(sys, batch, n)
    scan = engine.forward_scan(a_spec, sys, batch, -n, want_inverse=True)
    norm = mat2.opnorm_batch(scan.inv_a, scan.inv_b, scan.inv_c, scan.inv_d)
    m = np.array(
        [[scan.inv_a[0], scan.inv_b[0]], [scan.inv_c[0], scan.inv_d[0]]]
    ) / norm[0]
    return m, float(scan.inv_log_scale[0] + np.log(norm[0]))


def _constant_power(m: np.ndarray, n: int) -> tuple[np.ndarray, float]:
    if n < 0:
        det = float(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])
        base = np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]]) / det
        n = -n
    else:
        base = np.asarray(m, dtype=float)
    norm = mat2.opnorm(base)
    acc = np.eye(2)
    acc_log = 0.0
    cur = base / norm
    cur_log = log(norm)
    k = n
    while k:
        if k & 1:
            acc = cur @ acc
            s = mat2.opnorm(acc)
            acc /= s
            acc_log += cur_log + log(s)
        k >>= 1
        if k:
            cur = cur @ cur
            s = mat2.opnorm(cur)
            cur /= s
            cur_log = 2.0 * cur_log + log(s)
    return acc, acc_log


# ---------------------------------------------------------------------------
# Holder norms


@dataclass(frozen=True)
class HolderReport:
    sup_norm: float
    holder_constant: float
    r: float
    exact: bool

    @property
    def norm(self) -> float:
        return self.sup_norm + self.holder_constant


def holder_norm(
    a_spec: CocycleSpec,
    sys: BaseSystem,
    pair_samples: int = 2048,
    seed: int = 0,
) -> HolderReport:
    """sup-norm plus Holder-r quotient of the matrix map.

    Exact by finite enumeration for constant and locally constant specs;
    a flagged Monte Carlo lower bound for pointwise specs.
    """
    if a_spec.is_constant:
        return HolderReport(
            sup_norm=mat2.opnorm(a_spec.constant_value()),
            holder_constant=0.0,
            r=a_spec.r,
            exact=True,
        )
    td = _as_table(a_spec, sys)
    if td is not None:
        sup, quot = _table_holder(
            td[0], sys.alphabet_size, td[1], sys.lambda0, a_spec.r
        )
        return HolderReport(sup, quot, a_spec.r, exact=True)
    if isinstance(a_spec, LocallyConstantCocycle):
        raise ConfigError("locally constant cocycles live over shift bases")
    return _sampled_holder(a_spec, sys, a_spec.r, pair_samples, seed)


def holder_distance(
    a_spec: CocycleSpec,
    b_spec: CocycleSpec,
    sys: BaseSystem,
    pair_samples: int = 2048,
    seed: int = 0,
) -> HolderReport:
    """Holder norm of the difference map x -> A(x) - B(x)."""
    table_a = _as_table(a_spec, sys)
    table_b = _as_table(b_spec, sys)
    if table_a is not None and table_b is not None:
        ta, depth_a = table_a
        tb, depth_b = table_b
        depth = max(depth_a, depth_b, 1)
        a = sys.alphabet_size
        ta = _expand_table(ta, a, depth_a, depth)
        tb = _expand_table(tb, a, depth_b, depth)
        sup, quot = _table_holder(ta - tb, a, depth, sys.lambda0, a_spec.r)
        return HolderReport(sup, quot, a_spec.r, exact=True)
    return _sampled_holder(
        _DifferenceMap(a_spec, b_spec), sys, a_spec.r, pair_samples, seed
    )


def _as_table(spec, sys: BaseSystem):
    """Spec as (table, depth) over the system's alphabet, or None."""
    if not isinstance(sys, ShiftSystem):
        return None
    if isinstance(spec, LocallyConstantCocycle) or isinstance(
        spec, LocallyConstantField
    ):
        if spec.alphabet_size != sys.alphabet_size:
            return None
        return spec.table, spec.depth
    if isinstance(spec, PerturbedCocycle):
        base_td = _as_table(spec.base, sys)
        field_td = _as_table(spec.direction, sys)
        if base_td is None or field_td is None:
            return None
        a = sys.alphabet_size
        depth = max(base_td[1], field_td[1])
        btab = _expand_table(base_td[0], a, base_td[1], depth)
        ftab = _expand_table(field_td[0], a, field_td[1], depth)
        if spec.rule == "additive":
            return btab + spec.t * ftab, depth
        out = np.empty_like(btab)
        for i in range(btab.shape[0]):
            out[i] = btab[i] @ mat2.expm(spec.t * ftab[i])
        return out, depth
    if getattr(spec, "is_constant", False):
        if isinstance(spec, (ConstantCocycle, ConstantField)):
            value = spec.matrix
        else:
            value = spec.constant_value()
        return value[None, :, :].repeat(sys.alphabet_size, axis=0), 1
    return None


def specialize(spec: CocycleSpec, sys: BaseSystem) -> CocycleSpec:
    """Replace a perturbed spec by its exact locally constant equivalent
    when the base and direction both reduce to symbol tables; other specs
    pass through unchanged.  Raises SingularValueError if the specialized
    table has a singular entry."""
    if isinstance(spec, PerturbedCocycle) and isinstance(sys, ShiftSystem):
        td = _as_table(spec, sys)
        if td is not None:
            tab, depth = td
            return LocallyConstantCocycle(
                table=tab, r=spec.r, depth=depth, alphabet_size=sys.alphabet_size
            )
    return spec


def _expand_table(tab: np.ndarray, a: int, depth: int, target: int) -> np.ndarray:
    """Re-express a depth-``depth`` table at a deeper word length."""
    if depth == target:
        return tab
    reps = a ** (target - depth)
    return np.repeat(tab, reps, axis=0)


def _table_holder(tab, a, depth, lambda0, r):
    sup = float(
        np.max(mat2.opnorm_batch(tab[:, 0, 0], tab[:, 0, 1], tab[:, 1, 0], tab[:, 1, 1]))
    )
    n_words = tab.shape[0]
    if n_words > 4096:
        raise ConfigError("table too large for exact Holder enumeration")
    # Words are lexicographic with x_0 most significant; two words first
    # differing at forward position k can be completed to points at distance
    # exactly lambda0^k, so the quotient enumerates word pairs by k.
    words = np.array(
        np.unravel_index(np.arange(n_words), (a,) * depth)
    ).T  # (n_words, depth)
    quot = 0.0
    for i in range(n_words):
        for j in range(i + 1, n_words):
            diff = np.nonzero(words[i] != words[j])[0]
            if diff.size == 0:
                continue
            k = int(diff[0])
            delta = tab[i] - tab[j]
            quot = max(quot, mat2.opnorm(delta) / lambda0 ** (k * r))
    return sup, float(quot)


class _DifferenceMap:
    """Internal duck-typed spec for A - B; only used for sampled norms."""

    def __init__(self, a_spec, b_spec):
        self._a = a_spec
        self._b = b_spec
        self.symbol_depth = max(a_spec.symbol_depth, b_spec.symbol_depth)
        self.is_constant = False

    def values_at_symbols(self, block):
        aa = self._a.values_at_symbols(block)
        bb = self._b.values_at_symbols(block)
        return tuple(x - y for x, y in zip(aa, bb))

    def values_at_coords(self, coords):
        aa = self._a.values_at_coords(coords)
        bb = self._b.values_at_coords(coords)
        return tuple(x - y for x, y in zip(aa, bb))


def _sampled_holder(spec, sys, r, pair_samples, seed) -> HolderReport:
    pts = sample_points(sys, 2 * pair_samples, 0 if isinstance(sys, TorusSystem) else spec.symbol_depth + 8, seed)
    xs = pts[:pair_samples]
    ys = pts[pair_samples:]
    vx = _values_matrix(spec, sys, xs)
    vy = _values_matrix(spec, sys, ys)
    sup = float(
        max(
            np.max(mat2.opnorm_batch(*vx)),
            np.max(mat2.opnorm_batch(*vy)),
        )
    )
    quot = 0.0
    diffs = tuple(x - y for x, y in zip(vx, vy))
    dists = np.array([base_distance(sys, x, y) for x, y in zip(xs, ys)])
    norms = mat2.opnorm_batch(*diffs)
    ok = dists > 0
    if np.any(ok):
        quot = float(np.max(norms[ok] / dists[ok] ** r))
    if isinstance(sys, TorusSystem):
        # Nearby pairs probe the local quotient, which dominates for smooth
        # maps; scales are log-spaced down to 1e-6.
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(999,)))
        for scale in 10.0 ** np.arange(-1, -7, -1):
            angles = rng.random(len(xs)) * _TWO_PI
            near = [
                TorusPoint(p.u + scale * np.cos(t), p.v + scale * np.sin(t))
                for p, t in zip(xs, angles)
            ]
            vn = _values_matrix(spec, sys, near)
            nd = np.array([base_distance(sys, p, q) for p, q in zip(xs, near)])
            nn = mat2.opnorm_batch(*tuple(x - y for x, y in zip(vx, vn)))
            ok = nd > 0
            if np.any(ok):
                quot = max(quot, float(np.max(nn[ok] / nd[ok] ** r)))
    return HolderReport(sup, quot, r, exact=False)


def _values_matrix(spec, sys, points):
    if isinstance(sys, ShiftSystem):
        depth = max(spec.symbol_depth, 1)
        block = np.array(
            [[p.symbol(i) for i in range(depth)] for p in points], dtype=np.int64
        )
        return spec.values_at_symbols(block[:, : max(spec.symbol_depth, 1)])
    coords = np.array([[p.u, p.v] for p in points])
    return spec.values_at_coords(coords)


# ---------------------------------------------------------------------------
# fiber bunching


@dataclass(frozen=True, eq=False)
class BunchingReport:
    ns: np.ndarray
    b_values: np.ndarray
    theta_hat: float
    c3_hat: float
    verdict: str
    exact: bool
    margin: float
    kappa_lambda_r: float | None
    samples: int


def bunching_check(
    a_spec: CocycleSpec,
    sys: BaseSystem,
    n_max: int = 40,
    x_samples: int = 64,
    seed: int = 0,
    margin: float = 0.05,
) -> BunchingReport:
    """Sampled fiber-bunching diagnostic.

    b_n is the sampled supremum of ||A^n(x)|| * ||A^n(x)^{-1}|| * lambda^{nr};
    the decay rate estimate comes from a least-squares fit of log b_n on the
    tail n in [n_max/2, n_max].  Constant specs need no sampling and also
    report the one-step bound kappa * lambda^r.
    """
    if n_max < 4:
        raise ConfigError("n_max must be at least 4")
    lam = sys.contraction
    r = a_spec.r
    exact = bool(a_spec.is_constant)
    kappa_lambda_r = None
    if exact:
        m = a_spec.constant_value()
        s1, s2 = mat2.singular_values(m)
        kappa_lambda_r = (s1 / s2) * lam ** r
        samples = 1
        points = _any_point(sys, n_max)
        batch = engine.batch_of(sys, points)
    else:
        samples = x_samples
        points = sample_points(sys, samples, n_max + a_spec.symbol_depth, seed)
        batch = engine.batch_of(sys, points)
    ls_path, ldet_path = engine.forward_record(a_spec, sys, batch, n_max)
    ns = np.arange(1, n_max + 1)
    log_b = np.max(2.0 * ls_path - ldet_path, axis=1) + ns * r * np.log(lam)
    tail = ns >= ceil(n_max / 2)
    slope, intercept = np.polyfit(ns[tail], log_b[tail], 1)
    theta_hat = float(np.exp(slope))
    c3_hat = float(np.exp(intercept))
    if theta_hat <= 1.0 - margin:
        verdict = "bunched"
    elif theta_hat >= 1.0 + margin:
        verdict = "not_bunched"
    elif exact and kappa_lambda_r is not None and kappa_lambda_r < 1.0 - margin:
        verdict = "bunched"
    else:
        verdict = "inconclusive"
    return BunchingReport(
        ns=ns,
        b_values=np.exp(log_b),
        theta_hat=theta_hat,
        c3_hat=c3_hat,
        verdict=verdict,
        exact=exact,
        margin=margin,
        kappa_lambda_r=kappa_lambda_r,
        samples=samples,
    )


def _any_point(sys: BaseSystem, horizon: int):
    if isinstance(sys, ShiftSystem):
        return [ShiftPoint(window=np.zeros(2 * horizon + 1, dtype=np.int16))]
    return [TorusPoint(0.0, 0.0)]
