"""Empirical measures on the projective bundle and their diagnostics.

The unstable (stable) graph measure is the empirical distribution of pairs
(x_i, E^u(x_i)) over sampled base points.  Three diagnostics probe it:

* an invariance defect, testing the pushforward under (x, v) ->
  (f x, A(x) v) against a bank of product test functions, with the
  reference side evaluated at the same pushed base points so base-sampling
  noise cancels and only the fiber mismatch is measured;
* the integral of phi(x, v) = log ||A(x) v||, which for the unstable graph
  measure estimates the top exponent;
* an attraction test that pushes a grid of directions and watches them
  collapse onto the pushed reference direction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import engine, mat2
from .base import (
    BasePoint,
    BaseSystem,
    ShiftSystem,
    apply_f,
    sample_points,
)
from .cocycle import CocycleSpec
from .errors import ConfigError, NoGap
from .oseledets import stable_directions, unstable_directions


@dataclass(frozen=True, eq=False)
class EmpiricalProjectiveMeasure:
    """Uniform atoms (x_i, v_i) on the projective bundle; v components are
    unit vectors stored as parallel arrays."""

    points: list[BasePoint]
    vx: np.ndarray
    vy: np.ndarray
    kind: str
    depth: int

    @property
    def size(self) -> int:
        return len(self.points)


def build_invariant_measures(
    a_spec: CocycleSpec,
    sys: BaseSystem,
    samples: int,
    depth: int,
    seed: int = 0,
    threads: int = 1,
    horizon_slack: int = 2,
) -> tuple[EmpiricalProjectiveMeasure, EmpiricalProjectiveMeasure]:
    """Sampled unstable and stable graph measures at the given window depth.

    Shift windows get half-width depth + symbol depth + slack so direction
    extraction and one forward push both stay inside the window.
    """
    horizon = 0
    if isinstance(sys, ShiftSystem):
        horizon = depth + a_spec.symbol_depth + horizon_slack
    pts = sample_points(sys, samples, horizon, seed)
    ux, uy, ok_u = unstable_directions(a_spec, sys, pts, depth, threads)
    sx, sy, ok_s = stable_directions(a_spec, sys, pts, depth, threads)
    if not (ok_u.all() and ok_s.all()):
        raise NoGap("conformal window product while building graph measures")
    m_u = EmpiricalProjectiveMeasure(
        points=pts, vx=ux, vy=uy, kind="unstable", depth=depth
    )
    m_s = EmpiricalProjectiveMeasure(
        points=pts, vx=sx, vy=sy, kind="stable", depth=depth
    )
    return m_u, m_s


# ---------------------------------------------------------------------------
# evaluation helpers


def _spec_values(a_spec: CocycleSpec, sys: BaseSystem, points: list[BasePoint]):
    batch = engine.batch_of(sys, points)
    return engine.values(a_spec, sys, batch)


def _push_directions(va, vb, vc, vd, vx, vy):
    """, normalized image of unit directions under per-sample matrices."""
    wx, wy = mat2.matvec_batch(va, vb, vc, vd, vx, vy)
    nrm = np.hypot(wx, wy)
    return wx / nrm, wy / nrm


def phi_values(
    a_spec: CocycleSpec, sys: BaseSystem, measure: EmpiricalProjectiveMeasure
) -> np.ndarray:
    """phi(x_i, v_i) = log ||A(x_i) v_i|| at each atom."""
    va, vb, vc, vd = _spec_values(a_spec, sys, measure.points)
    wx, wy = mat2.matvec_batch(va, vb, vc, vd, measure.vx, measure.vy)
    return np.log(np.hypot(wx, wy))


def integrate_phi(
    a_spec: CocycleSpec, sys: BaseSystem, measure: EmpiricalProjectiveMeasure
) -> tuple[float, float]:
    """Mean and standard error of phi over the measure's atoms."""
    vals = phi_values(a_spec, sys, measure)
    sem = 0.0
    if vals.size > 1:
        sem = float(np.std(vals, ddof=1) / np.sqrt(vals.size))
    return float(np.mean(vals)), sem


# ---------------------------------------------------------------------------
# test bank


def _base_functions(sys: BaseSystem):
    """Named scalar functions of the base point, vectorized over a list."""
    funcs: list[tuple[str, object]] = [("1", None)]
    if isinstance(sys, ShiftSystem):
        a = sys.alphabet_size
        for s in range(a):
            funcs.append((f"[x0={s}]", ("cyl1", s)))
        for s in range(a):
            for t in range(a):
                funcs.append((f"[x0={s},x1={t}]", ("cyl2", s, t)))
    else:
        for k1, k2 in ((1, 0), (0, 1), (1, 1), (1, -1), (2, 0), (0, 2)):
            funcs.append((f"cos2pi({k1}u+{k2}v)", ("cos", k1, k2)))
            funcs.append((f"sin2pi({k1}u+{k2}v)", ("sin", k1, k2)))
    return funcs


def _eval_base_function(tag, sys: BaseSystem, points: list[BasePoint]) -> np.ndarray:
    count = len(points)
    if tag is None:
        return np.ones(count)
    if tag[0] == "cyl1":
        return np.array([1.0 if p.symbol(0) == tag[1] else 0.0 for p in points])
    if tag[0] == "cyl2":
        return np.array(
            [
                1.0 if (p.symbol(0) == tag[1] and p.symbol(1) == tag[2]) else 0.0
                for p in points
            ]
        )
    k1, k2 = tag[1], tag[2]
    phase = 2.0 * np.pi * np.array([k1 * p.u + k2 * p.v for p in points])
    return np.cos(phase) if tag[0] == "cos" else np.sin(phase)


_FIBER_FUNCTIONS = (
    ("1", lambda vx, vy: np.ones_like(vx)),
    ("cos2t", lambda vx, vy: vx * vx - vy * vy),
    ("sin2t", lambda vx, vy: 2.0 * vx * vy),
)


@dataclass(frozen=True, eq=False)
class InvarianceReport:
    defect: float
    per_test: dict[str, float]
    samples: int

    @property
    def bank_size(self) -> int:
        return len(self.per_test)


def invariance_defect(
    a_spec: CocycleSpec,
    sys: BaseSystem,
    measure: EmpiricalProjectiveMeasure,
    threads: int = 1,
) -> InvarianceReport:
    """Worst test-bank discrepancy between the pushed measure and the graph
    measure recomputed at the pushed base points.

    Both sides share the base points f(x_i), so the defect isolates how far
    the pushed fiber directions sit from the extracted field; for a constant
    cocycle with a gap it vanishes to rounding.
    """
    pushed_pts = [apply_f(sys, p, 1) for p in measure.points]
    va, vb, vc, vd = _spec_values(a_spec, sys, measure.points)
    wx, wy = _push_directions(va, vb, vc, vd, measure.vx, measure.vy)
    if measure.kind == "unstable":
        rx, ry, ok = unstable_directions(
            a_spec, sys, pushed_pts, measure.depth, threads
        )
    elif measure.kind == "stable":
        rx, ry, ok = stable_directions(
            a_spec, sys, pushed_pts, measure.depth, threads
        )
    else:
        raise ConfigError("measure kind must be 'unstable' or 'stable'")
    if not ok.all():
        raise NoGap("conformal window product while recomputing directions")
    per_test: dict[str, float] = {}
    for base_name, tag in _base_functions(sys):
        base_vals = _eval_base_function(tag, sys, pushed_pts)
        for fiber_name, fiber in _FIBER_FUNCTIONS:
            lhs = float(np.mean(base_vals * fiber(wx, wy)))
            rhs = float(np.mean(base_vals * fiber(rx, ry)))
            per_test[f"{base_name}*{fiber_name}"] = abs(lhs - rhs)
    defect = max(per_test.values())
    return InvarianceReport(defect=defect, per_test=per_test, samples=measure.size)


# ---------------------------------------------------------------------------
# attraction


@dataclass(frozen=True, eq=False)
class AttractionReport:
    side: str
    n: int
    distances: np.ndarray  # (S, G) final projective distances to reference
    median_final: float
    max_final: float


def attraction_test(
    a_spec: CocycleSpec,
    sys: BaseSystem,
    side: str = "unstable",
    samples: int = 50,
    grid: int = 16,
    n: int = 100,
    depth: int = 40,
    seed: int = 0,
    threads: int = 1,
) -> AttractionReport:
    """Push a grid of directions with the cocycle (or its inverse) and
    measure the collapse onto the pushed reference direction.

    The reference at each point is the extracted direction pushed along the
    same orbit, which the dynamics keeps closer to the true field than a
    fresh finite-depth extraction would be.
    """
    if side not in ("unstable", "stable"):
        raise ConfigError("side must be 'unstable' or 'stable'")
    if grid < 2:
        raise ConfigError("grid needs at least two directions")
    horizon = 0
    if isinstance(sys, ShiftSystem):
        horizon = depth + n + a_spec.symbol_depth + 2
    pts = sample_points(sys, samples, horizon, seed)
    if side == "unstable":
        rx0, ry0, ok = unstable_directions(a_spec, sys, pts, depth, threads)
    else:
        rx0, ry0, ok = stable_directions(a_spec, sys, pts, depth, threads)
    if not ok.all():
        raise NoGap("conformal window product in attraction test")
    # grid of initial angles, offset to avoid symmetry artifacts
    thetas = np.pi * (np.arange(grid) + 0.37) / grid
    gx0 = np.cos(thetas)
    gy0 = np.sin(thetas)

    def job(start: int, stop: int):
        width = stop - start
        batch = engine.batch_of(sys, pts[start:stop])
        gx = np.tile(gx0, (width, 1))
        gy = np.tile(gy0, (width, 1))
        rx = rx0[start:stop].copy()
        ry = ry0[start:stop].copy()
        for k in range(n):
            if side == "unstable":
                va, vb, vc, vd = engine.values(a_spec, sys, batch)
                if k + 1 < n:
                    engine.step(sys, batch, 1)
            else:
                engine.step(sys, batch, -1)
                va, vb, vc, vd = engine.values(a_spec, sys, batch)
                sdet = va * vd - vb * vc
                va, vb, vc, vd = mat2.adjugate_batch(va, vb, vc, vd)
                va, vb, vc, vd = va / sdet, vb / sdet, vc / sdet, vd / sdet
            gx, gy = _push_grid(va, vb, vc, vd, gx, gy)
            rx, ry = _push_directions(va, vb, vc, vd, rx, ry)
        dist = np.abs(gx * ry[:, None] - gy * rx[:, None])
        return (dist.T,)  # block_map concatenates on the last axis

    (dist_t,) = engine.block_map(job, samples, threads)
    distances = dist_t.T
    return AttractionReport(
        side=side,
        n=n,
        distances=distances,
        median_final=float(np.median(distances)),
        max_final=float(np.max(distances)),
    )


def _push_grid(va, vb, vc, vd, gx, gy):
    """Push (S, G) direction columns by per-sample matrices."""
    wx = va[:, None] * gx + vb[:, None] * gy
    wy = vc[:, None] * gx + vd[:, None] * gy
    nrm = np.hypot(wx, wy)
    return wx / nrm, wy / nrm
