"""Continuity of the Oseledets splitting under cocycle perturbations.

For a family A_k = A perturbed at size t_k, the harness couples everything
on one fixed draw of base points: directions for A and A_k are extracted at
the same window depth on the same points, exponents for every member use
the same windows, and the good-set fraction counts points whose stable and
unstable directions both moved less than epsilon.  Coupling removes the
base-sampling noise from all comparisons, which is what makes the small-t
rows informative at realistic sample counts.

Rows whose perturbed member loses its singular value gap are censored: the
row stays in the table with NaN statistics rather than disappearing, so the
schedule remains visible in the output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import BasePoint, BaseSystem, ShiftSystem, TorusSystem, sample_points
from .cocycle import (
    CocycleSpec,
    MatrixField,
    PerturbedCocycle,
    holder_distance,
    specialize,
)
from .errors import ConfigError, NoGap, SingularPerturbation, SingularValueError
from .oseledets import stable_directions, unstable_directions
from .spectrum import lyapunov_exponents

_WILSON_Z = 1.959963984540054  # two-sided 95%
_DET_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class PerturbationFamily:
    """A base cocycle, a direction field, a composition rule, and the
    perturbation sizes to visit (largest first by convention)."""

    base: CocycleSpec
    direction: MatrixField
    rule: str = "multiplicative_exp"
    ts: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.rule not in ("multiplicative_exp", "additive"):
            raise ConfigError("rule must be 'multiplicative_exp' or 'additive'")
        if not self.ts:
            raise ConfigError("perturbation family needs at least one size")
        if any(t <= 0.0 for t in self.ts):
            raise ConfigError("perturbation sizes must be positive")
        object.__setattr__(self, "ts", tuple(float(t) for t in self.ts))

    @classmethod
    def dyadic(
        cls,
        base: CocycleSpec,
        direction: MatrixField,
        rule: str = "multiplicative_exp",
        count: int = 12,
    ) -> "PerturbationFamily":
        """Sizes t_k = 2^{-k} for k = 1 .. count."""
        return cls(
            base=base,
            direction=direction,
            rule=rule,
            ts=tuple(2.0 ** -k for k in range(1, count + 1)),
        )


def perturb(
    base: CocycleSpec,
    direction: MatrixField,
    t: float,
    rule: str,
    sys: BaseSystem,
) -> CocycleSpec:
    """The perturbed cocycle at size t, specialized to an exact symbol table
    over shift bases when both pieces reduce to tables.

    Additive perturbations are checked for invertibility up front: exactly
    on tables, on a fixed coordinate grid for pointwise specs.
    """
    spec = PerturbedCocycle(base=base, direction=direction, t=t, rule=rule)
    if isinstance(sys, ShiftSystem):
        try:
            return specialize(spec, sys)
        except SingularValueError as err:
            raise SingularPerturbation(
                f"additive perturbation at t={t} produces a singular value"
            ) from err
    if rule == "additive" and isinstance(sys, TorusSystem):
        side = np.arange(128) / 128.0
        uu, vv = np.meshgrid(side, side)
        coords = np.column_stack([uu.ravel(), vv.ravel()])
        a, b, c, d = spec.values_at_coords(coords)
        if np.min(np.abs(a * d - b * c)) < _DET_FLOOR:
            raise SingularPerturbation(
                f"additive perturbation at t={t} is singular on the grid"
            )
    return spec


# ---------------------------------------------------------------------------
# good set


def wilson_interval(successes: int, n: int, z: float = _WILSON_Z) -> tuple[float, float]:
    """95% score interval for a binomial proportion."""
    if n < 1:
        raise ConfigError("interval needs n >= 1")
    p = successes / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * np.sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom
    # the endpoint is exactly 0 or 1 when every trial agrees; the float
    # route can land one ulp inside it
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == n else min(1.0, center + half)
    return lo, hi


@dataclass(frozen=True, eq=False)
class GoodSetReport:
    g_hat: float
    ci_lo: float
    ci_hi: float
    epsilon: float
    samples: int
    depth: int
    mean_du: float
    max_du: float
    mean_ds: float
    max_ds: float
    unstable_distances: np.ndarray
    stable_distances: np.ndarray


def _extract_both(a_spec, sys, points, depth, threads):
    ux, uy, ok_u = unstable_directions(a_spec, sys, points, depth, threads)
    sx, sy, ok_s = stable_directions(a_spec, sys, points, depth, threads)
    if not (ok_u.all() and ok_s.all()):
        raise NoGap("conformal window product during direction extraction")
    return ux, uy, sx, sy


def _good_set_from_directions(
    base_dirs, pert_dirs, epsilon: float, depth: int
) -> GoodSetReport:
    ux, uy, sx, sy = base_dirs
    px, py, qx, qy = pert_dirs
    du = np.abs(ux * py - uy * px)
    ds = np.abs(sx * qy - sy * qx)
    good = (du <= epsilon) & (ds <= epsilon)
    n = good.size
    hits = int(np.count_nonzero(good))
    lo, hi = wilson_interval(hits, n)
    return GoodSetReport(
        g_hat=hits / n,
        ci_lo=lo,
        ci_hi=hi,
        epsilon=epsilon,
        samples=n,
        depth=depth,
        mean_du=float(np.mean(du)),
        max_du=float(np.max(du)),
        mean_ds=float(np.mean(ds)),
        max_ds=float(np.max(ds)),
        unstable_distances=du,
        stable_distances=ds,
    )


def good_set_measure(
    a_spec: CocycleSpec,
    b_spec: CocycleSpec,
    sys: BaseSystem,
    points: list[BasePoint],
    epsilon: float,
    depth: int,
    threads: int = 1,
) -> GoodSetReport:
    """Fraction of shared sample points where both Oseledets directions of
    b_spec sit within epsilon of a_spec's, with a Wilson 95% interval."""
    if epsilon <= 0.0:
        raise ConfigError("epsilon must be positive")
    base_dirs = _extract_both(a_spec, sys, points, depth, threads)
    pert_dirs = _extract_both(b_spec, sys, points, depth, threads)
    return _good_set_from_directions(base_dirs, pert_dirs, epsilon, depth)


# ---------------------------------------------------------------------------
# the experiment


@dataclass(frozen=True)
class ContinuityRow:
    k: int
    t: float
    holder_dist: float
    g_hat: float
    ci_lo: float
    ci_hi: float
    lambda_plus: float
    lambda_minus: float
    mean_du: float
    max_du: float
    mean_ds: float
    max_ds: float
    censored: bool


@dataclass(frozen=True, eq=False)
class ContinuityReport:
    rows: tuple[ContinuityRow, ...]
    base_lambda_plus: float
    base_lambda_minus: float
    epsilon: float
    depth: int
    samples: int
    n_window: int
    seed: int


def continuity_experiment(
    family: PerturbationFamily,
    sys: BaseSystem,
    epsilon: float = 0.1,
    samples: int = 10000,
    depth: int = 40,
    n_window: int = 400,
    seed: int = 0,
    threads: int = 1,
) -> ContinuityReport:
    """Run the whole perturbation schedule on one coupled sample draw.

    Every row reports the Holder distance to the base, the good-set
    fraction with its interval, the perturbed exponents, and the direction
    displacement statistics; rows that lose the singular value gap are
    censored to NaN but keep their place in the schedule.
    """
    max_depth_syms = family.base.symbol_depth
    max_depth_syms = max(max_depth_syms, getattr(family.direction, "symbol_depth", 0))
    horizon = 0
    if isinstance(sys, ShiftSystem):
        horizon = max(depth, n_window) + max_depth_syms + 2
    points = sample_points(sys, samples, horizon, seed)
    base_rep = lyapunov_exponents(
        family.base, sys, n=n_window, points=points, threads=threads
    )
    base_dirs = _extract_both(family.base, sys, points, depth, threads)
    rows: list[ContinuityRow] = []
    for i, t in enumerate(family.ts):
        k = i + 1
        spec_k = perturb(family.base, family.direction, t, family.rule, sys)
        hd = holder_distance(spec_k, family.base, sys, seed=seed).norm
        try:
            pert_dirs = _extract_both(spec_k, sys, points, depth, threads)
            gs = _good_set_from_directions(base_dirs, pert_dirs, epsilon, depth)
            rep_k = lyapunov_exponents(
                spec_k, sys, n=n_window, points=points, threads=threads
            )
        except NoGap:
            rows.append(
                ContinuityRow(
                    k=k, t=t, holder_dist=hd,
                    g_hat=np.nan, ci_lo=np.nan, ci_hi=np.nan,
                    lambda_plus=np.nan, lambda_minus=np.nan,
                    mean_du=np.nan, max_du=np.nan,
                    mean_ds=np.nan, max_ds=np.nan,
                    censored=True,
                )
            )
            continue
        rows.append(
            ContinuityRow(
                k=k, t=t, holder_dist=hd,
                g_hat=gs.g_hat, ci_lo=gs.ci_lo, ci_hi=gs.ci_hi,
                lambda_plus=rep_k.lambda_plus,
                lambda_minus=rep_k.lambda_minus,
                mean_du=gs.mean_du, max_du=gs.max_du,
                mean_ds=gs.mean_ds, max_ds=gs.max_ds,
                censored=False,
            )
        )
    return ContinuityReport(
        rows=tuple(rows),
        base_lambda_plus=base_rep.lambda_plus,
        base_lambda_minus=base_rep.lambda_minus,
        epsilon=epsilon,
        depth=depth,
        samples=samples,
        n_window=n_window,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# Lusin-style regularity probe


@dataclass(frozen=True, eq=False)
class LusinReport:
    scales: tuple[int, ...]
    unstable_dispersion: np.ndarray
    stable_dispersion: np.ndarray
    samples: int


def lusin_stability_probe(
    a_spec: CocycleSpec,
    sys: BaseSystem,
    samples: int = 2000,
    depth: int = 40,
    scales: tuple[int, ...] = (1, 2, 3),
    seed: int = 0,
    threads: int = 1,
) -> LusinReport:
    """Within-bin circular dispersion of the direction fields by scale.

    Bins at scale m are past cylinders of length m for the unstable field
    and future cylinders for the stable one (dyadic coordinate boxes on the
    torus for both).  Doubled angles make the statistic line-valued; a
    dispersion that falls as the bins shrink is the empirical face of
    measurable-almost-continuous direction fields.
    """
    horizon = 0
    if isinstance(sys, ShiftSystem):
        horizon = depth + a_spec.symbol_depth + max(scales) + 2
    points = sample_points(sys, samples, horizon, seed)
    ux, uy, sx, sy = _extract_both(a_spec, sys, points, depth, threads)
    disp_u = []
    disp_s = []
    for m in scales:
        disp_u.append(_binned_dispersion(sys, points, ux, uy, m, past=True))
        disp_s.append(_binned_dispersion(sys, points, sx, sy, m, past=False))
    return LusinReport(
        scales=tuple(scales),
        unstable_dispersion=np.array(disp_u),
        stable_dispersion=np.array(disp_s),
        samples=samples,
    )


def _binned_dispersion(sys, points, vx, vy, scale: int, past: bool) -> float:
    keys: dict[tuple, list[int]] = {}
    if isinstance(sys, ShiftSystem):
        for i, p in enumerate(points):
            if past:
                key = tuple(p.symbol(-j) for j in range(1, scale + 1))
            else:
                key = tuple(p.symbol(j) for j in range(scale))
            keys.setdefault(key, []).append(i)
    else:
        boxes = 2 ** scale
        for i, p in enumerate(points):
            key = (int(p.u * boxes), int(p.v * boxes))
            keys.setdefault(key, []).append(i)
    cos2 = vx * vx - vy * vy
    sin2 = 2.0 * vx * vy
    total = 0.0
    weight = 0
    for idx in keys.values():
        if len(idx) < 2:
            continue
        sel = np.asarray(idx)
        resultant = np.hypot(np.mean(cos2[sel]), np.mean(sin2[sel]))
        total += (1.0 - resultant) * len(idx)
        weight += len(idx)
    return total / weight if weight else 0.0
