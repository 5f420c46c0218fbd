"""Scheme diagnostics: observed order, positivity audits, spurious fixed
points, and side-by-side scheme comparison."""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .integrators import (RK4, SchemeId, Trajectory, _CLASSICAL_CORES,
                          _nsfd_core, effective_step, integrate)
from .equilibria import EquilibriumSet, find_equilibria
from .systems import SplitSystem, State

COMPARISON_HEADER = ("scheme,h,x0,y0,t_end,final_x,final_y,"
                     "dist_to_equilibrium,positivity_violation_step,nonfinite")

GHOST_SEEDS_PER_AXIS = 60
GHOST_MATCH_TOL = 1e-6
GHOST_DEDUP_TOL = 1e-6
REFERENCE_REFINEMENT = 100


class ReferenceUnavailable(RuntimeError):
    """The high-accuracy reference orbit could not be computed."""


@dataclass(frozen=True)
class OrderEstimate:
    """Least-squares slope of log(error) against log(h)."""

    scheme: str
    steps: "tuple[float, ...]"
    errors: "tuple[float, ...]"
    slope: float
    intercept: float
    residual: float


def estimate_order(system: SplitSystem, scheme: SchemeId, s0: State, t_end: float,
                   steps, backend: "str | None" = None) -> OrderEstimate:
    """Observed convergence order against an rk4 reference orbit.

    steps must be at least four step sizes, strictly descending, each
    dividing t_end - t0 evenly.  The reference runs at min(steps)/100 and
    errors are sup-norm over the grid points the runs share with it.
    """
    steps = tuple(float(h) for h in steps)
    if len(steps) < 4:
        raise ValueError(f"need at least 4 step sizes, got {len(steps)}")
    if any(b >= a for a, b in zip(steps, steps[1:])):
        raise ValueError(f"step sizes must be strictly descending, got {steps}")
    horizon = t_end - s0.t
    for h in steps:
        r = horizon / h
        if abs(r - round(r)) > 1e-9 * max(1.0, r):
            raise ValueError(f"step {h!r} does not divide the horizon {horizon!r} evenly")

    h_ref = steps[-1] / REFERENCE_REFINEMENT
    ref = integrate(system, RK4, s0, h_ref, t_end, backend=backend)
    if ref.truncated:
        raise ReferenceUnavailable(
            f"rk4 reference at h={h_ref!r} left the finite range at step {ref.halt_step}")

    errors = []
    for h in steps:
        traj = integrate(system, scheme, s0, h, t_end, backend=backend)
        if traj.truncated:
            raise ReferenceUnavailable(
                f"{scheme.label} at h={h!r} left the finite range at step {traj.halt_step}")
        ratio = h / h_ref
        err = 0.0
        for k in range(len(traj)):
            j = int(round(k * ratio))
            if j >= len(ref) or abs(traj.ts[k] - ref.ts[j]) > 1e-9 * max(1.0, abs(traj.ts[k])):
                raise ValueError(f"grids for h={h!r} and the reference do not align at k={k}")
            err = max(err, abs(traj.xs[k] - ref.xs[j]), abs(traj.ys[k] - ref.ys[j]))
        if err <= 0.0:
            raise ValueError(f"zero error at h={h!r}; orbit coincides with the reference")
        errors.append(err)

    log_h = np.log(np.array(steps))
    log_e = np.log(np.array(errors))
    slope, intercept = np.polyfit(log_h, log_e, 1)
    fit = slope * log_h + intercept
    residual = float(np.sqrt(np.mean((log_e - fit) ** 2)))
    return OrderEstimate(scheme.label, steps, tuple(errors),
                         float(slope), float(intercept), residual)


@dataclass(frozen=True)
class PositivityAudit:
    """First exit from the closed positive quadrant, if any."""

    violation_step: "int | None"
    state: "State | None"

    @property
    def clean(self) -> bool:
        return self.violation_step is None


def audit_positivity(traj: Trajectory) -> PositivityAudit:
    bad = (traj.xs < 0.0) | (traj.ys < 0.0)
    if not bool(bad.any()):
        return PositivityAudit(None, None)
    k = int(np.argmax(bad))
    return PositivityAudit(k, traj.state(k))


# ---------------------------------------------------------------------------
# fixed points of the update maps


@dataclass(frozen=True)
class MapFixedPoint:
    x: float
    y: float
    residual: float
    genuine: bool


@dataclass(frozen=True)
class GhostReport:
    """Fixed points of one scheme's update map inside a search box.

    genuine points coincide (within 1e-6) with equilibria of the flow;
    everything else is a spurious artefact of the discretisation.
    """

    scheme: str
    h: float
    box: "tuple[float, float]"
    fixed_points: "tuple[MapFixedPoint, ...]"

    @property
    def ghosts(self) -> "tuple[MapFixedPoint, ...]":
        return tuple(fp for fp in self.fixed_points if not fp.genuine)

    @property
    def genuine(self) -> "tuple[MapFixedPoint, ...]":
        return tuple(fp for fp in self.fixed_points if fp.genuine)


def detect_ghosts(system: SplitSystem, scheme: SchemeId, h: float,
                  box: "tuple[float, float] | None" = None,
                  seeds_per_axis: int = GHOST_SEEDS_PER_AXIS,
                  backend: "str | None" = None) -> GhostReport:
    """Newton scan for fixed points of one step of the scheme.

    Seeds a uniform grid over the box ([0,bx] x [0,by]); for the classical
    schemes the grid and the acceptance region extend 10% beyond each side,
    since their spurious points can sit just outside the quadrant.  Found
    points are deduplicated at 1e-6 and labelled genuine when they match a
    flow equilibrium to 1e-6.
    """
    if box is None:
        box = (system.x_max, system.x_max)
    bx, by = float(box[0]), float(box[1])
    classical = scheme.kind in ("euler", "rk2", "rk4")
    lox, hix = (-0.1 * bx, 1.1 * bx) if classical else (0.0, bx)
    loy, hiy = (-0.1 * by, 1.1 * by) if classical else (0.0, by)
    gx = np.linspace(lox, hix, seeds_per_axis)
    gy = np.linspace(loy, hiy, seeds_per_axis)
    sx, sy = [g.ravel() for g in np.meshgrid(gx, gy, indexing="ij")]

    e = effective_step(scheme, h) if scheme.kind in ("nsfd", "ensfd") else float(h)
    if system.rma_params is not None:
        rows = _kernels.scan_fixed_points(system.rma_params, scheme.kind, e, h,
                                          sx, sy, backend=backend)
    else:
        if scheme.kind in ("nsfd", "ensfd"):
            map_fn = lambda x, y: _nsfd_core(system, x, y, e)
        else:
            core = _CLASSICAL_CORES[scheme.kind]
            map_fn = lambda x, y: core(system, x, y, h)
        rows = _kernels.scan_fixed_points_generic(map_fn, sx, sy)

    tol_in = 1e-9 * (1.0 + max(bx, by))
    hits = [(float(x), float(y), float(res)) for x, y, res in rows
            if res < _kernels.NEWTON_TOL
            and lox - tol_in <= x <= hix + tol_in
            and loy - tol_in <= y <= hiy + tol_in]
    hits.sort()

    clusters = []
    for x, y, res in hits:
        placed = False
        for cl in clusters:
            if math.hypot(x - cl[0][0], y - cl[0][1]) <= GHOST_DEDUP_TOL:
                cl.append((x, y, res))
                placed = True
                break
        if not placed:
            clusters.append([(x, y, res)])

    eqs = find_equilibria(system, (bx, by))
    points = []
    for cl in clusters:
        x, y, res = min(cl, key=lambda row: (row[2], row[0], row[1]))
        dist = min((math.hypot(x - p.x, y - p.y) for p in eqs), default=math.inf)
        points.append(MapFixedPoint(x, y, res, dist < GHOST_MATCH_TOL))
    points.sort(key=lambda p: (p.x, p.y))
    return GhostReport(scheme.label, float(h), (bx, by), tuple(points))


# ---------------------------------------------------------------------------
# scheme comparison


@dataclass(frozen=True)
class ComparisonRow:
    scheme: str
    h: float
    x0: float
    y0: float
    t_end: float
    final_x: float
    final_y: float
    dist_to_equilibrium: float
    positivity_violation_step: "int | None"
    nonfinite: bool


@dataclass(frozen=True)
class ComparisonTable:
    rows: "tuple[ComparisonRow, ...]"

    def to_csv(self) -> str:
        lines = [COMPARISON_HEADER]
        for r in self.rows:
            step_field = "" if r.positivity_violation_step is None else str(r.positivity_violation_step)
            lines.append(",".join([
                r.scheme,
                f"{r.h:.17g}",
                f"{r.x0:.17g}",
                f"{r.y0:.17g}",
                f"{r.t_end:.17g}",
                f"{r.final_x:.17g}",
                f"{r.final_y:.17g}",
                f"{r.dist_to_equilibrium:.17g}",
                step_field,
                "true" if r.nonfinite else "false",
            ]))
        return "\n".join(lines) + "\n"

    def write_csv(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            fh.write(self.to_csv())


def compare_schemes(system: SplitSystem, schemes, s0: State, h_values, t_end: float,
                    backend: "str | None" = None) -> ComparisonTable:
    """Run every scheme at every step size from one initial state.

    One row per (scheme, h) pair, in the given order.  A run that halts on
    a non-finite state reports its last finite state and nonfinite=true; a
    run that fails outright (for the weighted schemes, a negative initial
    state) records nan finals instead of aborting the rest of the grid.
    """
    eqs = find_equilibria(system)
    rows = []
    for scheme in schemes:
        for h in h_values:
            h = float(h)
            try:
                traj = integrate(system, scheme, s0, h, t_end, backend=backend)
            except Exception:
                rows.append(ComparisonRow(scheme.label, h, s0.x, s0.y, t_end,
                                          math.nan, math.nan, math.nan, None, True))
                continue
            audit = audit_positivity(traj)
            fin = traj.final()
            dist = _nearest_equilibrium_distance(eqs, fin.x, fin.y)
            rows.append(ComparisonRow(scheme.label, h, s0.x, s0.y, t_end,
                                      fin.x, fin.y, dist,
                                      audit.violation_step, traj.truncated))
    return ComparisonTable(tuple(rows))


def _nearest_equilibrium_distance(eqs: EquilibriumSet, x: float, y: float) -> float:
    return min((math.hypot(x - p.x, y - p.y) for p in eqs), default=math.inf)


# ---------------------------------------------------------------------------
# long-run behaviour summaries


@dataclass(frozen=True)
class OscillationStats:
    """Tail behaviour of an orbit relative to a reference point.

    Sustained oscillation means: the orbit stayed finite and positive, its
    tail keeps a minimum distance from the reference point, and the tail
    distances swing by more than the same tolerance (it neither settles
    onto the point nor parks somewhere else).
    """

    bounded: bool
    positive: bool
    min_tail_distance: float
    amplitude: float

    def sustained(self, tol: float = 1e-3) -> bool:
        return (self.bounded and self.positive
                and self.min_tail_distance > tol and self.amplitude > tol)


def oscillation_stats(traj: Trajectory, center: "tuple[float, float]",
                      tail_fraction: float = 0.25) -> OscillationStats:
    cx, cy = center
    n_tail = max(2, int(math.ceil(tail_fraction * len(traj))))
    xs = traj.xs[-n_tail:]
    ys = traj.ys[-n_tail:]
    d = np.hypot(xs - cx, ys - cy)
    positive = bool(traj.xs.min() > 0.0 and traj.ys.min() > 0.0)
    return OscillationStats(
        bounded=not traj.truncated,
        positive=positive,
        min_tail_distance=float(d.min()),
        amplitude=float(d.max() - d.min()),
    )
