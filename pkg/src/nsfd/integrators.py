"""One-step integrators for split systems.

The denominator-weighted schemes (`nsfd_step`, `ensfd_step`) update each
coordinate through

    x_next = x * (1 + e * f_plus) / (1 + e * f_minus)

with e = h for the plain scheme and e = phi(h) for a weighted one.  From a
state in the closed positive quadrant the update can never leave it, for
any step size, and its fixed points are exactly the equilibria of the flow.
Euler, explicit midpoint (rk2) and classical rk4 are provided as references
and deliberately do nothing to protect the quadrant: negative excursions
are data, not errors, and only a non-finite state stops integration early.
"""

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _kernels
from .systems import DomainError, SplitSystem, State

SCHEME_KINDS = ("nsfd", "ensfd", "euler", "rk2", "rk4")

CSV_HEADER = "k,t,x,y"


class NonFiniteError(ArithmeticError):
    """A scheme stage or result evaluated to inf or nan."""


@dataclass(frozen=True)
class StepWeight:
    """Denominator weight phi with phi(h) = h + O(h^2) and phi(h) > 0 for h > 0."""

    name: str
    phi: Callable[[float], float]


IDENTITY = StepWeight("identity", lambda h: h)


def exponential_weight(lam: float) -> StepWeight:
    """phi(h) = (1 - exp(-lam*h)) / lam.

    Behaves like h for small steps but saturates at 1/lam, which damps the
    effective step of the weighted scheme for large h.
    """
    if not (math.isfinite(lam) and lam > 0.0):
        raise ValueError(f"weight rate must be positive and finite, got {lam!r}")
    lam = float(lam)
    # expm1 avoids the 1 - exp(-x) cancellation for tiny steps
    return StepWeight(f"exp:{lam:g}", lambda h: -math.expm1(-lam * h) / lam)


def weight_from_name(text: str) -> StepWeight:
    """Parse "identity" or "exp:LAMBDA" (CLI --weight syntax)."""
    sel = text.strip().lower()
    if sel == "identity":
        return IDENTITY
    if sel.startswith("exp:"):
        try:
            lam = float(sel[len("exp:"):])
        except ValueError:
            raise ValueError(f"bad weight rate in {text!r}") from None
        return exponential_weight(lam)
    raise ValueError(f"unknown weight {text!r}; expected identity or exp:LAMBDA")


@dataclass(frozen=True)
class SchemeId:
    """Scheme selector: kind plus, for "ensfd", the step weight."""

    kind: str
    weight: "StepWeight | None" = None

    def __post_init__(self):
        if self.kind not in SCHEME_KINDS:
            raise ValueError(f"unknown scheme kind {self.kind!r}")
        if self.kind == "ensfd" and self.weight is None:
            raise ValueError("ensfd needs a StepWeight")
        if self.kind != "ensfd" and self.weight is not None:
            raise ValueError(f"scheme {self.kind!r} does not take a weight")

    @property
    def label(self) -> str:
        return self.kind


NSFD = SchemeId("nsfd")
EULER = SchemeId("euler")
RK2 = SchemeId("rk2")
RK4 = SchemeId("rk4")


def ensfd(weight: StepWeight) -> SchemeId:
    return SchemeId("ensfd", weight)


def scheme_from_name(name: str, weight: "StepWeight | None" = None) -> SchemeId:
    sel = name.strip().lower()
    if sel == "ensfd":
        return ensfd(weight if weight is not None else IDENTITY)
    if weight is not None and weight is not IDENTITY:
        raise ValueError(f"--weight only applies to the ensfd scheme, not {name!r}")
    return SchemeId(sel)


def _require_step(h: float) -> None:
    if not (math.isfinite(h) and h > 0.0):
        raise ValueError(f"step size must be positive and finite, got {h!r}")


def _require_quadrant(state: State) -> None:
    if state.x < 0.0 or state.y < 0.0:
        raise DomainError(f"state ({state.x!r}, {state.y!r}) outside the closed quadrant")


def effective_step(scheme: SchemeId, h: float) -> float:
    """The denominator weight actually applied at step size h."""
    _require_step(h)
    if scheme.weight is None:
        return float(h)
    e = float(scheme.weight.phi(h))
    if not (math.isfinite(e) and e > 0.0):
        raise ValueError(f"weight {scheme.weight.name} gave non-positive phi({h!r}) = {e!r}")
    return e


# The cores below mirror the expression shapes in nsfd._kernels._rma_step;
# keep them in sync or the backends stop agreeing bitwise.

def _nsfd_core(system: SplitSystem, x: float, y: float, e: float):
    fp, fm, gp, gm = system.components(x, y)
    return x * (1.0 + e * fp) / (1.0 + e * fm), y * (1.0 + e * gp) / (1.0 + e * gm)


def _field(system: SplitSystem, x: float, y: float):
    fp, fm, gp, gm = system.components(x, y)
    return x * (fp - fm), y * (gp - gm)


def _euler_core(system: SplitSystem, x: float, y: float, h: float):
    ux, uy = _field(system, x, y)
    return x + h * ux, y + h * uy


def _rk2_core(system: SplitSystem, x: float, y: float, h: float):
    k1x, k1y = _field(system, x, y)
    k2x, k2y = _field(system, x + 0.5 * h * k1x, y + 0.5 * h * k1y)
    return x + h * k2x, y + h * k2y


def _rk4_core(system: SplitSystem, x: float, y: float, h: float):
    k1x, k1y = _field(system, x, y)
    k2x, k2y = _field(system, x + 0.5 * h * k1x, y + 0.5 * h * k1y)
    k3x, k3y = _field(system, x + 0.5 * h * k2x, y + 0.5 * h * k2y)
    k4x, k4y = _field(system, x + h * k3x, y + h * k3y)
    return (
        x + h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x),
        y + h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y),
    )


_CLASSICAL_CORES = {"euler": _euler_core, "rk2": _rk2_core, "rk4": _rk4_core}


def nsfd_step(system: SplitSystem, state: State, h: float) -> State:
    """One positivity-preserving step of size h.

    Requires a state in the closed positive quadrant (DomainError otherwise)
    and returns one; no step-size restriction applies.
    """
    _require_step(h)
    _require_quadrant(state)
    xn, yn = _nsfd_core(system, state.x, state.y, h)
    return State(xn, yn, state.t + h)


def ensfd_step(system: SplitSystem, state: State, h: float, weight: StepWeight) -> State:
    """Weighted variant: identical to nsfd_step with e = weight.phi(h).

    The time coordinate still advances by h; the weight only reshapes the
    denominators.
    """
    e = effective_step(SchemeId("ensfd", weight), h)
    _require_quadrant(state)
    xn, yn = _nsfd_core(system, state.x, state.y, e)
    return State(xn, yn, state.t + h)


def _classical_step(core, system: SplitSystem, state: State, h: float) -> State:
    _require_step(h)
    try:
        xn, yn = core(system, state.x, state.y, h)
    except (ZeroDivisionError, OverflowError) as exc:
        raise NonFiniteError(f"stage evaluation failed at t={state.t!r}: {exc}") from None
    # IEEE propagation means a non-finite stage always surfaces in the result
    if not (math.isfinite(xn) and math.isfinite(yn)):
        raise NonFiniteError(f"non-finite state after step from t={state.t!r}")
    return State(xn, yn, state.t + h)


def euler_step(system: SplitSystem, state: State, h: float) -> State:
    """Forward Euler. No positivity protection; raises NonFiniteError on blow-up."""
    return _classical_step(_euler_core, system, state, h)


def rk2_step(system: SplitSystem, state: State, h: float) -> State:
    """Explicit midpoint rule (second order)."""
    return _classical_step(_rk2_core, system, state, h)


def rk4_step(system: SplitSystem, state: State, h: float) -> State:
    """Classical fourth-order Runge-Kutta."""
    return _classical_step(_rk4_core, system, state, h)


def step(system: SplitSystem, scheme: SchemeId, state: State, h: float) -> State:
    """Dispatch one step of any scheme."""
    if scheme.kind == "nsfd":
        return nsfd_step(system, state, h)
    if scheme.kind == "ensfd":
        return ensfd_step(system, state, h, scheme.weight)
    return _classical_step(_CLASSICAL_CORES[scheme.kind], system, state, h)


def step_count(t0: float, t_end: float, h: float) -> int:
    """Number of whole steps covering [t0, t_end]; no partial final step.

    Ratios within 1e-9 of the next integer round up, so t_end = 5, h = 0.1
    gives exactly 50 steps despite 5/0.1 rounding below 50 in floats.
    """
    r = (t_end - t0) / h
    n = math.floor(r)
    if r - n > 1.0 - 1e-9:
        n += 1
    return n


def _fmt(v: float) -> str:
    return f"{v:.17g}"


@dataclass(frozen=True, eq=False)
class Trajectory:
    """A computed orbit on the uniform grid t_k = t0 + k*h.

    xs/ys/ts hold only finite states.  If the scheme left the finite range,
    halt_step is the grid index of the first non-finite state (which is not
    stored) and halt_reason says why integration stopped.
    """

    scheme: SchemeId
    h: float
    ts: np.ndarray
    xs: np.ndarray
    ys: np.ndarray
    requested_steps: int
    halt_step: "int | None" = None
    halt_reason: "str | None" = None

    def __len__(self) -> int:
        return len(self.ts)

    @property
    def truncated(self) -> bool:
        return self.halt_step is not None

    @property
    def states(self) -> "list[State]":
        return [State(float(x), float(y), float(t))
                for x, y, t in zip(self.xs, self.ys, self.ts)]

    def state(self, k: int) -> State:
        return State(float(self.xs[k]), float(self.ys[k]), float(self.ts[k]))

    def final(self) -> State:
        return self.state(len(self.ts) - 1)

    def to_csv(self) -> str:
        lines = [CSV_HEADER]
        for k in range(len(self.ts)):
            lines.append(f"{k},{_fmt(self.ts[k])},{_fmt(self.xs[k])},{_fmt(self.ys[k])}")
        return "\n".join(lines) + "\n"

    def write_csv(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            fh.write(self.to_csv())


def integrate(system: SplitSystem, scheme: SchemeId, s0: State, h: float,
              t_end: float, backend: "str | None" = None) -> Trajectory:
    """Run a scheme from s0 to t_end with fixed step h.

    The step count is floor((t_end - t0)/h); a trailing fraction of a step
    is never taken.  Tagged systems dispatch to the compiled kernels (or
    their bit-identical python twins, see nsfd._kernels); everything else
    runs the generic callable loop below.  backend overrides the
    NSFD_BACKEND environment variable for this call.
    """
    _require_step(h)
    if not (math.isfinite(t_end) and t_end > s0.t):
        raise ValueError(f"t_end {t_end!r} must exceed the initial time {s0.t!r}")
    nonlocal_scheme = scheme.kind in ("nsfd", "ensfd")
    if nonlocal_scheme:
        _require_quadrant(s0)
    e = effective_step(scheme, h) if nonlocal_scheme else float(h)
    n = step_count(s0.t, t_end, h)

    if system.rma_params is not None:
        xs, ys, m = _kernels.run_trajectory(
            system.rma_params, scheme.kind, s0.x, s0.y, e, h, n, backend=backend)
    else:
        xs = np.empty(n + 1)
        ys = np.empty(n + 1)
        x = float(s0.x)
        y = float(s0.y)
        xs[0] = x
        ys[0] = y
        m = n + 1
        for k in range(n):
            try:
                if nonlocal_scheme:
                    xn, yn = _nsfd_core(system, x, y, e)
                else:
                    xn, yn = _CLASSICAL_CORES[scheme.kind](system, x, y, h)
            except (ZeroDivisionError, OverflowError):
                m = k + 1
                break
            if not (math.isfinite(xn) and math.isfinite(yn)):
                m = k + 1
                break
            xs[k + 1] = xn
            ys[k + 1] = yn
            x = xn
            y = yn
        xs = xs[:m]
        ys = ys[:m]

    ts = s0.t + h * np.arange(m)
    halt_step = None if m == n + 1 else m
    halt_reason = None if halt_step is None else "nonfinite"
    return Trajectory(scheme, float(h), ts, xs, ys, requested_steps=n,
                      halt_step=halt_step, halt_reason=halt_reason)
