"""Planar split systems on the closed positive quadrant.

A split system separates each per-capita rate into a gain part and a loss
part,

    x' = x * (f_plus(x, y) - f_minus(x, y))
    y' = y * (g_plus(x, y) - g_minus(x, y))

with all four components finite, non-negative on the axes and strictly
positive inside the quadrant.  Keeping gains and losses apart is what makes
the denominator-weighted difference schemes in :mod:`nsfd.integrators`
positivity preserving and the closed-form equilibrium analysis in
:mod:`nsfd.equilibria` possible, so construction checks the sign structure
eagerly on a sample grid instead of trusting the caller.
"""

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

Component = Callable[[float, float], float]

X_MAX_DEFAULT = 20.0
VALIDATION_GRID_N = 50
AXIS_ZERO_TOL = 1e-9

# cube root of machine epsilon, the usual central-difference step scale
_FD_EPS = float(np.finfo(float).eps) ** (1.0 / 3.0)


class DomainError(ValueError):
    """State outside the closed positive quadrant."""


class ConstructionError(ValueError):
    """System definition violates the split-form sign requirements."""


@dataclass(frozen=True)
class State:
    x: float
    y: float
    t: float = 0.0


@dataclass(frozen=True)
class ModelParams:
    """Parameters (a, b, c, d) of the built-in predator-prey family."""

    a: float
    b: float
    c: float
    d: float


class PartialValues(NamedTuple):
    """First partial derivatives of the four components at one point.

    Field order is fixed: gain/loss of the x equation first, then the y
    equation, each as (d/dx, d/dy).
    """

    fpx: float
    fpy: float
    fmx: float
    fmy: float
    gpx: float
    gpy: float
    gmx: float
    gmy: float


@dataclass(frozen=True)
class Partials:
    """Analytic partial derivatives, one callable per entry of PartialValues."""

    fpx: Component
    fpy: Component
    fmx: Component
    fmy: Component
    gpx: Component
    gpy: Component
    gmx: Component
    gmy: Component

    def at(self, x: float, y: float) -> PartialValues:
        return PartialValues(
            self.fpx(x, y), self.fpy(x, y),
            self.fmx(x, y), self.fmy(x, y),
            self.gpx(x, y), self.gpy(x, y),
            self.gmx(x, y), self.gmy(x, y),
        )


@dataclass(frozen=True)
class SplitSystem:
    """A planar split system plus optional analytic derivative information.

    Parameters
    ----------
    f_plus, f_minus, g_plus, g_minus
        The four component callables, each mapping (x, y) to a float.
    partials
        Analytic partial derivatives.  Optional; code that needs
        derivatives falls back to finite differences when absent.
    name
        Short identifier used in file names and reports.
    x_max
        Half-width of the square validation/search box [0, x_max]^2.
    rma_params
        Set by :func:`make_rosenzweig_macarthur` for systems of the
        built-in family.  Integration and fixed-point kernels key on it;
        systems built from arbitrary callables leave it None and take the
        generic code path.

    Raises
    ------
    ConstructionError
        If a component is non-finite, negative on the quadrant boundary,
        or not strictly positive at an interior grid node, or if the
        supplied analytic partials disagree with finite differences.
    """

    f_plus: Component
    f_minus: Component
    g_plus: Component
    g_minus: Component
    partials: "Partials | None" = None
    name: str = "custom"
    x_max: float = X_MAX_DEFAULT
    rma_params: "ModelParams | None" = None

    def __post_init__(self):
        if not (self.x_max > 0.0 and math.isfinite(self.x_max)):
            raise ConstructionError(f"x_max must be positive and finite, got {self.x_max!r}")
        _check_sign_structure(self)
        if self.partials is not None:
            _check_partials_consistency(self)

    def components(self, x: float, y: float):
        """Evaluate (f_plus, f_minus, g_plus, g_minus) without domain checks.

        Scheme internals call this for states that may sit outside the
        quadrant (classical schemes wander there); use vector_field for
        validated evaluation.
        """
        return (
            self.f_plus(x, y),
            self.f_minus(x, y),
            self.g_plus(x, y),
            self.g_minus(x, y),
        )


def _check_sign_structure(sys: SplitSystem) -> None:
    nodes = np.linspace(0.0, sys.x_max, VALIDATION_GRID_N)
    labels = ("f_plus", "f_minus", "g_plus", "g_minus")
    comps = (sys.f_plus, sys.f_minus, sys.g_plus, sys.g_minus)
    for label, comp in zip(labels, comps):
        for x in nodes:
            for y in nodes:
                v = comp(float(x), float(y))
                if not math.isfinite(v):
                    raise ConstructionError(
                        f"{label}({x:g}, {y:g}) is not finite: {v!r}"
                    )
                if x > 0.0 and y > 0.0:
                    if not v > 0.0:
                        raise ConstructionError(
                            f"{label}({x:g}, {y:g}) = {v!r} must be strictly "
                            "positive inside the quadrant"
                        )
                elif v < 0.0:
                    raise ConstructionError(
                        f"{label}({x:g}, {y:g}) = {v!r} must be non-negative "
                        "on the quadrant boundary"
                    )


def _check_partials_consistency(sys: SplitSystem, rtol: float = 1e-5) -> None:
    # spot check on a coarse subgrid; the full-grid property lives in the tests
    nodes = np.linspace(0.0, sys.x_max, VALIDATION_GRID_N)[::7]
    for x in nodes:
        for y in nodes:
            ana = sys.partials.at(float(x), float(y))
            num = _numeric_partial_values(sys, float(x), float(y))
            for field, a, n in zip(PartialValues._fields, ana, num):
                if abs(a - n) > rtol * max(1.0, abs(a), abs(n)):
                    raise ConstructionError(
                        f"analytic partial {field}({x:g}, {y:g}) = {a!r} "
                        f"disagrees with finite difference {n!r}"
                    )


def vector_field(system: SplitSystem, state: State):
    """Right-hand side (x*(f_plus - f_minus), y*(g_plus - g_minus)).

    Raises DomainError if the state leaves the closed positive quadrant.
    """
    if state.x < 0.0 or state.y < 0.0:
        raise DomainError(f"state ({state.x!r}, {state.y!r}) outside the closed quadrant")
    fp, fm, gp, gm = system.components(state.x, state.y)
    return state.x * (fp - fm), state.y * (gp - gm)


def field_jacobian(system: SplitSystem, state: State) -> np.ndarray:
    """Jacobian of the vector field, using analytic partials when available."""
    x, y = state.x, state.y
    fp, fm, gp, gm = system.components(x, y)
    p = partials_at(system, x, y)
    return np.array(
        [
            [(fp - fm) + x * (p.fpx - p.fmx), x * (p.fpy - p.fmy)],
            [y * (p.gpx - p.gmx), (gp - gm) + y * (p.gpy - p.gmy)],
        ]
    )


def _fd_x(comp: Component, x: float, y: float) -> float:
    step = _FD_EPS * max(1.0, abs(x))
    if x >= step:
        return (comp(x + step, y) - comp(x - step, y)) / (2.0 * step)
    # second-order one-sided stencil; a forward difference is too crude for
    # steeply curved components near the axis
    return (-3.0 * comp(x, y) + 4.0 * comp(x + step, y) - comp(x + 2.0 * step, y)) / (2.0 * step)


def _fd_y(comp: Component, x: float, y: float) -> float:
    step = _FD_EPS * max(1.0, abs(y))
    if y >= step:
        return (comp(x, y + step) - comp(x, y - step)) / (2.0 * step)
    return (-3.0 * comp(x, y) + 4.0 * comp(x, y + step) - comp(x, y + 2.0 * step)) / (2.0 * step)


def _numeric_partial_values(system: SplitSystem, x: float, y: float) -> PartialValues:
    return PartialValues(
        _fd_x(system.f_plus, x, y), _fd_y(system.f_plus, x, y),
        _fd_x(system.f_minus, x, y), _fd_y(system.f_minus, x, y),
        _fd_x(system.g_plus, x, y), _fd_y(system.g_plus, x, y),
        _fd_x(system.g_minus, x, y), _fd_y(system.g_minus, x, y),
    )


def numeric_partials(system: SplitSystem, state: State) -> PartialValues:
    """Finite-difference partials of all four components at a state.

    Central differences with step eps^(1/3) * max(1, |coordinate|); points
    closer to an axis than one step use a one-sided three-point stencil so
    the components are never sampled at negative coordinates.
    """
    if state.x < 0.0 or state.y < 0.0:
        raise DomainError(f"state ({state.x!r}, {state.y!r}) outside the closed quadrant")
    return _numeric_partial_values(system, state.x, state.y)


def partials_at(system: SplitSystem, x: float, y: float) -> PartialValues:
    """Analytic partials when the system carries them, finite differences otherwise."""
    if system.partials is not None:
        return system.partials.at(x, y)
    return _numeric_partial_values(system, x, y)


def make_rosenzweig_macarthur(
    a: float, b: float, c: float, d: float, name: "str | None" = None,
    x_max: float = X_MAX_DEFAULT,
) -> SplitSystem:
    """Predator-prey system with logistic prey growth and saturating predation.

    Split form:

        f_plus = b                    f_minus = b*x + a*y/(c + x)
        g_plus = x/(c + x)            g_minus = d

    All four parameters must be strictly positive.  The returned system
    carries analytic partials and is tagged so integration dispatches to
    the compiled kernels when they are enabled.
    """
    for label, v in (("a", a), ("b", b), ("c", c), ("d", d)):
        if not (math.isfinite(v) and v > 0.0):
            raise ConstructionError(f"parameter {label} must be positive and finite, got {v!r}")
    a, b, c, d = float(a), float(b), float(c), float(d)

    # expression shapes here are mirrored in nsfd._kernels; keep them in sync
    def f_plus(x, y):
        return b

    def f_minus(x, y):
        return b * x + a * y / (c + x)

    def g_plus(x, y):
        return x / (c + x)

    def g_minus(x, y):
        return d

    zero = lambda x, y: 0.0
    partials = Partials(
        fpx=zero,
        fpy=zero,
        fmx=lambda x, y: b - a * y / ((c + x) * (c + x)),
        fmy=lambda x, y: a / (c + x),
        gpx=lambda x, y: c / ((c + x) * (c + x)),
        gpy=zero,
        gmx=zero,
        gmy=zero,
    )
    if name is None:
        name = f"rma-{a:g}-{b:g}-{c:g}-{d:g}"
    return SplitSystem(
        f_plus, f_minus, g_plus, g_minus,
        partials=partials, name=name, x_max=x_max,
        rma_params=ModelParams(a, b, c, d),
    )


MODEL1_PARAMS = ModelParams(a=2.0, b=1.0, c=0.5, d=6.0)
MODEL2_PARAMS = ModelParams(a=2.0, b=1.0, c=1.0, d=0.2)


def model1() -> SplitSystem:
    """Strong-predation parameterisation: prey-only equilibrium attracts."""
    p = MODEL1_PARAMS
    return make_rosenzweig_macarthur(p.a, p.b, p.c, p.d, name="model1")


def model2() -> SplitSystem:
    """Weak-predation parameterisation with a stable coexistence point."""
    p = MODEL2_PARAMS
    return make_rosenzweig_macarthur(p.a, p.b, p.c, p.d, name="model2")


def from_selector(text: str) -> SplitSystem:
    """Build a system from a CLI-style selector.

    Accepted forms: "model1", "model2", or "rma:A,B,C,D" with four
    comma-separated parameter values.  Raises ValueError for a malformed
    selector and ConstructionError for valid syntax with bad parameters.
    """
    sel = text.strip().lower()
    if sel == "model1":
        return model1()
    if sel == "model2":
        return model2()
    if sel.startswith("rma:"):
        parts = sel[len("rma:"):].split(",")
        if len(parts) != 4:
            raise ValueError(f"expected rma:A,B,C,D, got {text!r}")
        try:
            vals = [float(p) for p in parts]
        except ValueError:
            raise ValueError(f"non-numeric parameter in {text!r}") from None
        name = "rma-" + "-".join(f"{v:g}" for v in vals)
        return make_rosenzweig_macarthur(*vals, name=name)
    raise ValueError(f"unknown model selector {text!r}")
