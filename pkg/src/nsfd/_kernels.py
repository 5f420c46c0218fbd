"""Fast paths for the built-in predator-prey family.

One scheme step is implemented exactly once (`_rma_step`, plain Python)
and compiled a second time with numba when it is importable.  The loop
drivers are produced by factories that close over one step variant or the
other, so both backends execute the same source and produce bit-equal
results.  fastmath stays off everywhere for that reason; do not "optimise"
the expression order in this file.

Backend choice: the NSFD_BACKEND environment variable ("numba" or
"python"), unset meaning numba when available.  Callers can override per
call.  Systems not built by make_rosenzweig_macarthur never reach this
module's compiled paths; nsfd.integrators runs them through the generic
callable loop instead.
"""

import os
import warnings

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba installed
    HAVE_NUMBA = False
    njit = None

ENV_VAR = "NSFD_BACKEND"

TAG_NSFD = 0
TAG_EULER = 1
TAG_RK2 = 2
TAG_RK4 = 3

SCHEME_TAGS = {
    "nsfd": TAG_NSFD,
    "ensfd": TAG_NSFD,
    "euler": TAG_EULER,
    "rk2": TAG_RK2,
    "rk4": TAG_RK4,
}

NEWTON_TOL = 1e-10
NEWTON_MAX_ITER = 80
NEWTON_ESCAPE = 1e12


def resolve_backend(requested: "str | None" = None) -> str:
    """Pick "numba" or "python" from an explicit request or the environment."""
    choice = requested if requested is not None else os.environ.get(ENV_VAR, "")
    choice = choice.strip().lower()
    if not choice:
        choice = "numba" if HAVE_NUMBA else "python"
    if choice not in ("numba", "python"):
        raise ValueError(f"unknown backend {choice!r}; expected 'numba' or 'python'")
    if choice == "numba" and not HAVE_NUMBA:
        warnings.warn("numba not importable, using the python backend", RuntimeWarning)
        return "python"
    return choice


def _rma_step(tag, a, b, c, d, x, y, e, h):
    # One step of the selected scheme for f+ = b, f- = b*x + a*y/(c+x),
    # g+ = x/(c+x), g- = d.  e is the denominator weight (nsfd only), h the
    # grid step.  Zero denominators yield nan instead of raising so jitted
    # and plain execution stay identical.
    def field(u, v):
        den = c + u
        if den == 0.0:
            return np.nan, np.nan
        fp = b
        fm = b * u + a * v / den
        gp = u / den
        gm = d
        return u * (fp - fm), v * (gp - gm)

    if tag == 0:
        den = c + x
        if den == 0.0:
            return np.nan, np.nan
        fp = b
        fm = b * x + a * y / den
        gp = x / den
        gm = d
        dfm = 1.0 + e * fm
        dgm = 1.0 + e * gm
        if dfm == 0.0 or dgm == 0.0:
            return np.nan, np.nan
        return x * (1.0 + e * fp) / dfm, y * (1.0 + e * gp) / dgm
    if tag == 1:
        ux, uy = field(x, y)
        return x + h * ux, y + h * uy
    if tag == 2:
        k1x, k1y = field(x, y)
        k2x, k2y = field(x + 0.5 * h * k1x, y + 0.5 * h * k1y)
        return x + h * k2x, y + h * k2y
    k1x, k1y = field(x, y)
    k2x, k2y = field(x + 0.5 * h * k1x, y + 0.5 * h * k1y)
    k3x, k3y = field(x + 0.5 * h * k2x, y + 0.5 * h * k2y)
    k4x, k4y = field(x + h * k3x, y + h * k3y)
    return (
        x + h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x),
        y + h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y),
    )


def _make_trajectory_driver(step):
    def drive(tag, a, b, c, d, x0, y0, e, h, n, xs, ys):
        # Fills xs/ys (length n+1) and returns the number of stored states.
        # A return value m <= n means the state at grid index m went
        # non-finite and the orbit is truncated just before it.
        x = x0
        y = y0
        xs[0] = x
        ys[0] = y
        for k in range(n):
            xn, yn = step(tag, a, b, c, d, x, y, e, h)
            if not (np.isfinite(xn) and np.isfinite(yn)):
                return k + 1
            xs[k + 1] = xn
            ys[k + 1] = yn
            x = xn
            y = yn
        return n + 1

    return drive


def _make_fixed_point_driver(step):
    def drive(tag, a, b, c, d, e, h, seeds_x, seeds_y, max_iter, tol, escape, out):
        # Newton iteration on step(s) - s = 0 from every seed, with a
        # central-difference Jacobian.  out[i] = (x, y, residual); a failed
        # seed reports residual inf.  The stored residual is always the
        # sup-norm of the map defect measured at the stored point.
        n = seeds_x.shape[0]
        for i in range(n):
            x = seeds_x[i]
            y = seeds_y[i]
            res = np.inf
            for _ in range(max_iter):
                mx, my = step(tag, a, b, c, d, x, y, e, h)
                rx = mx - x
                ry = my - y
                if not (np.isfinite(rx) and np.isfinite(ry)):
                    res = np.inf
                    break
                res = abs(rx)
                if abs(ry) > res:
                    res = abs(ry)
                if res < tol:
                    break
                dx = 1e-6 * max(1.0, abs(x))
                dy = 1e-6 * max(1.0, abs(y))
                px1, py1 = step(tag, a, b, c, d, x + dx, y, e, h)
                px0, py0 = step(tag, a, b, c, d, x - dx, y, e, h)
                qx1, qy1 = step(tag, a, b, c, d, x, y + dy, e, h)
                qx0, qy0 = step(tag, a, b, c, d, x, y - dy, e, h)
                j11 = (px1 - px0) / (2.0 * dx) - 1.0
                j21 = (py1 - py0) / (2.0 * dx)
                j12 = (qx1 - qx0) / (2.0 * dy)
                j22 = (qy1 - qy0) / (2.0 * dy) - 1.0
                det = j11 * j22 - j12 * j21
                if not np.isfinite(det) or abs(det) < 1e-14:
                    res = np.inf
                    break
                x = x + (-rx * j22 + ry * j12) / det
                y = y + (-j11 * ry + j21 * rx) / det
                if not (np.isfinite(x) and np.isfinite(y)) or abs(x) > escape or abs(y) > escape:
                    res = np.inf
                    break
            out[i, 0] = x
            out[i, 1] = y
            out[i, 2] = res

    return drive


_trajectory_py = _make_trajectory_driver(_rma_step)
_fixed_points_py = _make_fixed_point_driver(_rma_step)

if HAVE_NUMBA:
    _rma_step_jit = njit(cache=True, fastmath=False)(_rma_step)
    _trajectory_jit = njit(cache=True, fastmath=False)(_make_trajectory_driver(_rma_step_jit))
    _fixed_points_jit = njit(cache=True, fastmath=False)(_make_fixed_point_driver(_rma_step_jit))
else:  # pragma: no cover
    _rma_step_jit = None
    _trajectory_jit = None
    _fixed_points_jit = None


def warmup() -> None:
    """Force jit compilation so later calls run at steady-state speed."""
    if not HAVE_NUMBA:
        return
    xs = np.empty(2)
    ys = np.empty(2)
    out = np.empty((1, 3))
    sx = np.array([0.5])
    sy = np.array([0.5])
    for tag in (TAG_NSFD, TAG_EULER, TAG_RK2, TAG_RK4):
        _trajectory_jit(tag, 2.0, 1.0, 0.5, 6.0, 0.5, 0.5, 0.01, 0.01, 1, xs, ys)
        _fixed_points_jit(tag, 2.0, 1.0, 0.5, 6.0, 0.01, 0.01, sx, sy, 2, NEWTON_TOL, NEWTON_ESCAPE, out)


def run_trajectory(params, kind, x0, y0, e, h, n, backend=None):
    """Integrate a tagged system for n steps. Returns (xs, ys, stored_count)."""
    tag = SCHEME_TAGS[kind]
    xs = np.empty(n + 1)
    ys = np.empty(n + 1)
    drive = _trajectory_jit if resolve_backend(backend) == "numba" else _trajectory_py
    m = drive(tag, params.a, params.b, params.c, params.d,
              float(x0), float(y0), float(e), float(h), int(n), xs, ys)
    m = int(m)
    return xs[:m], ys[:m], m


def scan_fixed_points(params, kind, e, h, seeds_x, seeds_y, tol=NEWTON_TOL,
                      max_iter=NEWTON_MAX_ITER, escape=NEWTON_ESCAPE, backend=None):
    """Newton scan for map fixed points of a tagged system.

    Returns an (n, 3) array of (x, y, residual) rows, one per seed, in seed
    order; residual inf marks a failed seed.
    """
    tag = SCHEME_TAGS[kind]
    seeds_x = np.ascontiguousarray(seeds_x, dtype=np.float64)
    seeds_y = np.ascontiguousarray(seeds_y, dtype=np.float64)
    out = np.empty((seeds_x.shape[0], 3))
    drive = _fixed_points_jit if resolve_backend(backend) == "numba" else _fixed_points_py
    drive(tag, params.a, params.b, params.c, params.d, float(e), float(h),
          seeds_x, seeds_y, int(max_iter), float(tol), float(escape), out)
    return out


def scan_fixed_points_generic(map_fn, seeds_x, seeds_y, tol=NEWTON_TOL,
                              max_iter=NEWTON_MAX_ITER, escape=NEWTON_ESCAPE):
    """Same Newton scan over an arbitrary map callable (x, y) -> (x', y').

    Used for systems without kernel support; exceptions from the map count
    as a failed seed rather than aborting the scan.
    """

    def adapter(tag, a, b, c, d, x, y, e, h):
        try:
            return map_fn(x, y)
        except (ZeroDivisionError, OverflowError, ValueError):
            return np.nan, np.nan

    drive = _make_fixed_point_driver(adapter)
    seeds_x = np.ascontiguousarray(seeds_x, dtype=np.float64)
    seeds_y = np.ascontiguousarray(seeds_y, dtype=np.float64)
    out = np.empty((seeds_x.shape[0], 3))
    drive(0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
          seeds_x, seeds_y, int(max_iter), float(tol), float(escape), out)
    return out
