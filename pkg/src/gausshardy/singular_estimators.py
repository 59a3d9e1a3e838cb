"""Estimators for kernel boundedness criteria with respect to the Gauss measure.

All x-integrals are of the form ``int_{(2B)^c} F(x) dgamma(x)`` for a batch
of nonnegative integrands.  Kernels are therefore accessed through their
*density-weighted* values ``k(x, y) * pi^{-1/2} exp(-x^2)``, which stay finite
far from the origin even when ``k`` itself overflows.

Truncation: integrate over ``(2B)^c`` intersected with ``[-X, X]``,
``X = max(|c_B|, max|y|) + TAIL_EXTRA``, then widen by ``TAIL_STEP`` until
the increment is below ``TAIL_INCREMENT_RTOL`` of the running value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Sequence

import numpy as np

from . import config
from .errors import InvalidInputError, PreconditionError
from .gauss_geometry import GaussBall, admissible_radius, gauss_measure, log_gauss_measure, maximal_ball
from .impow_kernel import ImpowParams, kernel_batch
from .quadrature import ConvergenceError, gauss_legendre_panels, graded_edges, integrate_adaptive

_SQRT_PI = math.sqrt(math.pi)


# ---------------------------------------------------------------------------
# Kernel handles

@dataclass
class KernelHandle:
    """A kernel ``k(x, y)`` with respect to gamma.

    ``weighted(x, y)`` must return ``(k(x, y) e^{-x^2} / sqrt(pi), error)``
    for broadcastable arrays.  ``evaluate`` returns the bare kernel and is
    derived from ``weighted`` when not given.
    """

    name: str
    weighted: Callable
    tail_hint: str = "unknown"  # gaussian | logarithmic-growth | unknown
    singular: bool = False
    l2_opnorm: float | None = None
    evaluate: Callable | None = None

    def __post_init__(self):
        if self.tail_hint not in ("gaussian", "logarithmic-growth", "unknown"):
            raise InvalidInputError(f"unknown tail hint {self.tail_hint!r}")
        if self.evaluate is None:
            def evaluate(x, y, _w=self.weighted):
                x = np.asarray(x, dtype=float)
                v, e = _w(x, y)
                scale = _SQRT_PI * np.exp(x * x)
                return v * scale, e * scale
            self.evaluate = evaluate


def mehler_handle(t: float = 1.0) -> KernelHandle:
    """Mehler kernel ``h_t``; weighted, it is the Gaussian transition density."""
    if not t > 0:
        raise InvalidInputError("t must be positive")
    e = math.exp(-t)
    var2 = -math.expm1(-2 * t)  # 2 * variance

    def weighted(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        v = np.exp(-((x - e * y) ** 2) / var2) / math.sqrt(math.pi * var2)
        return v, np.zeros_like(v)

    return KernelHandle(f"mehler(t={t:g})", weighted, tail_hint="gaussian", l2_opnorm=1.0)


def impow_handle(p: ImpowParams, rtol: float = 1e-9) -> KernelHandle:
    """Kernel of ``(rI + L)^{iu}`` (1-D), evaluated by :func:`kernel_batch`."""

    def weighted(x, y):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        v, e = kernel_batch(p, x, y, rtol=rtol, scaled=True)
        w = np.exp(np.minimum(x * x, y * y) - x * x) / _SQRT_PI
        return v * w, e * w

    return KernelHandle(f"impow(u={p.u:g},r={p.r:g})", weighted,
                        tail_hint="logarithmic-growth", singular=True, l2_opnorm=1.0)


def hilbert_gauss_handle() -> KernelHandle:
    """Hilbert transform written as a kernel with respect to gamma.

    ``int f(y) / (x - y) dy = int f(y) sqrt(pi) e^{y^2} / (x - y) dgamma(y)``;
    the factor ``e^{y^2}`` makes its differences fail any uniform Hormander
    bound, so it serves as the growing control.
    """

    def weighted(x, y):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        v = np.exp(y * y - x * x) / (x - y)
        return v, np.zeros_like(v)

    return KernelHandle("hilbert-gauss", weighted, singular=True, l2_opnorm=None)


def plain_cauchy_handle() -> KernelHandle:
    """``k(x, y) = 1/(x - y)`` taken literally with respect to gamma."""

    def weighted(x, y):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        v = np.exp(-x * x) / (_SQRT_PI * (x - y))
        return v, np.zeros_like(v)

    return KernelHandle("cauchy", weighted, singular=True)


def constant_handle(c: complex = 1.0) -> KernelHandle:
    def weighted(x, y):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        v = c * np.exp(-x * x) / _SQRT_PI
        return v, np.zeros(v.shape)

    def evaluate(x, y):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        return np.full(x.shape, c), np.zeros(x.shape)

    return KernelHandle(f"constant({c})", weighted, tail_hint="gaussian", l2_opnorm=abs(c),
                        evaluate=evaluate)


def truncated_identity_handle(radius_fraction: float = 1.0) -> KernelHandle:
    """Kernel supported in ``|x - y| <= radius_fraction * r(B_y)``."""

    def weighted(x, y):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        r = np.minimum(1.0, 1.0 / np.maximum(np.abs(y), 1e-300)) * radius_fraction
        v = np.where(np.abs(x - y) <= r, np.exp(-x * x) / _SQRT_PI, 0.0)
        return v, np.zeros(v.shape)

    return KernelHandle("truncated-identity", weighted, tail_hint="gaussian")


# ---------------------------------------------------------------------------
# Reports

@dataclass
class EstimateReport:
    quantity: str
    kernel: str
    grid: list
    values: list
    running_sup: list
    refinement_history: list = field(default_factory=list)
    verdict: str = "inconclusive"
    details: dict = field(default_factory=dict)

    @property
    def supremum(self) -> float:
        return max(self.values)

    def rows(self) -> list[dict]:
        return [dict(point=g, value=v, running_sup=s)
                for g, v, s in zip(self.grid, self.values, self.running_sup)]


def _running_sup(values):
    return [float(v) for v in np.maximum.accumulate(np.asarray(values, dtype=float))]


# ---------------------------------------------------------------------------
# Integration over the complement of a dilated ball

@dataclass
class ComplementIntegral:
    values: np.ndarray
    errors: np.ndarray
    x_max: float
    history: list


def _piece(func, a, b, edge_at, first, breakpoints, rtol, atol=1e-300):
    if not b > a:
        return None
    if edge_at is None:
        edges = np.linspace(a, b, max(2, int(math.ceil((b - a) / 0.5)) + 1))
    else:
        edges = graded_edges(a, b, toward=edge_at, first=first, ratio=2.0, max_width=0.5)
    bps = np.unique(np.concatenate([edges, [p for p in breakpoints if a < p < b]]))
    res = integrate_adaptive(func, a, b, atol=atol, rtol=rtol, breakpoints=bps,
                             initial_panels=1, max_evals=config.QUAD_MAX_EVALS)
    if not res.converged:
        raise ConvergenceError(f"x-integral on [{a:g}, {b:g}] did not converge", res)
    return res


def complement_integral(func, ball: GaussBall, ys, *, rtol: float = 1e-7,
                        factor: float = 2.0, window=None, atol: float = 1e-300) -> ComplementIntegral:
    """``int_{(factor B)^c} func(x) dx`` with the tail-extension stopping rule.

    ``func`` maps nodes of shape ``(N,)`` to nonnegative values of shape
    ``(M, N)`` that already include the Gauss density.  ``window`` restricts
    the integration to ``[window[0], window[1]]`` (no tail extension).
    ``atol`` is an absolute floor for integrands that vanish up to rounding.
    """
    c, r = float(ball.center), float(ball.radius)
    lo_in, hi_in = c - factor * r, c + factor * r
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    bps = sorted(set(np.concatenate([ys, -ys, [c, -c]]).tolist()))
    first = r / 8.0

    def run(a, b, edge_at):
        res = _piece(func, a, b, edge_at, first, bps, rtol, atol)
        if res is None:
            return 0.0, 0.0
        return np.asarray(res.value, dtype=float), np.asarray(res.error, dtype=float)

    if window is not None:
        a, b = window
        lv, le = run(a, min(b, lo_in), "b") if a < lo_in else (0.0, 0.0)
        rv, re = run(max(a, hi_in), b, "a") if b > hi_in else (0.0, 0.0)
        return ComplementIntegral(np.atleast_1d(lv + rv), np.atleast_1d(le + re), None, [])

    X = max(abs(c), float(np.max(np.abs(ys)))) + config.TAIL_EXTRA
    lv, le = run(-X, lo_in, "b")
    rv, re = run(hi_in, X, "a")
    total = np.atleast_1d(lv + rv)
    err = np.atleast_1d(le + re)
    history = [(X, total.copy())]
    for _ in range(40):
        step = config.TAIL_STEP
        av, ae = run(X, X + step, None)
        bv, be = run(-X - step, -X, None)
        inc = np.atleast_1d(av + bv)
        total = total + inc
        err = err + ae + be
        X += step
        history.append((X, total.copy()))
        if np.all(inc <= np.maximum(config.TAIL_INCREMENT_RTOL * total, atol)):
            break
    else:
        raise ConvergenceError("tail extension did not settle")
    return ComplementIntegral(total, err, X, history)


# ---------------------------------------------------------------------------
# I_infinity and the divergence scan

def _phi_values(k: KernelHandle, y_values, rtol, window_fn=None):
    out = []
    for y in y_values:
        ball = maximal_ball(float(y))

        def f(x, y=y):
            v, _ = k.weighted(x, y)
            return np.abs(v)[None, :]

        window = window_fn(y) if window_fn else None
        out.append(complement_integral(f, ball, [y], rtol=rtol, window=window))
    return out


def _lsq(xs, ys):
    xs, ys = np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)
    A = np.vstack([xs, np.ones_like(xs)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, ys, rcond=None)
    fit = A @ np.array([slope, intercept])
    ss_res = float(np.sum((ys - fit) ** 2))
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


def growth_verdict(grid, values, *, flat_tol: float = 0.05) -> tuple[str, dict]:
    """Classify a scan along increasing ``|y|`` as plateau, growing or inconclusive.

    plateau: relative spread ``(max - min)/max < flat_tol``.
    growing: strictly increasing, positive slope against ``log|y|`` with
    ``R^2 >= 0.9`` and total increase of at least ``flat_tol``.
    """
    v = np.asarray(values, dtype=float)
    g = np.abs(np.asarray(grid, dtype=float))
    info = {}
    if not np.all(np.isfinite(v)):
        return "inconclusive", info
    vmax = float(np.max(np.abs(v)))
    spread = float((v.max() - v.min()) / vmax) if vmax > 0 else 0.0
    info["relative_spread"] = spread
    if len(v) >= 2 and np.all(g > 0):
        slope, _, r2 = _lsq(np.log(g), v)
        info.update(slope_vs_log=slope, r2=r2)
    if spread < flat_tol:
        return "plateau", info
    increasing = bool(np.all(np.diff(v) > 0))
    info["strictly_increasing"] = increasing
    if increasing and info.get("slope_vs_log", 0) > 0 and info.get("r2", 0) >= 0.9:
        return "growing", info
    return "inconclusive", info


def i_infinity_estimate(k: KernelHandle, y_grid: Sequence[float], tail_window=None,
                        *, rtol: float = 1e-7) -> EstimateReport:
    """``Phi(y) = int_{(2B_y)^c} |k(x, y)| dgamma(x)`` over ``y_grid``.

    ``tail_window`` (a pair) replaces the tail-extension rule by a fixed
    integration window.
    """
    y_grid = [float(y) for y in y_grid]
    if not y_grid:
        raise InvalidInputError("empty y grid")
    window_fn = (lambda y: tail_window) if tail_window is not None else None
    res = _phi_values(k, y_grid, rtol, window_fn)
    values = [float(r.values[0]) for r in res]
    verdict, info = growth_verdict(y_grid, values)
    info["x_max"] = [r.x_max for r in res]
    info["errors"] = [float(r.errors[0]) for r in res]
    return EstimateReport("I_infinity", k.name, y_grid, values, _running_sup(values),
                          [], verdict, info)


@dataclass
class DivergenceRow:
    y: float
    phi: float
    phi_error: float
    log_y: float
    window_integral: float
    comparator: float


def divergence_scan(p: ImpowParams, y_values: Sequence[float], *, rtol: float = 1e-7) -> list[DivergenceRow]:
    """``Phi(y)`` for the imaginary-power kernel together with the window
    integral over ``[y - 1, y - 2/y]`` and its lower comparator ``log(y/2)``.
    """
    if p.u == 0:
        raise PreconditionError("u must be nonzero")
    ys = [float(y) for y in y_values]
    if any(y < 3 for y in ys):
        raise PreconditionError("divergence scan needs y >= 3")
    k = impow_handle(p)
    full = _phi_values(k, ys, rtol)
    rows = []
    for y, res in zip(ys, full):
        ball = maximal_ball(y)

        def f(x, y=y):
            v, _ = k.weighted(x, y)
            return np.abs(v)[None, :]

        win = complement_integral(f, ball, [y], rtol=rtol, window=(y - 1.0, y - 2.0 / y))
        rows.append(DivergenceRow(y, float(res.values[0]), float(res.errors[0]), math.log(y),
                                  float(win.values[0]), math.log(y / 2.0)))
    return rows


# ---------------------------------------------------------------------------
# Hormander constant

DEFAULT_CENTERS = (0.0, 1.0, -1.0, 2.0, -2.0, 4.0, -4.0, 8.0, -8.0, 12.0, -12.0)


def design_ball_grid(centers=DEFAULT_CENTERS, radius_fractions=(1.0, 0.5)) -> list[GaussBall]:
    return [GaussBall(c, f * admissible_radius(c)) for c in centers for f in radius_fractions]


def refined_ball_grid(centers=DEFAULT_CENTERS, radius_fractions=(1.0, 0.5)) -> list[GaussBall]:
    """Same centres, radius fractions with their midpoints inserted."""
    fr = sorted(set(radius_fractions), reverse=True)
    fr_all = sorted(set(fr + [0.5 * (a + b) for a, b in zip(fr, fr[1:])]), reverse=True)
    return [GaussBall(c, f * admissible_radius(c)) for c in centers for f in fr_all]


def _outer_trend(grid, values) -> float:
    """Relative increase of the per-|c| maximum from the second-outermost to
    the outermost centre level."""
    levels: dict = {}
    for (c, _), v in zip(grid, values):
        key = abs(c)
        levels[key] = max(levels.get(key, -math.inf), v)
    keys = sorted(levels)
    if len(keys) < 2 or levels[keys[-2]] <= 0:
        return 0.0
    return levels[keys[-1]] / levels[keys[-2]] - 1.0


def _pair_points(ball: GaussBall, samples: int) -> np.ndarray:
    c, r = float(ball.center), float(ball.radius)
    return c + r * np.linspace(-1.0, 1.0, samples)


def hormander_ball_value(k: KernelHandle, ball: GaussBall, pair_samples: int = 3,
                         *, rtol: float = 1e-7, tail_window=None) -> float:
    """``max_{y, y'} int_{(2B)^c} |k(x, y) - k(x, y')| dgamma(x)`` over sample points of ``B``."""
    if not ball.admissible:
        raise InvalidInputError(f"ball {ball} is not admissible")
    pts = _pair_points(ball, pair_samples)
    pairs = list(combinations(range(len(pts)), 2))
    ii = np.array([i for i, _ in pairs])
    jj = np.array([j for _, j in pairs])

    def f(x):
        v, _ = k.weighted(x[None, :], pts[:, None])
        return np.abs(v[ii] - v[jj])

    res = complement_integral(f, ball, pts, rtol=rtol, window=tail_window)
    return float(np.max(res.values))


def _hormander_scan(k, balls, pair_samples, rtol, tail_window):
    return [hormander_ball_value(k, b, pair_samples, rtol=rtol, tail_window=tail_window)
            for b in balls]


def hormander_estimate(k: KernelHandle, ball_grid=None, pair_samples: int = 3, tail_window=None,
                       *, rtol: float = 1e-7, refine: bool = True, map_fn=map) -> EstimateReport:
    """Empirical local Hormander constant.

    The base grid is scanned with ``pair_samples`` points per ball.  The
    refinement keeps the centres and doubles the sampling inside each ball:
    radius fractions gain their midpoints and the sample points per ball go
    from ``m`` to ``2m - 1``.  Verdict ``plateau`` when the refined supremum
    exceeds the base one by less than 2% and the per-centre maximum grows by
    less than 5% from the second-outermost to the outermost ``|c|``;
    ``growing`` otherwise.
    """
    base = list(ball_grid) if ball_grid is not None else design_ball_grid()
    for b in base:
        if not b.admissible:
            raise InvalidInputError(f"ball {b} is not admissible")

    def one(args):
        b, m = args
        return hormander_ball_value(k, b, m, rtol=rtol, tail_window=tail_window)

    values = list(map_fn(one, [(b, pair_samples) for b in base]))
    grid = [(float(b.center), float(b.radius)) for b in base]
    history = [dict(balls=len(base), pair_samples=pair_samples, sup=max(values))]
    info: dict = {}
    verdict = "inconclusive"
    if refine:
        if ball_grid is None:
            fine = refined_ball_grid()
        else:
            fine = base
        m2 = 2 * pair_samples - 1
        fine_values = list(map_fn(one, [(b, m2) for b in fine]))
        fine_grid = [(float(b.center), float(b.radius)) for b in fine]
        history.append(dict(balls=len(fine), pair_samples=m2, sup=max(fine_values)))
        sup0, sup1 = history[0]["sup"], history[1]["sup"]
        increase = sup1 / sup0 - 1.0 if sup0 > 0 else (0.0 if sup1 == 0 else math.inf)
        trend = _outer_trend(fine_grid, fine_values)
        info.update(refinement_increase=increase, outer_trend=trend,
                    refined_values=fine_values, refined_grid=fine_grid)
        if not np.all(np.isfinite(values + fine_values)):
            verdict = "inconclusive"
        elif increase < 0.02 and trend < 0.05:
            verdict = "plateau"
        else:
            verdict = "growing"
    return EstimateReport("hormander", k.name, grid, values, _running_sup(values), history,
                          verdict, info)


# ---------------------------------------------------------------------------
# Atom images and the mean-value identity

IMAGE_ATOL = 1e-12


def _atom_nodes(atom, order: int = 24):
    """Quadrature nodes on the atom's cells with weights ``a(v) dgamma(v)``."""
    edges = np.asarray(atom.edges, dtype=float)
    vals = np.asarray(atom.values)
    nodes, w = gauss_legendre_panels(edges, order)
    cell = np.repeat(np.arange(len(vals)), order)
    # a(v) e^{-v^2}/sqrt(pi), formed in log space where a is large
    wa = vals[cell] * np.exp(-nodes * nodes) / _SQRT_PI * w
    return nodes, wa


def atom_image_norm(k: KernelHandle, atom, *, rtol: float = 1e-7, order: int = 24,
                    return_split: bool = False):
    """``||T a||_{L^1(gamma)}`` split into ``2B`` and ``(2B)^c`` parts.

    The far part is integrated directly.  On ``2B`` smooth kernels are
    integrated directly; for singular kernels the part is replaced by the
    bound ``gamma(2B)^{1/2} ||T||_{2->2} ||a||_2``.

    Raises
    ------
    PreconditionError
        If the atom does not validate.
    """
    from .hardy_atoms import validate_atom

    rec = validate_atom(atom)
    if not rec.valid:
        raise PreconditionError(f"invalid atom: {rec}")
    if atom.ball is None:
        raise PreconditionError("atom images need a ball (exceptional atom has none)")
    ball = atom.ball
    v_nodes, wa = _atom_nodes(atom, order)

    def Ta_weighted(x):
        kv, _ = k.weighted(x[:, None], v_nodes[None, :])
        return np.abs(kv @ wa)[None, :]

    # ||a||_1 <= 1 for a valid atom, so an absolute floor is meaningful
    far = complement_integral(Ta_weighted, ball, v_nodes[[0, -1]], rtol=rtol, atol=IMAGE_ATOL)
    c, r = float(ball.center), float(ball.radius)
    if k.singular:
        if k.l2_opnorm is None:
            raise PreconditionError("singular kernel without an L2 operator norm")
        near = math.sqrt(gauss_measure(GaussBall(c, 2 * r))) * k.l2_opnorm * rec.l2_norm
        near_mode = "l2-bound"
    else:
        res = integrate_adaptive(Ta_weighted, c - 2 * r, c + 2 * r, atol=IMAGE_ATOL, rtol=rtol,
                                 breakpoints=np.asarray(atom.edges), initial_panels=4)
        near = float(res.value[0])
        near_mode = "quadrature"
    total = float(far.values[0]) + near
    if return_split:
        return dict(total=total, far=float(far.values[0]), near=near, near_mode=near_mode)
    return total


def tay_identity_residual(k: KernelHandle, y: float, x_samples, *, rtol: float = 1e-12) -> float:
    """Compare ``T a_y(x)`` for ``a_y = 1_{B_y}/gamma(B_y)`` computed directly
    with the mean-difference form ``mean_B[k(x, .) - k(x, y)] + k(x, y)``.

    The two sides use different quadratures: adaptive Gauss-Kronrod for the
    direct mean and fixed composite Gauss-Legendre for the difference term.
    """
    ball = maximal_ball(float(y))
    a, b = ball.interval
    xs = np.atleast_1d(np.asarray(x_samples, dtype=float))
    if np.any((xs >= a) & (xs <= b)):
        raise PreconditionError("x samples must lie outside B_y")
    # relative density on B: e^{-v^2 + y^2} keeps both routes finite
    def kdens(v):
        kv, _ = k.evaluate(xs[:, None], v[None, :])
        return kv * np.exp(y * y - v * v)[None, :]

    def dens(v):
        return np.exp(y * y - v * v)[None, :]

    num = integrate_adaptive(kdens, a, b, atol=0.0, rtol=rtol, initial_panels=4)
    den = integrate_adaptive(dens, a, b, atol=0.0, rtol=rtol, initial_panels=4)
    direct = num.value / den.value[0]

    nodes, w = gauss_legendre_panels(np.linspace(a, b, 9), 20)
    dw = w * np.exp(y * y - nodes * nodes)
    ky, _ = k.evaluate(xs, np.full(xs.shape, float(y)))
    kv, _ = k.evaluate(xs[:, None], nodes[None, :])
    mean_diff = ((kv - ky[:, None]) * dw).sum(axis=1) / dw.sum()
    via_identity = mean_diff + ky
    return float(np.max(np.abs(direct - via_identity)))


# ---------------------------------------------------------------------------
# Atom-image scans and the kernel-integrability implications

IMAGE_SATURATION = 0.25


def image_verdict(grid, values, *, flat_tol: float = 0.05) -> tuple[str, dict]:
    """Classify atom-image norms along increasing ``|y|`` as bounded, growing or inconclusive.

    Slopes are taken per unit of ``log|y|``.
    bounded: relative spread below ``flat_tol``, a last value not above the
    first, or a last slope below ``IMAGE_SATURATION`` times the first.
    growing: the :func:`growth_verdict` criterion holds and the last slope
    is at least half the first (no saturation).
    """
    v = np.asarray(values, dtype=float)
    verdict, info = growth_verdict(grid, v, flat_tol=flat_tol)
    if verdict == "plateau" or v[-1] <= v[0]:
        return "bounded", info
    g = np.log(np.abs(np.asarray(grid, dtype=float)))
    slopes = np.diff(v) / np.diff(g)
    if slopes.size >= 2 and slopes[0] > 0:
        ratio = float(slopes[-1] / slopes[0])
        info["slope_ratio"] = ratio
        if ratio < IMAGE_SATURATION:
            return "bounded", info
        if verdict == "growing" and ratio >= 0.5:
            return "growing", info
    return "inconclusive", info


def atom_image_scan(k: KernelHandle, y_grid: Sequence[float], kind: str = "global",
                    *, rtol: float = 1e-7, map_fn=map) -> EstimateReport:
    """``||T a_y||_{L^1(gamma)}`` for atoms on the maximal balls ``B_y``.

    ``kind="global"`` uses ``1_{B_y}/gamma(B_y)``; ``kind="standard"`` uses the
    two-step zero-mean atom of :meth:`Atom.two_step`.
    """
    from .hardy_atoms import Atom

    if kind not in ("global", "standard"):
        raise InvalidInputError(f"unknown atom kind {kind!r}")
    ys = [float(y) for y in y_grid]
    if not ys:
        raise InvalidInputError("empty y grid")
    make = Atom.global_on if kind == "global" else Atom.two_step

    def one(y):
        return atom_image_norm(k, make(maximal_ball(y)), rtol=rtol, return_split=True)

    splits = list(map_fn(one, ys))
    values = [s["total"] for s in splits]
    verdict, info = image_verdict(ys, values)
    info["splits"] = splits
    return EstimateReport(f"atom_image_{kind}", k.name, ys, values, _running_sup(values), [],
                          verdict, info)


@dataclass
class ConsistencyRecord:
    """Verdicts for one kernel and the two implication checks.

    ``direction_i``: Hormander plateau and bounded global images must come
    with a plateau ``I_infinity``; when the global images grow the check is
    vacuous and ``contrapositive`` records whether ``I_infinity`` grows too.
    ``direction_ii``: with plateau ``I_infinity`` and bounded standard images,
    every global image is at most ``sqrt(D) * opnorm + H + I_infinity``.
    """

    kernel: str
    hormander: str
    global_images: str
    standard_images: str
    i_infinity: str
    direction_i: bool
    direction_ii: bool
    contrapositive: bool | None
    details: dict = field(default_factory=dict)

    @property
    def consistent(self) -> bool:
        return self.direction_i and self.direction_ii


def kernel_l1_consistency(k: KernelHandle, y_grid: Sequence[float] = (2.0, 4.0, 8.0, 16.0), *,
                          hormander: EstimateReport | None = None, rtol: float = 1e-7,
                          map_fn=map) -> ConsistencyRecord:
    """Run the Hormander, atom-image and ``I_infinity`` scans and check the
    implications between them pointwise on ``y_grid``."""
    from .gauss_geometry import doubling_ratio

    H = hormander or hormander_estimate(k, rtol=rtol, map_fn=map_fn)
    glob = atom_image_scan(k, y_grid, "global", rtol=rtol, map_fn=map_fn)
    std = atom_image_scan(k, y_grid, "standard", rtol=rtol, map_fn=map_fn)
    iinf = i_infinity_estimate(k, y_grid, rtol=rtol)
    hor_ok = H.verdict == "plateau"
    dir_i = True
    contra = None
    if hor_ok and glob.verdict == "bounded":
        dir_i = iinf.verdict == "plateau"
    elif hor_ok and glob.verdict == "growing":
        contra = iinf.verdict == "growing"
    dir_ii = True
    chain = []
    if iinf.verdict == "plateau" and std.verdict == "bounded":
        opnorm = k.l2_opnorm if k.l2_opnorm is not None else math.inf
        for y, g, phi in zip(glob.grid, glob.values, iinf.values):
            d = doubling_ratio(maximal_ball(y))
            bound = math.sqrt(d) * opnorm + H.supremum + max(iinf.values)
            chain.append(dict(y=y, image=g, bound=bound))
            dir_ii = dir_ii and g <= bound
    details = dict(hormander_sup=H.supremum, global_values=glob.values,
                   standard_values=std.values, i_infinity_values=iinf.values, chain=chain)
    return ConsistencyRecord(k.name, H.verdict, glob.verdict, std.verdict, iinf.verdict,
                             dir_i, dir_ii, contra, details)
