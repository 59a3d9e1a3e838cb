"""Batch experiments behind the command-line interface.

Each experiment is a pure function of an :class:`ExperimentConfig` that
returns an :class:`ExperimentResult` whose rows depend only on the config.
Independent work units (one ``t``, one ``y``, one ball, one kernel) go
through an order-preserving map, so the rows are identical for any thread
count.  Wall-clock time is kept on the result object but written to files
only on request, because it would break byte-identical reruns.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import __version__, config
from .errors import InvalidInputError
from .quadrature import ConvergenceError

SUBCOMMANDS = {
    "mehler": ("check", "semigroup", "stochastic"),
    "impow": ("kernel", "normalization", "lemma", "isometry"),
    "hormander": ("estimate", "images", "consistency", "tay"),
    "iinf": ("scan",),
    "diverge": ("scan",),
    "hardy": ("strict", "bmo", "atoms"),
    "tree": ("equivalence", "sums", "exactness", "cheeger"),
    "isoperimetric": ("shell", "doubling"),
}

HANDLE_NAMES = ("impow", "mehler", "hilbert", "cauchy", "constant", "truncated")

# (x, y) pairs for the kernel cross-validation: |x - y| >= 0.1, |x|, |y| <= 5, x != -y
IMPOW_PAIRS = (
    (0.0, 0.5), (0.3, -0.2), (1.0, 0.1), (-1.5, 0.7), (2.0, 1.0),
    (0.5, 0.6), (-0.4, -1.1), (1.7, -0.3), (2.5, 2.2), (-3.0, -1.0),
    (3.0, 0.4), (0.2, 3.5), (-2.2, 1.9), (4.0, 3.6), (-4.5, -3.9),
    (5.0, 4.8), (1.2, 4.4), (-0.9, 2.6), (3.3, -1.4), (-5.0, 0.0),
)

LEMMA_A = (1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0)
LEMMA_SIGMA = (0.005, 0.01, 0.05, 0.1, 0.25, 0.5)

# Boundary-shell family: (base intervals, kappa)
SHELL_FAMILY_CENTERS = (2.25, 4.0, 8.0)
SHELL_FAMILY_HALF_WIDTH = 0.25
SHELL_FAMILY_KAPPAS = (0.1, 0.05, 0.01)


@dataclass
class ExperimentConfig:
    """Parameters of one experiment run.

    ``grid`` is the per-experiment size parameter: the half-width of the
    ``x, y`` grid (mehler), the Gauss-Hermite order (semigroup), the
    enumeration depth (tree exactness), the largest centre (doubling) or the
    number of BMO centres (hardy bmo).
    """

    subcommand: str
    action: str | None = None
    u: float = 1.0
    r: float = 1.0
    tol: float | None = None
    grid: float | None = None
    ys: tuple | None = None
    t: tuple | None = None
    q: int = 2
    kernel: str | None = None
    out: str | None = None
    format: str = "json"
    threads: int = 1
    timing: bool = False

    def __post_init__(self):
        if self.subcommand not in SUBCOMMANDS:
            raise InvalidInputError(f"unknown subcommand {self.subcommand!r}")
        actions = SUBCOMMANDS[self.subcommand]
        self.action = self.action or actions[0]
        if self.action not in actions:
            raise InvalidInputError(f"{self.subcommand} has no action {self.action!r}; "
                                    f"choose from {', '.join(actions)}")
        if self.tol is not None and not self.tol > 0:
            raise InvalidInputError("tolerances must be positive")
        if self.grid is not None and not self.grid > 0:
            raise InvalidInputError("grid parameter must be positive")
        for name in ("ys", "t"):
            v = getattr(self, name)
            if v is not None:
                v = tuple(float(x) for x in v)
                if not v or not all(math.isfinite(x) for x in v):
                    raise InvalidInputError(f"--{name} must be a nonempty list of finite numbers")
                setattr(self, name, v)
        if self.format not in ("json", "csv"):
            raise InvalidInputError("format must be json or csv")
        if int(self.threads) != self.threads or self.threads < 1:
            raise InvalidInputError("threads must be a positive integer")
        if not (math.isfinite(self.u) and math.isfinite(self.r)):
            raise InvalidInputError("u and r must be finite")

    def params(self) -> dict:
        """Parameter echo (output location and parallelism excluded)."""
        d = dict(subcommand=self.subcommand, action=self.action, u=self.u, r=self.r,
                 tol=self.tol, grid=self.grid, ys=list(self.ys) if self.ys else None,
                 t=list(self.t) if self.t else None, q=self.q, kernel=self.kernel)
        return {k: v for k, v in d.items() if v is not None}


@dataclass
class ExperimentResult:
    experiment: str
    params: dict
    rows: list
    meta: dict
    runtime_ms: float = 0.0
    failures: list = field(default_factory=list)

    @property
    def partial(self) -> bool:
        return bool(self.failures)

    def as_dict(self, timing: bool = False) -> dict:
        meta = dict(self.meta)
        if timing:
            meta["runtime_ms"] = self.runtime_ms
        return dict(experiment=self.experiment, params=self.params, rows=self.rows, meta=meta)


# ---------------------------------------------------------------------------
# Plain-data conversion

def _plain(v):
    """Convert numpy scalars, complex numbers and non-finite floats to JSON-safe values."""
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_plain(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (complex, np.complexfloating)):
        return [_plain(float(v.real)), _plain(float(v.imag))]
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return v


def _split_complex(name: str, z) -> dict:
    z = complex(z)
    return {f"{name}_re": z.real, f"{name}_im": z.imag}


# ---------------------------------------------------------------------------
# Parallel map with failure capture

class _Runner:
    def __init__(self, threads: int):
        self.threads = threads
        self.failures: list = []

    def map(self, fn: Callable, items) -> list:
        """Ordered map; with several threads the results keep input order."""
        items = list(items)
        if self.threads <= 1 or len(items) <= 1:
            return [fn(x) for x in items]
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            return list(pool.map(fn, items))

    def map_safe(self, fn: Callable, items, label: Callable = repr) -> list:
        """Like :meth:`map`, but convergence failures become ``None`` and are recorded."""
        items = list(items)

        def wrapped(x):
            try:
                return fn(x)
            except ConvergenceError as exc:
                return exc

        out = []
        for x, res in zip(items, self.map(wrapped, items)):
            if isinstance(res, ConvergenceError):
                self.failures.append(dict(item=label(x), error=str(res)))
                out.append(None)
            else:
                out.append(res)
        return out


# ---------------------------------------------------------------------------
# Kernel handles by name

def make_handle(name: str | None, u: float = 1.0, r: float = 1.0):
    from .impow_kernel import ImpowParams
    from . import singular_estimators as se

    name = name or "impow"
    if name == "impow":
        return se.impow_handle(ImpowParams(u, r))
    if name.startswith("mehler"):
        t = float(name.split(":")[1]) if ":" in name else 1.0
        return se.mehler_handle(t)
    if name == "hilbert":
        return se.hilbert_gauss_handle()
    if name == "cauchy":
        return se.plain_cauchy_handle()
    if name.startswith("constant"):
        c = float(name.split(":")[1]) if ":" in name else 2.0
        return se.constant_handle(c)
    if name == "truncated":
        return se.truncated_identity_handle()
    raise InvalidInputError(f"unknown kernel {name!r}; choose from {', '.join(HANDLE_NAMES)}")


# ---------------------------------------------------------------------------
# mehler

def _mehler_axis(cfg) -> np.ndarray:
    g = 3.0 if cfg.grid is None else cfg.grid
    return np.linspace(-g, g, 5)


def _mehler_check(cfg, run):
    from .ou_spectral import mehler_eval, mehler_series_eval

    ts = cfg.t or (0.2, 0.5, 1.0, 2.0)
    axis = _mehler_axis(cfg)
    tol = cfg.tol or 1e-12

    def one(t):
        rows = []
        for x in axis:
            for y in axis:
                closed = float(mehler_eval(t, x, y))
                series = mehler_series_eval(t, float(x), float(y), tol=tol)
                rows.append(dict(t=t, x=float(x), y=float(y), closed_form=closed,
                                 series=series.value, terms=series.terms,
                                 tail_bound=series.tail_bound,
                                 relative_discrepancy=abs(series.value - closed) / abs(closed)))
        return rows

    rows = [r for part in run.map_safe(one, ts) if part for r in part]
    worst = max((r["relative_discrepancy"] for r in rows), default=math.nan)
    return rows, dict(max_relative_discrepancy=worst, series_tol=tol)


def _mehler_semigroup(cfg, run):
    from .ou_spectral import QuadratureGrid, mehler_eval, semigroup_compose

    ts = cfg.t or (0.2, 0.5, 1.0, 2.0)
    order = int(cfg.grid or 120)
    grid = QuadratureGrid.gauss_hermite(order)
    axis = np.linspace(-3.0, 3.0, 5)

    def one(t):
        rows = []
        for x in axis:
            for y in axis:
                composed = semigroup_compose(t / 2, t / 2, grid, float(x), float(y))
                direct = float(mehler_eval(t, x, y))
                rows.append(dict(t=t, x=float(x), y=float(y), composed=composed, direct=direct,
                                 residual=abs(composed - direct) / max(1.0, abs(direct))))
        return rows

    rows = [r for part in run.map(one, ts) for r in part]
    return rows, dict(hermite_order=order, max_residual=max(r["residual"] for r in rows),
                      residual="|composed - direct| / max(1, |direct|)")


def _mehler_stochastic(cfg, run):
    from .ou_spectral import QuadratureGrid, stochasticity_residual

    ts = cfg.t or (0.2, 0.5, 1.0, 2.0)
    order = int(cfg.grid or 120)
    grid = QuadratureGrid.gauss_hermite(order)
    axis = np.linspace(-3.0, 3.0, 5)
    rows = [dict(t=t, x=float(x), residual=stochasticity_residual(t, float(x), grid))
            for t in ts for x in axis]
    return rows, dict(hermite_order=order, max_residual=max(r["residual"] for r in rows))


# ---------------------------------------------------------------------------
# impow

def _impow_params(cfg):
    from .impow_kernel import ImpowParams
    return ImpowParams(cfg.u, cfg.r)


def _impow_kernel(cfg, run):
    from .impow_kernel import ImpowParams, kernel_closed_form_1d, kernel_quadrature

    p = _impow_params(cfg)
    pm = ImpowParams(-cfg.u, cfg.r)
    tol = cfg.tol or 1e-11

    def one(pair):
        x, y = pair
        kq = kernel_quadrature(p, x, y, epsrel=tol)
        km = kernel_quadrature(pm, x, y, epsrel=tol)
        row = dict(x=x, y=y)
        row.update(_split_complex("quadrature", kq.value))
        row["quadrature_error"] = kq.error
        if p.r == 1:
            kc = kernel_closed_form_1d(p, x, y, normalized=True)
            row.update(_split_complex("closed_form", kc.value))
            row["relative_discrepancy"] = abs(kq.value - kc.value) / abs(kc.value)
        row["conjugation_residual"] = abs(km.value - kq.value.conjugate()) / abs(kq.value)
        return row

    rows = [r for r in run.map_safe(one, IMPOW_PAIRS) if r]
    meta = dict(quadrature_epsrel=tol,
                max_conjugation_residual=max(r["conjugation_residual"] for r in rows))
    if p.r == 1:
        meta["max_relative_discrepancy"] = max(r["relative_discrepancy"] for r in rows)
    else:
        meta["note"] = "closed form exists for r = 1 only"
    return rows, meta


def _impow_normalization(cfg, run):
    from .impow_kernel import spectral_action_check

    chk = spectral_action_check(_impow_params(cfg))
    rows = []
    for conv, val in chk.spectral_side.items():
        row = dict(convention=conv)
        row.update(_split_complex("spectral_side", val))
        row["relative_diff"] = chk.relative_diff[conv]
        rows.append(row)
    meta = dict(selected=chk.convention, configured=config.IMPOW_NORMALIZATION)
    meta.update(_split_complex("kernel_side", chk.kernel_side))
    return rows, meta


def _impow_lemma(cfg, run):
    from .impow_kernel import i_integral, lemma_components

    tol = cfg.tol or config.QUAD_ATOL
    grid = [(a, s) for a in LEMMA_A for s in LEMMA_SIGMA]

    def one(pt):
        a, s = pt
        comp = lemma_components(cfg.u, a, s, atol=tol)
        half, _ = i_integral(cfg.u, a, s, atol=tol / 2)
        scaled_i = math.sqrt(a * s) * abs(comp.I)
        return dict(a=a, sigma=s, scaled_I=scaled_i,
                    scaled_I_half_tol=math.sqrt(a * s) * abs(half),
                    relative_change=abs(abs(half) - abs(comp.I)) / abs(comp.I),
                    scaled_H=a * math.sqrt(s) * abs(comp.H),
                    scaled_J=math.sqrt(a * s) * abs(comp.J))

    rows = [r for r in run.map_safe(one, grid) if r]
    return rows, dict(atol=tol, min_scaled_I=min(r["scaled_I"] for r in rows),
                      max_relative_change=max(r["relative_change"] for r in rows),
                      max_scaled_H=max(r["scaled_H"] for r in rows))


def _impow_isometry(cfg, run):
    from .data import load_spectral_test_functions
    from .ou_spectral import Multiplier, apply_multiplier, project

    rows = []
    for name, f in load_spectral_test_functions().items():
        Tf = apply_multiplier(Multiplier.shifted_imaginary_power(cfg.u, cfg.r), f)
        Mf = apply_multiplier(Multiplier.imaginary_power(cfg.u), f)
        f0 = (f - project(f, 0)).norm()
        rows.append(dict(function=name, norm=f.norm(), shifted_power_norm=Tf.norm(),
                         shifted_residual=abs(Tf.norm() - f.norm()),
                         unshifted_power_norm=Mf.norm(), norm_without_mean=f0,
                         unshifted_residual=abs(Mf.norm() - f0)))
    return rows, dict(max_residual=max(max(r["shifted_residual"], r["unshifted_residual"])
                                       for r in rows))


# ---------------------------------------------------------------------------
# hormander / images / consistency / tay

def _hormander_estimate(cfg, run):
    from .singular_estimators import hormander_estimate

    k = make_handle(cfg.kernel, cfg.u, cfg.r)
    rep = hormander_estimate(k, rtol=cfg.tol or 1e-7, map_fn=run.map)
    rows = [dict(stage="base", center=c, radius=r, value=v)
            for (c, r), v in zip(rep.grid, rep.values)]
    rows += [dict(stage="refined", center=c, radius=r, value=v)
             for (c, r), v in zip(rep.details["refined_grid"], rep.details["refined_values"])]
    meta = dict(kernel=k.name, verdict=rep.verdict, supremum=rep.supremum,
                refinement_history=rep.refinement_history,
                refinement_increase=rep.details["refinement_increase"],
                outer_trend=rep.details["outer_trend"], rtol=cfg.tol or 1e-7)
    return rows, meta


def _hormander_images(cfg, run):
    from .singular_estimators import atom_image_scan

    k = make_handle(cfg.kernel, cfg.u, cfg.r)
    ys = cfg.ys or (4.0, 8.0, 12.0, 16.0)
    rows, meta = [], dict(kernel=k.name, rtol=cfg.tol or 1e-7)
    for kind in ("global", "standard"):
        rep = atom_image_scan(k, ys, kind, rtol=cfg.tol or 1e-7, map_fn=run.map)
        for y, s in zip(rep.grid, rep.details["splits"]):
            rows.append(dict(kind=kind, y=y, image_norm=s["total"], far=s["far"], near=s["near"],
                             near_mode=s["near_mode"]))
        meta[f"{kind}_verdict"] = rep.verdict
    return rows, meta


def _hormander_consistency(cfg, run):
    from .singular_estimators import kernel_l1_consistency

    names = [cfg.kernel] if cfg.kernel else ["mehler", "constant", "impow"]
    ys = cfg.ys or (4.0, 8.0, 12.0, 16.0)
    rows = []
    for name in names:
        rec = kernel_l1_consistency(make_handle(name, cfg.u, cfg.r), ys,
                                    rtol=cfg.tol or 1e-7, map_fn=run.map)
        rows.append(dict(kernel=rec.kernel, hormander=rec.hormander,
                         global_images=rec.global_images, standard_images=rec.standard_images,
                         i_infinity=rec.i_infinity, direction_i=rec.direction_i,
                         direction_ii=rec.direction_ii,
                         contrapositive="n/a" if rec.contrapositive is None else rec.contrapositive,
                         consistent=rec.consistent))
    return rows, dict(ys=list(ys), all_consistent=all(r["consistent"] for r in rows))


def _hormander_tay(cfg, run):
    from .singular_estimators import tay_identity_residual

    cases = [("mehler", 3.0, (-2.0, 0.0, 1.0, 5.0, 6.0)),
             ("impow", 4.0, (-2.0, 0.0, 2.0, 6.0, 8.0)),
             ("constant", 3.0, (0.0, 1.0, 5.0))]
    if cfg.kernel:
        cases = [c for c in cases if c[0] == cfg.kernel] or [(cfg.kernel, 4.0, (-2.0, 0.0, 2.0, 6.0))]

    def one(case):
        name, y, xs = case
        res = tay_identity_residual(make_handle(name, cfg.u, cfg.r), y, xs)
        return dict(kernel=name, y=y, samples=len(xs), residual=res)

    rows = [r for r in run.map_safe(one, cases, label=lambda c: c[0]) if r]
    return rows, dict(max_residual=max(r["residual"] for r in rows))


# ---------------------------------------------------------------------------
# iinf / diverge

def _iinf_scan(cfg, run):
    from .singular_estimators import growth_verdict, i_infinity_estimate

    k = make_handle(cfg.kernel or "mehler", cfg.u, cfg.r)
    ys = cfg.ys or (4.0, 6.0, 8.0, 12.0, 16.0)
    rtol = cfg.tol or 1e-7
    reps = run.map_safe(lambda y: i_infinity_estimate(k, [y], rtol=rtol), ys)
    rows, vals, grid = [], [], []
    for y, rep in zip(ys, reps):
        if rep is None:
            continue
        rows.append(dict(y=y, phi=rep.values[0], error=rep.details["errors"][0],
                         x_max=rep.details["x_max"][0]))
        grid.append(y)
        vals.append(rep.values[0])
    verdict, info = growth_verdict(grid, vals) if vals else ("inconclusive", {})
    return rows, dict(kernel=k.name, verdict=verdict, rtol=rtol, **info)


def _diverge_scan(cfg, run):
    from .singular_estimators import _lsq, divergence_scan

    p = _impow_params(cfg)
    ys = cfg.ys or (4.0, 6.0, 8.0, 12.0, 16.0)
    rtol = cfg.tol or 1e-7
    parts = run.map_safe(lambda y: divergence_scan(p, [y], rtol=rtol)[0], ys)
    rows = [dict(y=d.y, phi=d.phi, phi_error=d.phi_error, log_y=d.log_y,
                 window_integral=d.window_integral, comparator_log_y_over_2=d.comparator)
            for d in parts if d is not None]
    meta = dict(rtol=rtol)
    if len(rows) >= 2:
        phi = [r["phi"] for r in rows]
        slope, intercept, r2 = _lsq([r["log_y"] for r in rows], phi)
        meta.update(strictly_increasing=bool(np.all(np.diff(phi) > 0)), slope_vs_log_y=slope,
                    intercept=intercept, r2=r2)
    return rows, meta


# ---------------------------------------------------------------------------
# hardy

def _hardy_strict(cfg, run):
    from .gauss_geometry import maximal_ball
    from .hardy_atoms import (CellFunction, h1_lower_bound_duality, h1_upper_bound_greedy,
                              h1glob_norm_bound)

    ys = cfg.ys or (4.0, 8.0, 16.0)

    def one(y):
        f = CellFunction.normalized_indicator(maximal_ball(y))
        greedy = h1_upper_bound_greedy(f, mode="H1")
        lb = h1_lower_bound_duality(f)
        return dict(y=y, h1_global_bound=h1glob_norm_bound(f), H1_greedy_bound=greedy.norm_bound,
                    H1_greedy_atoms=len(greedy.atoms), duality_lower_bound=lb.value,
                    duality_witness=lb.best)

    rows = [r for r in run.map_safe(one, ys) if r]
    lbs = [r["duality_lower_bound"] for r in rows]
    return rows, dict(lower_bound_ratios=[b / a for a, b in zip(lbs, lbs[1:])],
                      note="duality lower bounds are modulo the H1-BMO pairing constant")


def _hardy_bmo(cfg, run):
    from .hardy_atoms import SQUARE, bmo_ball_grid, bmo_mean_oscillation

    n = int(cfg.grid or 201)
    balls = bmo_ball_grid(50.0, n)
    chunks = [balls[i::max(1, run.threads)] for i in range(max(1, run.threads))]
    # oscillations are per ball, so any partition gives the same values
    reps = run.map(lambda bs: bmo_mean_oscillation(SQUARE, bs), chunks)
    osc = {}
    for bs, rep in zip(chunks, reps):
        for b, v in zip(bs, rep.oscillations):
            osc[(b.center, b.radius)] = v
    rows = [dict(center=b.center, radius=b.radius, oscillation=osc[(b.center, b.radius)])
            for b in balls]
    sup = max(r["oscillation"] for r in rows)
    return rows, dict(function="x^2", supremum=sup, l1_norm=reps[0].l1_norm,
                      bmo_norm=sup + reps[0].l1_norm, n_centers=n)


def _hardy_atoms(cfg, run):
    from .gauss_geometry import maximal_ball
    from .hardy_atoms import CellFunction, h1_upper_bound_greedy

    ys = cfg.ys or (4.0,)
    rows = []
    for y in ys:
        f = CellFunction.normalized_indicator(maximal_ball(y))
        for mode in ("H1", "h1"):
            dec = h1_upper_bound_greedy(f, mode=mode)
            for coef, atom in zip(dec.coefficients, dec.atoms):
                d = atom.to_dict(coef)
                rows.append(dict(y=y, mode=dec.mode, kind=d["kind"], center=d["center"],
                                 radius=d["radius"], coefficient=d["coefficient"]))
    return rows, {}


# ---------------------------------------------------------------------------
# tree

def _tree_kernels(cfg):
    from .data import load_tree_kernels
    from .tree_analysis import kernel_from_spec

    if cfg.kernel in (None, "shipped"):
        return list(load_tree_kernels().values())
    return [kernel_from_spec(cfg.kernel, q=cfg.q)]


def _tree_equivalence(cfg, run):
    from .tree_analysis import equivalence_report

    recs = run.map(equivalence_report, _tree_kernels(cfg))
    rows = [_plain({k: ("unknown" if v is None else v) for k, v in r.as_dict().items()})
            for r in recs]
    return rows, dict(all_consistent=all(r.consistent for r in recs))


def _tree_sums(cfg, run):
    from .tree_analysis import (adjacent_atom_image_norm, tree_gradient_l1, tree_hormander_sum,
                                tree_l1_norm)

    def one(k):
        out = []
        for fn in (tree_l1_norm, tree_gradient_l1, tree_hormander_sum, adjacent_atom_image_norm):
            rep = fn(k)
            out.append(dict(kernel=k.name, q=k.q, quantity=rep.quantity, total=rep.total,
                            tail_bound="none" if rep.tail_bound is None else rep.tail_bound,
                            verdict=rep.verdict))
        return out

    rows = [r for part in run.map(one, _tree_kernels(cfg)) for r in part]
    return rows, dict(j_max=config.TREE_JMAX)


def _tree_exactness(cfg, run):
    from . import tree_analysis as ta

    depth_cap = int(cfg.grid or 10)

    def one(k):
        depth = depth_cap if k.q == 2 else min(depth_cap, 8)
        pairs = [("hormander", ta.hormander_direct(k, depth), math.fsum(ta._hormander_terms(k, depth))),
                 ("l1", ta.l1_direct(k, depth), math.fsum(ta._l1_terms(k, depth))),
                 ("gradient_l1", ta.gradient_direct(k, depth), math.fsum(ta._gradient_terms(k, depth))),
                 ("adjacent_atom_image", ta.atom_image_direct(k, depth),
                  math.fsum(ta._atom_image_terms(k, depth)))]
        return [dict(kernel=k.name, q=k.q, depth=depth, quantity=name, direct=d, reorganized=r,
                     abs_diff=abs(d - r), rel_diff=abs(d - r) / max(abs(r), 1e-300))
                for name, d, r in pairs]

    rows = [r for part in run.map(one, _tree_kernels(cfg)) for r in part]
    return rows, dict(max_rel_diff=max(r["rel_diff"] for r in rows))


def _tree_cheeger(cfg, run):
    from .errors import PreconditionError
    from .tree_analysis import cheeger_floor, cheeger_ratio

    rows = []
    for k in _tree_kernels(cfg):
        try:
            ratio = cheeger_ratio(k)
        except PreconditionError as exc:
            rows.append(dict(kernel=k.name, q=k.q, ratio="n/a", floor=cheeger_floor(k.q),
                             note=str(exc)))
            continue
        rows.append(dict(kernel=k.name, q=k.q, ratio=ratio, floor=cheeger_floor(k.q),
                         note=""))
    return rows, dict(note="empirical ratios; the floor is an observation, not an assertion")


# ---------------------------------------------------------------------------
# isoperimetric

def shell_family():
    """The documented ``(A, kappa)`` family: ``A = [y - 1/4, y + 1/4]`` and its
    mirror image, ``y`` in ``SHELL_FAMILY_CENTERS``."""
    from .gauss_geometry import ShellSpec

    out = []
    for y in SHELL_FAMILY_CENTERS:
        base = (y - SHELL_FAMILY_HALF_WIDTH, y + SHELL_FAMILY_HALF_WIDTH)
        for kappa in SHELL_FAMILY_KAPPAS:
            out.append(ShellSpec((base,), kappa))
            out.append(ShellSpec(((-base[1], -base[0]),), kappa))
            out.append(ShellSpec(((-base[1], -base[0]), base), kappa))
    return out


def _iso_shell(cfg, run):
    from .gauss_geometry import boundary_shell_ratio

    rows = []
    for shell in shell_family():
        rows.append(dict(base=" u ".join(f"[{a:g},{b:g}]" for a, b in shell.base),
                         kappa=shell.kappa, ratio=boundary_shell_ratio(shell)))
    return rows, dict(min_ratio=min(r["ratio"] for r in rows), b0=config.B0_RADIUS)


def _iso_doubling(cfg, run):
    from .gauss_geometry import doubling_ratio_scan

    c_max = cfg.grid or 50.0
    centers = np.linspace(0.0, c_max, int(round(8 * c_max)) + 1)
    scan = doubling_ratio_scan(centers)
    rows = [dict(center=c, radius=r, ratio=d) for c, r, d in scan.rows]
    return rows, dict(max_ratio=scan.max_ratio, argmax_center=scan.argmax[0],
                      limit=math.sinh(4.0) / math.sinh(2.0))


_DISPATCH = {
    ("mehler", "check"): _mehler_check,
    ("mehler", "semigroup"): _mehler_semigroup,
    ("mehler", "stochastic"): _mehler_stochastic,
    ("impow", "kernel"): _impow_kernel,
    ("impow", "normalization"): _impow_normalization,
    ("impow", "lemma"): _impow_lemma,
    ("impow", "isometry"): _impow_isometry,
    ("hormander", "estimate"): _hormander_estimate,
    ("hormander", "images"): _hormander_images,
    ("hormander", "consistency"): _hormander_consistency,
    ("hormander", "tay"): _hormander_tay,
    ("iinf", "scan"): _iinf_scan,
    ("diverge", "scan"): _diverge_scan,
    ("hardy", "strict"): _hardy_strict,
    ("hardy", "bmo"): _hardy_bmo,
    ("hardy", "atoms"): _hardy_atoms,
    ("tree", "equivalence"): _tree_equivalence,
    ("tree", "sums"): _tree_sums,
    ("tree", "exactness"): _tree_exactness,
    ("tree", "cheeger"): _tree_cheeger,
    ("isoperimetric", "shell"): _iso_shell,
    ("isoperimetric", "doubling"): _iso_doubling,
}


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Dispatch ``cfg`` to its experiment.

    Convergence failures inside a scan are collected; the remaining rows
    are returned with ``meta["partial"] = True``.  A failure outside any
    scan propagates as :class:`ConvergenceError`.
    """
    run = _Runner(int(cfg.threads))
    start = time.perf_counter()
    rows, meta = _DISPATCH[(cfg.subcommand, cfg.action)](cfg, run)
    elapsed = 1000.0 * (time.perf_counter() - start)
    meta = dict(meta)
    meta["toolkit_version"] = __version__
    meta["partial"] = bool(run.failures)
    if run.failures:
        meta["failures"] = run.failures
    return ExperimentResult(f"{cfg.subcommand} {cfg.action}", _plain(cfg.params()),
                            _plain(rows), _plain(meta), elapsed, run.failures)


# ---------------------------------------------------------------------------
# Output

def _csv_cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, dict)):
        return json.dumps(v, sort_keys=True)
    return str(v)


def render(result: ExperimentResult, fmt: str = "json", *, timing: bool = False) -> str:
    """The bytes of :func:`emit_report` as text."""
    if fmt == "json":
        return json.dumps(result.as_dict(timing), indent=1, sort_keys=True) + "\n"
    if fmt == "csv":
        header: list = []
        for row in result.rows:
            header += [k for k in row if k not in header]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in result.rows:
            w.writerow([_csv_cell(row.get(k, "")) for k in header])
        return buf.getvalue()
    raise InvalidInputError("format must be json or csv")


def emit_report(result: ExperimentResult, fmt: str = "json", path: str | None = None, *,
                timing: bool = False) -> str:
    """Write ``result`` to ``path`` (or return the text only when ``path`` is None).

    Raises
    ------
    OSError
        If the path cannot be written.
    """
    text = render(result, fmt, timing=timing)
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    return text


def threads_from_env(default: int = 1) -> int:
    return config.thread_count(default)


__all__ = ["ExperimentConfig", "ExperimentResult", "run_experiment", "emit_report", "render",
           "make_handle", "shell_family", "SUBCOMMANDS", "IMPOW_PAIRS", "LEMMA_A", "LEMMA_SIGMA",
           "threads_from_env"]
