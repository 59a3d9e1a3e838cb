"""Atoms, BMO oscillations and atomic-norm estimators on the real line.

Functions are piecewise constant on cells (:class:`CellFunction`).  Atomic
decompositions are computed on a block partition of ``[-L, L]`` in which
any two adjacent blocks fit in one admissible ball, so that every atom of
the greedy decompositions is valid by construction.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, optimize

from .errors import InvalidInputError
from .gauss_geometry import (
    GaussBall,
    admissible_radius,
    cell_measures,
    gauss_measure,
    log_interval_measure,
)
from .quadrature import ConvergenceError

SIZE_RTOL = 1e-10
CANCELLATION_TOL = 1e-10
# largest log of an atom value representable as a double
MAX_LOG_VALUE = 709.0
RESIDUAL_TOL = 1e-8
_EDGE_RTOL = 1e-12


# ---------------------------------------------------------------------------
# Piecewise-constant functions

@dataclass
class CellFunction:
    """Function equal to ``values[i]`` on ``(edges[i], edges[i+1])`` and 0 elsewhere."""

    edges: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.edges.ndim != 1 or self.values.shape != (self.edges.size - 1,):
            raise InvalidInputError("need len(values) == len(edges) - 1")
        if np.any(np.diff(self.edges) <= 0):
            raise InvalidInputError("edges must be strictly increasing")

    @property
    def masses(self) -> np.ndarray:
        return cell_measures(self.edges)

    def integral(self) -> float:
        return float(np.dot(self.values, self.masses))

    def l1_norm(self) -> float:
        return float(np.dot(np.abs(self.values), self.masses))

    def l2_norm(self) -> float:
        return _weighted_l2(self.values, self.masses)

    def support_hull(self) -> tuple[float, float] | None:
        nz = np.nonzero(self.values)[0]
        if nz.size == 0:
            return None
        return float(self.edges[nz[0]]), float(self.edges[nz[-1] + 1])

    def on_edges(self, edges) -> np.ndarray:
        """Values on the cells of a finer partition ``edges``."""
        edges = np.asarray(edges, dtype=float)
        mids = 0.5 * (edges[:-1] + edges[1:])
        idx = np.searchsorted(self.edges, mids, side="right") - 1
        inside = (idx >= 0) & (idx < self.values.size)
        out = np.zeros(mids.size)
        out[inside] = self.values[idx[inside]]
        return out

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.edges, x, side="right") - 1
        inside = (idx >= 0) & (idx < self.values.size)
        return np.where(inside, self.values[np.clip(idx, 0, self.values.size - 1)], 0.0)

    @classmethod
    def indicator(cls, a: float, b: float, scale: float = 1.0) -> "CellFunction":
        return cls(np.array([a, b]), np.array([scale]))

    @classmethod
    def normalized_indicator(cls, ball: GaussBall) -> "CellFunction":
        a, b = ball.interval
        log_gb = log_interval_measure(a, b)
        if -log_gb > MAX_LOG_VALUE:
            raise InvalidInputError(f"1/gamma(B) overflows a double for B = [{a}, {b}]")
        return cls.indicator(a, b, math.exp(-log_gb))


def _weighted_l2(values, masses) -> float:
    """``sqrt(sum v^2 m)`` scaled so tiny or huge values neither underflow nor overflow."""
    values = np.asarray(values, dtype=float)
    scale = float(np.max(np.abs(values), initial=0.0))
    if scale == 0.0 or not math.isfinite(scale):
        return scale
    return scale * math.sqrt(float(np.dot((values / scale) ** 2, masses)))


# ---------------------------------------------------------------------------
# Atoms

@dataclass
class Atom:
    """An atom; ``edges``/``values`` describe it as a :class:`CellFunction`.

    The exceptional atom (the constant 1) has ``ball``, ``edges`` and
    ``values`` equal to ``None``.
    """

    kind: str  # standard | global | exceptional
    ball: GaussBall | None = None
    edges: np.ndarray | None = None
    values: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("standard", "global", "exceptional"):
            raise InvalidInputError(f"unknown atom kind {self.kind!r}")
        if self.edges is not None:
            self.edges = np.asarray(self.edges, dtype=float)
            self.values = np.asarray(self.values, dtype=float)

    @classmethod
    def exceptional(cls) -> "Atom":
        return cls("exceptional")

    @classmethod
    def global_on(cls, ball: GaussBall) -> "Atom":
        """``1_B / gamma(B)`` on a maximal ball."""
        f = CellFunction.normalized_indicator(ball)
        return cls("global", ball, f.edges, f.values)

    @classmethod
    def two_step(cls, ball: GaussBall) -> "Atom":
        """Zero-mean atom, constant on each half of ``B``, with ``||a||_2 = gamma(B)^{-1/2}``."""
        c, r = float(ball.center), float(ball.radius)
        # log space: values m/gamma(left) and -m/gamma(right) overflow naively
        l_left, l_right = log_interval_measure(c - r, c), log_interval_measure(c, c + r)
        log_m = -0.5 * (log_interval_measure(c - r, c + r) + np.logaddexp(-l_left, -l_right))
        if max(log_m - l_left, log_m - l_right) > MAX_LOG_VALUE:
            raise InvalidInputError(f"atom values overflow a double on [{c - r}, {c + r}]")
        a1, a2 = math.exp(log_m - l_left), -math.exp(log_m - l_right)
        return cls("standard", ball, [c - r, c, c + r], [a1, a2])

    def as_cell_function(self) -> CellFunction:
        if self.kind == "exceptional":
            raise InvalidInputError("the exceptional atom is not compactly supported")
        return CellFunction(self.edges, self.values)

    def to_dict(self, coefficient: float | None = None) -> dict:
        d = dict(kind=self.kind,
                 center=None if self.ball is None else self.ball.center,
                 radius=None if self.ball is None else self.ball.radius)
        if coefficient is not None:
            d["coefficient"] = float(coefficient)
        return d


@dataclass
class ValidationRecord:
    kind: str
    valid: bool
    admissible: bool | None
    maximal: bool | None
    support_ok: bool
    size_ok: bool
    cancellation_ok: bool | None
    l2_norm: float
    size_bound: float
    mean: float


def validate_atom(a: Atom) -> ValidationRecord:
    """Check the atom conditions and report measured residuals."""
    if a.kind == "exceptional":
        ok = a.ball is None and a.edges is None
        return ValidationRecord("exceptional", ok, None, None, True, True, None, 1.0, 1.0, 1.0)
    if a.ball is None or a.edges is None:
        return ValidationRecord(a.kind, False, None, None, False, False, None,
                                math.nan, math.nan, math.nan)
    f = a.as_cell_function()
    lo, hi = a.ball.interval
    slack = _EDGE_RTOL * max(1.0, abs(a.ball.center))
    hull = f.support_hull()
    support_ok = hull is None or (hull[0] >= lo - slack and hull[1] <= hi + slack)
    log_gb = log_interval_measure(lo, hi)
    size_bound = math.exp(-0.5 * log_gb)
    l2 = f.l2_norm()
    size_ok = l2 <= size_bound * (1 + SIZE_RTOL)
    mean = f.integral()
    admissible = a.ball.admissible
    maximal = a.ball.maximal
    if a.kind == "standard":
        canc = abs(mean) <= CANCELLATION_TOL * max(1.0, f.l1_norm())
        valid = admissible and support_ok and size_ok and canc
    else:
        canc = None
        valid = maximal and support_ok and size_ok
    return ValidationRecord(a.kind, bool(valid), admissible, maximal, support_ok, size_ok,
                            canc, l2, size_bound, mean)


# ---------------------------------------------------------------------------
# Block partition

def block_edges(L: float) -> np.ndarray:
    """Edges of blocks on ``[-L, L]`` such that the union of two adjacent
    blocks is an admissible interval.

    Blocks grow outward from 0 with length ``min(1, 1/(e + 1)) / 2`` at
    inner edge ``e``; the last block on each side is absorbed into its
    neighbour when it would be shorter than half the regular length.
    """
    pos = [0.0]
    while pos[-1] < L:
        e = pos[-1]
        step = 0.5 * min(1.0, 1.0 / (e + 1.0))
        pos.append(e + step)
    pos[-1] = L
    if len(pos) > 2 and (pos[-1] - pos[-2]) < 0.5 * (pos[-2] - pos[-3]):
        del pos[-2]
    pos = np.asarray(pos)
    return np.concatenate([-pos[:0:-1], pos])


def _interval_ball(a: float, b: float) -> GaussBall:
    return GaussBall(0.5 * (a + b), 0.5 * (b - a))


def _best_maximal_ball(a: float, b: float) -> GaussBall | None:
    """A maximal ball containing ``[a, b]`` of smallest Gauss measure, or None."""
    def slack(c):
        return admissible_radius(c) - max(c - a, b - c)

    cands = list(np.linspace(a, b, 401)) + [0.5 * (a + b)]
    tol = _EDGE_RTOL * max(1.0, abs(a), abs(b))
    best, best_log = None, math.inf
    for c in cands:
        if slack(c) >= -tol:
            ball = GaussBall(float(c), admissible_radius(c))
            lg = log_interval_measure(*ball.interval)
            if lg < best_log:
                best, best_log = ball, lg
    return best


# ---------------------------------------------------------------------------
# Decompositions

@dataclass
class Decomposition:
    coefficients: list
    atoms: list
    mode: str
    residual_l1: float
    details: dict = field(default_factory=dict)

    @property
    def norm_bound(self) -> float:
        return float(sum(abs(c) for c in self.coefficients))

    def reconstruct(self, edges) -> np.ndarray:
        """Sum of ``lambda_j a_j`` on the cells of ``edges``."""
        out = np.zeros(len(edges) - 1)
        for lam, a in zip(self.coefficients, self.atoms):
            if a.kind == "exceptional":
                out += lam
            else:
                out += lam * a.as_cell_function().on_edges(edges)
        return out

    def to_json(self) -> str:
        rows = [a.to_dict(c) for c, a in zip(self.coefficients, self.atoms)]
        return json.dumps(dict(mode=self.mode, norm_bound=self.norm_bound,
                               residual_l1=self.residual_l1, atoms=rows), sort_keys=True)


def _working_grid(f: CellFunction, L: float | None):
    hull = f.support_hull()
    c = 0.0 if hull is None else max(abs(hull[0]), abs(hull[1]))
    L = max(10.0, c + 2.0) if L is None else float(L)
    if hull is not None and (hull[0] < -L or hull[1] > L):
        raise InvalidInputError("function support exceeds [-L, L]")
    blocks = block_edges(L)
    edges = np.unique(np.concatenate([blocks, f.edges[(f.edges > -L) & (f.edges < L)]]))
    return L, blocks, edges


def _single_atom(f: CellFunction, mode: str):
    """The one-atom decomposition when the support of ``f`` allows it."""
    hull = f.support_hull()
    if hull is None:
        return None
    options = []
    l2 = f.l2_norm()
    mean = f.integral()
    hb = _interval_ball(*hull)
    if hb.admissible and abs(mean) <= CANCELLATION_TOL * f.l1_norm():
        lam = l2 * math.exp(0.5 * log_interval_measure(*hb.interval))
        options.append((lam, "standard", hb))
    if mode == "h1":
        mb = _best_maximal_ball(*hull)
        if mb is not None:
            lam = l2 * math.exp(0.5 * log_interval_measure(*mb.interval))
            options.append((lam, "global", mb))
    if not options:
        return None
    lam, kind, ball = min(options, key=lambda t: t[0])
    if lam == 0:
        return None
    atom = Atom(kind, ball, f.edges.copy(), f.values / lam)
    if not validate_atom(atom).valid:
        return None
    return lam, atom


def _finish(f, coeffs, atoms, mode, edges, details, atom_budget, tol):
    dec = Decomposition(coeffs, atoms, mode, math.nan, details)
    target = f.on_edges(edges)
    diff = CellFunction(edges, dec.reconstruct(edges) - target)
    dec.residual_l1 = diff.l1_norm()
    if len(atoms) > atom_budget:
        dec.details["truncated"] = True
        raise ConvergenceError(f"atom budget {atom_budget} exhausted", dec)
    if not dec.residual_l1 <= tol:
        raise ConvergenceError(f"reconstruction residual {dec.residual_l1:.3e} above {tol:.1e}", dec)
    return dec


def _block_parts(values, edges, blocks):
    """Split cell data by blocks: list of (lo, hi, cell slice)."""
    idx = np.searchsorted(edges, blocks)
    return [(blocks[i], blocks[i + 1], slice(idx[i], idx[i + 1])) for i in range(len(blocks) - 1)]


def h1_upper_bound_greedy(f: CellFunction, atom_budget: int = 100_000, *, mode: str = "H1",
                          L: float | None = None) -> Decomposition:
    """Finite atomic decomposition of ``f`` and the bound ``sum |lambda_j|``.

    ``mode="H1"`` uses standard and exceptional atoms.  The constant part is
    the exceptional atom; inside each block the deviation from the block mean
    is one standard atom; the block means are then moved between adjacent
    blocks by two-block difference atoms (the flow along the chain of blocks
    is fixed by the block masses).

    ``mode="h1"`` also admits global atoms: a function whose support fits in
    a maximal ball is one global atom, otherwise each block piece is a global
    atom; the cheaper of this and the ``H1`` decomposition is returned.

    Raises
    ------
    ConvergenceError
        When more than ``atom_budget`` atoms are needed or the reconstruction
        residual exceeds ``1e-8 * max(1, ||f||_1)``; the partial decomposition
        is attached.
    """
    if mode not in ("H1", "h1"):
        raise InvalidInputError("mode must be 'H1' or 'h1'")
    if f.support_hull() is None:
        return Decomposition([], [], mode, 0.0)
    # the construction is linear: work at unit scale so tiny or huge values keep full precision
    scale = float(np.max(np.abs(f.values)))
    tol = RESIDUAL_TOL * max(1.0, f.l1_norm()) / scale
    try:
        dec = _greedy_unit(CellFunction(f.edges, f.values / scale), atom_budget, mode, L, tol)
    except ConvergenceError as exc:
        if isinstance(exc.result, Decomposition):
            _rescale(exc.result, scale)
        raise
    return _rescale(dec, scale)


def _rescale(dec, scale):
    dec.coefficients = [scale * c for c in dec.coefficients]
    dec.residual_l1 *= scale
    return dec


def _greedy_unit(f, atom_budget, mode, L, tol):
    L, blocks, edges = _working_grid(f, L)
    single = _single_atom(f, mode)
    if single is not None:
        lam, atom = single
        return _finish(f, [lam], [atom], mode, edges, dict(strategy="single"), atom_budget, tol)

    if mode == "h1":
        h1_dec = _blockwise_global(f, blocks, edges)
        H1_dec = _telescoping(f, blocks, edges)
        coeffs, atoms, det = min((h1_dec, H1_dec), key=lambda d: sum(abs(c) for c in d[0]))
        return _finish(f, coeffs, atoms, mode, edges, det, atom_budget, tol)
    coeffs, atoms, det = _telescoping(f, blocks, edges)
    return _finish(f, coeffs, atoms, mode, edges, det, atom_budget, tol)


def _telescoping(f, blocks, edges):
    vals = f.on_edges(edges)
    m = cell_measures(edges)
    coeffs, atoms = [], []
    mu = float(np.dot(vals, m))
    if mu != 0.0:
        coeffs.append(mu)
        atoms.append(Atom.exceptional())
    g = vals - mu
    parts = _block_parts(g, edges, blocks)
    block_mass = []
    for lo, hi, sl in parts:
        gm = m[sl]
        gamma_j = gm.sum()
        mean_j = float(np.dot(g[sl], gm) / gamma_j)
        # deviation from the raw values (g = vals - mu would cancel), then one re-centring pass
        dev = vals[sl] - float(np.dot(vals[sl], gm) / gamma_j)
        dev -= float(np.dot(dev, gm) / gamma_j)
        lam = _weighted_l2(dev, gm) * math.sqrt(gamma_j)
        # a block on which g is constant leaves only rounding in dev
        scale = float(np.max(np.abs(g[sl]))) * gamma_j
        if lam > 1e-12 * scale:
            coeffs.append(lam)
            atoms.append(Atom("standard", _interval_ball(lo, hi), edges[sl.start:sl.stop + 1], dev / lam))
        block_mass.append(mean_j * gamma_j)
    flux = np.cumsum(block_mass)
    n_transport = 0
    for k in range(len(parts) - 1):
        F = float(flux[k])
        if F == 0.0:
            continue
        (lo0, hi0, sl0), (lo1, hi1, sl1) = parts[k], parts[k + 1]
        g0, g1 = m[sl0].sum(), m[sl1].sum()
        cells = edges[sl0.start:sl1.stop + 1]
        vals_e = np.concatenate([np.full(sl0.stop - sl0.start, F / g0),
                                 np.full(sl1.stop - sl1.start, -F / g1)])
        ball = _interval_ball(lo0, hi1)
        lam = abs(F) * math.sqrt(1.0 / g0 + 1.0 / g1) * math.exp(0.5 * log_interval_measure(lo0, hi1))
        coeffs.append(lam)
        atoms.append(Atom("standard", ball, cells, vals_e / lam))
        n_transport += 1
    return coeffs, atoms, dict(strategy="telescoping", blocks=len(parts), transport_atoms=n_transport)


def _blockwise_global(f, blocks, edges):
    vals = f.on_edges(edges)
    m = cell_measures(edges)
    coeffs, atoms = [], []
    for lo, hi, sl in _block_parts(vals, edges, blocks):
        piece = vals[sl]
        if not np.any(piece):
            continue
        ball = _best_maximal_ball(lo, hi)
        l2 = _weighted_l2(piece, m[sl])
        lam = l2 * math.exp(0.5 * log_interval_measure(*ball.interval))
        coeffs.append(lam)
        atoms.append(Atom("global", ball, edges[sl.start:sl.stop + 1], piece / lam))
    return coeffs, atoms, dict(strategy="blockwise-global")


def h1glob_norm_bound(f: CellFunction, atom_budget: int = 100_000) -> float:
    """Upper bound for the norm in the space built from standard and global atoms."""
    return h1_upper_bound_greedy(f, atom_budget, mode="h1").norm_bound


# ---------------------------------------------------------------------------
# BMO

@dataclass
class BmoFunction:
    name: str
    func: Callable


@lru_cache(maxsize=None)
def _leggauss(order: int):
    return np.polynomial.legendre.leggauss(order)


def _reference_point(a: float, b: float) -> float:
    return 0.0 if a <= 0 <= b else min(abs(a), abs(b))


def _relative_gl(a: float, b: float, x0: float, order: int = 48):
    """Gauss-Legendre on ``[a, b]`` against ``exp(x0^2 - x^2)``; choosing
    ``x0`` as the point of the interval nearest 0 keeps weights in ``(0, 1]``."""
    x, w = _leggauss(order)
    nodes = 0.5 * (b - a) * x + 0.5 * (b + a)
    return nodes, 0.5 * (b - a) * w * np.exp(x0 * x0 - nodes * nodes)


def interval_mean(g: Callable, a: float, b: float, breaks=()) -> float:
    """Gauss average of ``g`` over ``(a, b)``, split at ``breaks``."""
    x0 = _reference_point(a, b)
    pts = [a] + sorted(p for p in breaks if a < p < b) + [b]
    num = den = 0.0
    for lo, hi in zip(pts, pts[1:]):
        nodes, w = _relative_gl(lo, hi, x0)
        num += float(np.dot(w, g(nodes)))
        den += float(w.sum())
    return num / den


def _sign_changes(h: Callable, a: float, b: float, samples: int = 129):
    """Points in ``(a, b)`` where ``h`` changes sign (sampled, then bisected)."""
    xs = np.linspace(a, b, samples)
    vs = h(xs)
    sg = np.sign(vs)
    nz = np.nonzero(sg)[0]
    roots = []
    for i, j in zip(nz, nz[1:]):
        if sg[i] == sg[j]:
            continue
        if j == i + 1:
            roots.append(optimize.brentq(h, xs[i], xs[j], xtol=1e-14))
        else:
            # sign change across a run of exact zeros: split at both ends
            roots += [float(xs[i + 1]), float(xs[j - 1])]
    return roots


def mean_oscillation(g: Callable, a: float, b: float, breaks=()) -> float:
    """``(1/gamma(I)) int_I |g - g_I| dgamma`` on ``I = (a, b)``."""
    gi = interval_mean(g, a, b, breaks)

    def h(x):
        return g(np.asarray(x, dtype=float)) - gi

    roots = _sign_changes(h, a, b)
    return interval_mean(lambda x: np.abs(h(x)), a, b, list(breaks) + roots)


def l1_norm_gauss(g: Callable, breaks=()) -> float:
    def integrand(x):
        return abs(float(g(np.array([x]))[0])) * math.exp(-x * x) / math.sqrt(math.pi)

    pts = sorted(p for p in breaks if -30 < p < 30)
    val, _ = integrate.quad(integrand, -30.0, 30.0, points=pts or None, limit=400,
                            epsabs=1e-13, epsrel=1e-12)
    return val


def bmo_ball_grid(c_max: float = 50.0, n_centers: int = 201,
                  radius_fractions=(1.0, 0.5, 0.25, 0.125)) -> list[GaussBall]:
    cs = np.linspace(-c_max, c_max, n_centers)
    return [GaussBall(float(c), f * admissible_radius(c)) for c in cs for f in radius_fractions]


@dataclass
class BmoReport:
    name: str
    balls: list
    oscillations: list
    supremum: float
    l1_norm: float

    @property
    def norm(self) -> float:
        return self.l1_norm + self.supremum


def bmo_mean_oscillation(g, ball_grid: Sequence[GaussBall] | None = None, *,
                         breaks=()) -> BmoReport:
    """Mean oscillations of ``g`` over admissible balls plus its ``L^1`` norm."""
    if not isinstance(g, BmoFunction):
        g = BmoFunction(getattr(g, "__name__", "f"), g)
    balls = list(ball_grid) if ball_grid is not None else bmo_ball_grid()
    osc = []
    for b in balls:
        if not b.admissible:
            raise InvalidInputError(f"ball {b} is not admissible")
        osc.append(mean_oscillation(g.func, *b.interval, breaks))
    return BmoReport(g.name, [(b.center, b.radius) for b in balls], osc,
                     float(max(osc)), l1_norm_gauss(g.func, breaks))


ONE = BmoFunction("one", lambda x: np.ones_like(np.asarray(x, dtype=float)))
IDENTITY = BmoFunction("x", lambda x: np.asarray(x, dtype=float))
SQUARE = BmoFunction("x^2", lambda x: np.asarray(x, dtype=float) ** 2)

# BMO norms of the fixed dictionary members on the default grid
_NORM_CACHE: dict = {}


def default_dictionary(center: float = 0.0) -> list[tuple[BmoFunction, tuple]]:
    """``1``, ``x``, ``x^2`` and the sign of ``x - c`` localized to ``B_c``."""
    r = admissible_radius(center)

    def loc_sign(x, c=center, r=r):
        x = np.asarray(x, dtype=float)
        return np.where(np.abs(x - c) <= r, np.sign(x - c), 0.0)

    return [(ONE, ()), (IDENTITY, ()), (SQUARE, ()),
            (BmoFunction(f"sign(x-{center:g}) on B", loc_sign), (center - r, center, center + r))]


def _bmo_norm(g: BmoFunction, breaks, ball_grid) -> float:
    if ball_grid is None and g in (ONE, IDENTITY, SQUARE):
        if g.name not in _NORM_CACHE:
            _NORM_CACHE[g.name] = bmo_mean_oscillation(g, None, breaks=breaks).norm
        return _NORM_CACHE[g.name]
    return bmo_mean_oscillation(g, ball_grid, breaks=breaks).norm


@dataclass
class DualityBound:
    value: float
    best: str
    pairings: dict
    bmo_norms: dict
    note: str = "lower bound modulo the duality normalization constant"


def pairing(f: CellFunction, g: Callable, breaks=()) -> float:
    """``int f g dgamma`` for a cell function ``f``."""
    total = 0.0
    masses = f.masses
    for i in np.nonzero(f.values)[0]:
        a, b = f.edges[i], f.edges[i + 1]
        total += f.values[i] * masses[i] * interval_mean(g, a, b, breaks)
    return total


def h1_lower_bound_duality(f: CellFunction, bmo_dictionary=None, ball_grid=None) -> DualityBound:
    """``max_g |<f, g>| / ||g||_BMO`` over the dictionary."""
    if bmo_dictionary is None:
        hull = f.support_hull()
        bmo_dictionary = default_dictionary(0.0 if hull is None else 0.5 * (hull[0] + hull[1]))
    pairs, norms = {}, {}
    for g, breaks in bmo_dictionary:
        norms[g.name] = _bmo_norm(g, breaks, ball_grid)
        pairs[g.name] = pairing(f, g.func, breaks)
    ratios = {k: abs(pairs[k]) / norms[k] for k in pairs if norms[k] > 0}
    best = max(ratios, key=ratios.get) if ratios else ""
    return DualityBound(ratios.get(best, 0.0), best, pairs, norms)
