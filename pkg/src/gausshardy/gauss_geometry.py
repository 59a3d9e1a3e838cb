"""Gauss-measure geometry: ball measures, admissibility, doubling, shells.

The Gauss measure has density ``pi^{-n/2} exp(-|x|^2)``.  In one dimension
every measure is an exact error-function difference; far-out intervals are
handled through ``erfcx`` so that their logarithms stay finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate, special

from .config import B0_RADIUS, BALL_QUAD_TOL, KAPPA_MAX
from .errors import InvalidInputError, PreconditionError

_LOG_HALF = math.log(0.5)


def admissible_radius(center) -> float:
    """``min(1, 1/|c|)`` with ``1/0 = inf``."""
    c = float(np.linalg.norm(np.atleast_1d(np.asarray(center, dtype=float))))
    return 1.0 if c <= 1.0 else 1.0 / c


@dataclass(frozen=True)
class GaussBall:
    """Euclidean ball; ``center`` is a float in 1-D or a tuple otherwise."""

    center: float | tuple
    radius: float

    def __post_init__(self):
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise InvalidInputError(f"radius must be positive and finite, got {self.radius}")
        c = self.center
        if isinstance(c, (list, tuple, np.ndarray)):
            c = tuple(float(v) for v in c)
            if len(c) == 1:
                c = c[0]
        else:
            c = float(c)
        object.__setattr__(self, "center", c)

    @property
    def dimension(self) -> int:
        return 1 if isinstance(self.center, float) else len(self.center)

    @property
    def admissible(self) -> bool:
        return self.radius <= admissible_radius(self.center)

    @property
    def maximal(self) -> bool:
        return self.radius == admissible_radius(self.center)

    @property
    def interval(self) -> tuple[float, float]:
        if self.dimension != 1:
            raise InvalidInputError("interval view only exists in 1-D")
        return (self.center - self.radius, self.center + self.radius)

    def scaled(self, factor: float) -> "GaussBall":
        return GaussBall(self.center, factor * self.radius)

    @property
    def measure(self) -> float:
        return gauss_measure(self)


# ---------------------------------------------------------------------------
# 1-D measures

def _log_upper_tail(a: float) -> float:
    # log gamma((a, inf)) = log(erfc(a)/2), accurate for large positive a
    if a == math.inf:
        return -math.inf
    if a < 0:
        return math.log(0.5 * special.erfc(a))
    return _LOG_HALF + math.log(special.erfcx(a)) - a * a


def log_interval_measure(a: float, b: float) -> float:
    """``log gamma((a, b))`` in 1-D, finite even when the measure underflows."""
    a, b = float(a), float(b)
    if not b > a:
        return -math.inf
    if a >= 0:
        la, lb = _log_upper_tail(a), _log_upper_tail(b)
        return la + math.log1p(-math.exp(lb - la)) if lb > -math.inf else la
    if b <= 0:
        return log_interval_measure(-b, -a)
    # interval straddles 0: no cancellation problem
    return math.log(0.5 * (special.erf(b) - special.erf(a)))


def interval_measure(a: float, b: float) -> float:
    """``gamma((a, b))`` in 1-D; either bound may be infinite."""
    a, b = float(a), float(b)
    if not b > a:
        return 0.0
    if a >= 0:
        return 0.5 * (special.erfc(a) - special.erfc(b))
    if b <= 0:
        return 0.5 * (special.erfc(-b) - special.erfc(-a))
    return 0.5 * (special.erf(b) - special.erf(a))


def cell_measures(edges) -> np.ndarray:
    """Gauss measures of consecutive cells ``(e_i, e_{i+1})``, vectorised."""
    e = np.asarray(edges, dtype=float)
    a, b = e[:-1], e[1:]
    pos = 0.5 * (special.erfc(a) - special.erfc(b))
    neg = 0.5 * (special.erfc(-b) - special.erfc(-a))
    mid = 0.5 * (special.erf(b) - special.erf(a))
    return np.where(a >= 0, pos, np.where(b <= 0, neg, mid))


def normalize_intervals(pieces) -> list[tuple[float, float]]:
    """Validate a disjoint union of intervals and return it sorted.

    Touching endpoints are allowed; positive-length overlaps are not.
    """
    out = []
    for piece in pieces:
        a, b = (float(piece[0]), float(piece[1]))
        if math.isnan(a) or math.isnan(b) or b < a:
            raise InvalidInputError(f"bad interval {piece}")
        if b > a:
            out.append((a, b))
    out.sort()
    for (a0, b0), (a1, b1) in zip(out, out[1:]):
        if a1 < b0:
            raise InvalidInputError(f"intervals ({a0}, {b0}) and ({a1}, {b1}) overlap")
    return out


def _as_pieces(obj):
    if isinstance(obj, GaussBall):
        return [obj.interval]
    if len(obj) == 2 and np.isscalar(obj[0]):
        return [tuple(obj)]
    return list(obj)


def gauss_measure(obj) -> float:
    """Gauss measure of a ball, an interval ``(a, b)`` or a disjoint union.

    1-D sets use error-function differences.  Balls in dimension ``n >= 2``
    are integrated by nested adaptive quadrature (tolerance
    ``BALL_QUAD_TOL``); they are intended for spot checks only.

    Raises
    ------
    InvalidInputError
        If the pieces of a union overlap.
    """
    if isinstance(obj, GaussBall) and obj.dimension > 1:
        return _ball_measure_nd(np.asarray(obj.center), obj.radius)
    return float(sum(interval_measure(a, b) for a, b in normalize_intervals(_as_pieces(obj))))


def log_gauss_measure(obj) -> float:
    pieces = normalize_intervals(_as_pieces(obj))
    if not pieces:
        return -math.inf
    logs = np.array([log_interval_measure(a, b) for a, b in pieces])
    return float(special.logsumexp(logs))


def _ball_measure_nd(center: np.ndarray, radius: float) -> float:
    # slice along the first axis: x1 = c1 + r sin(theta) removes the
    # square-root endpoint behaviour of the slice radius
    c1, rest = float(center[0]), center[1:]

    def slice_measure(theta):
        h = radius * math.cos(theta)
        x1 = c1 + radius * math.sin(theta)
        dens = math.exp(-x1 * x1) / math.sqrt(math.pi)
        if rest.size == 1:
            inner = interval_measure(rest[0] - h, rest[0] + h)
        else:
            inner = _ball_measure_nd(rest, h) if h > 0 else 0.0
        return dens * inner * h

    val, _ = integrate.quad(slice_measure, -math.pi / 2, math.pi / 2,
                            epsabs=BALL_QUAD_TOL, epsrel=BALL_QUAD_TOL, limit=200)
    return val


def is_admissible(ball: GaussBall) -> bool:
    return ball.admissible


def maximal_ball(y) -> GaussBall:
    """The ball centred at ``y`` with radius ``min(1, 1/|y|)``."""
    return GaussBall(y, admissible_radius(y))


# ---------------------------------------------------------------------------
# Doubling

@dataclass
class DoublingScan:
    rows: list  # (center, radius, ratio)
    max_ratio: float
    argmax: tuple


def doubling_ratio(ball: GaussBall) -> float:
    """``gamma(2B) / gamma(B)`` computed in log space."""
    if ball.dimension != 1:
        return gauss_measure(ball.scaled(2.0)) / gauss_measure(ball)
    return math.exp(log_gauss_measure(ball.scaled(2.0)) - log_gauss_measure(ball))


def doubling_ratio_scan(centers: Sequence[float], radii: Sequence[float] | None = None) -> DoublingScan:
    """Doubling ratios over a grid of 1-D balls.

    With ``radii=None`` each centre is paired with its maximal radius;
    otherwise every (centre, radius) combination is scanned and must be
    admissible.
    """
    pairs = []
    for c in centers:
        if radii is None:
            pairs.append((float(c), admissible_radius(c)))
        else:
            pairs.extend((float(c), float(r)) for r in radii)
    rows = []
    for c, r in pairs:
        ball = GaussBall(c, r)
        if not ball.admissible:
            raise InvalidInputError(f"ball (c={c}, r={r}) is not admissible")
        rows.append((c, r, doubling_ratio(ball)))
    if not rows:
        raise InvalidInputError("empty grid")
    k = int(np.argmax([row[2] for row in rows]))
    return DoublingScan(rows, rows[k][2], rows[k][:2])


# ---------------------------------------------------------------------------
# Boundary shells

@dataclass(frozen=True)
class ShellSpec:
    """Base set ``A`` (disjoint intervals) and shell width ``kappa``."""

    base: tuple
    kappa: float

    def __post_init__(self):
        if not (0 < self.kappa <= KAPPA_MAX):
            raise InvalidInputError(f"kappa must lie in (0, {KAPPA_MAX}]")
        object.__setattr__(self, "base", tuple(normalize_intervals(self.base)))


def _merge(pieces):
    pieces = sorted(p for p in pieces if p[1] > p[0])
    out = []
    for a, b in pieces:
        if out and a <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], b))
        else:
            out.append((a, b))
    return out


def _shell_positive(alpha: float, beta: float, kappa: float):
    # points of (alpha, beta), 0 < alpha, within kappa/x of an endpoint
    left_end = 0.5 * (alpha + math.sqrt(alpha * alpha + 4 * kappa))   # x - alpha <= kappa/x
    right_start = 0.5 * (beta + math.sqrt(beta * beta - 4 * kappa))   # beta - x <= kappa/x
    return [(alpha, min(left_end, beta)), (max(right_start, alpha), beta)]


def shell_set(shell: ShellSpec) -> list[tuple[float, float]]:
    """``{x in A : d(x, A^c) <= kappa/|x|}`` as a disjoint union of intervals.

    Adjacent pieces of ``A`` are merged first so that ``d(x, A^c)`` is the
    distance to the nearest endpoint of the containing component.
    """
    pieces = []
    for a, b in _merge(shell.base):
        if a >= 0:
            pieces += _shell_positive(a, b, shell.kappa)
        else:
            pieces += [(-hi, -lo) for lo, hi in _shell_positive(-b, -a, shell.kappa)]
    return _merge(pieces)


def boundary_shell_ratio(shell: ShellSpec, b0: float = B0_RADIUS) -> float:
    """``gamma(A_kappa) / (kappa gamma(A))`` for a base set outside ``(-b0, b0)``.

    Raises
    ------
    PreconditionError
        If ``A`` is unbounded or meets ``(-b0, b0)``.
    """
    base = _merge(shell.base)
    if not base:
        raise PreconditionError("empty base set")
    for a, b in base:
        if not (math.isfinite(a) and math.isfinite(b)):
            raise PreconditionError("base set must be bounded")
        if a < b0 and b > -b0:
            raise PreconditionError(f"piece ({a}, {b}) meets (-{b0}, {b0})")
    log_num = log_gauss_measure(shell_set(shell))
    log_den = log_gauss_measure(base)
    return math.exp(log_num - log_den) / shell.kappa


# ---------------------------------------------------------------------------
# The metric with length element sqrt(1 + x^2) |dx|

def _rho_primitive(t: float) -> float:
    return 0.5 * (t * math.sqrt(1.0 + t * t) + math.asinh(t))


def rho_prime_distance_1d(x: float, y: float) -> float:
    """Length of ``[x, y]`` for the metric ``ds^2 = (1 + x^2) dx^2``."""
    return abs(_rho_primitive(float(y)) - _rho_primitive(float(x)))
