"""Hermite spectral calculus for the Ornstein-Uhlenbeck operator in 1-D.

Hermite polynomials use the physicists' normalisation
``H_{j+1} = 2x H_j - 2j H_{j-1}``, so ``L H_j = j H_j`` for
``L = -(1/2) d^2/dx^2 + x d/dx`` and ``||H_j||^2 = 2^j j!`` in ``L^2(gamma)``.
Spectral coefficients are taken against the orthonormal family
``h_j = H_j / sqrt(2^j j!)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import mpmath
import numpy as np

from .quadrature import ConvergenceError

# Cramer's inequality: |H_j(x)| exp(-x^2/2) <= K sqrt(2^j j!).
CRAMER_CONSTANT = 1.086435
SERIES_HARD_CAP = 4000


def hermite_eval(j: int, x):
    """Physicists' Hermite polynomial ``H_j`` at ``x`` (scalar or array)."""
    if j < 0:
        raise ValueError("j must be nonnegative")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if j == 0:
        return prev if prev.ndim else float(prev)
    cur = 2.0 * x
    for k in range(1, j):
        prev, cur = cur, 2.0 * x * cur - 2.0 * k * prev
    return cur if cur.ndim else float(cur)


def hermite_norm_sq(j: int) -> float:
    """``2^j j!``, the squared ``L^2(gamma)`` norm of ``H_j``."""
    if j < 0:
        raise ValueError("j must be nonnegative")
    try:
        return float((1 << j) * math.factorial(j))
    except OverflowError:
        raise OverflowError(f"2^j j! is not representable as a float for j={j}") from None


def normalized_hermite_table(J: int, x) -> np.ndarray:
    """Array of shape ``(J + 1, len(x))`` holding ``h_0(x), ..., h_J(x)``.

    Computed with the orthonormal three-term recurrence, which stays
    finite for large ``J`` where ``H_j`` itself would overflow.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    table = np.empty((J + 1, x.size))
    table[0] = 1.0
    if J >= 1:
        table[1] = math.sqrt(2.0) * x
    for j in range(1, J):
        table[j + 1] = math.sqrt(2.0 / (j + 1)) * x * table[j] - math.sqrt(j / (j + 1)) * table[j - 1]
    return table


def _hermite_exact(j: int, x: Fraction) -> Fraction:
    if j < 0:
        return Fraction(0)
    prev, cur = Fraction(1), 2 * x
    if j == 0:
        return prev
    for k in range(1, j):
        prev, cur = cur, 2 * x * cur - 2 * k * prev
    return cur


def eigen_residual(j: int, grid, exact: bool = True) -> float:
    """Max over ``grid`` of ``|(-H_j''/2 + x H_j') - j H_j|``.

    Derivatives come from ``H_j' = 2j H_{j-1}`` and
    ``H_j'' = 4j(j-1) H_{j-2}``.  With ``exact=True`` every grid point is
    converted to a rational and the residual is evaluated without rounding;
    otherwise in floating point.
    """
    if j < 0:
        raise ValueError("j must be >= 0")
    if j == 0:
        return 0.0  # H_0 = 1 is annihilated by L
    worst = 0.0
    for xv in np.ravel(grid):
        if exact:
            x = Fraction(float(xv))
            h = _hermite_exact(j, x)
            d1 = 2 * j * _hermite_exact(j - 1, x)
            d2 = 4 * j * (j - 1) * _hermite_exact(j - 2, x) if j >= 2 else 0
            res = abs(-d2 / 2 + x * d1 - j * h)
            worst = max(worst, float(res))
        else:
            x = float(xv)
            h = hermite_eval(j, x)
            d1 = 2 * j * hermite_eval(j - 1, x)
            d2 = 4 * j * (j - 1) * hermite_eval(j - 2, x) if j >= 2 else 0.0
            worst = max(worst, abs(-0.5 * d2 + x * d1 - j * h))
    return worst


@dataclass(frozen=True)
class QuadratureGrid:
    """Gauss-Hermite rule rescaled so that ``sum w_k g(x_k) ~ int g dgamma``."""

    nodes: np.ndarray
    weights: np.ndarray

    @classmethod
    def gauss_hermite(cls, m: int) -> "QuadratureGrid":
        x, w = np.polynomial.hermite.hermgauss(m)
        return cls(x, w / math.sqrt(math.pi))

    @property
    def order(self) -> int:
        return self.nodes.size

    def integrate(self, values) -> complex | float:
        return np.dot(self.weights, values)


@dataclass(frozen=True)
class Multiplier:
    """A spectral multiplier ``j -> m(j)`` with a declared bound on ``|m|``."""

    func: Callable[[np.ndarray], np.ndarray]
    sup_bound: float = 1.0
    name: str = "custom"

    def __call__(self, j):
        return self.func(np.asarray(j))

    @classmethod
    def imaginary_power(cls, u: float) -> "Multiplier":
        """``M_u``: 0 on the constants, ``j^{iu}`` for ``j >= 1``."""
        def m(j):
            j = np.asarray(j, dtype=float)
            out = np.zeros(j.shape, dtype=complex)
            pos = j > 0
            out[pos] = np.exp(1j * u * np.log(j[pos]))
            return out
        return cls(m, 1.0, f"M_{u}")

    @classmethod
    def shifted_imaginary_power(cls, u: float, r: float = 1.0) -> "Multiplier":
        """``(j + r)^{iu}``, the multiplier of ``(rI + L)^{iu}``."""
        if r <= 0:
            raise ValueError("r must be positive")
        def m(j):
            return np.exp(1j * u * np.log(np.asarray(j, dtype=float) + r))
        return cls(m, 1.0, f"(L+{r})^{u}i")

    @classmethod
    def heat(cls, t: float) -> "Multiplier":
        return cls(lambda j: np.exp(-t * np.asarray(j, dtype=float)), 1.0, f"exp(-{t}L)")


@dataclass(frozen=True)
class SpectralFunction:
    """Finite Hermite expansion ``f = sum_j c_j h_j`` in ``L^2(gamma)``."""

    coeffs: np.ndarray
    dimension: int = 1

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs))
        if c.ndim != 1:
            raise ValueError("coefficients must be a 1-D sequence")
        if self.dimension != 1:
            raise NotImplementedError("only dimension 1 is supported")
        object.__setattr__(self, "coeffs", c.astype(complex) if np.iscomplexobj(c) else c.astype(float))

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def norm(self) -> float:
        """``||f||_2`` via Parseval."""
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))

    def __call__(self, x):
        table = normalized_hermite_table(self.degree, x)
        out = self.coeffs @ table
        return out if np.ndim(x) else out[0]

    def __add__(self, other: "SpectralFunction") -> "SpectralFunction":
        n = max(self.coeffs.size, other.coeffs.size)
        a = np.zeros(n, dtype=np.result_type(self.coeffs, other.coeffs))
        a[: self.coeffs.size] += self.coeffs
        a[: other.coeffs.size] += other.coeffs
        return SpectralFunction(a)

    def __sub__(self, other: "SpectralFunction") -> "SpectralFunction":
        return self + SpectralFunction(-other.coeffs)

    @classmethod
    def from_callable(cls, f, degree: int, order: int | None = None) -> "SpectralFunction":
        """Project ``f`` onto ``h_0..h_degree`` by Gauss-Hermite quadrature.

        ``order`` defaults to ``2 * degree + 1`` nodes, enough to recover a
        polynomial of that degree exactly.
        """
        m = max(order or 0, 2 * degree + 1)
        grid = QuadratureGrid.gauss_hermite(m)
        vals = np.asarray(f(grid.nodes))
        table = normalized_hermite_table(degree, grid.nodes)
        return cls(table @ (grid.weights * vals))


def project(f: SpectralFunction, j: int) -> SpectralFunction:
    """``P_j f``: keep only the degree-``j`` coefficient."""
    out = np.zeros_like(f.coeffs)
    if 0 <= j < f.coeffs.size:
        out[j] = f.coeffs[j]
    return SpectralFunction(out)


def apply_multiplier(m: Multiplier, f: SpectralFunction) -> SpectralFunction:
    """``m(L) f``: multiply each coefficient ``c_j`` by ``m(j)``."""
    j = np.arange(f.coeffs.size)
    return SpectralFunction(m(j) * f.coeffs)


# --- Mehler kernel -------------------------------------------------------


def _check_t(t):
    if not np.all(np.asarray(t) > 0):
        raise ValueError("t must be positive")


def mehler_eval(t, x, y):
    """Mehler kernel ``h_t(x, y)`` of ``exp(-tL)`` with respect to gamma (n = 1).

    Evaluated through ``s = tanh(t/2)`` in the symmetric form
    ``(1+s)/(2 sqrt s) * exp[(x^2+y^2)/2 - ((x-y)^2/s + s (x+y)^2)/4]``.
    """
    _check_t(t)
    s = np.tanh(0.5 * np.asarray(t, dtype=float))
    return mehler_substituted_eval(s, x, y)


def mehler_eval_direct(t, x, y):
    """Mehler kernel in the form ``(1-e^{-2t})^{-1/2} exp[y^2 - (e^{-t}x - y)^2/(1-e^{-2t})]``."""
    _check_t(t)
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = -np.expm1(-2.0 * t)
    return d ** -0.5 * np.exp(y * y - (np.exp(-t) * x - y) ** 2 / d)


def mehler_substituted_eval(s, x, y):
    """``h~_s(x, y)``, the Mehler kernel after ``t = log((1+s)/(1-s))``."""
    s = np.asarray(s, dtype=float)
    if not np.all((s > 0) & (s < 1)):
        raise ValueError("s must lie in (0, 1)")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    expo = 0.5 * (x * x + y * y) - 0.25 * ((x - y) ** 2 / s + s * (x + y) ** 2)
    return (1.0 + s) / (2.0 * np.sqrt(s)) * np.exp(expo)


def t_from_s(s):
    s = np.asarray(s, dtype=float)
    return np.log1p(s) - np.log1p(-s)


def s_from_t(t):
    return np.tanh(0.5 * np.asarray(t, dtype=float))


@dataclass
class SeriesValue:
    value: float
    tail_bound: float
    terms: int
    converged: bool
    precision_digits: int = field(default=0)


def mehler_series_tail_bound(t: float, x: float, y: float, J: int) -> float:
    """Bound on ``sum_{j > J} e^{-tj} |h_j(x) h_j(y)|`` from Cramer's inequality."""
    q = math.exp(-t)
    return CRAMER_CONSTANT ** 2 * math.exp(0.5 * (x * x + y * y)) * q ** (J + 1) / (1.0 - q)


def mehler_series_eval(t: float, x: float, y: float, J: int | None = None,
                       tol: float = 1e-12, relative: bool = True) -> SeriesValue:
    """Partial sum of ``sum_j e^{-tj} H_j(x) H_j(y) / (2^j j!)`` with a tail bound.

    The sum is carried out in multiprecision so that cancellation between
    terms (e.g. at ``y = -x``) does not limit accuracy; the working precision
    is raised until the partial sum is resolved.  With ``J=None`` the
    truncation is chosen so that the tail bound is below ``tol`` (relative to
    the partial sum if ``relative``); a :class:`ConvergenceError` is raised if
    that needs more than ``SERIES_HARD_CAP`` terms.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    if J is not None and J < 0:
        raise ValueError("J must be nonnegative")
    # a private context: mpmath's global precision is shared across threads
    ctx = mpmath.MPContext()
    dps = 40
    while True:
        ctx.dps = dps
        total, n_terms, peak = _series_sum(ctx, t, x, y, J, tol, relative)
        value = float(total)
        # digits lost to cancellation between peak term and the result
        lost = 0 if total == 0 else max(0.0, float(ctx.log10(peak / abs(total))))
        if lost < dps - 25 or dps > 400:
            break
        dps = int(lost) + 45
    bound = mehler_series_tail_bound(t, x, y, n_terms - 1)
    target = tol * abs(value) if relative else tol
    converged = bound <= target
    result = SeriesValue(value, bound, n_terms, converged, dps)
    if J is None and not converged:
        raise ConvergenceError(
            f"series tail bound {bound:.3g} above tolerance after {n_terms} terms", result
        )
    return result


def _series_sum(ctx, t, x, y, J, tol, relative):
    q = ctx.exp(-ctx.mpf(t))
    xm, ym = ctx.mpf(x), ctx.mpf(y)
    hx_prev, hx = ctx.mpf(1), ctx.sqrt(2) * xm
    hy_prev, hy = ctx.mpf(1), ctx.sqrt(2) * ym
    total = ctx.mpf(1)
    peak = ctx.mpf(1)
    weight = ctx.mpf(1)
    j = 0
    limit = SERIES_HARD_CAP if J is None else J
    while j < limit:
        j += 1
        weight *= q
        term = weight * hx * hy
        total += term
        peak = max(peak, abs(term))
        if J is None and j % 10 == 0:
            bound = mehler_series_tail_bound(t, x, y, j)
            if bound <= (tol * abs(float(total)) if relative else tol):
                break
        c1 = ctx.sqrt(ctx.mpf(2) / (j + 1))
        c0 = ctx.sqrt(ctx.mpf(j) / (j + 1))
        hx_prev, hx = hx, c1 * xm * hx - c0 * hx_prev
        hy_prev, hy = hy, c1 * ym * hy - c0 * hy_prev
    return total, j + 1, peak


def semigroup_compose(t1: float, t2: float, grid: QuadratureGrid, x: float, y: float) -> float:
    """``sum_k w_k h_{t1}(x, x_k) h_{t2}(x_k, y)``, a quadrature for ``h_{t1+t2}(x, y)``."""
    vals = mehler_eval(t1, x, grid.nodes) * mehler_eval(t2, grid.nodes, y)
    return float(grid.integrate(vals))


def stochasticity_residual(t: float, x: float, grid: QuadratureGrid) -> float:
    """``|sum_k w_k h_t(x, x_k) - 1|``; zero for an exact rule since ``e^{-tL} 1 = 1``."""
    return abs(float(grid.integrate(mehler_eval(t, x, grid.nodes))) - 1.0)
