"""Kernel of the imaginary powers ``(rI + L)^{iu}`` of the OU operator (n = 1).

With ``t = log((1+s)/(1-s))`` the kernel with respect to gamma is

    k(x, y) = N_u * int_0^1 g_u(s) ((1-s)/(1+s))^{r-1} / (1+s)
                         * exp(-Q_s(x, y)) ds / sqrt(s),

    Q_s(x, y) = ((x-y)^2 / s + s (x+y)^2) / 4 - (x^2 + y^2) / 2,
    g_u(s)    = log((1+s)/(1-s))^{-iu-1},

and ``N_u = 1/Gamma(-iu)`` makes the operator the spectral multiplier
``(j + r)^{iu}`` (this constant is checked against the spectral action in
the test-suite).  For ``r = 1`` the s-integral collapses to
``exp(min(x^2, y^2)) * I(|x^2-y^2|, |x-y|/|x+y|)``.

Numerically every s-integral is written in the logit variable
``w = log(s / (1 - s))``: near ``s = 0`` the oscillation of ``g_u`` becomes
``exp(-iu w)`` with a smooth envelope, and near ``s = 1`` the logarithmic
endpoint turns into exponential decay in ``w``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate as sp_integrate

from . import config
from .errors import InvalidInputError
from .quadrature import ConvergenceError, integrate_adaptive
from .special import gamma_complex

# Exponent drop (natural log units) below the peak where the s -> 0 side is cut.
_LOWER_CUT = 80.0


@dataclass(frozen=True)
class ImpowParams:
    u: float
    r: float = 1.0
    n: int = 1

    def __post_init__(self):
        if self.u == 0:
            raise InvalidInputError("u must be nonzero")
        if not self.r > 0:
            raise InvalidInputError("r must be positive")
        if self.n != 1:
            raise InvalidInputError("only n = 1 is supported")


@dataclass(frozen=True)
class KernelValue:
    value: complex
    error: float
    route: str  # "quadrature" | "closed-form" | "spectral-action"

    def __abs__(self):
        return abs(self.value)

    def conjugate(self) -> "KernelValue":
        return KernelValue(self.value.conjugate(), self.error, self.route)


@dataclass(frozen=True)
class IntegrandFrame:
    """Pointwise values of the integrand factors at one ``s``."""

    s: float
    g_u: complex
    f_a: float
    q_s: float


@dataclass
class LemmaComponents:
    I: complex
    J: complex
    H: complex
    H1: complex
    H2: complex
    H3: complex
    errors: dict


def normalization(u: float, convention: str | None = None) -> complex:
    """Prefactor in front of the s-integral.

    ``"inverse_gamma_minus_iu"`` (``1/Gamma(-iu)``) yields the multiplier
    ``(j + r)^{iu}``; ``"inverse_gamma_iu"`` is the alternative prefactor
    ``1/Gamma(iu)``, which yields ``(j + r)^{-iu}``.
    """
    convention = convention or config.IMPOW_NORMALIZATION
    if convention == "inverse_gamma_minus_iu":
        return 1.0 / gamma_complex(-1j * u)
    if convention == "inverse_gamma_iu":
        return 1.0 / gamma_complex(1j * u)
    raise ValueError(f"unknown normalization convention {convention!r}")


# --- elementary factors -------------------------------------------------


def g_u_eval(u: float, s):
    """``g_u(s) = [log((1+s)/(1-s))]^{-iu-1}`` (principal branch)."""
    s = np.asarray(s, dtype=float)
    if not np.all((s > 0) & (s < 1)):
        raise ValueError("s must lie in (0, 1)")
    logt = np.log(np.log1p(s) - np.log1p(-s))
    out = np.exp((-1j * u - 1.0) * logt)
    return out if out.ndim else complex(out)


def f_a_eval(a: float, s):
    """``F_a(s) = -a (s - 1)^2 / (4 s)``."""
    s = np.asarray(s, dtype=float)
    out = -a * (s - 1.0) ** 2 / (4.0 * s)
    return out if out.ndim else float(out)


def q_s_eval(s, x, y):
    """``Q_s(x, y) = ((x-y)^2/s + s(x+y)^2)/4 - (x^2+y^2)/2``.

    With this sign ``exp(-Q_s)`` is the exponential factor of the
    substituted Mehler kernel.
    """
    s = np.asarray(s, dtype=float)
    return 0.25 * ((x - y) ** 2 / s + s * (x + y) ** 2) - 0.5 * (x * x + y * y)


def integrand_frame(u: float, a: float, sigma: float, s: float, x: float = None, y: float = None) -> IntegrandFrame:
    q = float(q_s_eval(s, x, y)) if x is not None else float("nan")
    return IntegrandFrame(s, g_u_eval(u, s), f_a_eval(a, s / sigma), q)


# --- the core s-integral ----------------------------------------------------


def _softplus(w):
    return np.logaddexp(0.0, w)


def _lower_w(p, q):
    """Logit of the s below which the Gaussian factor is below e^-_LOWER_CUT."""
    c = math.sqrt(4.0 * _LOWER_CUT)
    sp, sq = math.sqrt(p), math.sqrt(q)
    t = 2.0 * sp / (c + math.sqrt(c * c + 4.0 * sp * sq))
    s = t * t
    return math.log(s) - math.log1p(-s) if s < 1 else 0.0


def _tail_bound(r: float, w_hi: float, p=0.0, q=0.0, shift=0.0):
    """Upper bound for the integrand mass beyond ``w_hi`` (s near 1).

    Uses |g_u| <= 1/log((1+s)/(1-s)), ((1-s)/(1+s))^{r-1}/(1+s) <=
    max(1, 2^{1-r}) (1-s)^{r-1}, s^{-1/2} <= s_hi^{-1/2} and
    -p/(4s) - qs/4 <= -p/4 - q s_hi/4 on [s_hi, 1).
    """
    log_s = -float(_softplus(-w_hi))
    log_oms = -float(_softplus(w_hi))
    s = math.exp(log_s)
    logt = math.log1p(s) - log_oms
    expo = np.asarray(shift) - 0.25 * np.asarray(p) - 0.25 * s * np.asarray(q)
    return (max(1.0, 2.0 ** (1.0 - r)) * math.exp(r * log_oms - 0.5 * log_s)
            / (r * logt) * np.exp(expo))


def _upper_w(r, p, q, shift, scale):
    """Smallest w (on a coarse ladder) with tail bound below 1e-3 * scale."""
    w = 30.0 / r
    while w < 700.0:
        if np.all(_tail_bound(r, w, p, q, shift) <= 1e-3 * scale):
            break
        w += 10.0 / r
    return min(w, 700.0)


def _log_integrand(r, p, q, shift, w):
    """Log-modulus of the w-integrand and ``log log((1+s)/(1-s))`` (broadcasting)."""
    log_s = -_softplus(-w)
    log_1ms = -_softplus(w)
    s = np.exp(log_s)
    log1p_s = np.log1p(s)
    logt = log1p_s - log_1ms
    inv_s = 1.0 + np.exp(np.minimum(-w, 700.0))
    loglogt = np.log(logt)
    expo = (
        -p * 0.25 * inv_s
        - q * 0.25 * s
        + shift
        + (r - 1.0) * (log_1ms - log1p_s)
        - log1p_s
        + 0.5 * log_s
        + log_1ms
        - loglogt
    )
    return expo, loglogt


def _core_integrand(u, r, p, q, shift):
    """Integrand in ``w`` for a batch of ``(p, q, shift)``.

    ``p = (x-y)^2``, ``q = (x+y)^2``; the exponential factor is
    ``exp(-p/(4s) - q s/4 + shift)``.
    """
    p = np.asarray(p, dtype=float)[:, None]
    q = np.asarray(q, dtype=float)[:, None]
    shift = np.asarray(shift, dtype=float)[:, None]

    def f(w):
        expo, loglogt = _log_integrand(r, p, q, shift, w[None, :])
        return np.exp(expo - 1j * u * loglogt)

    return f


def _magnitude_hint(r, p, q, shift):
    """Rough size of each integral: the integrand modulus at its peak in w."""
    s_star = np.clip(np.sqrt(p / np.maximum(q, 1e-300)), 1e-300, 1 - 1e-3)
    w_star = np.log(s_star) - np.log1p(-s_star)
    expo, _ = _log_integrand(r, p, q, shift, w_star)
    return np.exp(expo)


def core_integral(u: float, r: float, p, q, shift, *, atol: float | None = None,
                  rtol: float = 0.0, max_evals: int | None = None, s_range=(0.0, 1.0)):
    """Batch of s-integrals over ``s_range`` in the logit variable.

    Returns ``(values, errors, QuadResult)``; errors include the analytic
    bound for the truncated neighbourhood of ``s = 1``.
    """
    atol = config.QUAD_ATOL if atol is None else atol
    max_evals = config.QUAD_MAX_EVALS if max_evals is None else max_evals
    p = np.atleast_1d(np.asarray(p, dtype=float))
    q = np.atleast_1d(np.asarray(q, dtype=float))
    shift = np.broadcast_to(np.asarray(shift, dtype=float), p.shape)
    if np.any(p <= 0):
        raise ValueError("kernel integral needs x != y (p > 0)")
    s_lo, s_hi = s_range
    w_lo = min(_lower_w(pi, qi) for pi, qi in zip(p, q))
    scale = np.maximum(atol, rtol * _magnitude_hint(r, p, q, shift))
    w_hi = _upper_w(r, p, q, shift, scale)
    tail = _tail_bound(r, w_hi, p, q, shift)
    if s_lo > 0:
        w_lo = max(w_lo, math.log(s_lo) - math.log1p(-s_lo))
    if s_hi < 1:
        w_hi = math.log(s_hi) - math.log1p(-s_hi)
        tail = np.zeros(p.shape)
    if w_lo >= w_hi:
        return np.zeros(p.shape, dtype=complex), np.zeros(p.shape), None
    f = _core_integrand(u, r, p, q, np.asarray(shift))
    # panels of width ~1 in w (one oscillation of g_u is 2*pi/|u| wide)
    n0 = int(min(max(8, math.ceil(w_hi - w_lo)), 2000))
    res = integrate_adaptive(f, w_lo, w_hi, atol=atol, rtol=rtol, max_evals=max_evals,
                             initial_panels=n0)
    errors = res.error + tail
    if not res.converged:
        raise ConvergenceError("s-integral did not converge within the node budget", res)
    return res.value, errors, res


# --- I(a, sigma) and the Lemma diagnostics ---------------------------------


def _pq_from_a_sigma(a, sigma):
    a = np.asarray(a, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    return a * sigma, a / sigma


def i_integral(u: float, a, sigma, *, atol: float | None = None, rtol: float = 0.0,
               s_range=(0.0, 1.0), max_evals: int | None = None):
    """``I(a, sigma) = int_0^1 g_u(s) e^{F_a(s/sigma)} / (1+s) ds / sqrt(s)``.

    Accepts scalars or equal-shape arrays.  Signed arguments with
    ``a * sigma > 0`` are allowed (used by the closed-form kernel); the
    public precondition ``a >= a_min``, ``0 < sigma < 1`` is enforced only
    for positive ``a``.  Returns ``(value, error)``.
    """
    a_arr = np.atleast_1d(np.asarray(a, dtype=float))
    s_arr = np.atleast_1d(np.asarray(sigma, dtype=float))
    a_arr, s_arr = np.broadcast_arrays(a_arr, s_arr)
    if np.any(a_arr * s_arr <= 0):
        raise ValueError("need a * sigma > 0")
    pos = a_arr > 0
    if np.any(pos & ((a_arr < config.A_MIN) | (s_arr <= 0) | (s_arr >= 1))):
        raise ValueError("need a >= a_min and 0 < sigma < 1")
    p, q = _pq_from_a_sigma(a_arr, s_arr)
    # F_a(s/sigma) = a/2 - p/(4s) - q s/4
    return _i_integral_unchecked(u, a_arr, s_arr, scalar=np.ndim(a) == 0 and np.ndim(sigma) == 0,
                                 atol=atol, rtol=rtol, s_range=s_range, max_evals=max_evals)


def _i_integral_unchecked(u, a, sigma, *, scalar=False, atol=None, rtol=0.0,
                          s_range=(0.0, 1.0), max_evals=None):
    p, q = _pq_from_a_sigma(a, sigma)
    # F_a(s/sigma) = a/2 - p/(4s) - q s/4
    vals, errs, _ = core_integral(u, 1.0, p, q, 0.5 * np.asarray(a, dtype=float), atol=atol,
                                  rtol=rtol, s_range=s_range, max_evals=max_evals)
    if scalar:
        return complex(vals[0]), float(errs[0])
    return vals, errs


def _i_piece(u, a, sigma, lo, hi, atol, subtract_g_sigma=False, drop_g=False):
    """Integral of the I-integrand over ``s in (lo, hi)`` with variants for J, H3."""
    p, q = a * sigma, a / sigma
    if not subtract_g_sigma and not drop_g:
        v, e, _ = core_integral(u, 1.0, [p], [q], [0.5 * a], atol=atol, s_range=(lo, hi))
        return complex(v[0]), float(e[0])
    g_sigma = g_u_eval(u, sigma)

    def f(s):
        base = np.exp(0.5 * a - p / (4 * s) - q * s / 4) / ((1 + s) * np.sqrt(s))
        if drop_g:
            return base + 0j
        return (g_u_eval(u, s) - g_sigma) * base

    res = integrate_adaptive(f, lo, hi, atol=atol, max_evals=config.QUAD_MAX_EVALS,
                             initial_panels=16, breakpoints=[sigma])
    if not res.converged:
        raise ConvergenceError("lemma component did not converge", res)
    return complex(res.value), float(res.error)


def lemma_components(u: float, a: float, sigma: float, *, atol: float | None = None) -> LemmaComponents:
    """``I``, ``J`` and the split ``H = H1 + H2 + H3`` used in the lower bound for ``|I|``.

    J  = g_u(sigma) int_{sigma/2}^{2/3} e^{F_a(s/sigma)}/(1+s) ds/sqrt(s)
    H1 = int_0^{sigma/2},  H2 = int_{2/3}^1  of the full integrand
    H3 = int_{sigma/2}^{2/3} (g_u(s) - g_u(sigma)) e^{F_a(s/sigma)}/(1+s) ds/sqrt(s)
    """
    if not (0 < sigma <= 0.5):
        raise ValueError("sigma must lie in (0, 1/2]")
    if a < 1:
        raise ValueError("a must be >= 1")
    atol = config.QUAD_ATOL if atol is None else atol
    I, eI = i_integral(u, a, sigma, atol=atol)
    lo, hi = sigma / 2, 2.0 / 3.0
    base, e_base = _i_piece(u, a, sigma, lo, hi, atol, drop_g=True)
    g_sigma = g_u_eval(u, sigma)
    J = g_sigma * base
    eJ = abs(g_sigma) * e_base
    H1, e1 = _i_piece(u, a, sigma, 0.0, lo, atol)
    H2, e2 = _i_piece(u, a, sigma, hi, 1.0, atol)
    H3, e3 = _i_piece(u, a, sigma, lo, hi, atol, subtract_g_sigma=True)
    H = I - J
    errors = {"I": eI, "J": eJ, "H1": e1, "H2": e2, "H3": e3, "H": eI + eJ}
    return LemmaComponents(I, J, H, H1, H2, H3, errors)


# --- kernel routes ---------------------------------------------------------


def _check_xy(x, y):
    if x == y:
        raise ValueError("kernel is evaluated off the diagonal only (x != y)")


def kernel_batch(p: ImpowParams, x, y, *, atol: float | None = None, rtol: float = 1e-10,
                 normalized: bool = True, scaled: bool = False):
    """Kernel values for arrays ``x``, ``y`` (same shape), by the logit-variable integrator.

    With ``scaled=True`` the factor ``exp(min(x^2, y^2))`` is left out, which
    keeps values finite far from the origin; ``k dgamma(x)`` then equals
    ``scaled * exp(min(x^2,y^2) - x^2) / sqrt(pi)``.  Returns ``(values, errors)``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    x, y = np.broadcast_arrays(x, y)
    pp = (x - y) ** 2
    qq = (x + y) ** 2
    if np.any(pp == 0):
        raise ValueError("kernel is evaluated off the diagonal only (x != y)")
    # exp(-Q_s) = exp(min(x^2,y^2)) * exp(-p/(4s) - q s/4 + |x^2-y^2|/2)
    shift = 0.5 * np.abs(x * x - y * y)
    atol = 1e-300 if atol is None else atol
    vals, errs, _ = core_integral(p.u, p.r, pp.ravel(), qq.ravel(), shift.ravel(),
                                  atol=atol, rtol=rtol)
    vals = vals.reshape(x.shape)
    errs = errs.reshape(x.shape)
    if not scaled:
        m = np.exp(np.minimum(x * x, y * y))
        vals, errs = vals * m, errs * m
    if normalized:
        c = normalization(p.u)
        vals, errs = vals * c, errs * abs(c)
    return vals, errs


def kernel_quadrature(p: ImpowParams, x: float, y: float, *, epsrel: float = 1e-11) -> KernelValue:
    """``k(x, y)`` from the s-integral with the ``Q_s`` exponent, via QUADPACK.

    This route is deliberately independent of :func:`kernel_batch` (different
    integrator, no rescaling by the peak): real and imaginary parts are
    integrated separately on ``s`` in ``(0, s_c)`` and, through ``s = 1 - e^{-z}``,
    on the remaining piece.
    """
    _check_xy(x, y)
    u, r = p.u, p.r

    def integrand(s, oms=None):
        oms = 1.0 - s if oms is None else oms
        if oms <= 0.0:
            return 0j
        logt = math.log1p(s) - math.log(oms)
        phase = u * math.log(logt)
        g = complex(math.cos(phase), -math.sin(phase)) / logt
        w = (oms / (1 + s)) ** (r - 1) / (1 + s) / math.sqrt(s)
        return g * w * math.exp(-float(q_s_eval(s, x, y)))

    def near_one(z):
        oms = math.exp(-z)
        return integrand(1.0 - oms, oms) * oms

    s_peak = abs(x - y) / max(abs(x + y), 1e-300)
    s_c = min(max(s_peak, 0.05), 0.5)
    pts = [v for v in (s_peak / 4, s_peak, 4 * s_peak) if 0 < v < s_c]
    re1, er1 = sp_integrate.quad(lambda s: integrand(s).real, 0.0, s_c, epsabs=0.0,
                                 epsrel=epsrel, limit=500, points=pts or None)
    im1, ei1 = sp_integrate.quad(lambda s: integrand(s).imag, 0.0, s_c, epsabs=0.0,
                                 epsrel=epsrel, limit=500, points=pts or None)
    z_c = -math.log1p(-s_c)
    re2, er2 = sp_integrate.quad(lambda z: near_one(z).real, z_c, np.inf, epsabs=0.0,
                                 epsrel=epsrel, limit=500)
    im2, ei2 = sp_integrate.quad(lambda z: near_one(z).imag, z_c, np.inf, epsabs=0.0,
                                 epsrel=epsrel, limit=500)
    c = normalization(u)
    value = c * complex(re1 + re2, im1 + im2)
    error = abs(c) * (er1 + er2 + ei1 + ei2)
    return KernelValue(value, error, "quadrature")


def kernel_closed_form_1d(p: ImpowParams, x: float, y: float, *, atol: float | None = None,
                          normalized: bool = False) -> KernelValue:
    """``e^{y^2} I(x^2 - y^2, (x - y)/(x + y))`` with signed arguments (r = 1).

    Without ``normalized`` this is the bare s-integral expression; the
    operator kernel is ``normalization(u)`` times it.
    """
    if p.r != 1:
        raise ValueError("closed form is available for r = 1 only")
    if x == y or x == -y:
        raise ValueError("closed form needs x != +-y")
    a = x * x - y * y
    sigma = (x - y) / (x + y)
    atol = config.QUAD_ATOL if atol is None else atol
    I, err = _i_integral_unchecked(p.u, np.array([a]), np.array([sigma]), scalar=True,
                                   atol=atol, rtol=1e-12)
    scale = math.exp(y * y)
    value = I * scale
    error = err * scale
    if normalized:
        c = normalization(p.u)
        value, error = value * c, error * abs(c)
    return KernelValue(value, error, "closed-form")


# --- spectral-action check of the normalization ---------------------------

SPECTRAL_CHECK_RTOL = 1e-4


def _bump(center: float, width: float):
    def f(x):
        t = (np.asarray(x, dtype=float) - center) / width
        out = np.zeros_like(t)
        m = np.abs(t) < 1
        out[m] = np.exp(-1.0 / (1.0 - t[m] ** 2))
        return out
    return f


def _bump_rule(center: float, width: float, n: int):
    xg, wg = np.polynomial.legendre.leggauss(n)
    x = center + width * xg
    w = width * wg * np.exp(-x * x) / math.sqrt(math.pi) * _bump(center, width)(x)
    return x, w


@dataclass(frozen=True)
class SpectralActionCheck:
    kernel_side: complex
    spectral_side: dict  # convention -> sum_j m(j) f_j g_j
    relative_diff: dict
    convention: str | None


def spectral_action_check(p: ImpowParams, *, degree: int = 2000, kernel_nodes: int = 40,
                          coeff_nodes: int = 600) -> SpectralActionCheck:
    """Pair the kernel with two bumps of disjoint support and compare with the spectral side.

    With ``f`` supported in ``[-1.5, -0.5]`` and ``g`` in ``[0.5, 1.5]``,
    ``<T f, g> = int int k(x, y) f(y) g(x) dgamma(y) dgamma(x)`` involves the
    kernel off the diagonal only, and equals ``sum_j (j + r)^{iu} f_j g_j``
    in Hermite coefficients.  The bare s-integral is used on the kernel side,
    so the ratio of the two sides is the normalization constant; each
    convention of :func:`normalization` is scored by its relative
    discrepancy.  ``convention`` is the one within ``SPECTRAL_CHECK_RTOL``.
    """
    from .ou_spectral import normalized_hermite_table

    xf, wf = _bump_rule(-1.0, 0.5, coeff_nodes)
    xg, wg = _bump_rule(1.0, 0.5, coeff_nodes)
    fc = normalized_hermite_table(degree, xf) @ wf
    gc = normalized_hermite_table(degree, xg) @ wg
    j = np.arange(degree + 1)
    spectral = {"inverse_gamma_minus_iu": complex(np.sum((j + p.r) ** (1j * p.u) * fc * gc)),
                "inverse_gamma_iu": complex(np.sum((j + p.r) ** (-1j * p.u) * fc * gc))}
    yk, vy = _bump_rule(-1.0, 0.5, kernel_nodes)
    xk, vx = _bump_rule(1.0, 0.5, kernel_nodes)
    X, Y = np.meshgrid(xk, yk, indexing="ij")
    bare, _ = kernel_batch(p, X, Y, rtol=1e-12, normalized=False)
    bare_pairing = complex(np.sum(bare * vx[:, None] * vy[None, :]))
    kernel_side = normalization(p.u) * bare_pairing
    rel = {}
    for conv, val in spectral.items():
        rel[conv] = abs(normalization(p.u, conv) * bare_pairing - val) / abs(val)
    best = min(rel, key=rel.get)
    return SpectralActionCheck(kernel_side, spectral, rel,
                               best if rel[best] <= SPECTRAL_CHECK_RTOL else None)
