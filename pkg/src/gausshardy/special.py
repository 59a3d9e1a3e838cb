"""Complex Gamma function (Lanczos series plus reflection)."""

from __future__ import annotations

import cmath
import math

# Lanczos coefficients for g = 671/128 (14 terms); relative accuracy near
# machine precision on Re z >= 1/2.
_LANCZOS_G = 5.2421875
_LANCZOS_C0 = 0.999999999999997092
_LANCZOS_COEF = (
    57.1562356658629235,
    -59.5979603554754912,
    14.1360979747417471,
    -0.491913816097620199,
    0.339946499848118887e-4,
    0.465236289270485756e-4,
    -0.983744753048795646e-4,
    0.158088703224912494e-3,
    -0.210264441724104883e-3,
    0.217439618115212643e-3,
    -0.164318106536763890e-3,
    0.844182239838527433e-4,
    -0.261908384015814087e-4,
    0.368991826595316234e-5,
)
_SQRT_2PI = 2.5066282746310005


def _loggamma_right(z: complex) -> complex:
    # valid for Re z >= 1/2
    tmp = z + _LANCZOS_G
    tmp = (z + 0.5) * cmath.log(tmp) - tmp
    ser = _LANCZOS_C0
    y = z
    for c in _LANCZOS_COEF:
        y = y + 1
        ser += c / y
    return tmp + cmath.log(_SQRT_2PI * ser / z)


def _is_pole(z: complex) -> bool:
    return z.imag == 0.0 and z.real <= 0.0 and z.real == math.floor(z.real)


def loggamma_complex(z) -> complex:
    """log Gamma(z) on some branch (only ``exp`` of it is meaningful here)."""
    z = complex(z)
    if _is_pole(z):
        raise ValueError(f"Gamma has a pole at {z}")
    if z.real >= 0.5:
        return _loggamma_right(z)
    # Gamma(z) Gamma(1 - z) = pi / sin(pi z)
    return cmath.log(math.pi / cmath.sin(math.pi * z)) - _loggamma_right(1 - z)


def gamma_complex(z) -> complex:
    """Gamma(z) for complex ``z`` away from the poles 0, -1, -2, ...

    Uses the Lanczos approximation on ``Re z >= 1/2`` and the reflection
    formula elsewhere.

    Raises
    ------
    ValueError
        If ``z`` is a nonpositive integer.
    """
    return cmath.exp(loggamma_complex(z))
