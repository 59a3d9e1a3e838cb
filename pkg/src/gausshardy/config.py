"""Fixed numerical settings shared across the toolkit."""

import os

# Gauss geometry
B0_RADIUS = 2.0          # shells are examined on sets outside (-B0, B0)
KAPPA_MAX = 0.1
BALL_QUAD_TOL = 1e-10    # n >= 2 ball measures

# Imaginary-power kernel
QUAD_ATOL = 1e-10
QUAD_MAX_EVALS = 200_000
A_MIN = 1e-6
# Prefactor of the s-integral; fixed by comparing the kernel with the
# spectral action of (j + r)^{iu} on a test function.
IMPOW_NORMALIZATION = "inverse_gamma_minus_iu"

# Mehler series
MEHLER_SERIES_CAP = 4000

# Tail truncation for x-integrals over complements of balls
TAIL_EXTRA = 10.0
TAIL_STEP = 5.0
TAIL_INCREMENT_RTOL = 5e-3

# Tree kernels
TREE_JMAX = 64

THREADS_ENV = "GAUSSHARDY_THREADS"


def thread_count(default: int = 1) -> int:
    value = os.environ.get(THREADS_ENV)
    if not value:
        return default
    n = int(value)
    if n < 1:
        raise ValueError(f"{THREADS_ENV} must be a positive integer")
    return n
