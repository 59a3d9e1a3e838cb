import math

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from scipy import integrate, stats

from gausshardy.errors import InvalidInputError, PreconditionError
from gausshardy.gauss_geometry import (
    GaussBall,
    ShellSpec,
    admissible_radius,
    boundary_shell_ratio,
    doubling_ratio,
    doubling_ratio_scan,
    gauss_measure,
    interval_measure,
    is_admissible,
    log_gauss_measure,
    log_interval_measure,
    maximal_ball,
    rho_prime_distance_1d,
    shell_set,
)

# frozen oracle values
DOUBLING_MAX_C_LE_10 = 7.373
SHELL_RATIO_4_45_K005 = 2.00672
SHELL_FAMILY_FLOOR = 1.8
RHO_ENDPOINT_BAND = (1.0, 1.811)


def _density_integral(a, b):
    with mpmath.workdps(30):
        return float(mpmath.quad(lambda x: mpmath.exp(-x * x) / mpmath.sqrt(mpmath.pi), [a, b]))


def test_total_and_half_line():
    assert gauss_measure((-math.inf, math.inf)) == pytest.approx(1.0, abs=1e-15)
    assert gauss_measure((0.0, math.inf)) == pytest.approx(0.5, abs=1e-15)


@pytest.mark.parametrize("a,b", [(-1.0, 0.5), (0.2, 3.0), (-4.0, -2.5), (2.0, 2.01)])
def test_interval_measure_matches_quadrature(a, b):
    assert math.isclose(interval_measure(a, b), _density_integral(a, b), rel_tol=1e-12)


def test_log_measure_far_interval():
    with mpmath.workdps(50):
        ref = float(mpmath.log((mpmath.erfc(30) - mpmath.erfc(mpmath.mpf("30.1"))) / 2))
    assert math.isclose(log_interval_measure(30.0, 30.1), ref, rel_tol=1e-13)
    assert math.isclose(log_interval_measure(-30.1, -30.0), ref, rel_tol=1e-13)


def test_disjoint_union_and_overlap():
    pieces = [(-2.0, -1.0), (0.0, 0.5), (0.5, 1.0)]
    assert math.isclose(gauss_measure(pieces), interval_measure(-2, -1) + interval_measure(0, 1),
                        rel_tol=1e-14)
    with pytest.raises(InvalidInputError):
        gauss_measure([(0.0, 1.0), (0.5, 2.0)])


@pytest.mark.parametrize("r", [0.3, 1.0])
def test_ball_measure_2d_and_3d_at_origin(r):
    # |X|^2 with X ~ N(0, I/2) is chi-square / 2
    assert math.isclose(gauss_measure(GaussBall((0.0, 0.0), r)), 1 - math.exp(-r * r), rel_tol=1e-9)
    assert math.isclose(gauss_measure(GaussBall((0.0, 0.0, 0.0), r)),
                        stats.chi2.cdf(2 * r * r, 3), rel_tol=1e-9)


def test_ball_measure_2d_off_center():
    c, r = (1.0, 0.5), 0.8
    val, _ = integrate.dblquad(
        lambda y, x: math.exp(-x * x - y * y) / math.pi,
        c[0] - r, c[0] + r,
        lambda x: c[1] - math.sqrt(max(r * r - (x - c[0]) ** 2, 0.0)),
        lambda x: c[1] + math.sqrt(max(r * r - (x - c[0]) ** 2, 0.0)),
        epsabs=1e-13, epsrel=1e-12)
    assert math.isclose(gauss_measure(GaussBall(c, r)), val, rel_tol=1e-8)


def test_admissibility():
    assert admissible_radius(0.3) == 1.0
    assert admissible_radius(4.0) == 0.25
    assert admissible_radius((3.0, 4.0)) == 0.2
    assert maximal_ball(4.0).maximal
    assert not GaussBall(4.0, 0.26).admissible
    with pytest.raises(InvalidInputError):
        GaussBall(0.0, -1.0)


def test_doubling_small_radius_limit():
    assert doubling_ratio(GaussBall(0.7, 1e-6)) == pytest.approx(2.0, abs=1e-6)


def test_doubling_far_limit():
    # maximal balls far out: the ratio tends to sinh(4)/sinh(2)
    assert doubling_ratio(maximal_ball(1e4)) == pytest.approx(math.sinh(4) / math.sinh(2), rel=1e-3)


def test_doubling_scan_plateau():
    scan = doubling_ratio_scan(np.linspace(0, 10, 401))
    assert scan.max_ratio == pytest.approx(DOUBLING_MAX_C_LE_10, abs=1e-3)
    far = doubling_ratio_scan(np.linspace(10, 50, 161))
    assert far.max_ratio < math.sinh(4) / math.sinh(2)


def test_doubling_scan_rejects_non_admissible():
    with pytest.raises(InvalidInputError):
        doubling_ratio_scan([4.0], radii=[0.5])


def _shell_brute(base, kappa, n=400_001):
    a, b = base
    x = np.linspace(a, b, n)
    inside = np.minimum(x - a, b - x) <= kappa / np.abs(x)
    w = np.exp(-x * x)
    return integrate.trapezoid(w * inside, x) / (kappa * integrate.trapezoid(w, x))


def test_shell_ratio_oracle():
    r = boundary_shell_ratio(ShellSpec(((4.0, 4.5),), 0.05))
    assert r == pytest.approx(SHELL_RATIO_4_45_K005, abs=1e-5)
    assert r == pytest.approx(_shell_brute((4.0, 4.5), 0.05), rel=1e-4)


def test_shell_saturates_to_inverse_kappa():
    assert boundary_shell_ratio(ShellSpec(((4.0, 4.01),), 0.05)) == pytest.approx(20.0, rel=1e-12)


def test_shell_set_formula():
    pieces = shell_set(ShellSpec(((4.0, 4.5),), 0.05))
    assert pieces[0] == (4.0, pytest.approx(0.5 * (4 + math.sqrt(16.2))))
    assert pieces[1] == (pytest.approx(0.5 * (4.5 + math.sqrt(20.05))), 4.5)


def test_shell_preconditions():
    with pytest.raises(PreconditionError):
        boundary_shell_ratio(ShellSpec(((1.0, 3.0),), 0.05))
    with pytest.raises(PreconditionError):
        boundary_shell_ratio(ShellSpec(((3.0, math.inf),), 0.05))
    with pytest.raises(InvalidInputError):
        ShellSpec(((3.0, 4.0),), 0.2)


def test_shell_family_floor():
    from gausshardy.experiments import shell_family
    ratios = [boundary_shell_ratio(s) for s in shell_family()]
    assert min(ratios) >= SHELL_FAMILY_FLOOR


def test_rho_prime_closed_form():
    with mpmath.workdps(30):
        ref = float(mpmath.quad(lambda t: mpmath.sqrt(1 + t * t), [0, 1]))
    assert rho_prime_distance_1d(0.0, 1.0) == pytest.approx(ref, rel=1e-14)


# --- properties -------------------------------------------------------------

centers = st.floats(-60, 60, allow_nan=False)


@given(centers, st.floats(1e-9, 1e-3))
def test_maximal_ball_is_admissible_and_tight(c, eps):
    b = maximal_ball(c)
    assert is_admissible(b)
    assert not is_admissible(GaussBall(c, b.radius * (1 + eps)))


@given(st.floats(-6, 6), st.floats(0.0, 3), st.floats(0.0, 3))
def test_measure_additive_and_monotone(a, l1, l2):
    b, c = a + l1, a + l1 + l2
    whole = interval_measure(a, c)
    assert math.isclose(whole, interval_measure(a, b) + interval_measure(b, c),
                        rel_tol=1e-12, abs_tol=1e-300)
    assert interval_measure(a, b) <= whole * (1 + 1e-15)


@given(centers, st.floats(0.01, 1.0))
def test_doubling_bounded_on_admissible_balls(c, frac):
    ratio = doubling_ratio(GaussBall(c, frac * admissible_radius(c)))
    assert 1.0 < ratio <= math.sinh(4) / math.sinh(2) + 1e-9


@given(st.floats(1, 50), st.booleans())
def test_rho_prime_endpoints_band(y, neg):
    y = -y if neg else y
    a, b = maximal_ball(y).interval
    m, M = RHO_ENDPOINT_BAND
    for e in (a, b):
        assert m - 1e-9 <= rho_prime_distance_1d(y, e) <= M


@given(st.floats(2, 20), st.floats(0.01, 5), st.floats(1e-3, 0.1), st.booleans())
def test_shell_ratio_positive_floor(a, length, kappa, mirror):
    base = (a, a + length)
    if mirror:
        base = (-base[1], -base[0])
    assume(length > 0)
    assert boundary_shell_ratio(ShellSpec((base,), kappa)) >= 1.75


@given(st.floats(-5, 5), st.floats(0.05, 1))
def test_log_measure_consistent(c, r):
    b = GaussBall(c, r)
    assert math.isclose(math.exp(log_gauss_measure(b)), gauss_measure(b), rel_tol=1e-12)
