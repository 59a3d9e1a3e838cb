import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from gausshardy.data import load_spectral_test_functions
from gausshardy.ou_spectral import (
    Multiplier,
    QuadratureGrid,
    SpectralFunction,
    apply_multiplier,
    eigen_residual,
    hermite_eval,
    hermite_norm_sq,
    mehler_eval,
    mehler_eval_direct,
    mehler_series_eval,
    mehler_substituted_eval,
    project,
    s_from_t,
    semigroup_compose,
    stochasticity_residual,
    t_from_s,
)
from gausshardy.quadrature import ConvergenceError

AXIS = (-3.0, -1.5, 0.0, 1.5, 3.0)
TIMES = (0.2, 0.5, 1.0, 2.0)


def _mehler_mp(t, x, y):
    with mpmath.workdps(40):
        e = mpmath.exp(-t)
        d = 1 - e * e
        return float(mpmath.exp(-(e * e * (x * x + y * y) - 2 * e * x * y) / d) / mpmath.sqrt(d))


def test_hermite_values():
    x = np.array([-1.3, 0.0, 0.7, 2.0])
    assert np.allclose(hermite_eval(3, x), 8 * x ** 3 - 12 * x)
    assert np.allclose(hermite_eval(4, x), 16 * x ** 4 - 48 * x ** 2 + 12)
    assert hermite_norm_sq(5) == 2 ** 5 * math.factorial(5)


def test_hermite_orthogonality_under_gamma():
    g = QuadratureGrid.gauss_hermite(40)
    for i in range(8):
        for j in range(8):
            v = g.integrate(hermite_eval(i, g.nodes) * hermite_eval(j, g.nodes))
            ref = hermite_norm_sq(i) if i == j else 0.0
            assert abs(v - ref) <= 1e-9 * max(1.0, ref)


@pytest.mark.parametrize("j", range(13))
def test_eigen_residual(j):
    assert eigen_residual(j, np.linspace(-5, 5, 21)) <= 1e-8


@pytest.mark.parametrize("t", [0.1, 0.5, 2.0])
def test_mehler_closed_form_matches_mpmath(t):
    for x in AXIS:
        for y in AXIS:
            assert math.isclose(float(mehler_eval(t, x, y)), _mehler_mp(t, x, y), rel_tol=1e-12)
            assert math.isclose(float(mehler_eval_direct(t, x, y)), _mehler_mp(t, x, y),
                                rel_tol=1e-11)


def test_mehler_series_oracle_grid():
    worst = 0.0
    for t in TIMES:
        for x in AXIS:
            for y in AXIS:
                s = mehler_series_eval(t, x, y)
                closed = float(mehler_eval(t, x, y))
                assert abs(s.value - closed) <= s.tail_bound + 1e-13 * abs(closed)
                worst = max(worst, abs(s.value - closed) / closed)
    assert worst <= 1e-8


def test_mehler_series_fixed_truncation_reports_tail():
    s = mehler_series_eval(1.0, 1.0, 0.5, J=5)
    assert not s.converged and s.terms == 6
    assert abs(s.value - float(mehler_eval(1.0, 1.0, 0.5))) <= s.tail_bound


def test_mehler_series_unreachable_tolerance():
    with pytest.raises(ConvergenceError):
        mehler_series_eval(1e-4, 3.0, 3.0, tol=1e-15)


def test_substitution_roundtrip():
    for t in (0.05, 0.7, 3.0):
        assert t_from_s(s_from_t(t)) == pytest.approx(t, rel=1e-13)
        s = s_from_t(t)
        assert float(mehler_substituted_eval(s, 0.4, -1.2)) == pytest.approx(
            float(mehler_eval(t, 0.4, -1.2)), rel=1e-12)


def test_semigroup_and_stochasticity():
    grid = QuadratureGrid.gauss_hermite(120)
    for t in TIMES:
        for x in AXIS:
            assert stochasticity_residual(t, x, grid) <= 1e-8
            for y in AXIS:
                direct = float(mehler_eval(t, x, y))
                comp = semigroup_compose(t / 2, t / 2, grid, x, y)
                assert abs(comp - direct) <= 1e-6 * max(1.0, direct)


@pytest.mark.parametrize("t", [0.2, 1.0, 5.0])
def test_stochasticity_invariant(t):
    grid = QuadratureGrid.gauss_hermite(120)
    for x in np.linspace(-3, 3, 13):
        assert stochasticity_residual(t, x, grid) <= 1e-8


def test_shipped_functions_isometry():
    funcs = load_spectral_test_functions()
    assert len(funcs) == 4
    for f in funcs.values():
        assert f.degree == 20
        Tf = apply_multiplier(Multiplier.shifted_imaginary_power(1.0, 1.0), f)
        assert abs(Tf.norm() - f.norm()) <= 1e-12
        Mf = apply_multiplier(Multiplier.imaginary_power(1.0), f)
        assert abs(Mf.norm() - (f - project(f, 0)).norm()) <= 1e-12


def test_heat_multiplier_matches_kernel():
    # e^{-tL} h_3 = e^{-3t} h_3, also via the kernel and quadrature
    t = 0.7
    f = SpectralFunction(np.eye(4)[3])
    g = apply_multiplier(Multiplier.heat(t), f)
    grid = QuadratureGrid.gauss_hermite(80)
    x = 0.9
    via_kernel = grid.integrate(mehler_eval(t, x, grid.nodes) * f(grid.nodes))
    assert via_kernel == pytest.approx(g(x), rel=1e-10)


def test_from_callable_recovers_polynomial():
    f = SpectralFunction.from_callable(lambda x: x ** 3, 5)
    x = np.linspace(-2, 2, 7)
    assert np.allclose(f(x), x ** 3, atol=1e-12)


# --- properties -------------------------------------------------------------

real = st.floats(-3, 3, allow_nan=False)


@given(st.floats(0.2, 4.0), real, real)
def test_mehler_symmetric_positive(t, x, y):
    a = float(mehler_eval(t, x, y))
    assert a > 0
    assert a == pytest.approx(float(mehler_eval(t, y, x)), rel=1e-13)


@given(st.lists(st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False),
                min_size=1, max_size=30),
       st.floats(-20, 20), st.floats(0.1, 5))
def test_unimodular_multiplier_preserves_norm(coeffs, u, r):
    f = SpectralFunction(np.array(coeffs, dtype=complex))
    Tf = apply_multiplier(Multiplier.shifted_imaginary_power(u, r), f)
    assert abs(Tf.norm() - f.norm()) <= 1e-12 * max(1.0, f.norm())


def test_series_is_thread_safe():
    # working precision must not leak between concurrent evaluations
    from concurrent.futures import ThreadPoolExecutor

    cases = [(t, x, -x) for t in (0.2, 0.5, 1.0) for x in (-3.0, -1.5, 1.5, 3.0)] * 3
    serial = [mehler_series_eval(*c).value for c in cases]
    with ThreadPoolExecutor(max_workers=8) as pool:
        parallel = list(pool.map(lambda c: mehler_series_eval(*c).value, cases))
    assert parallel == serial
