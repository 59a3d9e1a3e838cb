import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from gausshardy.errors import PreconditionError
from gausshardy.gauss_geometry import GaussBall, maximal_ball
from gausshardy.hardy_atoms import Atom
from gausshardy.impow_kernel import ImpowParams, kernel_batch
from gausshardy.singular_estimators import (
    atom_image_norm,
    complement_integral,
    constant_handle,
    divergence_scan,
    growth_verdict,
    hilbert_gauss_handle,
    hormander_ball_value,
    hormander_estimate,
    i_infinity_estimate,
    image_verdict,
    impow_handle,
    kernel_l1_consistency,
    mehler_handle,
    plain_cauchy_handle,
    tay_identity_residual,
)

# frozen divergence scan (u = 1, r = 1): y -> (Phi, window integral)
DIVERGENCE = {4.0: (2.70799, 1.0229), 6.0: (4.12983, 1.7429), 8.0: (5.18770, 2.2740),
              12.0: (6.71122, 3.0366), 16.0: (7.80385, 3.5829)}


def _mehler_phi(t, y):
    """Mass of N(e^{-t} y, (1 - e^{-2t})/2) outside 2B_y."""
    b = maximal_ball(y)
    m, sd = math.exp(-t) * y, math.sqrt(-math.expm1(-2 * t) / 2)
    lo, hi = y - 2 * b.radius, y + 2 * b.radius
    return stats.norm.sf((hi - m) / sd) + stats.norm.cdf((lo - m) / sd)


def test_mehler_handle_is_transition_density():
    k = mehler_handle(0.7)
    val, _ = integrate.quad(lambda x: k.weighted(np.array([x]), 1.3)[0][0], -np.inf, np.inf,
                            epsabs=1e-13)
    assert val == pytest.approx(1.0, abs=1e-12)


def test_impow_handle_weighting():
    p = ImpowParams(1.0)
    k = impow_handle(p)
    x, y = np.array([0.3, 2.0]), np.array([1.1, -0.4])
    w, _ = k.weighted(x, y)
    kv, _ = kernel_batch(p, x, y)
    assert np.allclose(w, kv * np.exp(-x * x) / math.sqrt(math.pi), rtol=1e-8)


def test_hilbert_handle_evaluate():
    v, _ = hilbert_gauss_handle().evaluate(np.array([1.0]), np.array([0.5]))
    assert v[0] == pytest.approx(math.sqrt(math.pi) * math.exp(0.25) / 0.5, rel=1e-13)


@given(st.floats(2.0, 16.0), st.floats(0.3, 2.0))
@settings(max_examples=15)
def test_mehler_phi_matches_closed_form(y, t):
    rep = i_infinity_estimate(mehler_handle(t), [y])
    assert rep.values[0] == pytest.approx(_mehler_phi(t, y), rel=1e-6, abs=1e-12)


def test_tail_extension_stable_under_wider_window():
    k = impow_handle(ImpowParams(1.0))
    ball = maximal_ball(6.0)

    def f(x):
        return np.abs(k.weighted(x, 6.0)[0])[None, :]

    base = complement_integral(f, ball, [6.0])
    wider = complement_integral(f, ball, [6.0], window=(-base.x_max - 5, base.x_max + 5))
    assert abs(wider.values[0] - base.values[0]) <= 0.01 * base.values[0]


def test_growth_verdict_cases():
    assert growth_verdict([4, 8, 16], [1.0, 1.01, 1.02])[0] == "plateau"
    assert growth_verdict([4, 8, 16], [1.0, 2.0, 3.0])[0] == "growing"
    assert growth_verdict([4, 8, 16], [1.0, 3.0, 2.0])[0] == "inconclusive"


def test_image_verdict_cases():
    assert image_verdict([4, 8, 16], [2.0, 3.0, 4.0])[0] == "growing"
    assert image_verdict([2, 4, 8, 16], [2.32, 2.90, 3.10, 3.16])[0] == "bounded"
    assert image_verdict([4, 8, 16], [0.04, 0.02, 0.01])[0] == "bounded"


def test_divergence_scan_frozen():
    rows = divergence_scan(ImpowParams(1.0), list(DIVERGENCE))
    phis = [r.phi for r in rows]
    assert all(b > a for a, b in zip(phis, phis[1:]))
    for r in rows:
        phi, win = DIVERGENCE[r.y]
        assert r.phi == pytest.approx(phi, rel=1e-4)
        assert r.window_integral == pytest.approx(win, rel=1e-3)
        assert r.window_integral >= r.comparator


def test_divergence_scan_preconditions():
    with pytest.raises(PreconditionError):
        divergence_scan(ImpowParams(1.0), [2.0])


def test_hormander_constant_kernel_vanishes():
    assert hormander_ball_value(constant_handle(2.0), maximal_ball(3.0)) == 0.0


def test_hormander_verdicts_controls():
    assert hormander_estimate(mehler_handle(1.0)).verdict == "plateau"
    assert hormander_estimate(hilbert_gauss_handle()).verdict == "growing"
    assert hormander_estimate(plain_cauchy_handle()).verdict == "plateau"


def test_mehler_global_atom_image_is_one():
    # T a >= 0 and int T a dgamma = int a dgamma = 1
    for y in (2.0, 5.0, 11.0):
        assert atom_image_norm(mehler_handle(1.0), Atom.global_on(maximal_ball(y))) == \
            pytest.approx(1.0, abs=1e-6)


def test_atom_image_preconditions():
    bad = Atom("global", GaussBall(4.0, 0.1), [3.9, 4.1], [1.0])
    with pytest.raises(PreconditionError):
        atom_image_norm(mehler_handle(1.0), bad)
    with pytest.raises(PreconditionError):
        atom_image_norm(mehler_handle(1.0), Atom.exceptional())


def test_tay_identity():
    assert tay_identity_residual(constant_handle(2.0), 3.0, [0.0, 1.0, 5.0]) == 0.0
    assert tay_identity_residual(mehler_handle(1.0), 3.0, [-2.0, 0.0, 1.0, 5.0, 6.0]) <= 1e-8
    with pytest.raises(PreconditionError):
        tay_identity_residual(mehler_handle(1.0), 3.0, [3.1])


@pytest.mark.parametrize("handle", [mehler_handle(1.0), constant_handle(2.0)])
def test_consistency_for_bounded_kernels(handle):
    rec = kernel_l1_consistency(handle, (4.0, 8.0, 12.0, 16.0))
    assert rec.consistent
    assert (rec.hormander, rec.global_images, rec.i_infinity) == ("plateau", "bounded", "plateau")
    assert rec.details["chain"]
