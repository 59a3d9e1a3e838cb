import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special

from gausshardy.errors import InvalidInputError
from gausshardy.gauss_geometry import GaussBall, gauss_measure, maximal_ball
from gausshardy.hardy_atoms import (
    IDENTITY,
    ONE,
    SQUARE,
    Atom,
    CellFunction,
    bmo_mean_oscillation,
    block_edges,
    h1_lower_bound_duality,
    h1_upper_bound_greedy,
    h1glob_norm_bound,
    mean_oscillation,
    pairing,
    validate_atom,
)
from gausshardy.quadrature import ConvergenceError

# frozen bounds for f = 1_{B_y} / gamma(B_y)
GREEDY_H1 = {4.0: 48.2594, 8.0: 170.613, 16.0: 631.560}
DUALITY_LB = {4.0: 12.9525, 8.0: 54.4693, 16.0: 220.634}
X2_SUP_OSCILLATION = 0.65543


def _osc_quad(g, a, b):
    w = lambda x: math.exp(-x * x)
    m = integrate.quad(lambda x: g(x) * w(x), a, b, epsabs=0, epsrel=1e-13)[0] / \
        integrate.quad(w, a, b, epsabs=0, epsrel=1e-13)[0]
    num = integrate.quad(lambda x: abs(g(x) - m) * w(x), a, b, epsabs=0, epsrel=1e-12, limit=200)[0]
    return num / integrate.quad(w, a, b, epsabs=0, epsrel=1e-13)[0]


def test_exceptional_atom():
    assert validate_atom(Atom.exceptional()).valid


def test_sign_atom_sizes():
    s = gauss_measure((-1.0, 1.0)) ** -0.5
    rec = validate_atom(Atom("standard", GaussBall(0.0, 1.0), [-1, 0, 1], [-s, s]))
    assert rec.valid
    assert rec.l2_norm == pytest.approx(1.0, rel=1e-14)
    assert rec.size_bound == pytest.approx(1.0 / math.sqrt(special.erf(1.0)), rel=1e-14)


def test_invalid_atoms():
    s = gauss_measure((-1.0, 1.0)) ** -0.5
    assert not validate_atom(Atom("standard", GaussBall(0.0, 1.0), [-1, 1], [s])).valid
    assert not validate_atom(Atom("standard", GaussBall(0.0, 1.0), [-1, 0, 1], [-2 * s, 2 * s])).valid
    assert not validate_atom(Atom("standard", GaussBall(4.0, 0.5), [3.5, 4, 4.5], [-1, 1])).valid
    assert not validate_atom(Atom("global", GaussBall(4.0, 0.1), [3.9, 4.1], [1.0])).valid
    with pytest.raises(InvalidInputError):
        Atom("weird")


@given(st.floats(-25, 25))
@settings(max_examples=25)
def test_constructed_atoms_valid(y):
    b = maximal_ball(y)
    assert validate_atom(Atom.global_on(b)).valid
    assert validate_atom(Atom.two_step(b)).valid


def test_constructed_atoms_refuse_overflow():
    with pytest.raises(InvalidInputError):
        Atom.global_on(maximal_ball(40.0))
    with pytest.raises(InvalidInputError):
        Atom.two_step(maximal_ball(-40.0))


def test_block_edges_adjacent_pairs_admissible():
    e = block_edges(12.0)
    assert e[0] == -e[-1] and 0.0 in e
    for a, c in zip(e[:-2], e[2:]):
        mid, half = 0.5 * (a + c), 0.5 * (c - a)
        assert GaussBall(mid, half).admissible


@pytest.mark.parametrize("y", [4.0, 8.0, 16.0])
def test_strict_inclusion_bounds(y):
    f = CellFunction.normalized_indicator(maximal_ball(y))
    assert h1glob_norm_bound(f) <= 1.01
    dec = h1_upper_bound_greedy(f, mode="H1")
    assert dec.norm_bound == pytest.approx(GREEDY_H1[y], rel=1e-4)
    assert all(validate_atom(a).valid for a in dec.atoms)
    assert dec.residual_l1 <= 1e-8
    lb = h1_lower_bound_duality(f)
    assert lb.value == pytest.approx(DUALITY_LB[y], rel=1e-4)
    assert lb.value <= dec.norm_bound


def test_duality_lower_bound_grows():
    vals = [DUALITY_LB[y] for y in (4.0, 8.0, 16.0)]
    assert vals[1] >= 3 * vals[0] and vals[2] >= 3 * vals[1]


def test_greedy_budget():
    f = CellFunction.normalized_indicator(maximal_ball(8.0))
    with pytest.raises(ConvergenceError):
        h1_upper_bound_greedy(f, atom_budget=3)


def test_decomposition_json():
    f = CellFunction(np.array([-1.0, 0.0, 2.0]), np.array([1.0, -0.5]))
    dec = h1_upper_bound_greedy(f)
    data = json.loads(dec.to_json())
    assert data["mode"] == "H1" and len(data["atoms"]) == len(dec.atoms)
    assert sum(abs(a["coefficient"]) for a in data["atoms"]) == pytest.approx(dec.norm_bound)


@pytest.mark.parametrize("a,b", [(-1.0, 1.0), (3.75, 4.25), (0.2, 0.9)])
def test_mean_oscillation_matches_quadrature(a, b):
    assert mean_oscillation(SQUARE.func, a, b) == pytest.approx(_osc_quad(lambda x: x * x, a, b),
                                                               rel=1e-9)


def test_bmo_of_square():
    rep = bmo_mean_oscillation(SQUARE)
    assert rep.l1_norm == pytest.approx(0.5, rel=1e-12)
    assert rep.supremum == pytest.approx(X2_SUP_OSCILLATION, rel=1e-4)
    assert max(rep.oscillations) <= 6.0
    assert max(abs(c) for c, _ in rep.balls) == 50.0


def test_bmo_of_constant():
    rep = bmo_mean_oscillation(ONE, [maximal_ball(c) for c in (0.0, 3.0, 10.0)])
    assert rep.supremum == pytest.approx(0.0, abs=1e-14)
    assert rep.l1_norm == pytest.approx(1.0, rel=1e-12)


def test_pairing_is_ball_mean():
    b = maximal_ball(4.0)
    f = CellFunction.normalized_indicator(b)
    a, c = b.interval
    w = lambda x: math.exp(-x * x)
    ref = integrate.quad(lambda x: x * x * w(x), a, c, epsrel=1e-13)[0] / \
        integrate.quad(w, a, c, epsrel=1e-13)[0]
    assert pairing(f, SQUARE.func) == pytest.approx(ref, rel=1e-11)
    assert pairing(f, IDENTITY.func) == pytest.approx(
        integrate.quad(lambda x: x * w(x), a, c, epsrel=1e-13)[0] /
        integrate.quad(w, a, c, epsrel=1e-13)[0], rel=1e-11)


# --- properties -------------------------------------------------------------

cell_functions = st.builds(
    lambda cuts, vals: CellFunction(np.array(sorted(cuts)), np.array(vals[: len(cuts) - 1])),
    st.sets(st.integers(-24, 24).map(lambda k: k / 8.0), min_size=2, max_size=6),
    st.lists(st.floats(-5, 5, allow_nan=False), min_size=6, max_size=6),
)


@given(cell_functions)
@settings(max_examples=12)
def test_greedy_decompositions_valid_and_ordered(f):
    H = h1_upper_bound_greedy(f, mode="H1")
    h = h1_upper_bound_greedy(f, mode="h1")
    for dec in (H, h):
        assert all(validate_atom(a).valid for a in dec.atoms)
        assert dec.residual_l1 <= 1e-8 * max(1.0, f.l1_norm())
    assert h.norm_bound <= H.norm_bound * (1 + 1e-12) + 1e-12


@given(st.floats(-45, 45), st.sampled_from([1.0, 0.5, 0.25]))
@settings(max_examples=25)
def test_square_oscillation_bounded(c, frac):
    from gausshardy.gauss_geometry import admissible_radius
    r = frac * admissible_radius(c)
    assert mean_oscillation(SQUARE.func, c - r, c + r) <= 6.0
