import math
from itertools import product

import pytest
from hypothesis import given, settings, strategies as st

from gausshardy.data import load_tree_kernels
from gausshardy.errors import InvalidInputError, PreconditionError
from gausshardy.tree_analysis import (
    HORMANDER_MIN_DISTANCE,
    GeometricBound,
    RadialTreeKernel,
    adjacent_atom_image_norm,
    atom_image_direct,
    cheeger_floor,
    cheeger_ratio,
    equivalence_report,
    gradient_comparison,
    gradient_direct,
    kernel_from_spec,
    l1_direct,
    sphere_size,
    tree_gradient_l1,
    tree_hormander_sum,
    tree_l1_norm,
)

# hand-counted values on the binary-branching tree (q = 2)
INDICATOR1_L1 = 4.0
INDICATOR1_GRADIENT = 3 * math.sqrt(2) + 6
DELTA_GRADIENT = math.sqrt(3) + 3
INDICATOR3_HORMANDER = 24.0


def _word_ball(q, depth):
    """Vertices as reduced words: the root has q + 1 letters available, others q."""
    out = [()]
    frontier = [()]
    for _ in range(depth):
        nxt = []
        for w in frontier:
            for a in range(q + 1 if not w else q):
                nxt.append(w + (a,))
        out += nxt
        frontier = nxt
    return out


def _dist(u, v):
    n = 0
    while n < min(len(u), len(v)) and u[n] == v[n]:
        n += 1
    return len(u) + len(v) - 2 * n


def _hormander_words(k, depth):
    ball = _word_ball(k.q, depth)
    total = 0.0
    for y in [(a,) for a in range(k.q + 1)]:
        for x in ball:
            if len(x) >= HORMANDER_MIN_DISTANCE:
                total += abs(k(_dist(x, y)) - k(len(x)))
    return total


def _atom_words(k, depth):
    return math.fsum(abs(k(_dist(x, (0,))) - k(len(x))) for x in _word_ball(k.q, depth))


def test_sphere_size():
    for q, j in product((2, 3, 5), range(8)):
        assert sphere_size(q, j) == sum(1 for w in _word_ball(q, j) if len(w) == j)
    with pytest.raises(InvalidInputError):
        sphere_size(1, 3)


def test_indicator_values():
    k = kernel_from_spec("indicator:1", q=2)
    assert tree_l1_norm(k).total == INDICATOR1_L1
    assert tree_gradient_l1(k).total == pytest.approx(INDICATOR1_GRADIENT, rel=1e-14)
    assert cheeger_ratio(k) == pytest.approx(INDICATOR1_GRADIENT / 4, rel=1e-14)
    assert tree_hormander_sum(k).total == 0.0
    k3 = kernel_from_spec("indicator:3", q=2)
    assert tree_hormander_sum(k3).total == INDICATOR3_HORMANDER


def test_delta_values():
    k = kernel_from_spec("delta", q=2)
    assert tree_gradient_l1(k).total == pytest.approx(DELTA_GRADIENT, rel=1e-14)
    assert adjacent_atom_image_norm(k).total == 2.0
    assert tree_hormander_sum(k).total == 0.0
    assert equivalence_report(k).as_dict() == dict(name="delta@q=2", atomImageBounded=True,
                                                   hormanderFinite=True, l1Finite=True,
                                                   consistent=True)


@pytest.mark.parametrize("spec,q", [("geometric:0.3", 2), ("indicator:3", 3),
                                    ("complex-geometric:0.25:1.1", 3), ("power:2", 2),
                                    ("geometric:-0.4", 2)])
def test_shell_formulas_match_enumeration(spec, q):
    depth = 7 if q == 2 else 6
    k = kernel_from_spec(spec, q=q, j_max=depth)
    assert tree_l1_norm(k).total == pytest.approx(l1_direct(k, depth), rel=1e-12)
    rep = tree_hormander_sum(k, direct_depth=depth)
    assert rep.extra["direct"] == pytest.approx(rep.extra["reorganized"], rel=1e-12)
    assert rep.extra["direct"] == pytest.approx(_hormander_words(k, depth), rel=1e-12)
    assert adjacent_atom_image_norm(k).total == pytest.approx(atom_image_direct(k, depth), rel=1e-12)
    assert atom_image_direct(k, depth) == pytest.approx(_atom_words(k, depth), rel=1e-12)
    k1 = kernel_from_spec(spec, q=q, j_max=depth - 1)
    assert tree_gradient_l1(k1).total == pytest.approx(gradient_direct(k1, depth - 1), rel=1e-12)


def test_hormander_per_neighbour():
    k = kernel_from_spec("geometric:0.3", q=2)
    rep = tree_hormander_sum(k)
    assert rep.extra["per_neighbour"] == pytest.approx(rep.total / 3)


def test_invsphere_diverges():
    k = kernel_from_spec("invsphere", q=2)
    for rep in (tree_l1_norm(k), tree_hormander_sum(k), adjacent_atom_image_norm(k)):
        assert rep.verdict == "diverging" and rep.finite is False and rep.bound is None
    assert equivalence_report(k).consistent
    with pytest.raises(PreconditionError):
        cheeger_ratio(k)


def test_shipped_kernels_consistent():
    kernels = load_tree_kernels()
    assert len(kernels) >= 8
    for k in kernels.values():
        rec = equivalence_report(k)
        assert rec.consistent
        if k.hint is not None:
            assert rec.l1Finite and rec.hormanderFinite and rec.atomImageBounded


def test_tail_certificates_cover_truncation():
    for spec in ("geometric:0.3", "power:2", "shifted-power:3"):
        short = kernel_from_spec(spec, q=2, j_max=12)
        long = kernel_from_spec(spec, q=2, j_max=300)
        for f in (tree_l1_norm, tree_hormander_sum, adjacent_atom_image_norm, tree_gradient_l1):
            assert f(short).bound >= f(long).total * (1 - 1e-12)


def test_kernel_from_spec_errors():
    for bad in ("nope", "geometric", "indicator:1:2", "delta:1"):
        with pytest.raises(InvalidInputError):
            kernel_from_spec(bad)
    with pytest.raises(InvalidInputError):
        RadialTreeKernel(1, lambda j: 1.0)
    with pytest.raises(InvalidInputError):
        RadialTreeKernel(2, lambda j: 1.0, j_max=3)


def test_constant_kernel_unknown():
    k = kernel_from_spec("constant:1", q=2, j_max=40)
    assert tree_hormander_sum(k).total == 0.0
    assert tree_l1_norm(k).verdict == "diverging"


# --- properties -------------------------------------------------------------

@given(st.sampled_from([2, 3, 4]), st.floats(-0.3, 0.3).filter(lambda r: abs(r) > 1e-3),
       st.floats(-math.pi, math.pi))
@settings(max_examples=25)
def test_pointwise_gradient_comparison(q, rho, theta):
    k = kernel_from_spec(f"complex-geometric:{rho}:{theta}", q=q, j_max=10)
    for g, s in gradient_comparison(k, 3):
        assert g <= s * (1 + 1e-12) + 1e-300
        assert s <= math.sqrt(q + 1) * g * (1 + 1e-12) + 1e-300


@given(st.sampled_from([2, 3, 5]), st.floats(0.01, 0.95))
@settings(max_examples=25)
def test_geometric_chain(q, t):
    rho = t / q
    k = RadialTreeKernel(q, lambda j: rho ** j, GeometricBound(1.0, rho), "g", 400)
    floor = cheeger_floor(q)
    assert cheeger_ratio(k) >= floor * (1 - 1e-12)
    l1 = tree_l1_norm(k).total
    head = math.fsum(tree_gradient_l1(k).partial_sums[HORMANDER_MIN_DISTANCE - 1:HORMANDER_MIN_DISTANCE])
    assert l1 <= (head + tree_hormander_sum(k).bound) / floor * (1 + 1e-12)


@given(st.sampled_from([2, 3]), st.integers(0, 6))
@settings(max_examples=20)
def test_indicator_cheeger(q, R):
    assert cheeger_ratio(kernel_from_spec(f"indicator:{R}", q=q)) >= cheeger_floor(q)
