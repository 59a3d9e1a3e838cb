"""Radial kernels on the homogeneous tree of degree ``q + 1``.

Distances are natural graph distances (adjacent vertices at distance 1).
Sums over the tree are organized by spheres ``S_j`` around the root ``o``;
``|S_0| = 1`` and ``|S_j| = (q+1) q^{j-1}``.  Fix a neighbour ``y`` of
``o``: of the vertices of ``S_j`` (``j >= 1``), ``q^{j-1}`` lie in the branch
through ``y`` and are at distance ``j - 1`` from it, the other ``q^j`` at
distance ``j + 1``.  Every shell formula below follows from this count and
is cross-checked against explicit enumeration of a finite ball of the tree.
"""

from __future__ import annotations

import cmath
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .config import TREE_JMAX
from .errors import InvalidInputError, PreconditionError

HORMANDER_MIN_DISTANCE = 4  # rho(x, o) >= 2 in the half-distance convention


def sphere_size(q: int, j: int) -> int:
    """Number of vertices at natural distance ``j`` from a fixed vertex."""
    if q < 2 or j < 0:
        raise InvalidInputError("need q >= 2 and j >= 0")
    return 1 if j == 0 else (q + 1) * q ** (j - 1)


# ---------------------------------------------------------------------------
# Tail hints

@dataclass(frozen=True)
class FiniteSupport:
    """``eta(j) = 0`` for ``j > radius``."""

    radius: int


@dataclass(frozen=True)
class GeometricBound:
    """``|eta(j)| <= A rho^j`` for all ``j``; certificates need ``q rho < 1``."""

    A: float
    rho: float


@dataclass(frozen=True)
class PowerBound:
    """``|eta(j)| <= A q^{-j} j^{-p}`` for ``j >= 1``; certificates need ``p > 1``."""

    A: float
    p: float


@dataclass
class RadialTreeKernel:
    q: int
    eta: Callable[[int], complex]
    hint: object = None
    name: str = "kernel"
    j_max: int = TREE_JMAX

    def __post_init__(self):
        if int(self.q) != self.q or self.q < 2:
            raise InvalidInputError("q must be an integer >= 2")
        self.q = int(self.q)
        if self.j_max < HORMANDER_MIN_DISTANCE + 1:
            raise InvalidInputError("j_max too small")
        self._cache = {}

    def __call__(self, j: int) -> complex:
        if j not in self._cache:
            self._cache[j] = complex(self.eta(j))
        return self._cache[j]

    def values(self, J: int) -> list[complex]:
        return [self(j) for j in range(J + 1)]


@dataclass
class TreeSumReport:
    quantity: str
    partial_sums: list
    total: float
    tail_bound: float | None
    verdict: str  # finite-with-bound | diverging | truncated-unknown
    extra: dict = field(default_factory=dict)

    @property
    def bound(self) -> float | None:
        return None if self.tail_bound is None else self.total + self.tail_bound

    @property
    def finite(self) -> bool | None:
        return {"finite-with-bound": True, "diverging": False}.get(self.verdict)


# ---------------------------------------------------------------------------
# Shell terms

def _l1_terms(k: RadialTreeKernel, J: int) -> list[float]:
    return [sphere_size(k.q, j) * abs(k(j)) for j in range(J + 1)]


def _hormander_terms(k: RadialTreeKernel, J: int) -> list[float]:
    q = k.q
    out = []
    for j in range(HORMANDER_MIN_DISTANCE, J + 1):
        out.append(sphere_size(q, j) * (q * abs(k(j + 1) - k(j)) + abs(k(j - 1) - k(j))))
    return out


def _gradient_terms(k: RadialTreeKernel, J: int) -> list[float]:
    q = k.q
    out = [math.sqrt(q + 1) * abs(k(1) - k(0))]
    for j in range(1, J + 1):
        g = math.sqrt(abs(k(j - 1) - k(j)) ** 2 + q * abs(k(j + 1) - k(j)) ** 2)
        out.append(sphere_size(q, j) * g)
    return out


def _atom_image_terms(k: RadialTreeKernel, J: int) -> list[float]:
    q = k.q
    out = [abs(k(1) - k(0))]
    for j in range(1, J + 1):
        out.append(q ** (j - 1) * abs(k(j - 1) - k(j)) + q ** j * abs(k(j + 1) - k(j)))
    return out


# ---------------------------------------------------------------------------
# Tail certificates.  ``start`` is the first omitted shell index.

def _power_tail(p: float, m: int) -> float:
    # sum_{n >= m} n^{-p} <= m^{-p} + m^{1-p}/(p - 1),  m >= 1
    return m ** -p + m ** (1 - p) / (p - 1)


def _tail(k: RadialTreeKernel, kind: str, start: int) -> float | None:
    q, h = k.q, k.hint
    if isinstance(h, FiniteSupport):
        return 0.0 if start > h.radius + 1 else None
    if isinstance(h, GeometricBound):
        r = q * h.rho
        if not r < 1:
            return None
        geo = r ** start / (1 - r)  # sum_{j >= start} (q rho)^j
        A, rho = h.A, h.rho
        if kind == "l1":
            return A * (q + 1) / q * geo
        if kind in ("hormander", "gradient"):
            # each difference is bounded by the sum of the two moduli
            return A * (q + 1) / q * geo * (q * rho + q + 1 / rho + 1)
        if kind == "atom":
            return A * (1 + rho) * (geo / r + geo)
    if isinstance(h, PowerBound):
        if not h.p > 1 or start < 2:
            return None
        A, p = h.A, h.p
        # |S_j| |eta(j + d)| <= (q+1)/q A q^{-d} (j-1)^{-p} for d >= -1, j >= 2
        base = A * (q + 1) / q * _power_tail(p, start - 1)
        if kind == "l1":
            return base
        if kind in ("hormander", "gradient"):
            return base * (2 * q + 2)
        if kind == "atom":
            # the four moduli of a shell term add up to at most A (2 + 2/q) (j-1)^{-p}
            return 2 * (1 + q) * A * _power_tail(p, start - 1)
    return None


def _diverging(terms: Sequence[float]) -> bool:
    """Heuristic for uncertified sums: increments that do not decay."""
    t = [x for x in terms if math.isfinite(x)]
    if len(t) < 16:
        return False
    n = len(t) // 4
    head = max(t[:n])
    return head > 0 and min(t[-n:]) >= 0.5 * head


def _report(k: RadialTreeKernel, kind: str, terms: list[float], start: int, quantity: str,
            **extra) -> TreeSumReport:
    partial = list(np.cumsum(terms)) if terms else [0.0]
    partial = [float(v) for v in partial]
    total = math.fsum(terms)
    tail = _tail(k, kind, start)
    if tail is not None:
        verdict = "finite-with-bound"
    elif _diverging(terms):
        verdict = "diverging"
    else:
        verdict = "truncated-unknown"
    return TreeSumReport(quantity, partial, total, tail, verdict, dict(extra))


def tree_l1_norm(k: RadialTreeKernel) -> TreeSumReport:
    """``sum_x |k(x, o)| = sum_j |S_j| |eta(j)|``."""
    J = k.j_max
    return _report(k, "l1", _l1_terms(k, J), J + 1, "l1")


def tree_gradient_l1(k: RadialTreeKernel) -> TreeSumReport:
    """``sum_x |grad eta(x)|`` with the root and the shells treated separately."""
    J = k.j_max
    return _report(k, "gradient", _gradient_terms(k, J), J + 1, "gradient_l1")


def tree_hormander_sum(k: RadialTreeKernel, direct_depth: int | None = None) -> TreeSumReport:
    """``sum_{y ~ o} sum_{d(x, o) >= 4} |k(x, y) - k(x, o)|`` by shells.

    The shell formula sums over all ``q + 1`` neighbours ``y``; by radiality
    each neighbour contributes the same amount, reported as ``per_neighbour``.
    With ``direct_depth`` the double sum is also computed by enumerating the
    ball of that radius, and both truncations are returned in ``extra``.
    """
    J = k.j_max
    terms = _hormander_terms(k, J)
    rep = _report(k, "hormander", terms, J + 1, "hormander")
    rep.extra["per_neighbour"] = rep.total / (k.q + 1)
    if direct_depth is not None:
        rep.extra["direct"] = hormander_direct(k, direct_depth)
        rep.extra["reorganized"] = math.fsum(_hormander_terms(k, direct_depth))
    return rep


def adjacent_atom_image_norm(k: RadialTreeKernel) -> TreeSumReport:
    """``sum_w |k(w, y) - k(w, o)|`` for one neighbour ``y`` of ``o``."""
    J = k.j_max
    return _report(k, "atom", _atom_image_terms(k, J), J + 1, "adjacent_atom_image")


def cheeger_floor(q: int) -> float:
    """Lower bound ``2(q-1)/sqrt(q+1)`` for the gradient-to-l1 ratio of
    finitely supported functions (edge expansion ``q - 1`` of the tree)."""
    return 2 * (q - 1) / math.sqrt(q + 1)


def cheeger_ratio(k: RadialTreeKernel) -> float:
    """``tree_gradient_l1 / tree_l1_norm``.

    Raises
    ------
    PreconditionError
        If the l1 norm is not certified finite.
    """
    l1 = tree_l1_norm(k)
    if l1.verdict != "finite-with-bound":
        raise PreconditionError(f"l1 norm of {k.name} is not certified finite ({l1.verdict})")
    if l1.total == 0:
        raise PreconditionError("zero kernel")
    return tree_gradient_l1(k).total / l1.total


@dataclass
class EquivalenceRecord:
    name: str
    atomImageBounded: bool | None
    hormanderFinite: bool | None
    l1Finite: bool | None
    consistent: bool

    def as_dict(self) -> dict:
        return dict(name=self.name, atomImageBounded=self.atomImageBounded,
                    hormanderFinite=self.hormanderFinite, l1Finite=self.l1Finite,
                    consistent=self.consistent)


def equivalence_report(k: RadialTreeKernel) -> EquivalenceRecord:
    """The three boundedness verdicts and whether they respect the cycle
    atom images bounded => Hormander finite => l1 finite => atom images bounded."""
    a = adjacent_atom_image_norm(k).finite
    h = tree_hormander_sum(k).finite
    l1 = tree_l1_norm(k).finite
    consistent = True
    for p, c in ((a, h), (h, l1), (l1, a)):
        if p is True and c is False:
            consistent = False
    return EquivalenceRecord(k.name, a, h, l1, consistent)


# ---------------------------------------------------------------------------
# Explicit enumeration of a finite ball (the independent route)

@dataclass
class TreeBall:
    q: int
    depth: int
    parent: np.ndarray
    level: np.ndarray
    children: list

    def neighbours(self, v: int) -> list[int]:
        out = list(self.children[v])
        if v != 0:
            out.append(int(self.parent[v]))
        return out


def build_tree_ball(q: int, depth: int) -> TreeBall:
    parent, level, children = [-1], [0], [[]]
    frontier = [0]
    for d in range(1, depth + 1):
        nxt = []
        for v in frontier:
            for _ in range(q + 1 if v == 0 else q):
                w = len(parent)
                parent.append(v)
                level.append(d)
                children.append([])
                children[v].append(w)
                nxt.append(w)
        frontier = nxt
    return TreeBall(q, depth, np.array(parent), np.array(level), children)


def bfs_distances(ball: TreeBall, source: int) -> np.ndarray:
    dist = np.full(ball.level.size, -1, dtype=np.int64)
    dist[source] = 0
    queue = deque([source])
    while queue:
        v = queue.popleft()
        for w in ball.neighbours(v):
            if dist[w] < 0:
                dist[w] = dist[v] + 1
                queue.append(w)
    return dist


def hormander_direct(k: RadialTreeKernel, depth: int) -> float:
    """Double sum over neighbours ``y`` of the root and vertices ``x`` with
    ``4 <= d(x, o) <= depth``, by enumeration and breadth-first distances."""
    ball = build_tree_ball(k.q, depth)
    mask = ball.level >= HORMANDER_MIN_DISTANCE
    eta_o = np.array([k(int(j)) for j in ball.level])
    terms = []
    for y in ball.children[0]:
        dy = bfs_distances(ball, y)
        eta_y = np.array([k(int(j)) for j in dy])
        terms.extend(np.abs(eta_y - eta_o)[mask].tolist())
    return math.fsum(terms)


def l1_direct(k: RadialTreeKernel, depth: int) -> float:
    ball = build_tree_ball(k.q, depth)
    return math.fsum(abs(k(int(j))) for j in ball.level)


def gradient_direct(k: RadialTreeKernel, depth: int) -> float:
    """``sum_x |grad eta(x)|`` over ``d(x, o) <= depth``; needs the ball of radius
    ``depth + 1`` so that every counted vertex has all its neighbours."""
    ball = build_tree_ball(k.q, depth + 1)
    total = []
    for v in range(ball.level.size):
        if ball.level[v] > depth:
            continue
        ev = k(int(ball.level[v]))
        s = sum(abs(k(int(ball.level[w])) - ev) ** 2 for w in ball.neighbours(v))
        total.append(math.sqrt(s))
    return math.fsum(total)


def atom_image_direct(k: RadialTreeKernel, depth: int) -> float:
    ball = build_tree_ball(k.q, depth)
    y = ball.children[0][0]
    dy = bfs_distances(ball, y)
    return math.fsum(abs(k(int(a)) - k(int(b))) for a, b in zip(dy, ball.level))


def gradient_comparison(k: RadialTreeKernel, depth: int) -> list[tuple[float, float]]:
    """Per vertex ``(|grad eta(x)|, sum_{x'~x} |eta(x') - eta(x)|)`` on the ball."""
    ball = build_tree_ball(k.q, depth + 1)
    out = []
    for v in range(ball.level.size):
        if ball.level[v] > depth:
            continue
        ev = k(int(ball.level[v]))
        diffs = [abs(k(int(ball.level[w])) - ev) for w in ball.neighbours(v)]
        out.append((math.sqrt(sum(d * d for d in diffs)), sum(diffs)))
    return out


# ---------------------------------------------------------------------------
# Named families

def kernel_from_spec(spec, q: int = 2, j_max: int = TREE_JMAX) -> RadialTreeKernel:
    """Build a kernel from ``"family:param:..."`` or a dict with ``family``/``params``.

    Families: ``delta``, ``indicator:R``, ``geometric:rho`` (``rho^j``),
    ``complex-geometric:rho:theta`` (``(rho e^{i theta})^j``), ``power:p``
    (``(q+1)^{-1} q^{-j} j^{-p}``, ``eta(0) = 0``), ``shifted-power:p``
    (``q^{-j} (j+1)^{-p}``), ``invsphere`` (``|S_j|^{-1}``), ``constant:c``.
    """
    if isinstance(spec, dict):
        q = int(spec.get("q", q))
        family = spec["family"]
        params = [float(v) for v in spec.get("params", [])]
        name = spec.get("name")
    else:
        family, *rest = str(spec).split(":")
        params = [float(v) for v in rest]
        name = None
    name = name or ":".join([family] + [f"{v:g}" for v in params]) + f"@q={q}"

    def need(n):
        if len(params) != n:
            raise InvalidInputError(f"family {family!r} takes {n} parameter(s)")

    if family == "delta":
        need(0)
        return RadialTreeKernel(q, lambda j: 1.0 if j == 0 else 0.0, FiniteSupport(0), name, j_max)
    if family == "indicator":
        need(1)
        R = int(params[0])
        return RadialTreeKernel(q, lambda j: 1.0 if j <= R else 0.0, FiniteSupport(R), name, j_max)
    if family == "geometric":
        need(1)
        rho = params[0]
        return RadialTreeKernel(q, lambda j: rho ** j, GeometricBound(1.0, abs(rho)), name, j_max)
    if family == "complex-geometric":
        need(2)
        z = params[0] * cmath.exp(1j * params[1])
        return RadialTreeKernel(q, lambda j: z ** j, GeometricBound(1.0, abs(params[0])), name, j_max)
    if family == "power":
        need(1)
        p = params[0]
        return RadialTreeKernel(q, lambda j: 0.0 if j == 0 else 1.0 / ((q + 1) * q ** j * j ** p),
                                PowerBound(1.0 / (q + 1), p), name, j_max)
    if family == "shifted-power":
        need(1)
        p = params[0]
        return RadialTreeKernel(q, lambda j: 1.0 / (q ** j * (j + 1) ** p), PowerBound(1.0, p), name, j_max)
    if family == "invsphere":
        need(0)
        return RadialTreeKernel(q, lambda j: 1.0 / sphere_size(q, j), None, name, j_max)
    if family == "constant":
        need(1)
        c = params[0]
        return RadialTreeKernel(q, lambda j: c, None, name, j_max)
    raise InvalidInputError(f"unknown kernel family {family!r}")
