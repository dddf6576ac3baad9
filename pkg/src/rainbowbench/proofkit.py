"""Augmenting-switch machinery over edge-coloured bipartite instances.

The engine works on SwitchState values: a rainbow matching r (with colour 0
unused, by relabelling convention), sequences of matched edges e_1..e_k and
outside edges g_1..g_k sharing B-endpoints with them, vertex pools X_i, Y_i,
and an injective colour map pi with pi(0) = 0. Seven properties must hold:

  P1  e_i lies in r and in the class pi(i).
  P2  g_i lies in one of the classes pi(0) .. pi((i)-1).
  P3  no endpoint of e_1..e_k lies in X_k or Y_k.
  P4  |X_k| = |Y_k| equals the pool-size formula s_k (strict mode only).
  P5  whenever r holds an edge of class j inside X_i x Y_i, class j also has
      an edge from x_i into the unsaturated part of B.
  P6  every w newly added to Y_i has a partner v outside X and the used
      z-vertices with vw in class pi(i-1).
  P7  if g_i lies in class pi(j), then z_i avoids X and z_1..z_j.

When these hold, three exchange operations (claim1/2/3_switch) each turn a
witness edge into a rainbow matching one larger than r, by walking the colour
chain: the strictly decreasing index sequence tracing which earlier class each
g-edge belongs to, ending at colour 0.

Two modes: "strict" enforces the exact pool-size formulas (meaningful only at
very large n), "relaxed" replaces every cardinality threshold by 1 so that the
machinery runs on desk-scale fixtures. Mode only affects the cardinality
checks and set truncations; the exchange algebra is identical.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction
from typing import Iterator, Sequence

from .core import (
    ColouredEdge,
    Instance,
    RainbowMatching,
    Vertex,
    instance_from_json,
    instance_to_json,
    is_rainbow,
    matching_from_json,
    neighbourhood_along,
    saturated_sets,
    va,
    vb,
)


class Mode(Enum):
    STRICT = "strict"
    RELAXED = "relaxed"


class ThresholdInfeasible(Exception):
    """A strict-mode (or relaxed threshold-1) cardinality requirement cannot be met."""

    def __init__(self, formula: str, required, available) -> None:
        self.formula = formula
        self.required = required
        self.available = available
        super().__init__(f"{formula}: need {required}, have {available}")


class PigeonholeFailure(Exception):
    """No vertex satisfies the pigeonhole selection property."""


class ChainError(Exception):
    """No valid colour chain exists (a P2 violation)."""


class SwitchIntegrityError(Exception):
    """A switch produced an invalid matching; the input state was corrupt."""


@dataclass(frozen=True)
class Epsilon:
    """Exact positive rational slack; all threshold comparisons are bit-exact."""

    value: Fraction

    def __post_init__(self) -> None:
        if self.value <= 0:
            raise ValueError(f"epsilon must be positive, got {self.value}")

    @classmethod
    def parse(cls, text: str) -> "Epsilon":
        """Parse "p/q" or "p"."""
        return cls(Fraction(text.strip()))

    def __str__(self) -> str:
        return str(self.value)


def smallest_t(eps: Epsilon) -> int:
    """Minimal t >= 1 with 1/(2t - 1) <= eps, by exact rational arithmetic."""
    inv = 1 / eps.value
    return max(1, math.ceil((inv + 1) / 2))


def s_k(k: int, eps: Epsilon, n: int) -> Fraction:
    """Pool-size formula 2*k*eps*n + k*(7 - 3k)/2."""
    if k < 0:
        raise ValueError(f"need k >= 0, got {k}")
    return 2 * k * eps.value * n + Fraction(k * (7 - 3 * k), 2)


def size_xy_prime(k: int, eps: Epsilon, n: int) -> Fraction:
    """Candidate-pool size n/2 + (2k + 1)*eps*n + (-3k^2 + 3k + 2)/2.

    Equals s_k(k) + (1/2 + eps)*n + 1 - 2k for every k, an identity the test
    suite pins down exactly.
    """
    if k < 0:
        raise ValueError(f"need k >= 0, got {k}")
    return Fraction(n, 2) + (2 * k + 1) * eps.value * n + Fraction(-3 * k * k + 3 * k + 2, 2)


def contradiction_threshold(eps: Epsilon) -> int:
    """Smallest n >= 1 with 2*t*eps*n + t*(7 - 3t)/2 > n, where t = smallest_t(eps).

    Exists because 2*t*eps > 1 by the choice of t; beyond this n the pool Y_t
    would have to outgrow Y itself.
    """
    t = smallest_t(eps)
    slope = 2 * t * eps.value - 1  # > 0 by choice of t
    offset = Fraction(t * (3 * t - 7), 2)
    bound = offset / slope  # need n > bound
    n = max(1, math.floor(bound) + 1)
    assert 2 * t * eps.value * n + Fraction(t * (7 - 3 * t), 2) > n
    return n


# --- the induction state --------------------------------------------------------


@dataclass(frozen=True)
class SwitchState:
    """Snapshot of the augmentation engine after k extension steps.

    e_seq[i-1] is e_i = x_i y_i (an edge of r), g_seq[i-1] is g_i = z_i y_i
    with z_i outside the saturated A-side, x_sets[i-1] / y_sets[i-1] are X_i /
    Y_i, and pi[i] is the colour of e_i with pi[0] = 0. t is the step bound
    derived from eps; strict mode is meaningful only for k within it.
    """

    inst: Instance
    r: RainbowMatching
    eps: Epsilon
    t: int
    k: int
    e_seq: tuple[ColouredEdge, ...]
    g_seq: tuple[ColouredEdge, ...]
    x_sets: tuple[frozenset[Vertex], ...]
    y_sets: tuple[frozenset[Vertex], ...]
    pi: tuple[int, ...]

    # -- derived views ------------------------------------------------------

    def saturated(self) -> tuple[frozenset[Vertex], frozenset[Vertex]]:
        return saturated_sets(self.r)

    def x_of(self, i: int) -> Vertex:
        """x_i, the A-endpoint of e_i (1-based)."""
        return self.e_seq[i - 1].a

    def y_of(self, i: int) -> Vertex:
        """y_i, the shared B-endpoint of e_i and g_i (1-based)."""
        return self.e_seq[i - 1].b

    def z_of(self, i: int) -> Vertex:
        """z_i, the A-endpoint of g_i (1-based)."""
        return self.g_seq[i - 1].a

    def zs(self, upto: int) -> frozenset[Vertex]:
        """{z_1 .. z_upto}."""
        return frozenset(self.g_seq[i].a for i in range(upto))

    def pi_index(self, colour: int) -> int | None:
        """i with pi(i) == colour, or None."""
        try:
            return self.pi.index(colour)
        except ValueError:
            return None


def initial_state(inst: Instance, r: RainbowMatching, eps: Epsilon) -> SwitchState:
    """The k = 0 state for a matching that leaves colour 0 unused.

    Raises ValueError when r is not a valid rainbow matching of inst or when
    it uses colour 0 (relabel with core.free_colour_zero first).
    """
    if not is_rainbow(r):
        raise ValueError("r is not a rainbow matching")
    for ce in r.edges:
        if not 0 <= ce.colour < inst.n_colours:
            raise ValueError(f"edge {ce!r} has a colour outside the instance")
        if ce.edge not in inst.class_edges(ce.colour):
            raise ValueError(f"edge {ce!r} does not belong to its colour class")
    if 0 in r.colours():
        raise ValueError("colour 0 must be unused by r; relabel first")
    return SwitchState(
        inst=inst,
        r=r,
        eps=eps,
        t=smallest_t(eps),
        k=0,
        e_seq=(),
        g_seq=(),
        x_sets=(),
        y_sets=(),
        pi=(0,),
    )


def state_violations(st: SwitchState) -> list[str]:
    """Structural checks on the sequence shapes, independent of P1-P7."""
    out: list[str] = []
    k = st.k
    if not (len(st.e_seq) == len(st.g_seq) == len(st.x_sets) == len(st.y_sets) == k):
        out.append(f"sequence lengths do not match k={k}")
        return out
    if len(st.pi) != k + 1 or st.pi[0] != 0:
        out.append(f"pi must map 0..k with pi(0)=0, got {st.pi}")
    if len(set(st.pi)) != len(st.pi):
        out.append(f"pi is not injective: {st.pi}")
    X, Y = st.saturated()
    if len(set(st.e_seq)) != k:
        out.append("e_i are not pairwise distinct")
    if len(set(st.g_seq)) != k:
        out.append("g_i are not pairwise distinct")
    for i in range(1, k + 1):
        e, g = st.e_seq[i - 1], st.g_seq[i - 1]
        if e not in st.r:
            out.append(f"e_{i}={e!r} is not an edge of r")
        if g.b != e.b:
            out.append(f"g_{i}={g!r} does not share its B-endpoint with e_{i}={e!r}")
        if g.a in X:
            out.append(f"z_{i}={g.a!r} is saturated by r")
        if not st.x_sets[i - 1] <= X:
            out.append(f"X_{i} is not a subset of the saturated A-side")
        if not st.y_sets[i - 1] <= Y:
            out.append(f"Y_{i} is not a subset of the saturated B-side")
    return out


# --- property verification ------------------------------------------------------

PROPERTY_NAMES = ("P1", "P2", "P3", "P4", "P5", "P6", "P7")


@dataclass(frozen=True)
class PropertyCheck:
    name: str
    ok: bool
    witness: str | None = None


@dataclass(frozen=True)
class PropertyReport:
    checks: tuple[PropertyCheck, ...]

    @property
    def all_ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def failed(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.checks if not c.ok)

    def __getitem__(self, name: str) -> PropertyCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def _class_has_edge_between(
    inst: Instance, colour: int, a_index: int, forbidden_b: frozenset[Vertex]
) -> bool:
    forbidden = {v.index for v in forbidden_b}
    return any(
        a == a_index and b not in forbidden for a, b in inst.class_pairs(colour)
    )


def verify_properties(st: SwitchState, mode: Mode = Mode.RELAXED) -> PropertyReport:
    """Check P1-P7, returning one PropertyCheck per property with a concrete witness.

    P4 compares against the exact formula only in strict mode (ceiling taken,
    see s_k); relaxed mode only requires |X_k| = |Y_k|. All other properties
    are mode-independent.
    """
    bad = state_violations(st)
    if bad:
        raise ValueError("structurally invalid state: " + "; ".join(bad))
    inst, k = st.inst, st.k
    X, Y = st.saturated()
    n = inst.n_colours

    # P1: e_i in r and in class pi(i)
    p1_ok, p1_w = True, None
    for i in range(1, k + 1):
        e = st.e_seq[i - 1]
        if e.colour != st.pi[i] or e.edge not in inst.class_edges(st.pi[i]):
            p1_ok, p1_w = False, f"e_{i}={e!r} not in class pi({i})={st.pi[i]}"
            break

    # P2: g_i in the union of classes pi(0)..pi(i-1)
    p2_ok, p2_w = True, None
    for i in range(1, k + 1):
        g = st.g_seq[i - 1]
        prior = set(st.pi[:i])
        if g.colour not in prior or g.edge not in inst.class_edges(g.colour):
            p2_ok, p2_w = False, f"g_{i}={g!r} not in classes pi(0..{i - 1})"
            break

    # P3: endpoints of e_1..e_k avoid X_k and Y_k
    p3_ok, p3_w = True, None
    if k >= 1:
        Xk, Yk = st.x_sets[k - 1], st.y_sets[k - 1]
        for i in range(1, k + 1):
            e = st.e_seq[i - 1]
            if e.a in Xk:
                p3_ok, p3_w = False, f"x_{i}={e.a!r} lies in X_{k}"
                break
            if e.b in Yk:
                p3_ok, p3_w = False, f"y_{i}={e.b!r} lies in Y_{k}"
                break

    # P4: |X_k| = |Y_k| (= ceil(s_k) in strict mode)
    p4_ok, p4_w = True, None
    if k >= 1:
        nx, ny = len(st.x_sets[k - 1]), len(st.y_sets[k - 1])
        if nx != ny:
            p4_ok, p4_w = False, f"|X_{k}|={nx} != |Y_{k}|={ny}"
        elif mode is Mode.STRICT:
            want = math.ceil(s_k(k, st.eps, n))
            if nx != want:
                p4_ok, p4_w = False, f"|X_{k}|={nx} != ceil(s_{k})={want}"

    # P5: r-edge of class j inside X_i x Y_i forces a class-j edge from x_i to B \ Y
    p5_ok, p5_w = True, None
    for i in range(1, k + 1):
        if not p5_ok:
            break
        Xi, Yi = st.x_sets[i - 1], st.y_sets[i - 1]
        xi = st.x_of(i)
        for ce in st.r.sorted_edges():
            if ce.a in Xi and ce.b in Yi:
                if not _class_has_edge_between(inst, ce.colour, xi.index, Y):
                    p5_ok, p5_w = (
                        False,
                        f"class {ce.colour} meets r in X_{i} x Y_{i} but has no edge "
                        f"from x_{i}={xi!r} into B minus Y",
                    )
                    break

    # P6: each w in Y_i \ Y_{i-1} has v outside X u {z_1..z_{i-1}} with vw in class pi(i-1)
    p6_ok, p6_w = True, None
    for i in range(1, k + 1):
        if not p6_ok:
            break
        prev = st.y_sets[i - 2] if i >= 2 else frozenset()
        excluded = {v.index for v in X | st.zs(i - 1)}
        cls_pairs = inst.class_pairs(st.pi[i - 1])
        for w in sorted(st.y_sets[i - 1] - prev, key=lambda v: v.index):
            if not any(b == w.index and a not in excluded for a, b in cls_pairs):
                p6_ok, p6_w = (
                    False,
                    f"w={w!r} in Y_{i} minus Y_{i - 1} has no partner in class pi({i - 1})",
                )
                break

    # P7: g_i in class pi(j) (j >= 1) forces z_i outside X u {z_1..z_j}
    p7_ok, p7_w = True, None
    for i in range(1, k + 1):
        if not p7_ok:
            break
        g = st.g_seq[i - 1]
        for j in range(1, i):
            if g.colour == st.pi[j]:
                zi = g.a
                if zi in X or zi in st.zs(j):
                    p7_ok, p7_w = False, f"z_{i}={zi!r} collides with X or z_1..z_{j}"
                break

    checks = (
        PropertyCheck("P1", p1_ok, p1_w),
        PropertyCheck("P2", p2_ok, p2_w),
        PropertyCheck("P3", p3_ok, p3_w),
        PropertyCheck("P4", p4_ok, p4_w),
        PropertyCheck("P5", p5_ok, p5_w),
        PropertyCheck("P6", p6_ok, p6_w),
        PropertyCheck("P7", p7_ok, p7_w),
    )
    return PropertyReport(checks)


def colour_chain(st: SwitchState, i: int) -> list[int]:
    """Indices j_1 > j_2 > ... > j_s = 0 tracing g-edge class memberships.

    j_1 is the pi-index of the class holding g_i, then each subsequent index
    is the pi-index of the class holding the previous g, until colour 0 is
    reached. Strict decrease guarantees termination; raises ChainError when a
    g-edge's class is not among the earlier pi values.
    """
    if not 1 <= i <= st.k:
        raise ValueError(f"need 1 <= i <= k={st.k}, got {i}")
    chain: list[int] = []
    cur = i
    while True:
        g = st.g_seq[cur - 1]
        j = st.pi_index(g.colour)
        if j is None or j >= cur:
            raise ChainError(f"g_{cur}={g!r} lies in no earlier class; chain broken")
        chain.append(j)
        if j == 0:
            return chain
        cur = j


# --- the three exchange operations ----------------------------------------------


def _chain_members(st: SwitchState, start: int) -> tuple[list[ColouredEdge], list[ColouredEdge]]:
    """Removed e-edges and added g-edges for the chain rooted at index `start`."""
    chain = colour_chain(st, start)
    removed = [st.e_seq[start - 1]] + [st.e_seq[j - 1] for j in chain[:-1]]
    added = [st.g_seq[start - 1]] + [st.g_seq[j - 1] for j in chain[:-1]]
    return removed, added


def _apply_exchange(
    st: SwitchState, removed: Sequence[ColouredEdge], added: Sequence[ColouredEdge]
) -> RainbowMatching:
    for e in removed:
        if e not in st.r:
            raise SwitchIntegrityError(f"cannot remove {e!r}: not an edge of r")
    result = RainbowMatching(st.r.edges.difference(removed).union(added))
    if not is_rainbow(result) or len(result) != len(st.r) + 1:
        raise SwitchIntegrityError(
            f"exchange produced an invalid matching (size {len(result)}, expected "
            f"{len(st.r) + 1}); the state is corrupt"
        )
    return result


def claim1_switch(st: SwitchState, g: ColouredEdge) -> RainbowMatching:
    """Grow r by one using a class-pi(k) edge into the doubly-unsaturated region.

    Precondition: g lies in class pi(k), its A-endpoint avoids X and all z_i,
    and its B-endpoint is unsaturated. The exchange removes e_k and the chain
    e-edges and adds g_k, the chain g-edges and g.
    """
    k = st.k
    if k < 1:
        raise ValueError("claim1_switch needs k >= 1")
    X, Y = st.saturated()
    if g.colour != st.pi[k] or g.edge not in st.inst.class_edges(g.colour):
        raise ValueError(f"g={g!r} is not an edge of class pi(k)={st.pi[k]}")
    if g.a in X or g.a in st.zs(k):
        raise ValueError(f"g={g!r} must start outside X and z_1..z_k")
    if g.b in Y:
        raise ValueError(f"g={g!r} must end outside Y")
    removed, added = _chain_members(st, k)
    return _apply_exchange(st, removed, added + [g])


def claim2_switch(
    st: SwitchState, g: ColouredEdge, e: ColouredEdge, e_bar: ColouredEdge
) -> RainbowMatching:
    """Grow r by one using a class-pi(k) edge into Y_k.

    g hits a vertex of Y_k whose r-edge is e (a colour outside the pi image);
    e_bar re-homes e's colour from x_k into the unsaturated part of B. The
    exchange removes e_k, the chain e-edges and e, and adds g_k, the chain
    g-edges, e_bar and g.
    """
    k = st.k
    if k < 1:
        raise ValueError("claim2_switch needs k >= 1")
    X, Y = st.saturated()
    Yk = st.y_sets[k - 1]
    if g.colour != st.pi[k] or g.edge not in st.inst.class_edges(g.colour):
        raise ValueError(f"g={g!r} is not an edge of class pi(k)={st.pi[k]}")
    if g.a in X or g.a in st.zs(k):
        raise ValueError(f"g={g!r} must start outside X and z_1..z_k")
    if g.b not in Yk:
        raise ValueError(f"g={g!r} must end in Y_{k}")
    if e not in st.r or e.b != g.b:
        raise ValueError(f"e={e!r} must be the r-edge adjacent to g")
    if e.a not in st.x_sets[k - 1]:
        raise ValueError(f"e={e!r} must lie between X_{k} and Y_{k}")
    if e.colour in st.pi:
        raise ValueError(f"e's colour {e.colour} must avoid the pi image")
    if e_bar.colour != e.colour:
        raise ValueError(f"e_bar colour {e_bar.colour} does not match e's colour {e.colour}")
    if e_bar.edge not in st.inst.class_edges(e_bar.colour):
        raise ValueError(f"e_bar={e_bar!r} is not an edge of its class")
    if e_bar.a != st.x_of(k) or e_bar.b in Y:
        raise ValueError(f"e_bar={e_bar!r} must join x_{k} to B minus Y")
    removed, added = _chain_members(st, k)
    return _apply_exchange(st, removed + [e], added + [e_bar, g])


def claim3_switch(
    st: SwitchState, f: ColouredEdge, f_bar: ColouredEdge, zw: ColouredEdge
) -> RainbowMatching:
    """Grow r by one by re-homing the colour of an r-edge f inside the candidate pools.

    zw shares f's B-endpoint w and lies in a pi-image class; which class
    determines the subcase and hence the chain start: class pi(k) (w drawn
    from the fresh pool N_k) starts the chain at k, class pi(p) with p < k
    (w in Y_{p+1} minus Y_p) starts it at p, and class 0 degenerates to the
    chainless exchange removing f and adding f_bar and zw.
    """
    k = st.k
    X, Y = st.saturated()
    if f not in st.r:
        raise ValueError(f"f={f!r} must be an edge of r")
    if f.colour in st.pi:
        raise ValueError(f"f's colour {f.colour} must avoid the pi image")
    if zw.b != f.b:
        raise ValueError(f"zw={zw!r} must share f's B-endpoint {f.b!r}")
    if zw.edge not in st.inst.class_edges(zw.colour):
        raise ValueError(f"zw={zw!r} is not an edge of its class")
    p = st.pi_index(zw.colour)
    if p is None:
        raise ValueError(
            f"subcase undeterminable: zw's colour {zw.colour} is outside the pi image"
        )
    w = f.b
    ys = frozenset(st.y_of(i) for i in range(1, k + 1))
    if p == k and k >= 1:
        # fresh-pool subcase: w must avoid Y_k and all y_i, zw must start outside X u z's
        if w in st.y_sets[k - 1] or w in ys:
            raise ValueError(f"subcase undeterminable: w={w!r} not in the fresh pool shape")
        if zw.a in X or zw.a in st.zs(k):
            raise ValueError(f"zw={zw!r} must start outside X and z_1..z_k")
        removed, added = _chain_members(st, k)
    elif p == 0:
        # degenerate: zw lies in class 0, chainless exchange
        if zw.a in X:
            raise ValueError(f"zw={zw!r} must start outside X")
        removed, added = [], []
    else:
        # w in Y_{p+1} \ Y_p, zw in class pi(p)
        if w not in st.y_sets[p]:
            raise ValueError(f"subcase undeterminable: w={w!r} not in Y_{p + 1}")
        if p >= 1 and w in st.y_sets[p - 1]:
            raise ValueError(f"w={w!r} already in Y_{p}; zw names the wrong increment")
        if zw.a in X or zw.a in st.zs(p):
            raise ValueError(f"zw={zw!r} must start outside X and z_1..z_{p}")
        removed, added = _chain_members(st, p)
    if f_bar.colour != f.colour:
        raise ValueError(f"f_bar colour {f_bar.colour} does not match f's colour {f.colour}")
    if f_bar.edge not in st.inst.class_edges(f_bar.colour):
        raise ValueError(f"f_bar={f_bar!r} is not an edge of its class")
    if f_bar.a in X or f_bar.a in st.zs(k) or f_bar.a == zw.a:
        raise ValueError(f"f_bar={f_bar!r} must start outside X, z_1..z_k and zw's endpoint")
    if f_bar.b in Y:
        raise ValueError(f"f_bar={f_bar!r} must end outside Y")
    return _apply_exchange(st, removed + [f], added + [f_bar, zw])


# --- pool constructions ----------------------------------------------------------


def _n_pool_all(st: SwitchState) -> list[Vertex]:
    """All qualifying fresh B-vertices for the current k, sorted by index."""
    inst, k = st.inst, st.k
    X, Y = st.saturated()
    if k == 0:
        excluded_a = {v.index for v in X}
        banned_b: set[int] = set()
    else:
        excluded_a = {v.index for v in X | st.zs(k)}
        banned_b = {v.index for v in st.y_sets[k - 1]}
        banned_b.update(st.y_of(i).index for i in range(1, k + 1))
    y_indices = {v.index for v in Y}
    out = set()
    for a, b in inst.class_pairs(st.pi[k]):
        if a not in excluded_a and b in y_indices and b not in banned_b:
            out.add(b)
    return [vb(b) for b in sorted(out)]


def _n_required(st: SwitchState, mode: Mode) -> int:
    if mode is Mode.RELAXED:
        return 1
    n = st.inst.n_colours
    value = (Fraction(1, 2) + st.eps.value) * n + 1 - 2 * st.k
    return max(1, math.ceil(value))


def construct_N0(st: SwitchState, mode: Mode = Mode.RELAXED) -> frozenset[Vertex]:
    """Saturated B-vertices reachable from outside X through class 0 (k = 0 only).

    Strict mode truncates to ceil((1/2 + eps)*n + 1) vertices, smallest
    B-indices first; relaxed mode returns every qualifying vertex.
    """
    if st.k != 0:
        raise ValueError(f"construct_N0 needs k = 0, got k = {st.k}")
    pool = _n_pool_all(st)
    if mode is Mode.STRICT:
        pool = pool[: _n_required(st, mode)]
    return frozenset(pool)


def construct_Nk(st: SwitchState, mode: Mode = Mode.RELAXED) -> frozenset[Vertex]:
    """Fresh saturated B-vertices reachable through class pi(k) (k >= 1).

    Qualifying vertices lie in Y minus Y_k and the used y_i and have a partner
    outside X and z_1..z_k in class pi(k). Strict mode truncates to
    ceil((1/2 + eps)*n + 1 - 2k), smallest B-indices first.
    """
    if st.k < 1:
        raise ValueError(f"construct_Nk needs k >= 1, got k = {st.k}")
    pool = _n_pool_all(st)
    if mode is Mode.STRICT:
        pool = pool[: _n_required(st, mode)]
    return frozenset(pool)


def pigeonhole_select(
    st: SwitchState,
    x_prime: frozenset[Vertex],
    y_prime: frozenset[Vertex],
    mode: Mode = Mode.RELAXED,
) -> tuple[Vertex, frozenset[Vertex], frozenset[Vertex]]:
    """Select (x_next, X_next, Y_next) from the candidate pools.

    Every colour whose r-edge lies inside X_next x Y_next must keep an edge
    from x_next into the unsaturated part of B. The winner is the x* whose
    "covered" set is largest (ties: smallest A-index); X_next is that set
    minus x* (strict mode: truncated to exactly ceil(s_{k+1}) smallest
    indices) and Y_next its r-neighbourhood. Raises PigeonholeFailure when no
    vertex reaches the mode threshold.
    """
    inst = st.inst
    _, Y = st.saturated()
    y_idx = {v.index for v in Y}
    box = [ce for ce in st.r.sorted_edges() if ce.a in x_prime and ce.b in y_prime]
    # A-endpoints of class-j edges escaping into B \ Y, per relevant colour
    escape: dict[int, set[int]] = {}
    for ce in box:
        j = ce.colour
        if j not in escape:
            escape[j] = {
                a
                for a, b in inst.class_pairs(j)
                if b not in y_idx and va(a) in x_prime
            }
    threshold = 1 if mode is Mode.RELAXED else max(
        1, math.ceil(s_k(st.k + 1, st.eps, inst.n_colours))
    )
    best: tuple[int, int] | None = None  # (-covered, index)
    best_cover: list[Vertex] = []
    best_x: Vertex | None = None
    for x_star in sorted(x_prime, key=lambda v: v.index):
        covered = [
            ce.a for ce in box if ce.a != x_star and x_star.index in escape[ce.colour]
        ]
        key = (-len(covered), x_star.index)
        if best is None or key < best:
            best = key
            best_cover = covered
            best_x = x_star
    if best_x is None or len(best_cover) < threshold:
        have = len(best_cover)
        raise PigeonholeFailure(
            f"no vertex covers {threshold} pool members (best covers {have})"
        )
    x_next_set = sorted(best_cover, key=lambda v: v.index)
    if mode is Mode.STRICT:
        x_next_set = x_next_set[:threshold]
    X_next = frozenset(x_next_set)
    Y_next = neighbourhood_along(st.r, X_next)
    return best_x, X_next, Y_next


# --- the extension step ----------------------------------------------------------


@dataclass(frozen=True)
class Extended:
    state: SwitchState


@dataclass(frozen=True)
class Augmented:
    matching: RainbowMatching


StepOutcome = Extended | Augmented


def _r_edge_at_b(st: SwitchState, b: Vertex) -> ColouredEdge | None:
    for ce in st.r.edges:
        if ce.b == b:
            return ce
    return None


def _r_edge_at_a(st: SwitchState, a: Vertex) -> ColouredEdge | None:
    for ce in st.r.edges:
        if ce.a == a:
            return ce
    return None


def _find_partner_edge(
    st: SwitchState, w: Vertex, colour: int, excluded_a: frozenset[Vertex]
) -> ColouredEdge | None:
    """Smallest-index class edge into w starting outside the excluded A-vertices."""
    banned = {v.index for v in excluded_a}
    for a, b in st.inst.class_pairs(colour):
        if b == w.index and a not in banned:
            return ColouredEdge.of(colour, a, w.index)
    return None


def _zw_for(st: SwitchState, w: Vertex, n_pool: frozenset[Vertex], prefer_pool: bool) -> ColouredEdge | None:
    """The two-case partner rule for a pool vertex w.

    Fresh-pool case: partner through class pi(k) avoiding X and z_1..z_k.
    Increment case (k >= 1, w in Y_k): take the smallest i with w in Y_i and
    partner through class pi(i-1) avoiding X and z_1..z_{i-1}. prefer_pool
    controls which case is tried first when both could apply.
    """
    X, _ = st.saturated()
    k = st.k

    def pool_case() -> ColouredEdge | None:
        if w not in n_pool:
            return None
        return _find_partner_edge(st, w, st.pi[k], X | st.zs(k))

    def increment_case() -> ColouredEdge | None:
        if k < 1 or w not in st.y_sets[k - 1]:
            return None
        for i in range(1, k + 1):
            if w in st.y_sets[i - 1]:
                return _find_partner_edge(st, w, st.pi[i - 1], X | st.zs(i - 1))
        return None

    first, second = (pool_case, increment_case) if prefer_pool else (increment_case, pool_case)
    return first() or second()


def _claim12_augment(st: SwitchState) -> RainbowMatching | None:
    """Search the current class pi(k) for a claim-1 or claim-2 witness edge."""
    inst, k = st.inst, st.k
    X, Y = st.saturated()
    x_idx = {v.index for v in X}
    y_idx = {v.index for v in Y}
    if k == 0:
        for a, b in inst.class_pairs(0):
            if a not in x_idx and b not in y_idx:
                return st.r.with_edge(ColouredEdge.of(0, a, b))
        return None
    z_idx = {v.index for v in st.zs(k)}
    colour_k = st.pi[k]
    yk_idx = {v.index for v in st.y_sets[k - 1]}
    xk = st.x_sets[k - 1]
    for a, b in inst.class_pairs(colour_k):
        if a in x_idx or a in z_idx:
            continue
        if b not in y_idx:
            return claim1_switch(st, ColouredEdge.of(colour_k, a, b))
    for a, b in inst.class_pairs(colour_k):
        if a in x_idx or a in z_idx or b not in yk_idx:
            continue
        g = ColouredEdge.of(colour_k, a, b)
        e = _r_edge_at_b(st, g.b)
        if e is None or e.a not in xk or e.colour in st.pi:
            continue  # hand-built states may lack the paired structure; not a witness
        e_bar = _find_partner_edge_from_a(st, st.x_of(k), e.colour, Y)
        if e_bar is None:
            continue
        return claim2_switch(st, g, e, e_bar)
    return None


def _find_partner_edge_from_a(
    st: SwitchState, x: Vertex, colour: int, forbidden_b: frozenset[Vertex]
) -> ColouredEdge | None:
    banned = {v.index for v in forbidden_b}
    for a, b in st.inst.class_pairs(colour):
        if a == x.index and b not in banned:
            return ColouredEdge.of(colour, a, b)
    return None


def _claim3_augment(
    st: SwitchState,
    n_pool: frozenset[Vertex],
    x_prime: frozenset[Vertex],
    y_prime: frozenset[Vertex],
) -> RainbowMatching | None:
    """Search the pool box for a claim-3 witness triple (f, f_bar, zw)."""
    X, Y = st.saturated()
    y_idx = {v.index for v in Y}
    for f in st.r.sorted_edges():
        if f.a not in x_prime or f.b not in y_prime:
            continue
        if f.colour in st.pi:
            continue  # cannot happen when P3 holds; skip defensively
        zw = _zw_for(st, f.b, n_pool, prefer_pool=False)
        if zw is None:
            continue
        banned_a = {v.index for v in X | st.zs(st.k)} | {zw.a.index}
        for a, b in st.inst.class_pairs(f.colour):
            if a not in banned_a and b not in y_idx:
                return claim3_switch(st, f, ColouredEdge.of(f.colour, a, b), zw)
    return None


def _extension_candidates(
    st: SwitchState,
    n_pool: frozenset[Vertex],
    x_prime: frozenset[Vertex],
    y_prime: frozenset[Vertex],
    mode: Mode,
    branch_all: bool,
) -> Iterator[SwitchState]:
    """Extended states for each viable pigeonhole choice, best candidate first.

    extend_state consumes only the first; the augmentation search may branch
    over all of them.
    """
    inst = st.inst
    _, Y = st.saturated()
    y_idx = {v.index for v in Y}
    box = [ce for ce in st.r.sorted_edges() if ce.a in x_prime and ce.b in y_prime]
    escape: dict[int, set[int]] = {}
    for ce in box:
        if ce.colour not in escape:
            escape[ce.colour] = {
                a
                for a, b in inst.class_pairs(ce.colour)
                if b not in y_idx and va(a) in x_prime
            }
    threshold = 1 if mode is Mode.RELAXED else max(
        1, math.ceil(s_k(st.k + 1, st.eps, inst.n_colours))
    )
    scored: list[tuple[int, int, Vertex, list[ColouredEdge]]] = []
    for x_star in sorted(x_prime, key=lambda v: v.index):
        covered = [ce for ce in box if ce.a != x_star and x_star.index in escape[ce.colour]]
        if len(covered) >= threshold:
            scored.append((-len(covered), x_star.index, x_star, covered))
    scored.sort(key=lambda t: (t[0], t[1]))
    for _, _, x_star, covered in scored:
        e_next = _r_edge_at_a(st, x_star)
        if e_next is None or e_next.colour in st.pi:
            continue
        g_next = _zw_for(st, e_next.b, n_pool, prefer_pool=True)
        if g_next is None:
            continue
        x_next_set = sorted((ce.a for ce in covered), key=lambda v: v.index)
        if mode is Mode.STRICT:
            x_next_set = x_next_set[:threshold]
        X_next = frozenset(x_next_set)
        Y_next = neighbourhood_along(st.r, X_next)
        yield replace(
            st,
            k=st.k + 1,
            e_seq=st.e_seq + (e_next,),
            g_seq=st.g_seq + (g_next,),
            x_sets=st.x_sets + (X_next,),
            y_sets=st.y_sets + (Y_next,),
            pi=st.pi + (e_next.colour,),
        )
        if not branch_all:
            return


def extend_state(st: SwitchState, mode: Mode = Mode.RELAXED) -> StepOutcome:
    """One step of the engine: augment via a claim switch, or extend to k + 1.

    Witness search order is claim1_switch, claim2_switch, then claim3_switch,
    with lexicographic edge order inside each. Without a witness the state is
    extended through the pool construction and pigeonhole selection. Raises
    ThresholdInfeasible when the pool is smaller than the mode threshold and
    PigeonholeFailure when no selection vertex qualifies; both are expected
    for strict mode at desk-scale n.
    """
    augmented = _claim12_augment(st)
    if augmented is not None:
        return Augmented(augmented)
    pool_all = _n_pool_all(st)
    required = _n_required(st, mode)
    if len(pool_all) < required:
        value = (Fraction(1, 2) + st.eps.value) * st.inst.n_colours + 1 - 2 * st.k
        raise ThresholdInfeasible(
            f"pool size (1/2 + eps)*n + 1 - 2k = {value}", required, len(pool_all)
        )
    n_pool = frozenset(pool_all if mode is Mode.RELAXED else pool_all[:required])
    y_k = st.y_sets[st.k - 1] if st.k >= 1 else frozenset()
    y_prime = y_k | n_pool
    x_prime = neighbourhood_along(st.r, y_prime)
    augmented = _claim3_augment(st, n_pool, x_prime, y_prime)
    if augmented is not None:
        return Augmented(augmented)
    for candidate in _extension_candidates(st, n_pool, x_prime, y_prime, mode, branch_all=False):
        return Extended(candidate)
    raise PigeonholeFailure("no extension candidate at the current state")


# --- traces ----------------------------------------------------------------------


@dataclass(frozen=True)
class Trace:
    """A recorded engine run: the base state and every step outcome in order."""

    inst: Instance
    mode: Mode
    base: SwitchState
    steps: tuple[StepOutcome, ...]


def run_switch_trace(
    inst: Instance,
    r: RainbowMatching,
    eps: Epsilon,
    mode: Mode = Mode.RELAXED,
    max_steps: int = 8,
) -> Trace:
    """Drive extend_state from the base state until augmentation, a dead end,
    or max_steps extensions, recording every outcome."""
    base = initial_state(inst, r, eps)
    st = base
    steps: list[StepOutcome] = []
    for _ in range(max_steps):
        try:
            out = extend_state(st, mode)
        except (ThresholdInfeasible, PigeonholeFailure):
            break
        steps.append(out)
        if isinstance(out, Augmented):
            break
        st = out.state
    return Trace(inst, mode, base, tuple(steps))


def _state_payload(st: SwitchState) -> dict:
    return {
        "r": [list(ce.triple) for ce in st.r.sorted_edges()],
        "eps": str(st.eps.value),
        "t": st.t,
        "k": st.k,
        "e_seq": [list(ce.triple) for ce in st.e_seq],
        "g_seq": [list(ce.triple) for ce in st.g_seq],
        "x_sets": [sorted(v.index for v in s) for s in st.x_sets],
        "y_sets": [sorted(v.index for v in s) for s in st.y_sets],
        "pi": list(st.pi),
    }


def _state_from_payload(inst: Instance, payload: dict) -> SwitchState:
    def ces(rows) -> tuple[ColouredEdge, ...]:
        return tuple(ColouredEdge.of(int(c), int(a), int(b)) for c, a, b in rows)

    return SwitchState(
        inst=inst,
        r=RainbowMatching(frozenset(ces(payload["r"]))),
        eps=Epsilon(Fraction(payload["eps"])),
        t=int(payload["t"]),
        k=int(payload["k"]),
        e_seq=ces(payload["e_seq"]),
        g_seq=ces(payload["g_seq"]),
        x_sets=tuple(frozenset(va(i) for i in s) for s in payload["x_sets"]),
        y_sets=tuple(frozenset(vb(i) for i in s) for s in payload["y_sets"]),
        pi=tuple(int(c) for c in payload["pi"]),
    )


def trace_to_json(trace: Trace) -> str:
    """Serialize a trace with full state snapshots and property reports."""
    steps = []
    for out in trace.steps:
        if isinstance(out, Extended):
            report = verify_properties(out.state, trace.mode)
            steps.append(
                {
                    "kind": "extended",
                    "state": _state_payload(out.state),
                    "properties": {
                        c.name: {"ok": c.ok, "witness": c.witness} for c in report.checks
                    },
                }
            )
        else:
            steps.append(
                {
                    "kind": "augmented",
                    "matching": [list(ce.triple) for ce in out.matching.sorted_edges()],
                }
            )
    payload = {
        "mode": trace.mode.value,
        "instance": json.loads(instance_to_json(trace.inst)),
        "base_state": _state_payload(trace.base),
        "steps": steps,
    }
    return json.dumps(payload, indent=2) + "\n"


def verify_trace_json(text: str) -> list[str]:
    """Independently re-check every snapshot of a serialized trace.

    Returns failure strings naming the step index and the violated property
    (or the matching defect); empty means the trace verifies.
    """
    try:
        payload = json.loads(text)
        mode = Mode(payload["mode"])
        inst = instance_from_json(json.dumps(payload["instance"]))
        base = _state_from_payload(inst, payload["base_state"])
        steps = payload["steps"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed trace JSON: {exc}") from exc
    failures: list[str] = []
    base_report = verify_properties(base, mode)
    for name in base_report.failed():
        failures.append(f"base state: {name} fails ({base_report[name].witness})")
    for idx, step in enumerate(steps):
        kind = step.get("kind")
        if kind == "extended":
            st = _state_from_payload(inst, step["state"])
            try:
                report = verify_properties(st, mode)
            except ValueError as exc:
                failures.append(f"step {idx}: invalid state ({exc})")
                continue
            for name in report.failed():
                failures.append(f"step {idx}: {name} fails ({report[name].witness})")
        elif kind == "augmented":
            matching = matching_from_json(json.dumps(step["matching"]))
            if not is_rainbow(matching):
                failures.append(f"step {idx}: augmented matching is not rainbow")
            elif len(matching) != len(base.r) + 1:
                failures.append(
                    f"step {idx}: augmented matching has size {len(matching)}, "
                    f"expected {len(base.r) + 1}"
                )
            else:
                for ce in matching.edges:
                    if ce.edge not in inst.class_edges(ce.colour):
                        failures.append(
                            f"step {idx}: augmented edge {ce!r} not in its class"
                        )
                        break
        else:
            failures.append(f"step {idx}: unknown kind {kind!r}")
    return failures
