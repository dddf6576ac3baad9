"""Extremal and randomized instance generators."""

from __future__ import annotations

import random

from .core import Instance, make_instance
from .latin import gen_cyclic, latin_to_instance


def gen_drisko(n: int) -> Instance:
    """Sharpness witness family: 2n-2 size-n matchings on a 2n-cycle, optimum n-1.

    The classes are n-1 copies of M0 = {a_i b_i} followed by n-1 copies of
    M1 = {a_i b_{(i+1) mod n}}; their union is the 2n-cycle a_0 b_0 a_1 b_1 ...
    The only perfect matchings of that cycle are M0 and M1, and neither bundle
    has n distinct colours, so no rainbow matching of size n exists.
    """
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    m0 = [(i, i) for i in range(n)]
    m1 = [(i, (i + 1) % n) for i in range(n)]
    classes = [m0] * (n - 1) + [m1] * (n - 1)
    return make_instance(classes, a_size=n, b_size=n)


def gen_no_transversal(n: int) -> Instance:
    """Witness that class size n does not force a size-n rainbow matching.

    Realized as the coloured-graph form of the cyclic square of even order n,
    which has no transversal. Raises ValueError for odd n (the property is not
    guaranteed there).
    """
    if n < 2 or n % 2 != 0:
        raise ValueError(f"need an even n >= 2, got {n}")
    return latin_to_instance(gen_cyclic(n))


def gen_random_instance(
    n: int,
    m: int,
    a_size: int | None = None,
    b_size: int | None = None,
    seed: int = 0,
) -> Instance:
    """n independent uniform random matchings of size m in an a_size x b_size universe.

    Each class is sampled by choosing m A-vertices, m B-vertices, and a random
    bijection between them. Universe bounds default to n + m per side, which
    leaves room for unsaturated vertices on both sides. Deterministic per seed.
    """
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    if m < 1:
        raise ValueError(f"need m >= 1, got {m}")
    if a_size is None:
        a_size = n + m
    if b_size is None:
        b_size = n + m
    if m > min(a_size, b_size):
        raise ValueError(f"class size {m} infeasible in a {a_size}x{b_size} universe")
    rng = random.Random(seed)
    classes: list[list[tuple[int, int]]] = []
    for _ in range(n):
        a_verts = sorted(rng.sample(range(a_size), m))
        b_verts = rng.sample(range(b_size), m)  # random set in random order = random bijection
        classes.append(list(zip(a_verts, b_verts)))
    return make_instance(classes, a_size=a_size, b_size=b_size)
