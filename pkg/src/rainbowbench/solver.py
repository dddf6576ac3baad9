"""Constructive pipeline: greedy start, switch-based augmentation, oracle fallback."""

from __future__ import annotations

import random
import time
from dataclasses import dataclass

from .core import (
    ColouredEdge,
    Instance,
    RainbowMatching,
    neighbourhood_along,
    swap_colours,
    swap_matching_colours,
)
from .oracle import SearchBudget, max_rainbow
from .proofkit import (
    Epsilon,
    Mode,
    PigeonholeFailure,
    SwitchState,
    ThresholdInfeasible,
    _claim12_augment,
    _claim3_augment,
    _extension_candidates,
    _n_pool_all,
    initial_state,
)

MAX_AUGMENT_DEPTH = 8


@dataclass(frozen=True)
class SolveResult:
    matching: RainbowMatching
    method: str  # "greedy" | "augmented" | "oracle"
    augment_steps: int
    certified_optimal: bool


def greedy_rainbow(inst: Instance, seed: int = 0) -> RainbowMatching:
    """Maximal-by-inclusion rainbow matching; deterministic per seed.

    Colours are processed in ascending class-size order (seeded shuffle breaks
    ties), edges inside a colour in lexicographic order; each colour takes its
    first conflict-free edge, if any.
    """
    rng = random.Random(seed)
    order = list(range(inst.n_colours))
    rng.shuffle(order)
    order.sort(key=lambda c: len(inst.classes[c]))  # stable: seeded tie-break survives
    used_a: set[int] = set()
    used_b: set[int] = set()
    chosen: set[ColouredEdge] = set()
    for c in order:
        for a, b in inst.class_pairs(c):
            if a not in used_a and b not in used_b:
                used_a.add(a)
                used_b.add(b)
                chosen.add(ColouredEdge.of(c, a, b))
                break
    return RainbowMatching(frozenset(chosen))


class _BudgetExhausted(Exception):
    pass


class _AugmentSearch:
    """Bounded-depth exploration over relaxed switch states.

    One node = one visited state. Unlike the single-path extension step, the
    search branches over every viable pigeonhole choice at each state, with
    iterative deepening on the sequence length. The time budget is checked
    every 256 nodes.
    """

    def __init__(self, budget: SearchBudget) -> None:
        self.max_nodes = budget.max_nodes
        self.deadline = (
            None if budget.max_time is None else time.perf_counter() + budget.max_time
        )
        self.nodes = 0

    def _tick(self) -> None:
        self.nodes += 1
        if self.max_nodes is not None and self.nodes > self.max_nodes:
            raise _BudgetExhausted
        if self.deadline is not None and self.nodes % 256 == 0:
            if time.perf_counter() > self.deadline:
                raise _BudgetExhausted

    def dfs(self, st: SwitchState, depth: int) -> RainbowMatching | None:
        self._tick()
        found = _claim12_augment(st)
        if found is not None:
            return found
        n_pool = frozenset(_n_pool_all(st))
        if not n_pool:
            return None
        y_k = st.y_sets[st.k - 1] if st.k >= 1 else frozenset()
        y_prime = y_k | n_pool
        x_prime = neighbourhood_along(st.r, y_prime)
        found = _claim3_augment(st, n_pool, x_prime, y_prime)
        if found is not None:
            return found
        if depth == 0:
            return None
        for child in _extension_candidates(
            st, n_pool, x_prime, y_prime, Mode.RELAXED, branch_all=True
        ):
            found = self.dfs(child, depth - 1)
            if found is not None:
                return found
        return None


def augment(
    inst: Instance, r: RainbowMatching, budget: SearchBudget = SearchBudget.unlimited()
) -> RainbowMatching | None:
    """Search for a rainbow matching of size |r| + 1 via switch exchanges.

    Each unused colour in turn is relabelled to colour 0 and the relaxed-mode
    state space rooted at r is explored with iterative deepening on the
    sequence length, up to min(n - 1, 8). Exploration order is deterministic;
    the node budget counts visited states. None means not found within budget,
    never a proof of optimality.
    """
    if not 0 <= len(r) < inst.n_colours:
        return None
    unused = sorted(set(range(inst.n_colours)) - set(r.colours()))
    max_depth = min(inst.n_colours - 1, MAX_AUGMENT_DEPTH)
    search = _AugmentSearch(budget)
    try:
        for depth in range(1, max_depth + 1):
            for c0 in unused:
                inst0 = swap_colours(inst, 0, c0)
                r0 = swap_matching_colours(r, 0, c0)
                try:
                    found = search.dfs(initial_state(inst0, r0, Epsilon.parse("1")), depth)
                except (ThresholdInfeasible, PigeonholeFailure):
                    continue
                if found is not None:
                    return swap_matching_colours(found, 0, c0)
    except _BudgetExhausted:
        return None
    return None


def solve(
    inst: Instance,
    target: int,
    budget: SearchBudget = SearchBudget.unlimited(),
    seed: int = 0,
    oracle_fallback: bool = True,
    workers: int = 1,
) -> SolveResult:
    """Greedy start, repeated augmentation, then optional exact-oracle fallback.

    Augmentation escalates on stalls: one retry with a doubled budget, then the
    oracle (when enabled) with the original budget. certified_optimal is set
    only when the oracle exhausted its search space. The result never falls
    below the greedy matching.
    """
    if target > inst.n_colours:
        raise ValueError(f"target {target} exceeds n_colours {inst.n_colours}")
    r = greedy_rainbow(inst, seed)
    method = "greedy"
    steps = 0
    attempt_budget = budget
    failures = 0
    while len(r) < target:
        improved = augment(inst, r, attempt_budget)
        if improved is not None:
            r = improved
            method = "augmented"
            steps += 1
            failures = 0
            attempt_budget = budget
            continue
        failures += 1
        if failures == 1 and budget.max_nodes is not None:
            attempt_budget = budget.doubled()
            continue
        break
    if len(r) >= target or not oracle_fallback:
        return SolveResult(r, method, steps, False)
    report = max_rainbow(inst, budget, workers=workers)
    if len(report.best) >= len(r):
        return SolveResult(report.best, "oracle", steps, report.optimal)
    # budget cut the oracle short of even the constructive result
    return SolveResult(r, "oracle", steps, False)
