"""Exact maximum rainbow matching search and empirical threshold sweeps.

max_rainbow is the ground-truth engine: depth-first branch and bound over
colours with a fail-first colour order, "skip this colour" tried last, and an
admissible bound combining the count of still-viable colours with the number
of unsaturated vertices per side. naive_max_rainbow is a deliberately separate
enumeration used for oracle-vs-oracle equivalence checks.
"""

from __future__ import annotations

import itertools
import multiprocessing
import random
import time
from dataclasses import dataclass
from io import StringIO
from typing import Iterable, Literal

from .core import Instance, RainbowMatching, make_instance, make_matching
from .gen import gen_random_instance

Mode = Literal["exhaustive", "randomized"]

CSV_COLUMNS = (
    "n",
    "m",
    "ell",
    "mode",
    "trials",
    "seed",
    "counterexample_found",
    "instances_checked",
    "elapsed_ms",
)


@dataclass(frozen=True)
class SearchBudget:
    """Node and wall-clock limits; None means unbounded.

    The node budget is checked at every search node, the time budget every
    1024 nodes, so node counts are reproducible for a fixed budget.
    """

    max_nodes: int | None = None
    max_time: float | None = None

    @classmethod
    def unlimited(cls) -> "SearchBudget":
        return cls(None, None)

    @classmethod
    def nodes(cls, max_nodes: int) -> "SearchBudget":
        return cls(max_nodes=max_nodes)

    def doubled(self) -> "SearchBudget":
        return SearchBudget(
            None if self.max_nodes is None else self.max_nodes * 2,
            None if self.max_time is None else self.max_time * 2,
        )


@dataclass(frozen=True)
class SearchReport:
    best: RainbowMatching
    optimal: bool
    nodes_explored: int
    elapsed: float


class _Searcher:
    """Sequential branch-and-bound state; one instance per (sub)search."""

    __slots__ = (
        "pairs",
        "a_size",
        "b_size",
        "max_nodes",
        "deadline",
        "nodes",
        "stopped",
        "best_size",
        "best_sel",
        "best_task",
        "task",
    )

    def __init__(
        self,
        pairs: list[list[tuple[int, int]]],
        a_size: int,
        b_size: int,
        max_nodes: int | None,
        deadline: float | None,
    ) -> None:
        self.pairs = pairs
        self.a_size = a_size
        self.b_size = b_size
        self.max_nodes = max_nodes
        self.deadline = deadline
        self.nodes = 0
        self.stopped = False
        self.best_size = -1
        self.best_sel: list[tuple[int, int, int]] = []
        self.best_task = -1
        self.task = 0

    def dfs(
        self,
        undecided: list[int],
        a_mask: int,
        b_mask: int,
        chosen: list[tuple[int, int, int]],
    ) -> None:
        if self.max_nodes is not None and self.nodes >= self.max_nodes:
            self.stopped = True
            return
        self.nodes += 1
        if self.deadline is not None and self.nodes % 1024 == 0:
            if time.perf_counter() > self.deadline:
                self.stopped = True
                return
        size = len(chosen)
        if size > self.best_size:
            self.best_size = size
            self.best_sel = list(chosen)
            self.best_task = self.task
        viable: list[tuple[int, int, list[tuple[int, int]]]] = []
        for c in undecided:
            cands = [
                (a, b)
                for a, b in self.pairs[c]
                if not (a_mask >> a) & 1 and not (b_mask >> b) & 1
            ]
            if cands:
                viable.append((len(cands), c, cands))
        bound = size + min(len(viable), self.a_size - size, self.b_size - size)
        if bound <= self.best_size:
            return
        _, branch_c, cands = min(viable, key=lambda t: (t[0], t[1]))
        rest = [c for _, c, _ in viable if c != branch_c]
        for a, b in cands:
            chosen.append((branch_c, a, b))
            self.dfs(rest, a_mask | (1 << a), b_mask | (1 << b), chosen)
            chosen.pop()
            if self.stopped:
                return
        self.dfs(rest, a_mask, b_mask, chosen)


def _root_moves(
    pairs: list[list[tuple[int, int]]],
) -> tuple[int, list[tuple[int, int] | None], list[int]] | None:
    """Root branching colour, its moves (edges then skip), and the remaining colours."""
    viable = [(len(pairs[c]), c) for c in range(len(pairs)) if pairs[c]]
    if not viable:
        return None
    _, branch_c = min(viable)
    rest = [c for _, c in viable if c != branch_c]
    moves: list[tuple[int, int] | None] = list(pairs[branch_c])
    moves.append(None)
    return branch_c, moves, rest


def _run_tasks(
    pairs: list[list[tuple[int, int]]],
    a_size: int,
    b_size: int,
    max_nodes: int | None,
    max_time: float | None,
    branch_c: int,
    tasks: list[tuple[int, tuple[int, int] | None]],
) -> tuple[int, int, list[tuple[int, int, int]], int, bool]:
    """Run a set of root moves sequentially, carrying the best bound across them.

    Returns (best_size, best_task_index, best_selection, nodes, stopped).
    """
    deadline = None if max_time is None else time.perf_counter() + max_time
    s = _Searcher(pairs, a_size, b_size, max_nodes, deadline)
    for task_idx, move in tasks:
        if s.stopped:
            break
        s.task = task_idx
        if move is None:
            s.dfs([c for c in range(len(pairs)) if pairs[c] and c != branch_c], 0, 0, [])
        else:
            a, b = move
            s.dfs(
                [c for c in range(len(pairs)) if pairs[c] and c != branch_c],
                1 << a,
                1 << b,
                [(branch_c, a, b)],
            )
    return s.best_size, s.best_task, s.best_sel, s.nodes, s.stopped


def _worker_entry(payload):
    return _run_tasks(*payload)


def max_rainbow(
    inst: Instance,
    budget: SearchBudget = SearchBudget.unlimited(),
    workers: int = 1,
) -> SearchReport:
    """Exact maximum rainbow matching search.

    Deterministic for a fixed instance at workers=1; for any worker count the
    reported optimum size (and the reported matching) is identical, while node
    counts are a function of the worker count. With workers > 1 the root branch
    set is partitioned round-robin across processes and each worker receives
    the full budget; optimal is true only when every partition was exhausted.
    """
    start = time.perf_counter()
    pairs = [inst.class_pairs(c) for c in range(inst.n_colours)]
    root = _root_moves(pairs)
    if workers <= 1 or root is None:
        deadline = None if budget.max_time is None else start + budget.max_time
        s = _Searcher(pairs, inst.a_size, inst.b_size, budget.max_nodes, deadline)
        s.dfs([c for c in range(len(pairs)) if pairs[c]], 0, 0, [])
        best = make_matching(s.best_sel) if s.best_sel else RainbowMatching.empty()
        return SearchReport(best, not s.stopped, s.nodes, time.perf_counter() - start)
    branch_c, moves, _ = root
    indexed = list(enumerate(moves))

    buckets: list[list[tuple[int, tuple[int, int] | None]]] = [
        [] for _ in range(min(workers, len(indexed)))
    ]
    for i, task in enumerate(indexed):
        buckets[i % len(buckets)].append(task)
    payloads = [
        (pairs, inst.a_size, inst.b_size, budget.max_nodes, budget.max_time, branch_c, bucket)
        for bucket in buckets
    ]
    with multiprocessing.Pool(len(buckets)) as pool:
        results = pool.map(_worker_entry, payloads)
    # the split replaces the root node, so count it explicitly
    total_nodes = 1 + sum(nodes for _, _, _, nodes, _ in results)
    stopped = any(st for _, _, _, _, st in results)
    best_size, best_task, best_sel = -1, -1, []
    for size, task_idx, sel, _, _ in results:
        if size > best_size or (size == best_size and 0 <= task_idx < best_task):
            best_size, best_task, best_sel = size, task_idx, sel
    best = make_matching(best_sel) if best_size > 0 else RainbowMatching.empty()
    return SearchReport(best, not stopped, total_nodes, time.perf_counter() - start)


def naive_max_rainbow(inst: Instance) -> SearchReport:
    """Exhaustive enumeration over all ways to pick at most one edge per class.

    No pruning; independent of max_rainbow by construction. Hard guard:
    n_colours <= 8 and every class size <= 8.
    """
    if inst.n_colours > 8:
        raise ValueError(f"naive oracle guard: n_colours={inst.n_colours} > 8")
    if any(len(cls) > 8 for cls in inst.classes):
        raise ValueError("naive oracle guard: some class has more than 8 edges")
    start = time.perf_counter()
    options: list[list[tuple[int, int] | None]] = []
    for c in range(inst.n_colours):
        opts: list[tuple[int, int] | None] = [None]
        opts.extend(inst.class_pairs(c))
        options.append(opts)
    best_sel: list[tuple[int, int, int]] = []
    combos = 0
    for combo in itertools.product(*options):
        combos += 1
        a_mask = 0
        b_mask = 0
        sel: list[tuple[int, int, int]] = []
        ok = True
        for c, choice in enumerate(combo):
            if choice is None:
                continue
            a, b = choice
            if (a_mask >> a) & 1 or (b_mask >> b) & 1:
                ok = False
                break
            a_mask |= 1 << a
            b_mask |= 1 << b
            sel.append((c, a, b))
        if ok and len(sel) > len(best_sel):
            best_sel = sel
    best = make_matching(best_sel) if best_sel else RainbowMatching.empty()
    return SearchReport(best, True, combos, time.perf_counter() - start)


# --- empirical threshold sweeps -------------------------------------------------


@dataclass(frozen=True)
class SweepReport:
    """Outcome of one f(n)/mu(n, ell) sweep; maps 1:1 onto a CSV row."""

    n: int
    m: int
    ell: int
    mode: str
    trials: int
    seed: int
    counterexample: Instance | None
    instances_checked: int
    elapsed_ms: int

    @property
    def counterexample_found(self) -> bool:
        return self.counterexample is not None


def estimate_mu(
    n: int,
    ell: int,
    m: int,
    mode: Mode,
    trials: int = 0,
    seed: int = 0,
) -> SweepReport:
    """Search for a family of n size-m matchings with no rainbow matching of size n - ell.

    Exhaustive mode is complete for n = 2: the first class is canonicalized to
    {a_i b_i : i < m} (vertex relabelling preserves rainbow matchings) and the
    second ranges over every size-m matching in the 2m x 2m universe, so the
    absence of a counterexample proves mu(2, ell) <= m. Randomized mode (n <= 6)
    samples gen_random_instance families; absence there is evidence, not proof.
    """
    if not 0 <= ell < n:
        raise ValueError(f"need 0 <= ell < n, got ell={ell}, n={n}")
    if m < 1:
        raise ValueError(f"need m >= 1, got {m}")
    target = n - ell
    start = time.perf_counter()

    def report(counterexample: Instance | None, checked: int) -> SweepReport:
        elapsed_ms = int((time.perf_counter() - start) * 1000)
        return SweepReport(n, m, ell, mode, trials, seed, counterexample, checked, elapsed_ms)

    if mode == "exhaustive":
        if n != 2:
            raise ValueError(f"exhaustive mode is canonicalized for n = 2 only, got n={n}")
        f0 = [(i, i) for i in range(m)]
        universe = 2 * m
        checked = 0
        for sa in itertools.combinations(range(universe), m):
            for sb in itertools.combinations(range(universe), m):
                for perm in itertools.permutations(sb):
                    checked += 1
                    inst = make_instance([f0, list(zip(sa, perm))], universe, universe)
                    if len(max_rainbow(inst).best) < target:
                        return report(inst, checked)
        return report(None, checked)

    if mode == "randomized":
        if n > 6:
            raise ValueError(f"randomized mode guard: n={n} > 6")
        rng = random.Random(seed)
        for t in range(trials):
            inst = gen_random_instance(n, m, seed=rng.getrandbits(48))
            if len(max_rainbow(inst).best) < target:
                return report(inst, t + 1)
        return report(None, trials)

    raise ValueError(f"unknown mode {mode!r}")


def estimate_f(
    n: int,
    m: int,
    mode: Mode,
    trials: int = 0,
    seed: int = 0,
) -> SweepReport:
    """Search for n size-m matchings with no rainbow matching of size n (mu with ell = 0)."""
    return estimate_mu(n, 0, m, mode, trials, seed)


def reports_to_csv(reports: Iterable[SweepReport]) -> str:
    """Render sweep reports in the fixed experiment CSV column order."""
    import csv

    buf = StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in reports:
        writer.writerow(
            [
                r.n,
                r.m,
                r.ell,
                r.mode,
                r.trials,
                r.seed,
                "true" if r.counterexample_found else "false",
                r.instances_checked,
                r.elapsed_ms,
            ]
        )
    return buf.getvalue()
