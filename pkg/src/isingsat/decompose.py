"""Spin-budgeted decomposition: carve a CNF into chip-sized MaxSAT subproblems.

The variable interaction graph (variables as nodes, co-occurrence as edges)
is walked breadth- or depth-first from a randomized start until the projected
spin cost — selected variables plus one ancilla per fully-selected 3-literal
clause — would exceed the budget.  Everything outside the selection is frozen
to its best-known value; freezing may shorten or satisfy clauses but never
triggers further simplification, so conflicting residues like (b)(~b) survive
verbatim and the subproblem becomes MaxSAT.  A solved subproblem is merged
back only if the full-formula satisfied count does not drop (plateau moves
are allowed; they escape conflicting-unit stalemates that strict improvement
cannot).

A repetition filter keeps the walk from orbiting one region: any variable
selected ``window`` times in a row sits out (pushed behind every other
candidate) for the next ``window`` iterations.
"""
from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field

from .cnf import Assignment, Cnf, count_satisfied, evaluate
from .preprocess import ConditionList, reconstruct
from .qubo import ChipProfile, QuboModel, cnf_to_qubo, qubo_to_ising, scale_to_chip
from .solver import AnnealSchedule, SolveRequest, solve

__all__ = [
    "Vig",
    "Subproblem",
    "FilterState",
    "GlobalState",
    "DecompositionRun",
    "build_vig",
    "select_bfs",
    "select_dfs",
    "freeze_and_extract",
    "update_global",
    "iterate",
]


@dataclass(frozen=True)
class Vig:
    """Variable interaction graph: adjacency is sorted for deterministic walks."""

    adjacency: dict[int, tuple[int, ...]]

    @property
    def nodes(self) -> list[int]:
        return sorted(self.adjacency)

    def degree(self, var: int) -> int:
        return len(self.adjacency.get(var, ()))

    def neighbors(self, var: int) -> tuple[int, ...]:
        return self.adjacency.get(var, ())


def build_vig(cnf: Cnf) -> Vig:
    """Connect every pair of variables sharing a clause; no self-loops."""
    nbrs: dict[int, set[int]] = {}
    for clause in cnf.clauses:
        vs = sorted({abs(lit) for lit in clause})
        for v in vs:
            nbrs.setdefault(v, set()).update(vs)
    for v, ns in nbrs.items():
        ns.discard(v)
    return Vig({v: tuple(sorted(ns)) for v, ns in nbrs.items()})


@dataclass
class FilterState:
    """Tracks consecutive selections; over-used variables cool down.

    A variable selected ``window`` iterations in a row is excluded from
    selection for the next ``window`` iterations unless nothing else is
    reachable.
    """

    window: int = 5
    consecutive: dict[int, int] = field(default_factory=dict)
    cooldown: dict[int, int] = field(default_factory=dict)

    def is_cooling(self, var: int) -> bool:
        return self.cooldown.get(var, 0) > 0

    def note_selection(self, selected: set[int]) -> None:
        """Advance one iteration: tick cooldowns, bump/reset streak counters."""
        for v in list(self.cooldown):
            self.cooldown[v] -= 1
            if self.cooldown[v] <= 0:
                del self.cooldown[v]
        for v in list(self.consecutive):
            if v not in selected:
                del self.consecutive[v]
        for v in selected:
            streak = self.consecutive.get(v, 0) + 1
            if streak >= self.window:
                self.cooldown[v] = self.window
                self.consecutive.pop(v, None)
            else:
                self.consecutive[v] = streak


@dataclass
class GlobalState:
    """Best-known full assignment and its satisfied-clause count."""

    assignment: Assignment
    best_count: int
    iteration: int = 0
    rng: random.Random = field(default_factory=random.Random)


@dataclass(frozen=True)
class Subproblem:
    """One frozen slice: the kept clauses verbatim plus their QUBO."""

    selected: frozenset[int]
    frozen: dict[int, bool]
    sub_cnf: Cnf
    qubo: QuboModel
    spin_cost: int
    satisfied_baseline: int


class _CostTracker:
    """Incremental projected spin cost: |selection| + induced 3-clause ancillas."""

    def __init__(self, cnf: Cnf) -> None:
        self.by_var: dict[int, list[tuple[int, ...]]] = {}
        for clause in cnf.clauses:
            if len(clause) == 3:
                vs = tuple(sorted({abs(lit) for lit in clause}))
                if len(vs) == 3:
                    for v in vs:
                        self.by_var.setdefault(v, []).append(vs)
        self.selected: set[int] = set()
        self.ancillas = 0

    def cost_with(self, var: int) -> int:
        extra = 0
        for vs in self.by_var.get(var, ()):
            if all(u == var or u in self.selected for u in vs):
                extra += 1
        return len(self.selected) + 1 + self.ancillas + extra

    def add(self, var: int) -> None:
        for vs in self.by_var.get(var, ()):
            if all(u == var or u in self.selected for u in vs):
                self.ancillas += 1
        self.selected.add(var)


def _walk_select(vig: Vig, cnf: Cnf, budget: int, start: int,
                 filt: FilterState | None, depth_first: bool) -> set[int]:
    filt = filt or FilterState()
    cost = _CostTracker(cnf)
    active: deque[int] = deque()
    parked: deque[int] = deque()  # cooling vars wait here until nothing else is left
    queued: set[int] = set()

    def push(v: int) -> None:
        if v in queued or v in cost.selected:
            return
        queued.add(v)
        (parked if filt.is_cooling(v) else active).append(v)

    push(start)
    pending = sorted(vig.adjacency.keys() | {start})
    pend_pos = 0
    while True:
        if active:
            v = active.popleft() if not depth_first else active.pop()
        elif parked:
            v = parked.popleft() if not depth_first else parked.pop()
        else:
            # component exhausted with budget to spare: restart at the lowest
            # untouched variable so a big enough budget selects everything
            while pend_pos < len(pending) and (
                    pending[pend_pos] in queued or pending[pend_pos] in cost.selected):
                pend_pos += 1
            if pend_pos == len(pending):
                break
            push(pending[pend_pos])
            continue
        queued.discard(v)
        if cost.cost_with(v) > budget:
            break
        cost.add(v)
        nbrs = vig.neighbors(v)
        if depth_first:
            # stack: push high-degree first so the lowest-degree neighbor pops
            # next and the walk extends along chains
            for u in sorted(nbrs, key=lambda u: (-vig.degree(u), -u)):
                push(u)
        else:
            for u in nbrs:
                push(u)
    return cost.selected


def select_bfs(vig: Vig, cnf: Cnf, budget: int, start: int,
               filt: FilterState | None = None) -> set[int]:
    """Breadth-first ball around ``start`` that fits the spin budget."""
    return _walk_select(vig, cnf, budget, start, filt, depth_first=False)


def select_dfs(vig: Vig, cnf: Cnf, budget: int, start: int,
               filt: FilterState | None = None) -> set[int]:
    """Depth-first chain from ``start``, preferring low-degree neighbors."""
    return _walk_select(vig, cnf, budget, start, filt, depth_first=True)


def freeze_and_extract(cnf: Cnf, selected: set[int],
                       state: GlobalState) -> Subproblem:
    """Substitute best-known values for everything outside the selection.

    A true frozen literal satisfies its clause (dropped, counted in the
    baseline); a false one is removed.  Kept clauses are NOT simplified
    further — conflicting units and duplicates stay, and a clause emptied by
    freezing becomes a constant +1 in the QUBO offset.
    """
    if not selected:
        raise ValueError("selection is empty")
    kept: list[tuple[int, ...]] = []
    baseline = 0
    frozen: dict[int, bool] = {}
    for clause in cnf.clauses:
        lits: list[int] = []
        satisfied = False
        for lit in clause:
            v = abs(lit)
            if v in selected:
                lits.append(lit)
                continue
            val = state.assignment.get(v, False)
            frozen[v] = val
            if (lit > 0) == val:
                satisfied = True
                break
        if satisfied:
            baseline += 1
        else:
            kept.append(tuple(lits))
    sub_cnf = Cnf(num_vars=cnf.num_vars, clauses=tuple(kept))
    qubo = cnf_to_qubo(sub_cnf)
    spin_cost = len(selected) + sum(1 for c in kept if len(c) == 3)
    return Subproblem(
        selected=frozenset(selected),
        frozen=frozen,
        sub_cnf=sub_cnf,
        qubo=qubo,
        spin_cost=spin_cost,
        satisfied_baseline=baseline,
    )


def update_global(state: GlobalState, sub_solution: Assignment,
                  selected: set[int], cnf: Cnf,
                  filt: FilterState | None = None) -> bool:
    """Merge a subproblem solution if the full satisfied count does not drop.

    Equal counts are accepted (plateau moves).  Returns True when merged.
    """
    candidate = dict(state.assignment)
    candidate.update(sub_solution)
    count = count_satisfied(cnf.clauses, candidate)
    accepted = count >= state.best_count
    if accepted:
        state.assignment = candidate
        state.best_count = count
    if filt is not None:
        filt.note_selection(selected)
    return accepted


@dataclass(frozen=True)
class DecompositionRun:
    """Outcome of one decomposition loop on one preprocessed instance."""

    solved: bool
    verified: bool
    iterations_used: int
    solver_calls: int
    best_satisfied: int
    num_clauses: int
    assignment: Assignment | None
    reason: str = ""
    satisfied_history: tuple[int, ...] = ()
    trace: tuple[tuple[int, float, float], ...] = ()


def _decode(qubo: QuboModel, spins: tuple[int, ...]) -> Assignment:
    return {var: spins[idx] > 0 for idx, var in qubo.source_var_map.items()}


def iterate(cnf: Cnf, condition: ConditionList, original: Cnf, *,
            strategy: str = "dfs", backend: str = "emulator",
            profile: ChipProfile | None = None, budget: int | None = None,
            cap: int = 5000, seed: int = 0, num_samples: int = 1,
            schedule: AnnealSchedule | None = None,
            keep_history: bool = False,
            collect_trace: bool = False) -> DecompositionRun:
    """Select → freeze → solve → merge until every clause holds or the cap hits.

    ``cnf`` is the (possibly preprocessed) formula to decompose; ``condition``
    and ``original`` lift and check the final assignment, so every success is
    verified against the untouched input.  A formula carrying the empty-clause
    marker can never be fully satisfied and fails immediately.
    """
    if strategy not in ("bfs", "dfs"):
        raise ValueError(f"unknown strategy {strategy!r}")
    prof = profile or ChipProfile()
    spin_budget = prof.spin_budget if budget is None else min(budget, prof.spin_budget)
    m = cnf.num_clauses

    if cnf.is_unsat_marked():
        return DecompositionRun(False, False, 0, 0, 0, m, None, reason="unsat-marker")

    rng = random.Random(seed)
    occurring = cnf.occurring_vars()
    assignment: Assignment = {v: bool(rng.getrandbits(1)) for v in occurring}
    state = GlobalState(assignment=assignment,
                        best_count=count_satisfied(cnf.clauses, assignment),
                        rng=rng)
    filt = FilterState()
    vig = build_vig(cnf)
    select = select_dfs if strategy == "dfs" else select_bfs

    iterations = 0
    solver_calls = 0
    history: list[int] = []
    first_trace: tuple[tuple[int, float, float], ...] = ()
    reason = "cap"
    while state.best_count < m and iterations < cap:
        iterations += 1
        state.iteration = iterations
        unsat_vars = sorted({
            abs(lit)
            for clause in cnf.clauses
            for lit in clause
            if not any((l > 0) == state.assignment[abs(l)] for l in clause)
        })
        pool = unsat_vars or occurring
        start = pool[rng.randrange(len(pool))]
        selected = select(vig, cnf, spin_budget, start, filt)
        if not selected:
            reason = "budget-too-small"
            break
        sub = freeze_and_extract(cnf, selected, state)
        if sub.spin_cost > spin_budget:
            raise RuntimeError(
                f"selection produced spin cost {sub.spin_cost} > {spin_budget}")
        if sub.qubo.num_vars == 0:
            sub_solution: Assignment = {}
        else:
            ising = qubo_to_ising(sub.qubo)
            scaled, _distortion = scale_to_chip(ising, prof)
            request = SolveRequest(
                model=scaled if backend == "emulator" else ising,
                seed=rng.getrandbits(63),
                num_samples=num_samples,
                backend=backend,
                budget=spin_budget,
                collect_trace=collect_trace and solver_calls == 0,
            )
            result = solve(request, schedule, prof)
            if solver_calls == 0 and collect_trace:
                first_trace = result.trace
            solver_calls += 1
            sub_solution = _decode(sub.qubo, result.best_spins)
        update_global(state, sub_solution, set(selected), cnf, filt)
        if keep_history:
            history.append(state.best_count)

    solved = state.best_count == m
    if not solved:
        return DecompositionRun(False, False, iterations, solver_calls,
                                state.best_count, m, None, reason=reason,
                                satisfied_history=tuple(history),
                                trace=first_trace)
    full = reconstruct(condition, state.assignment, original.num_vars)
    verified = evaluate(original, full).all_satisfied
    if not verified:
        raise RuntimeError("solved subproblem failed verification on the input CNF")
    return DecompositionRun(True, True, iterations, solver_calls,
                            state.best_count, m, full, reason="solved",
                            satisfied_history=tuple(history),
                            trace=first_trace)
