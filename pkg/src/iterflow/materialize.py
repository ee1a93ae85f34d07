"""Online decisions about persisting operator outputs under a storage budget.

When an operator finishes, its output either gets written to the artifact
store now or never (no deferral, no later eviction).  The reuse benefit of a
node is ``2*load - (compute + sum of ancestor computes)``: one write now plus
one read later, versus recomputing the node and its ancestry later.  Negative
benefit means materializing pays off; the node is then persisted if it still
fits in the remaining budget.

Choosing the globally best subset to persist is a knapsack-hard problem, so
the online rule is a heuristic.  ``offline_oracle`` solves small instances
exactly by subset enumeration and is used to measure the gap.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .recompute import CostAnnotatedDag, TooLargeError, optimal_plan


@dataclass(frozen=True)
class NodeRuntimeStats:
    name: str
    compute_us: int
    load_us: int
    size_bytes: int
    ancestor_compute_us: int

    def __post_init__(self):
        if min(self.compute_us, self.load_us, self.size_bytes, self.ancestor_compute_us) < 0:
            raise ValueError("runtime stats must be nonnegative")


@dataclass
class MaterializationBudget:
    total_bytes: int
    used_bytes: int = 0

    def __post_init__(self):
        if not 0 <= self.used_bytes <= self.total_bytes:
            raise ValueError("used bytes outside [0, total]")

    @property
    def remaining_bytes(self) -> int:
        return self.total_bytes - self.used_bytes


class SkipReason(str, Enum):
    NON_NEGATIVE_BENEFIT = "non_negative_benefit"
    BUDGET_EXCEEDED = "budget_exceeded"


@dataclass(frozen=True)
class MaterializationDecision:
    materialize: bool
    reason: SkipReason | None = None


def reuse_benefit(stats: NodeRuntimeStats) -> int:
    """Signed microseconds; negative means materializing wins next iteration."""
    return 2 * stats.load_us - (stats.compute_us + stats.ancestor_compute_us)


def decide(stats: NodeRuntimeStats, budget: MaterializationBudget) -> MaterializationDecision:
    """Apply the online rule at operator completion; reserves budget on yes."""
    if reuse_benefit(stats) >= 0:
        return MaterializationDecision(False, SkipReason.NON_NEGATIVE_BENEFIT)
    if stats.size_bytes > budget.remaining_bytes:
        return MaterializationDecision(False, SkipReason.BUDGET_EXCEEDED)
    budget.used_bytes += stats.size_bytes
    return MaterializationDecision(True)


def _stats_from_dag(dag: CostAnnotatedDag) -> list[NodeRuntimeStats]:
    anc = dag.ancestors()
    out = []
    for n in dag.order:
        lc = dag.load_cost[n]
        if lc is None:
            continue  # nothing to persist-and-reload without a load cost
        out.append(
            NodeRuntimeStats(
                name=n,
                compute_us=dag.compute_cost[n],
                load_us=lc,
                size_bytes=dag.size[n],
                ancestor_compute_us=sum(dag.compute_cost[a] for a in anc[n]),
            )
        )
    return out


def _next_iteration_cost(dag: CostAnnotatedDag, subset: frozenset[str]) -> int:
    restricted = CostAnnotatedDag(
        order=dag.order,
        parents=dag.parents,
        compute_cost=dag.compute_cost,
        load_cost={n: (dag.load_cost[n] if n in subset else None) for n in dag.order},
        size=dag.size,
        mandatory=dag.mandatory,
    )
    return optimal_plan(restricted).objective


def simulate_online(dag: CostAnnotatedDag, budget_bytes: int) -> frozenset[str]:
    """Run the online rule over nodes in completion (topological) order.

    Models a first full run: every node is computed, so every node with a
    finite prospective load cost is a candidate in order.
    """
    budget = MaterializationBudget(total_bytes=budget_bytes)
    chosen: set[str] = set()
    for stats in _stats_from_dag(dag):
        if decide(stats, budget).materialize:
            chosen.add(stats.name)
    return frozenset(chosen)


def offline_oracle(dag: CostAnnotatedDag, budget_bytes: int) -> frozenset[str]:
    """Exact best subset to persist, assuming full reuse next iteration.

    Enumerates every subset that fits the budget and plans the next iteration
    with loads feasible for exactly that subset.  Ties prefer the smaller
    total byte footprint, then the lexicographically smallest name tuple.
    """
    candidates = [s.name for s in _stats_from_dag(dag)]
    if len(candidates) > 20:
        raise TooLargeError(f"{len(candidates)} candidates exceeds the 20-candidate bound")
    best_key: tuple[int, int, tuple[str, ...]] | None = None
    best: frozenset[str] = frozenset()
    for mask in range(1 << len(candidates)):
        subset = frozenset(c for i, c in enumerate(candidates) if mask >> i & 1)
        total = sum(dag.size[n] for n in subset)
        if total > budget_bytes:
            continue
        cost = _next_iteration_cost(dag, subset)
        key = (cost, total, tuple(sorted(subset)))
        if best_key is None or key < best_key:
            best_key = key
            best = subset
    return best


def next_iteration_cost(dag: CostAnnotatedDag, subset: frozenset[str]) -> int:
    """Planned cost of the next iteration when exactly `subset` was persisted."""
    return _next_iteration_cost(dag, subset)
