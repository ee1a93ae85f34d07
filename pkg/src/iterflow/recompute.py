"""Optimal load/compute/prune planning via max-flow/min-cut.

Given per-node compute costs, load costs (possibly infeasible), and a set of
mandatory nodes, the planner assigns each node one of three states:

* ``compute`` -- run the operator (cost ``c``); every parent must then be
  available (loaded or computed), never pruned;
* ``load`` -- read the stored artifact (cost ``l``); loading has no
  prerequisites of its own;
* ``prune`` -- skip the node entirely (cost 0).

Minimizing total cost subject to the prune constraint is an instance of
project selection / maximum-weight closure, solved exactly by one min cut.
Two binary "projects" represent each node: ``avail`` (the node's result is
available) with profit ``-l``, and ``comp`` (it is computed rather than
loaded) with profit ``l - c``.  ``comp`` requires its own ``avail`` and every
parent's ``avail``; mandatory nodes add a dominating bonus to ``avail`` so
they are never pruned; an infeasible load is priced at the dominating
sentinel, which forces such nodes to be computed whenever they are needed.

All arithmetic is exact: costs are nonnegative integers (microseconds),
scaled so that tiny rank-indexed perturbations of the compute costs break
ties deterministically (load wins over an equal-cost compute; no zero-cost
busywork survives) without ever distorting the true objective.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping


class NodeState(str, Enum):
    LOAD = "load"
    COMPUTE = "compute"
    PRUNE = "prune"


class InfeasiblePlanError(Exception):
    def __init__(self, constraint: str, node: str, message: str):
        super().__init__(f"{constraint} violated at {node!r}: {message}")
        self.constraint = constraint
        self.node = node


class TooLargeError(Exception):
    pass


@dataclass(frozen=True)
class CostAnnotatedDag:
    """Cost-annotated live subgraph: the planning problem instance.

    ``load_cost[n] is None`` means no stored artifact exists for ``n``.
    """

    order: tuple[str, ...]
    parents: Mapping[str, tuple[str, ...]]
    compute_cost: Mapping[str, int]
    load_cost: Mapping[str, int | None]
    size: Mapping[str, int]
    mandatory: frozenset[str]

    def __post_init__(self):
        seen: set[str] = set()
        for n in self.order:
            for p in self.parents[n]:
                if p not in seen:
                    raise ValueError(f"parent {p!r} of {n!r} out of order")
            if self.compute_cost[n] < 0:
                raise ValueError(f"negative compute cost at {n!r}")
            lc = self.load_cost[n]
            if lc is not None and lc < 0:
                raise ValueError(f"negative load cost at {n!r}")
            seen.add(n)
        if not self.mandatory <= seen:
            raise ValueError("mandatory nodes outside the DAG")

    def ancestors(self) -> dict[str, frozenset[str]]:
        out: dict[str, frozenset[str]] = {}
        for n in self.order:
            acc: set[str] = set()
            for p in self.parents[n]:
                acc.add(p)
                acc |= out[p]
            out[n] = frozenset(acc)
        return out


@dataclass(frozen=True)
class ExecutionPlan:
    states: Mapping[str, NodeState]
    objective: int


def plan_cost(dag: CostAnnotatedDag, plan: ExecutionPlan) -> int:
    """Evaluate the iteration-cost objective, checking every plan invariant."""
    states = plan.states
    for n in dag.order:
        if n not in states:
            raise InfeasiblePlanError("coverage", n, "no state assigned")
    total = 0
    for n in dag.order:
        s = states[n]
        if s is NodeState.COMPUTE:
            for p in dag.parents[n]:
                if states[p] is NodeState.PRUNE:
                    raise InfeasiblePlanError(
                        "prune-constraint", n, f"computed node has pruned parent {p!r}"
                    )
            total += dag.compute_cost[n]
        elif s is NodeState.LOAD:
            lc = dag.load_cost[n]
            if lc is None:
                raise InfeasiblePlanError("feasible-load", n, "no stored artifact")
            total += lc
        elif n in dag.mandatory:
            raise InfeasiblePlanError("availability", n, "mandatory node pruned")
    return total


# ---------------------------------------------------------------------------
# generic max-flow / min-cut (Dinic), exact integer arithmetic


@dataclass
class FlowNetwork:
    """Directed network with integer capacities between source and sink.

    Arcs live in flat parallel lists; the residual twin of arc ``i`` is
    ``i ^ 1``.  This keeps the inner Dinic loops on plain ints.
    """

    source: int = 0
    sink: int = 1
    labels: list[str] = field(default_factory=lambda: ["source", "sink"])
    adj: list[list[int]] = field(default_factory=lambda: [[], []])
    arc_to: list[int] = field(default_factory=list)
    arc_cap: list[int] = field(default_factory=list)
    arc_orig: list[int] = field(default_factory=list)
    # reduction bookkeeping, populated by build_network
    big_m: int = 0
    scale: int = 1
    avail_vertex: dict[str, int] = field(default_factory=dict)
    comp_vertex: dict[str, int] = field(default_factory=dict)

    def add_vertex(self, label: str) -> int:
        self.labels.append(label)
        self.adj.append([])
        return len(self.adj) - 1

    def add_arc(self, u: int, v: int, cap: int) -> None:
        if cap < 0:
            raise ValueError("negative capacity")
        idx = len(self.arc_to)
        self.arc_to.extend((v, u))
        self.arc_cap.extend((cap, 0))
        self.arc_orig.extend((cap, 0))
        self.adj[u].append(idx)
        self.adj[v].append(idx + 1)

    def arc_count(self) -> int:
        return len(self.arc_to) // 2


@dataclass(frozen=True)
class MinCut:
    value: int
    source_side: frozenset[int]


def min_cut(net: FlowNetwork) -> MinCut:
    """Exact max flow via Dinic; returns the flow value and the minimal
    source-side vertex set (residual reachability from the source)."""
    n = len(net.adj)
    s, t = net.source, net.sink
    adj, arc_to, arc_cap = net.adj, net.arc_to, net.arc_cap
    flow = 0
    while True:
        level = [-1] * n
        level[s] = 0
        queue = deque([s])
        while queue:
            u = queue.popleft()
            lu = level[u] + 1
            for i in adj[u]:
                v = arc_to[i]
                if arc_cap[i] > 0 and level[v] < 0:
                    level[v] = lu
                    queue.append(v)
        if level[t] < 0:
            break
        it = [0] * n
        while True:
            pushed = _blocking_path(adj, arc_to, arc_cap, s, t, level, it)
            if pushed == 0:
                break
            flow += pushed

    side: set[int] = set()
    stack = [s]
    while stack:
        u = stack.pop()
        if u in side:
            continue
        side.add(u)
        for i in adj[u]:
            if arc_cap[i] > 0 and arc_to[i] not in side:
                stack.append(arc_to[i])
    return MinCut(value=flow, source_side=frozenset(side))


def _blocking_path(adj, arc_to, arc_cap, s, t, level, it):
    """Advance/retreat DFS finding one augmenting path in the level graph."""
    path: list[int] = []
    u = s
    while True:
        if u == t:
            bottleneck = min(arc_cap[i] for i in path)
            for i in path:
                arc_cap[i] -= bottleneck
                arc_cap[i ^ 1] += bottleneck
            return bottleneck
        advanced = False
        while it[u] < len(adj[u]):
            i = adj[u][it[u]]
            v = arc_to[i]
            if arc_cap[i] > 0 and level[v] == level[u] + 1:
                path.append(i)
                u = v
                advanced = True
                break
            it[u] += 1
        if advanced:
            continue
        level[u] = -1  # dead end: remove from level graph
        if not path:
            return 0
        i = path.pop()
        u = arc_to[i ^ 1]
        it[u] += 1


def cut_capacity(net: FlowNetwork, source_side: frozenset[int]) -> int:
    """Total original capacity of arcs crossing from the source side out."""
    total = 0
    for u in source_side:
        for i in net.adj[u]:
            if net.arc_to[i] not in source_side:
                total += net.arc_orig[i]
    return total


# ---------------------------------------------------------------------------
# the reduction


def _scaled_costs(dag: CostAnnotatedDag) -> tuple[dict[str, int], dict[str, int | None], int, int]:
    n = len(dag.order)
    scale = 1 << n  # strictly larger than the sum of all 2**i perturbations
    comp: dict[str, int] = {}
    load: dict[str, int | None] = {}
    for i, name in enumerate(dag.order):
        comp[name] = dag.compute_cost[name] * scale + (1 << i)
        lc = dag.load_cost[name]
        load[name] = None if lc is None else lc * scale
    big = sum(comp.values()) + sum(l for l in load.values() if l is not None) + 1
    return comp, load, big, scale


def build_network(dag: CostAnnotatedDag) -> FlowNetwork:
    """Materialize the project-selection min-cut network for an instance."""
    comp_cost, load_cost, big, scale = _scaled_costs(dag)
    net = FlowNetwork(big_m=big, scale=scale)
    for name in dag.order:
        net.avail_vertex[name] = net.add_vertex(f"avail:{name}")
        net.comp_vertex[name] = net.add_vertex(f"comp:{name}")
    for name in dag.order:
        av, cv = net.avail_vertex[name], net.comp_vertex[name]
        l = load_cost[name]
        l_eff = big if l is None else l
        avail_profit = (big if name in dag.mandatory else 0) - l_eff
        comp_profit = l_eff - comp_cost[name]
        for vertex, profit in ((av, avail_profit), (cv, comp_profit)):
            if profit > 0:
                net.add_arc(net.source, vertex, profit)
            elif profit < 0:
                net.add_arc(vertex, net.sink, -profit)
        net.add_arc(cv, av, big)
        for p in dag.parents[name]:
            net.add_arc(cv, net.avail_vertex[p], big)
    return net


def _decode(dag: CostAnnotatedDag, net: FlowNetwork, side: frozenset[int]) -> dict[str, NodeState]:
    states: dict[str, NodeState] = {}
    for name in dag.order:
        has_avail = net.avail_vertex[name] in side
        has_comp = net.comp_vertex[name] in side
        if has_comp and not has_avail:
            raise AssertionError(f"closure violated at {name!r}")
        if has_comp:
            states[name] = NodeState.COMPUTE
        elif has_avail:
            states[name] = NodeState.LOAD
        else:
            states[name] = NodeState.PRUNE
    return states


def optimal_plan(dag: CostAnnotatedDag) -> ExecutionPlan:
    """Globally cost-minimal feasible plan, deterministic under ties."""
    if not dag.order:
        return ExecutionPlan(states={}, objective=0)
    net = build_network(dag)
    cut = min_cut(net)
    states = _decode(dag, net, cut.source_side)
    plan = ExecutionPlan(states=states, objective=0)
    objective = plan_cost(dag, plan)  # validates feasibility as a side effect
    return ExecutionPlan(states=states, objective=objective)


def brute_force_plan(dag: CostAnnotatedDag) -> ExecutionPlan:
    """Exhaustive oracle over all feasible assignments (small instances only).

    Tie-breaking matches optimal_plan: minimize true cost, then the
    rank-weighted compute set, then the rank-weighted load set.
    """
    n = len(dag.order)
    if n > 12:
        raise TooLargeError(f"{n} nodes exceeds the 12-node enumeration bound")
    if n == 0:
        return ExecutionPlan(states={}, objective=0)

    rank = {name: i for i, name in enumerate(dag.order)}
    best: tuple[int, int, int] | None = None
    best_states: dict[str, NodeState] | None = None
    states: dict[str, NodeState] = {}

    def recurse(i: int, cost: int, comp_key: int, load_key: int) -> None:
        nonlocal best, best_states
        if best is not None and cost > best[0]:
            return
        if i == n:
            key = (cost, comp_key, load_key)
            if best is None or key < best:
                best = key
                best_states = dict(states)
            return
        name = dag.order[i]
        parents_ok = all(states[p] is not NodeState.PRUNE for p in dag.parents[name])
        lc = dag.load_cost[name]
        if lc is not None:
            states[name] = NodeState.LOAD
            recurse(i + 1, cost + lc, comp_key, load_key + (1 << rank[name]))
        if parents_ok:
            states[name] = NodeState.COMPUTE
            recurse(
                i + 1,
                cost + dag.compute_cost[name],
                comp_key + (1 << rank[name]),
                load_key,
            )
        if name not in dag.mandatory:
            states[name] = NodeState.PRUNE
            recurse(i + 1, cost, comp_key, load_key)
        states.pop(name, None)

    recurse(0, 0, 0, 0)
    assert best is not None and best_states is not None
    return ExecutionPlan(states=best_states, objective=best[0])


# ---------------------------------------------------------------------------
# debug serialization (stable line format for golden tests and the CLI)


def format_instance(dag: CostAnnotatedDag, plan: ExecutionPlan | None = None) -> str:
    """One line per node: name, c, l|inf, size, mandatory, state."""
    lines = []
    for n in dag.order:
        lc = dag.load_cost[n]
        fields = [
            n,
            str(dag.compute_cost[n]),
            "inf" if lc is None else str(lc),
            str(dag.size[n]),
            "mandatory" if n in dag.mandatory else "-",
            plan.states[n].value if plan is not None else "?",
        ]
        lines.append("\t".join(fields))
    return "\n".join(lines)
