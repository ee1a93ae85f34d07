"""Execute planned DAGs: load or compute each live node, measure costs,
invoke the online materializer, and assemble the iteration's run record.

Two clock modes.  Wall mode measures real elapsed microseconds and lets sim
operators actually sleep.  Simulated-clock mode advances a deterministic
virtual clock instead (sim operators by their declared cost, loads and
artifact writes by the disk-throughput estimate), which makes cumulative
runtime experiments exactly reproducible.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import dsl, graph, materialize, operators, recompute
from .records import NodeEvent, NodeMeta, RunRecord
from .values import DataError, Scalar, decode, encode
from .workspace import Workspace


class MissingArtifactError(Exception):
    """The plan said Load but the store lacks the signature (index corruption)."""

    def __init__(self, node: str, signature: str):
        super().__init__(f"node {node!r}: artifact {signature} vanished from the store")
        self.node = node


class OperatorError(Exception):
    def __init__(self, node: str, cause: BaseException):
        super().__init__(f"node {node!r} failed: {cause}")
        self.node = node
        self.cause = cause


@dataclass(frozen=True)
class CostModel:
    """Estimates used when a cost has never been measured."""

    disk_bytes_per_second: int = 500 * 1024 * 1024
    load_overhead_us: int = 2000
    default_compute_us: int = 1000

    def load_estimate_us(self, size_bytes: int) -> int:
        return math.ceil(size_bytes * 1_000_000 / self.disk_bytes_per_second) + self.load_overhead_us


@dataclass(frozen=True)
class EngineOptions:
    budget_bytes: int = 1 << 30
    seed: int = 0
    no_reuse: bool = False  # treat every load as infeasible and persist nothing
    sim_clock: bool = False
    base_dir: str | Path = "."
    cost_model: CostModel = field(default_factory=CostModel)

    def to_json_dict(self) -> dict:
        return {
            "budget_bytes": self.budget_bytes,
            "seed": self.seed,
            "no_reuse": self.no_reuse,
            "sim_clock": self.sim_clock,
        }


class _WallClock:
    def now_us(self) -> int:
        return time.perf_counter_ns() // 1000

    def advance_us(self, _us: int) -> None:
        pass  # real time passes on its own


class _VirtualClock:
    def __init__(self):
        self._now = 0

    def now_us(self) -> int:
        return self._now

    def advance_us(self, us: int) -> None:
        self._now += us


def annotate_costs(
    dag: graph.WorkflowDag,
    live: frozenset[str],
    ws: Workspace,
    options: EngineOptions,
) -> recompute.CostAnnotatedDag:
    """Build the planning instance for the live subgraph from recorded stats."""
    stats = ws.stats()
    name_history = ws.name_compute_history()
    index = {} if options.no_reuse else ws.artifact_index()
    loadable = graph.load_feasibility(dag, index)
    cm = options.cost_model

    order = tuple(n for n in dag.topo_order if n in live)
    parents = {n: dag.nodes[n].parents for n in order}
    compute_cost: dict[str, int] = {}
    load_cost: dict[str, int | None] = {}
    size: dict[str, int] = {}
    for n in order:
        sig = dag.nodes[n].signature
        stat = stats.get(sig)
        if stat is not None and stat.compute_us is not None:
            compute_cost[n] = stat.compute_us
        elif n in name_history:
            compute_cost[n] = name_history[n]
        else:
            compute_cost[n] = cm.default_compute_us
        entry = index.get(sig) if loadable[n] else None
        if entry is None:
            load_cost[n] = None
            size[n] = stat.bytes if stat is not None else 0
        else:
            size[n] = entry.bytes
            if stat is not None and stat.load_us is not None:
                load_cost[n] = stat.load_us
            else:
                load_cost[n] = cm.load_estimate_us(entry.bytes)
    mandatory = frozenset(n for n in dag.sinks if n in live)
    return recompute.CostAnnotatedDag(
        order=order,
        parents=parents,
        compute_cost=compute_cost,
        load_cost=load_cost,
        size=size,
        mandatory=mandatory,
    )


def execute(
    dag: graph.WorkflowDag,
    live: frozenset[str],
    cdag: recompute.CostAnnotatedDag,
    plan: recompute.ExecutionPlan,
    ws: Workspace,
    options: EngineOptions,
    version_id: int,
) -> RunRecord:
    """Visit live nodes in topological order and carry out the plan."""
    clock = _VirtualClock() if options.sim_clock else _WallClock()
    started = clock.now_us()
    # the budget constrains the whole artifact store, not one iteration
    index = ws.artifact_index()
    store_bytes = sum(e.bytes for e in index.values())
    budget = materialize.MaterializationBudget(
        total_bytes=options.budget_bytes,
        used_bytes=min(store_bytes, options.budget_bytes),
    )
    start_used = budget.used_bytes
    stats = ws.stats()
    cm = options.cost_model
    ctx = operators.OpContext(
        base_dir=Path(options.base_dir), seed=options.seed, wall_mode=not options.sim_clock
    )

    anc = graph.ancestors(cdag.parents, cdag.order)
    current_c = dict(cdag.compute_cost)  # refined with this run's measurements
    values: dict[str, object] = {}
    events: list[NodeEvent] = []
    metrics: dict[str, float] = {}

    for name in cdag.order:
        node = dag.nodes[name]
        state = plan.states[name]
        start = clock.now_us()
        if state is recompute.NodeState.PRUNE:
            events.append(
                NodeEvent(name=name, state="prune", start_us=start, duration_us=0, bytes=0)
            )
            continue

        if state is recompute.NodeState.LOAD:
            try:
                data = ws.read_artifact(node.signature)
            except Exception:
                raise MissingArtifactError(name, node.signature) from None
            value = decode(data)
            clock.advance_us(cm.load_estimate_us(len(data)))
            duration = max(1, math.ceil(clock.now_us() - start))
            values[name] = value
            prior = stats.get(node.signature)
            ws.append_stat(
                node.signature,
                prior.compute_us if prior else None,
                duration,
                len(data),
            )
            events.append(
                NodeEvent(
                    name=name,
                    state="load",
                    start_us=start,
                    duration_us=duration,
                    bytes=len(data),
                )
            )
        else:  # compute
            parent_values = [values[p] for p in node.parents]
            try:
                value = operators.run_operator(node.func, parent_values, node.param_dict(), ctx)
            except DataError as exc:
                raise DataError(f"node {name!r}: {exc}") from exc
            except Exception as exc:
                raise OperatorError(name, exc) from exc
            if options.sim_clock and node.func == "sim":
                clock.advance_us(operators.sim_cost_us(node.param_dict()))
            duration = max(1, math.ceil(clock.now_us() - start))
            values[name] = value
            current_c[name] = duration

            data = encode(value)
            prior = stats.get(node.signature)
            if prior is not None and prior.load_us is not None:
                load_est = prior.load_us
            else:
                load_est = cm.load_estimate_us(len(data))
            benefit: int | None
            if options.no_reuse or node.signature in index:
                # nothing to decide: reuse is off, or the output is already in
                # the store (its bytes are counted in the starting footprint)
                benefit = None
                decision = materialize.MaterializationDecision(False, None)
            else:
                node_stats = materialize.NodeRuntimeStats(
                    name=name,
                    compute_us=duration,
                    load_us=load_est,
                    size_bytes=len(data),
                    ancestor_compute_us=sum(current_c[a] for a in anc[name]),
                )
                benefit = materialize.reuse_benefit(node_stats)
                decision = materialize.decide(node_stats, budget)
            if decision.materialize:
                ws.write_artifact(node.signature, data, version_id)
                clock.advance_us(cm.load_estimate_us(len(data)))  # write ~ read
            ws.append_stat(
                node.signature, duration, prior.load_us if prior else None, len(data)
            )
            events.append(
                NodeEvent(
                    name=name,
                    state="compute",
                    start_us=start,
                    duration_us=duration,
                    bytes=len(data),
                    materialized=decision.materialize,
                    skip_reason=decision.reason.value if decision.reason else None,
                    benefit_us=benefit,
                    budget_remaining_bytes=budget.remaining_bytes,
                )
            )

        if node.kind == "metric" and isinstance(values.get(name), Scalar):
            metrics[name] = values[name].value

    plan_summary = {
        n: (plan.states[n].value if n in live else "static_prune") for n in dag.topo_order
    }
    return RunRecord(
        plan=plan_summary,
        events=events,
        metrics=metrics,
        nodes={
            n: NodeMeta(
                kind=dag.nodes[n].kind,
                func=dag.nodes[n].func,
                parents=dag.nodes[n].parents,
                signature=dag.nodes[n].signature,
            )
            for n in dag.topo_order
        },
        topo_order=dag.topo_order,
        objective_us=plan.objective,
        wall_clock_us=clock.now_us() - started,
        budget_total_bytes=budget.total_bytes,
        budget_start_used_bytes=start_used,
        budget_used_bytes=budget.used_bytes,
        options=options.to_json_dict(),
    )


def plan_only(
    ws: Workspace, source_text: str, options: EngineOptions
) -> tuple[graph.WorkflowDag, graph.SliceResult, recompute.CostAnnotatedDag, recompute.ExecutionPlan]:
    """Compile and plan without executing (the dry-run path)."""
    ast = dsl.parse(source_text)
    dag = graph.compile(ast, base_dir=options.base_dir, default_seed=options.seed)
    sl = graph.slice(dag)
    cdag = annotate_costs(dag, sl.live, ws, options)
    plan = recompute.optimal_plan(cdag)
    return dag, sl, cdag, plan


def run_iteration(ws: Workspace, source_text: str, options: EngineOptions | None = None) -> RunRecord:
    """One full iteration: parse, compile, slice, plan, execute, record."""
    options = options or EngineOptions()
    with ws.lock():
        dag, sl, cdag, plan = plan_only(ws, source_text, options)
        version_id = ws.next_version_id()
        record = execute(dag, sl.live, cdag, plan, ws, options, version_id)
        entry = ws.record_version(record, source_text)
        return entry.record
