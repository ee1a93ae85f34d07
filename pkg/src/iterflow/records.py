"""Run-record structures shared by the engine (producer) and workspace (store)."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field


@dataclass(frozen=True)
class NodeEvent:
    """What happened to one live node during an iteration."""

    name: str
    state: str  # load | compute | prune
    start_us: int
    duration_us: int
    bytes: int
    materialized: bool = False
    skip_reason: str | None = None
    benefit_us: int | None = None
    budget_remaining_bytes: int | None = None


@dataclass(frozen=True)
class NodeMeta:
    kind: str
    func: str
    parents: tuple[str, ...]
    signature: str


@dataclass
class RunRecord:
    """Everything recorded about one iteration."""

    plan: dict[str, str]  # every compiled node -> load|compute|prune|static_prune
    events: list[NodeEvent]  # live nodes in topological order
    metrics: dict[str, float]
    nodes: dict[str, NodeMeta]
    topo_order: tuple[str, ...]
    objective_us: int
    wall_clock_us: int
    budget_total_bytes: int
    budget_start_used_bytes: int  # store footprint when the iteration began
    budget_used_bytes: int
    options: dict
    version_id: int | None = None
    parent_id: int | None = None

    def to_json_dict(self) -> dict:
        return {
            "version_id": self.version_id,
            "parent_id": self.parent_id,
            "plan": dict(self.plan),
            "events": [asdict(e) for e in self.events],
            "metrics": dict(self.metrics),
            "nodes": {n: asdict(m) for n, m in self.nodes.items()},
            "topo_order": list(self.topo_order),
            "objective_us": self.objective_us,
            "wall_clock_us": self.wall_clock_us,
            "budget_total_bytes": self.budget_total_bytes,
            "budget_start_used_bytes": self.budget_start_used_bytes,
            "budget_used_bytes": self.budget_used_bytes,
            "options": dict(self.options),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "RunRecord":
        return cls(
            plan=dict(d["plan"]),
            events=[NodeEvent(**e) for e in d["events"]],
            metrics=dict(d["metrics"]),
            nodes={
                n: NodeMeta(
                    kind=m["kind"],
                    func=m["func"],
                    parents=tuple(m["parents"]),
                    signature=m["signature"],
                )
                for n, m in d["nodes"].items()
            },
            topo_order=tuple(d["topo_order"]),
            objective_us=d["objective_us"],
            wall_clock_us=d["wall_clock_us"],
            budget_total_bytes=d["budget_total_bytes"],
            budget_start_used_bytes=d["budget_start_used_bytes"],
            budget_used_bytes=d["budget_used_bytes"],
            options=dict(d["options"]),
            version_id=d["version_id"],
            parent_id=d["parent_id"],
        )
