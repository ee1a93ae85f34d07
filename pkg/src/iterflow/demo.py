"""Bundled demo fixtures: the census-mini workflow and the synthetic
cumulative-runtime trace used to measure cross-iteration reuse."""

from __future__ import annotations

import shutil
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .engine import EngineOptions, run_iteration
from .records import RunRecord
from .workspace import Workspace

CENSUS_CSV = "census_mini.csv"

CENSUS_SOURCE = """\
workflow census
source data = csv("census_mini.csv")
extractor age = bucketize(data, "age", 25, 35, 45, 55)
extractor edu = categorical(data, "education")
extractor hours = bucketize(data, "hours_per_week", 30, 40, 50)
extractor label = numeric(data, "income_gt_50k")
features feats = union(age, edu, hours, label)
learner model = logreg(feats, label="income_gt_50k", reg=0.01, iters=800, lr=0.5)
output pred = predict(model, feats)
metric acc = accuracy(pred, label="income_gt_50k")
"""


def census_csv_bytes() -> bytes:
    return resources.files("iterflow.data").joinpath(CENSUS_CSV).read_bytes()


def write_census_fixture(directory: str | Path) -> Path:
    """Copy the bundled CSV and workflow file into a directory; returns the
    workflow path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / CENSUS_CSV).write_bytes(census_csv_bytes())
    wf = directory / "census.wf"
    wf.write_text(CENSUS_SOURCE)
    return wf


# ---------------------------------------------------------------------------
# synthetic reuse trace: a 12-node simulated pipeline edited at three depths.
#
# Stage costs mirror a typical pipeline: expensive pre-processing, moderate
# model training, cheap post-processing.  Edits bump a `v` parameter, which
# re-signs the edited node and everything downstream.

_STAGE = {
    "pre": dict(names=("p1", "p2", "p3", "p4"), cost_ms=800, size_kb=100),
    "ml": dict(names=("m1", "m2", "m3", "m4"), cost_ms=400, size_kb=100),
    "post": dict(names=("o1", "o2", "o3", "o4"), cost_ms=50, size_kb=100),
}

# iteration 0 runs the initial source; each later iteration edits one node
TRACE_EDITS: tuple[tuple[str, str], ...] = (
    ("post", "o2"),
    ("post", "o3"),
    ("ml", "m2"),
    ("post", "o1"),
    ("pre", "p2"),
    ("ml", "m3"),
    ("post", "o4"),
    ("ml", "m1"),
    ("post", "o2"),
)


def trace_source(edit_counts: dict[str, int] | None = None) -> str:
    """The 12-node chain workflow, with per-node edit counters as params."""
    edit_counts = edit_counts or {}
    lines = ["workflow trace"]
    prev: str | None = None
    for stage in ("pre", "ml", "post"):
        spec = _STAGE[stage]
        for name in spec["names"]:
            kind = "output" if name == "o4" else "sim"
            parent = f"{prev}, " if prev else ""
            v = edit_counts.get(name, 0)
            lines.append(
                f"{kind} {name} = sim({parent}cost_ms={spec['cost_ms']}, "
                f"size_kb={spec['size_kb']}, v={v})"
            )
            prev = name
    return "\n".join(lines) + "\n"


def trace_sources() -> list[str]:
    """The full 10-iteration source sequence."""
    counts: dict[str, int] = {}
    sources = [trace_source(counts)]
    for _stage, node in TRACE_EDITS:
        counts[node] = counts.get(node, 0) + 1
        sources.append(trace_source(counts))
    return sources


@dataclass(frozen=True)
class TraceResult:
    per_iteration_us: tuple[int, ...]
    cumulative_us: int
    records: tuple[RunRecord, ...]


def run_trace(workspace_dir: str | Path, *, no_reuse: bool, budget_bytes: int = 1 << 30) -> TraceResult:
    """Run the 10-iteration trace on a fresh workspace with the virtual clock."""
    root = Path(workspace_dir)
    if root.exists():
        shutil.rmtree(root)
    ws = Workspace.init(root)
    options = EngineOptions(budget_bytes=budget_bytes, no_reuse=no_reuse, sim_clock=True)
    records = []
    for source in trace_sources():
        records.append(run_iteration(ws, source, options))
    times = tuple(r.wall_clock_us for r in records)
    return TraceResult(
        per_iteration_us=times, cumulative_us=sum(times), records=tuple(records)
    )


def full_compute_us() -> int:
    """Virtual cost of computing the whole trace DAG once."""
    return sum(
        _STAGE[stage]["cost_ms"] * 1000 * len(_STAGE[stage]["names"])
        for stage in _STAGE
    )


def edit_depths() -> tuple[str, ...]:
    """Stage touched at each iteration after the first."""
    return tuple(stage for stage, _ in TRACE_EDITS)
