#!/usr/bin/env python3
"""Seed a demo workspace with a few census iterations, then suggest `serve`.

Usage: python scripts/census_demo.py [projdir]
"""

import sys
from pathlib import Path

from iterflow import demo
from iterflow.engine import EngineOptions, run_iteration
from iterflow.workspace import Workspace


def main() -> int:
    projdir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("census-demo")
    wf = demo.write_census_fixture(projdir)
    ws = Workspace.open_or_init(projdir / ".iterflow")
    opts = EngineOptions(base_dir=projdir)

    source = wf.read_text()
    edits = [
        source,
        source.replace("reg=0.01", "reg=0.1"),
        source.replace(
            'metric acc = accuracy(pred, label="income_gt_50k")',
            'metric acc = accuracy(pred, label="income_gt_50k")\n'
            'metric f1 = f1(pred, label="income_gt_50k")',
        ),
    ]
    for i, src in enumerate(edits, start=1):
        record = run_iteration(ws, src, opts)
        metrics = " ".join(f"{k}={v:.3f}" for k, v in sorted(record.metrics.items()))
        states = {}
        for state in record.plan.values():
            states[state] = states.get(state, 0) + 1
        print(f"iteration {i}: version={record.version_id} {metrics} plan={states}")

    print()
    print(f"workspace ready at {ws.root}")
    print(f"inspect it:  iterflow --workspace {ws.root} versions")
    print(f"serve the UI: iterflow --workspace {ws.root} serve")
    return 0


if __name__ == "__main__":
    sys.exit(main())
