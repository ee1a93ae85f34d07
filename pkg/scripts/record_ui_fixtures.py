#!/usr/bin/env python3
"""Record API responses from a seeded census workspace into JSON fixtures
for the frontend snapshot tests.

Usage: python scripts/record_ui_fixtures.py [outdir]
"""

import json
import sys
import tempfile
from pathlib import Path

from iterflow import api, demo
from iterflow.engine import EngineOptions, run_iteration
from iterflow.workspace import Workspace


def main() -> int:
    outdir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("frontend/tests/fixtures")
    outdir.mkdir(parents=True, exist_ok=True)

    with tempfile.TemporaryDirectory() as td:
        projdir = Path(td)
        wf = demo.write_census_fixture(projdir)
        ws = Workspace.init(projdir / "ws")
        opts = EngineOptions(base_dir=projdir)
        source = wf.read_text()
        run_iteration(ws, source, opts)
        run_iteration(ws, source.replace("reg=0.01", "reg=0.1"), opts)
        v3_source = source.replace("reg=0.01", "reg=0.001")
        run_iteration(ws, v3_source, opts)
        # v4: unchanged rerun plus a dangling extractor -> every node state
        # (load / compute / prune / static_prune) shows up in the DAG view
        v4_source = v3_source + 'extractor unused = numeric(data, "age")\n'
        run_iteration(ws, v4_source, opts)

        fixtures = {
            "versions.json": [api._version_summary(e) for e in ws.list_versions()],
            "version_2.json": {
                **api._version_summary(ws.get_version(2)),
                "source": ws.get_version(2).source,
            },
            "dag_2.json": api._dag_view(ws.get_version(2)),
            "dag_4.json": api._dag_view(ws.get_version(4)),
            "metrics.json": _metrics_series(ws),
            "compare_2_3.json": api._comparison(ws, 2, 3),
        }
        for name, payload in fixtures.items():
            (outdir / name).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
            print(f"wrote {outdir / name}")
    return 0


def _metrics_series(ws):
    series = {}
    for entry in ws.list_versions():
        for name, value in entry.metrics.items():
            series.setdefault(name, []).append({"version": entry.id, "value": value})
    return series


if __name__ == "__main__":
    sys.exit(main())
