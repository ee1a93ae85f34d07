"""Command-line interface: the iteration loop plus workspace inspection.

Exit codes: 0 success, 1 user error (bad input, missing version, held lock),
2 internal error.  Output is line-oriented and stable so it can be golden-
tested and scripted against.
"""

from __future__ import annotations

import argparse
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import dsl, engine, graph, recompute
from .values import DataError
from .workspace import LockHeldError, NotFoundError, Workspace, WorkspaceError

DEFAULT_WORKSPACE = ".iterflow"
ENV_WORKSPACE = "ITERFLOW_WORKSPACE"


class _UserError(Exception):
    pass


def _workspace_root(args) -> Path:
    if args.workspace:
        return Path(args.workspace)
    if os.environ.get(ENV_WORKSPACE):
        return Path(os.environ[ENV_WORKSPACE])
    return Path(DEFAULT_WORKSPACE)


def _open_workspace(args, create: bool) -> Workspace:
    root = _workspace_root(args)
    if create:
        return Workspace.open_or_init(root)
    try:
        return Workspace(root)
    except NotFoundError:
        raise _UserError(f"no workspace at {root} (run a workflow first)") from None


def _engine_options(args, wf_path: Path | None) -> engine.EngineOptions:
    return engine.EngineOptions(
        budget_bytes=args.budget,
        seed=args.seed,
        no_reuse=getattr(args, "no_reuse", False),
        sim_clock=getattr(args, "sim_clock", False),
        base_dir=wf_path.parent if wf_path else Path.cwd(),
    )


def _read_workflow(path_str: str) -> tuple[Path, str]:
    path = Path(path_str)
    try:
        return path, path.read_text(encoding="utf-8")
    except OSError as exc:
        raise _UserError(f"cannot read {path}: {exc}") from None


def _fmt_metric(value: float) -> str:
    return repr(value)


def cmd_run(args) -> int:
    wf_path, source = _read_workflow(args.file)
    ws = _open_workspace(args, create=True)
    record = engine.run_iteration(ws, source, _engine_options(args, wf_path))
    counts = {"load": 0, "compute": 0, "prune": 0, "static_prune": 0}
    for state in record.plan.values():
        counts[state] += 1
    print(f"version: {record.version_id}")
    print(
        "plan: compute={compute} load={load} prune={prune} static_prune={static_prune}".format(
            **counts
        )
    )
    print(f"objective_us: {record.objective_us}")
    print(f"wall_clock_us: {record.wall_clock_us}")
    for name in sorted(record.metrics):
        print(f"metric {name} {_fmt_metric(record.metrics[name])}")
    materialized = [e.name for e in record.events if e.materialized]
    if materialized:
        print("materialized: " + " ".join(materialized))
    return 0


def cmd_plan(args) -> int:
    wf_path, source = _read_workflow(args.file)
    ws = _open_workspace(args, create=True)
    dag, sl, cdag, plan = engine.plan_only(ws, source, _engine_options(args, wf_path))
    print(recompute.format_instance(cdag, plan))
    for name in dag.topo_order:
        if name in sl.pruned_static:
            print(f"{name}\t-\t-\t-\t-\tstatic_prune")
    print(f"objective_us: {plan.objective}")
    return 0


def _iso(ts: float) -> str:
    return datetime.fromtimestamp(ts, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def cmd_versions(args) -> int:
    ws = _open_workspace(args, create=False)
    for entry in ws.list_versions():
        metrics = " ".join(
            f"{k}={_fmt_metric(v)}" for k, v in sorted(entry.metrics.items())
        )
        parent = entry.parent_id if entry.parent_id is not None else "-"
        print(f"{entry.id}\t{_iso(entry.created_at)}\tparent={parent}\t{metrics}")
    return 0


def cmd_show(args) -> int:
    ws = _open_workspace(args, create=False)
    entry = ws.get_version(args.id)
    rec = entry.record
    print(f"id: {entry.id}")
    print(f"parent: {entry.parent_id if entry.parent_id is not None else '-'}")
    print(f"created: {_iso(entry.created_at)}")
    print(f"source_sha256: {entry.source_sha256}")
    print(f"objective_us: {rec.objective_us}")
    print(f"wall_clock_us: {rec.wall_clock_us}")
    for field_name, names in (
        ("added", entry.diff.added),
        ("removed", entry.diff.removed),
        ("modified", entry.diff.modified),
    ):
        if names:
            print(f"decls {field_name}: " + " ".join(sorted(names)))
    for name in sorted(rec.metrics):
        print(f"metric {name} {_fmt_metric(rec.metrics[name])}")
    events = {e.name: e for e in rec.events}
    for name in rec.topo_order:
        state = rec.plan[name]
        if name in events and state in ("load", "compute"):
            e = events[name]
            suffix = " materialized" if e.materialized else ""
            print(f"node {name} {state} {e.duration_us}us {e.bytes}B{suffix}")
        else:
            print(f"node {name} {state}")
    return 0


def cmd_compare(args) -> int:
    ws = _open_workspace(args, create=False)
    report = ws.compare(args.a, args.b)
    d = report.decl_diff
    print("decls added: " + (" ".join(sorted(d.added)) or "-"))
    print("decls removed: " + (" ".join(sorted(d.removed)) or "-"))
    print("decls modified: " + (" ".join(sorted(d.modified)) or "-"))
    print("dag added: " + (" ".join(sorted(report.dag_added)) or "-"))
    print("dag removed: " + (" ".join(sorted(report.dag_removed)) or "-"))
    for name, sa, sb in report.dag_state_changed:
        print(f"dag state {name}: {sa} -> {sb}")
    for name, (ma, mb, delta) in report.metric_deltas.items():
        left = "-" if ma is None else _fmt_metric(ma)
        right = "-" if mb is None else _fmt_metric(mb)
        tail = "" if delta is None else f" (delta {_fmt_metric(delta)})"
        print(f"metric {name}: {left} -> {right}{tail}")
    print("--- source diff ---")
    for line in report.source_diff:
        print(line)
    return 0


def cmd_checkout(args) -> int:
    ws = _open_workspace(args, create=False)
    source = ws.checkout(args.id)
    if args.output:
        Path(args.output).write_text(source, encoding="utf-8")
    else:
        sys.stdout.write(source)
    return 0


def cmd_serve(args) -> int:
    from . import api

    ws = _open_workspace(args, create=True)
    server = api.make_server(ws, port=args.port, static_dir=args.static_dir)
    host, port = server.server_address[:2]
    print(f"serving on http://{host}:{port}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="iterflow")
    parser.add_argument(
        "--workspace",
        help=f"workspace directory (default ${ENV_WORKSPACE} or ./{DEFAULT_WORKSPACE})",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute one iteration of a workflow")
    run.add_argument("file")
    run.add_argument("--budget", type=int, default=1 << 30, help="storage budget in bytes")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--no-reuse", action="store_true", help="recompute everything; persist nothing")
    run.add_argument("--sim-clock", action="store_true", help="deterministic virtual clock")
    run.set_defaults(fn=cmd_run)

    plan = sub.add_parser("plan", help="print the execution plan without running")
    plan.add_argument("file")
    plan.add_argument("--budget", type=int, default=1 << 30)
    plan.add_argument("--seed", type=int, default=0)
    plan.add_argument("--no-reuse", action="store_true")
    plan.set_defaults(fn=cmd_plan)

    versions = sub.add_parser("versions", help="list recorded versions")
    versions.set_defaults(fn=cmd_versions)

    show = sub.add_parser("show", help="show one version in detail")
    show.add_argument("id", type=int)
    show.set_defaults(fn=cmd_show)

    compare = sub.add_parser("compare", help="compare two versions")
    compare.add_argument("a", type=int)
    compare.add_argument("b", type=int)
    compare.set_defaults(fn=cmd_compare)

    checkout = sub.add_parser("checkout", help="print a version's source")
    checkout.add_argument("id", type=int)
    checkout.add_argument("-o", "--output")
    checkout.set_defaults(fn=cmd_checkout)

    serve = sub.add_parser("serve", help="serve the workspace HTTP API and UI")
    serve.add_argument("--port", type=int, default=7878)
    serve.add_argument("--static-dir", default=None)
    serve.set_defaults(fn=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except (
        _UserError,
        dsl.DslError,
        DataError,
        NotFoundError,
        LockHeldError,
        WorkspaceError,
        graph.NoSinksError,
        recompute.InfeasiblePlanError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - last-resort boundary
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
