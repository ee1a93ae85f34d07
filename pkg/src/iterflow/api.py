"""Read-mostly HTTP service exposing workspace state to the browser UI.

All GET endpoints are pure functions of the committed workspace state, so
they can run concurrently with an execution and never observe a partial
version.  At most one run executes at a time; a second POST /api/run gets
409 while the first is in flight.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from . import engine
from .dsl import DslError
from .values import DataError
from .workspace import NotFoundError, VersionEntry, Workspace

_FALLBACK_PAGE = """<!doctype html>
<html><head><title>iterflow</title></head>
<body><h1>iterflow workspace API</h1>
<p>No UI build found. The JSON API lives under <code>/api/</code>.</p>
</body></html>
"""


def _version_summary(entry: VersionEntry) -> dict:
    return {
        "id": entry.id,
        "parent_id": entry.parent_id,
        "created_at": entry.created_at,
        "metrics": entry.metrics,
        "diff": {
            "added": sorted(entry.diff.added),
            "removed": sorted(entry.diff.removed),
            "modified": sorted(entry.diff.modified),
        },
        "objective_us": entry.record.objective_us,
        "wall_clock_us": entry.record.wall_clock_us,
    }


def _dag_view(entry: VersionEntry) -> dict:
    rec = entry.record
    events = {e.name: e for e in rec.events}
    nodes = []
    for name in rec.topo_order:
        meta = rec.nodes[name]
        event = events.get(name)
        nodes.append(
            {
                "name": name,
                "kind": meta.kind,
                "state": rec.plan[name],
                "duration_us": event.duration_us if event else 0,
                "bytes": event.bytes if event else 0,
                "materialized": bool(event.materialized) if event else False,
            }
        )
    edges = [
        [parent, name]
        for name in rec.topo_order
        for parent in rec.nodes[name].parents
    ]
    return {"version": entry.id, "nodes": nodes, "edges": edges}


def _comparison(ws: Workspace, a: int, b: int) -> dict:
    report = ws.compare(a, b)
    return {
        "a": report.a,
        "b": report.b,
        "source_diff": list(report.source_diff),
        "decl_diff": {
            "added": sorted(report.decl_diff.added),
            "removed": sorted(report.decl_diff.removed),
            "modified": sorted(report.decl_diff.modified),
        },
        "dag_delta": {
            "added": sorted(report.dag_added),
            "removed": sorted(report.dag_removed),
            "state_changed": [
                {"name": n, "a": sa, "b": sb} for n, sa, sb in report.dag_state_changed
            ],
        },
        "metric_deltas": {
            name: {"a": ma, "b": mb, "delta": delta}
            for name, (ma, mb, delta) in report.metric_deltas.items()
        },
    }


class WorkspaceApiServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, address, ws: Workspace, base_dir: Path, static_dir: Path | None):
        super().__init__(address, _Handler)
        self.workspace = ws
        self.base_dir = base_dir
        self.static_dir = static_dir
        self.run_lock = threading.Lock()


class _Handler(BaseHTTPRequestHandler):
    server: WorkspaceApiServer

    def log_message(self, fmt, *args):  # silence request logging
        pass

    def _send_json(self, status: int, payload) -> None:
        body = json.dumps(payload, sort_keys=True).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_bytes(self, status: int, body: bytes, content_type: str) -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    # -- GET ----------------------------------------------------------------

    def do_GET(self):  # noqa: N802 - http.server API
        url = urlparse(self.path)
        parts = [p for p in url.path.split("/") if p]
        ws = self.server.workspace
        try:
            if parts[:1] != ["api"]:
                self._serve_static(url.path)
                return
            if parts == ["api", "versions"]:
                self._send_json(200, [_version_summary(e) for e in ws.list_versions()])
            elif len(parts) == 3 and parts[1] == "versions":
                entry = ws.get_version(_int(parts[2]))
                payload = _version_summary(entry)
                payload["source"] = entry.source
                self._send_json(200, payload)
            elif len(parts) == 4 and parts[1] == "versions" and parts[3] == "dag":
                self._send_json(200, _dag_view(ws.get_version(_int(parts[2]))))
            elif parts == ["api", "metrics"]:
                series: dict[str, list[dict]] = {}
                for entry in ws.list_versions():
                    for name, value in entry.metrics.items():
                        series.setdefault(name, []).append(
                            {"version": entry.id, "value": value}
                        )
                self._send_json(200, series)
            elif parts == ["api", "compare"]:
                query = parse_qs(url.query)
                a = _int(query.get("a", [""])[0])
                b = _int(query.get("b", [""])[0])
                self._send_json(200, _comparison(ws, a, b))
            else:
                self._send_json(404, {"error": f"no such endpoint {url.path}"})
        except NotFoundError as exc:
            self._send_json(404, {"error": str(exc)})
        except _BadRequest as exc:
            self._send_json(400, {"error": str(exc)})

    def _serve_static(self, path: str) -> None:
        static = self.server.static_dir
        if path in ("", "/"):
            path = "/index.html"
        if static is not None:
            candidate = (static / path.lstrip("/")).resolve()
            if candidate.is_file() and str(candidate).startswith(str(static.resolve())):
                ctype = {
                    ".html": "text/html; charset=utf-8",
                    ".js": "text/javascript; charset=utf-8",
                    ".css": "text/css; charset=utf-8",
                    ".svg": "image/svg+xml",
                }.get(candidate.suffix, "application/octet-stream")
                self._send_bytes(200, candidate.read_bytes(), ctype)
                return
        if path == "/index.html":
            self._send_bytes(200, _FALLBACK_PAGE.encode(), "text/html; charset=utf-8")
        else:
            self._send_bytes(404, b"not found", "text/plain")

    # -- POST -----------------------------------------------------------------

    def do_POST(self):  # noqa: N802 - http.server API
        url = urlparse(self.path)
        if url.path != "/api/run":
            self._send_json(404, {"error": f"no such endpoint {url.path}"})
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            payload = json.loads(self.rfile.read(length) or b"{}")
            source = payload.get("source")
            if not isinstance(source, str):
                raise _BadRequest("body must contain a 'source' string")
        except (ValueError, json.JSONDecodeError) as exc:
            self._send_json(400, {"error": f"bad request body: {exc}"})
            return

        if not self.server.run_lock.acquire(blocking=False):
            self._send_json(409, {"error": "an execution is already in progress"})
            return
        try:
            options = engine.EngineOptions(
                budget_bytes=int(payload.get("budget_bytes", 1 << 30)),
                seed=int(payload.get("seed", 0)),
                no_reuse=bool(payload.get("no_reuse", False)),
                sim_clock=bool(payload.get("sim_clock", False)),
                base_dir=self.server.base_dir,
            )
            record = engine.run_iteration(self.server.workspace, source, options)
            self._send_json(200, {"version": record.version_id})
        except DslError as exc:
            self._send_json(422, {"error": exc.message, "line": exc.line})
        except DataError as exc:
            self._send_json(422, {"error": str(exc), "line": None})
        except Exception as exc:  # noqa: BLE001 - http boundary
            self._send_json(500, {"error": f"{type(exc).__name__}: {exc}"})
        finally:
            self.server.run_lock.release()


class _BadRequest(Exception):
    pass


def _int(raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise _BadRequest(f"expected an integer, got {raw!r}") from None


def make_server(
    ws: Workspace,
    port: int = 7878,
    host: str = "127.0.0.1",
    base_dir: str | Path | None = None,
    static_dir: str | Path | None = None,
) -> WorkspaceApiServer:
    if static_dir is None:
        bundled = Path(__file__).resolve().parent.parent.parent / "frontend" / "dist"
        static = bundled if bundled.is_dir() else None
    else:
        static = Path(static_dir)
    return WorkspaceApiServer(
        (host, port),
        ws,
        Path(base_dir) if base_dir else Path.cwd(),
        static,
    )
