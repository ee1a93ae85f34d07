"""On-disk workspace: versions, content-addressed artifacts, runtime stats.

Layout (all human-inspectable, no database):

    <root>/manifest             format + encoding declaration (JSON)
    <root>/versions/<id>/       source.wf + record (canonical JSON)
    <root>/artifacts/<hex sig>  artifact container bytes
    <root>/artifacts.log        sig <TAB> bytes <TAB> created-at version id
    <root>/stats.log            sig <TAB> c_us <TAB> l_us <TAB> bytes
    <root>/lock                 advisory writer lock

Versions are append-only and committed by an atomic directory rename, so a
crash mid-iteration never leaves a partial version; artifacts written before
the crash are content-addressed and simply get reused later.  One writer at
a time (the lock); readers never block and only see committed versions.
"""

from __future__ import annotations

import difflib
import fcntl
import hashlib
import json
import os
import time
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path

from . import dsl
from .records import RunRecord

MANIFEST = {
    "format": "iterflow-workspace",
    "version": 1,
    "record_encoding": "json",
    "hash_algorithm": "sha256",
    "artifact_format": 1,
}

_UNMEASURED = -1  # stats.log sentinel for "never observed"


class WorkspaceError(Exception):
    pass


class NotFoundError(WorkspaceError):
    pass


class LockHeldError(WorkspaceError):
    pass


@dataclass(frozen=True)
class ArtifactEntry:
    signature: str
    path: Path
    bytes: int
    created_version: int


@dataclass(frozen=True)
class StatEntry:
    signature: str
    compute_us: int | None
    load_us: int | None
    bytes: int


@dataclass(frozen=True)
class VersionEntry:
    id: int
    parent_id: int | None
    created_at: float
    source: str
    source_sha256: str
    record: RunRecord
    diff: dsl.DeclDiff

    @property
    def metrics(self) -> dict[str, float]:
        return self.record.metrics


@dataclass(frozen=True)
class ComparisonReport:
    a: int
    b: int
    source_diff: tuple[str, ...]
    decl_diff: dsl.DeclDiff
    dag_added: frozenset[str]
    dag_removed: frozenset[str]
    dag_state_changed: tuple[tuple[str, str, str], ...]  # (name, state_a, state_b)
    metric_deltas: dict[str, tuple[float | None, float | None, float | None]]


def _canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=True, separators=(",", ":")) + "\n"


class Workspace:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        manifest_path = self.root / "manifest"
        if not manifest_path.exists():
            raise NotFoundError(f"no workspace at {self.root}")
        manifest = json.loads(manifest_path.read_text())
        if manifest.get("format") != MANIFEST["format"]:
            raise WorkspaceError(f"{self.root} is not an iterflow workspace")
        if manifest.get("version") != MANIFEST["version"]:
            raise WorkspaceError(f"unsupported workspace version {manifest.get('version')}")

    @classmethod
    def init(cls, root: str | Path) -> "Workspace":
        root = Path(root)
        (root / "versions").mkdir(parents=True, exist_ok=True)
        (root / "artifacts").mkdir(parents=True, exist_ok=True)
        manifest_path = root / "manifest"
        if not manifest_path.exists():
            _atomic_write(manifest_path, _canonical_json(MANIFEST).encode())
        return cls(root)

    @classmethod
    def open_or_init(cls, root: str | Path) -> "Workspace":
        root = Path(root)
        if (root / "manifest").exists():
            return cls(root)
        return cls.init(root)

    # -- locking -----------------------------------------------------------

    @contextmanager
    def lock(self):
        """Exclusive writer lock; raises LockHeldError instead of blocking."""
        path = self.root / "lock"
        fd = os.open(path, os.O_CREAT | os.O_RDWR, 0o644)
        try:
            try:
                fcntl.flock(fd, fcntl.LOCK_EX | fcntl.LOCK_NB)
            except OSError:
                raise LockHeldError(f"another run holds the lock on {self.root}") from None
            yield
        finally:
            os.close(fd)

    # -- artifacts ----------------------------------------------------------

    def artifact_path(self, signature: str) -> Path:
        return self.root / "artifacts" / signature

    def artifact_index(self) -> dict[str, ArtifactEntry]:
        """Replay artifacts.log, keeping entries whose files are intact."""
        log = self.root / "artifacts.log"
        index: dict[str, ArtifactEntry] = {}
        if not log.exists():
            return index
        for line in log.read_text().splitlines():
            if not line:
                continue
            sig, size, version = line.split("\t")
            path = self.artifact_path(sig)
            if path.exists() and path.stat().st_size == int(size):
                index[sig] = ArtifactEntry(
                    signature=sig, path=path, bytes=int(size), created_version=int(version)
                )
        return index

    def read_artifact(self, signature: str) -> bytes:
        path = self.artifact_path(signature)
        if not path.exists():
            raise NotFoundError(f"no artifact {signature}")
        return path.read_bytes()

    def write_artifact(self, signature: str, data: bytes, version_id: int) -> None:
        path = self.artifact_path(signature)
        if not path.exists():
            _atomic_write(path, data)
        with open(self.root / "artifacts.log", "a") as f:
            f.write(f"{signature}\t{len(data)}\t{version_id}\n")

    # -- stats ---------------------------------------------------------------

    def stats(self) -> dict[str, StatEntry]:
        log = self.root / "stats.log"
        out: dict[str, StatEntry] = {}
        if not log.exists():
            return out
        for line in log.read_text().splitlines():
            if not line:
                continue
            sig, c, l, size = line.split("\t")
            out[sig] = StatEntry(
                signature=sig,
                compute_us=None if int(c) == _UNMEASURED else int(c),
                load_us=None if int(l) == _UNMEASURED else int(l),
                bytes=int(size),
            )
        return out

    def append_stat(
        self, signature: str, compute_us: int | None, load_us: int | None, size: int
    ) -> None:
        c = _UNMEASURED if compute_us is None else compute_us
        l = _UNMEASURED if load_us is None else load_us
        with open(self.root / "stats.log", "a") as f:
            f.write(f"{signature}\t{c}\t{l}\t{size}\n")

    def name_compute_history(self) -> dict[str, int]:
        """Last measured compute cost per node name, newest version wins."""
        out: dict[str, int] = {}
        for entry in self.list_versions():
            for ev in entry.record.events:
                if ev.state == "compute":
                    out[ev.name] = ev.duration_us
        return out

    # -- versions -------------------------------------------------------------

    def _version_ids(self) -> list[int]:
        vdir = self.root / "versions"
        ids = []
        for child in vdir.iterdir():
            if child.name.isdigit() and (child / "record").exists():
                ids.append(int(child.name))
        return sorted(ids)

    def next_version_id(self) -> int:
        ids = self._version_ids()
        return (ids[-1] + 1) if ids else 1

    def record_version(self, run: RunRecord, source: str) -> VersionEntry:
        """Atomically append a new version; assigns the id and parent."""
        ids = self._version_ids()
        vid = (ids[-1] + 1) if ids else 1
        parent = ids[-1] if ids else None
        run.version_id = vid
        run.parent_id = parent

        normalized = dsl.normalize(dsl.parse(source))
        source_hash = hashlib.sha256(normalized.encode()).hexdigest()
        if parent is None:
            decl_diff = dsl.diff(dsl.WorkflowAst("empty", ()), dsl.parse(source))
        else:
            decl_diff = dsl.diff(
                dsl.parse(self.get_version(parent).source), dsl.parse(source)
            )

        payload = {
            "created_at": time.time(),
            "source_sha256": source_hash,
            "diff": {
                "added": sorted(decl_diff.added),
                "removed": sorted(decl_diff.removed),
                "modified": sorted(decl_diff.modified),
            },
            "run": run.to_json_dict(),
        }
        vdir = self.root / "versions"
        tmp = vdir / f".tmp-{vid}"
        if tmp.exists():
            for leftover in tmp.iterdir():
                leftover.unlink()
            tmp.rmdir()
        tmp.mkdir(parents=True)
        (tmp / "source.wf").write_bytes(source.encode("utf-8"))
        (tmp / "record").write_text(_canonical_json(payload))
        os.replace(tmp, vdir / str(vid))
        return self.get_version(vid)

    def list_versions(self) -> list[VersionEntry]:
        return [self.get_version(i) for i in self._version_ids()]

    def get_version(self, version_id: int) -> VersionEntry:
        vdir = self.root / "versions" / str(version_id)
        record_path = vdir / "record"
        if not record_path.exists():
            raise NotFoundError(f"no version {version_id}")
        payload = json.loads(record_path.read_text())
        d = payload["diff"]
        return VersionEntry(
            id=version_id,
            parent_id=payload["run"]["parent_id"],
            created_at=payload["created_at"],
            source=(vdir / "source.wf").read_bytes().decode("utf-8"),
            source_sha256=payload["source_sha256"],
            record=RunRecord.from_json_dict(payload["run"]),
            diff=dsl.DeclDiff(
                added=frozenset(d["added"]),
                removed=frozenset(d["removed"]),
                modified=frozenset(d["modified"]),
            ),
        )

    def latest(self) -> VersionEntry | None:
        ids = self._version_ids()
        return self.get_version(ids[-1]) if ids else None

    def best_version(self, metric: str) -> VersionEntry:
        """Highest metric value; ties resolve to the earliest version."""
        best: VersionEntry | None = None
        for entry in self.list_versions():
            value = entry.metrics.get(metric)
            if value is None:
                continue
            if best is None or value > best.metrics[metric]:
                best = entry
        if best is None:
            raise NotFoundError(f"no version has metric {metric!r}")
        return best

    def checkout(self, version_id: int) -> str:
        return self.get_version(version_id).source

    def compare(self, a: int, b: int) -> ComparisonReport:
        va, vb = self.get_version(a), self.get_version(b)
        source_diff = tuple(
            difflib.unified_diff(
                va.source.splitlines(),
                vb.source.splitlines(),
                fromfile=f"version {a}",
                tofile=f"version {b}",
                lineterm="",
            )
        )
        decl_diff = dsl.diff(dsl.parse(va.source), dsl.parse(vb.source))
        nodes_a, nodes_b = set(va.record.plan), set(vb.record.plan)
        state_changed = tuple(
            (n, va.record.plan[n], vb.record.plan[n])
            for n in sorted(nodes_a & nodes_b)
            if va.record.plan[n] != vb.record.plan[n]
        )
        metric_deltas: dict[str, tuple[float | None, float | None, float | None]] = {}
        for name in sorted(set(va.metrics) | set(vb.metrics)):
            ma, mb = va.metrics.get(name), vb.metrics.get(name)
            delta = (mb - ma) if (ma is not None and mb is not None) else None
            metric_deltas[name] = (ma, mb, delta)
        return ComparisonReport(
            a=a,
            b=b,
            source_diff=source_diff,
            decl_diff=decl_diff,
            dag_added=frozenset(nodes_b - nodes_a),
            dag_removed=frozenset(nodes_a - nodes_b),
            dag_state_changed=state_changed,
            metric_deltas=metric_deltas,
        )


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as f:
        f.write(data)
        f.flush()
        os.fsync(f.fileno())
    os.replace(tmp, path)
