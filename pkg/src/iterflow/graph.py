"""Compile an AST into a content-signed DAG; slice it; check artifact reuse.

Each node carries a Merkle signature over (func, canonical params, parent
signatures in order), so any change to a node or one of its ancestors gives
every affected descendant a fresh signature.  Source csv nodes fold the
referenced file's content digest into their params, which makes input-data
edits invalidate downstream artifacts the same way code edits do.
"""

from __future__ import annotations

import hashlib
from collections.abc import Container
from dataclasses import dataclass
from pathlib import Path

from .dsl import Decl, Ref, WorkflowAst, render_literal
from .values import DataError

_SIG_DOMAIN = b"iterflow/node/v1"

SINK_KINDS = ("output", "metric")


class NoSinksError(Exception):
    """The workflow declares no output or metric node."""


@dataclass(frozen=True)
class DagNode:
    name: str
    kind: str
    func: str
    params: str  # canonical parameter text (positional literals + kwargs)
    literals: tuple  # positional literal args in order
    kv: tuple[tuple[str, str | int | float], ...]  # kwargs incl. injected ones
    parents: tuple[str, ...]
    signature: str  # 64 hex chars (sha256)

    def param_dict(self) -> dict:
        out: dict = dict(self.kv)
        out["_literals"] = self.literals
        return out


@dataclass(frozen=True)
class WorkflowDag:
    nodes: dict[str, DagNode]
    topo_order: tuple[str, ...]
    sinks: frozenset[str]

    def parents_map(self) -> dict[str, tuple[str, ...]]:
        return {n: self.nodes[n].parents for n in self.topo_order}


@dataclass(frozen=True)
class SliceResult:
    live: frozenset[str]
    pruned_static: frozenset[str]


def canonical_params(decl: Decl, extra: tuple[tuple[str, str | int | float], ...] = ()) -> str:
    """Render a decl's non-reference arguments canonically.

    Positional references are kept as ``@`` placeholders so the positional
    shape survives even though parent identity lives in the signature list.
    """
    parts = [
        "@" if isinstance(a, Ref) else render_literal(a) for a in decl.args
    ]
    merged = dict(decl.kwargs)
    merged.update(dict(extra))
    parts += [f"{k}={render_literal(v)}" for k, v in sorted(merged.items())]
    return ", ".join(parts)


def node_signature(func: str, params: str, parent_signatures: list[str]) -> str:
    h = hashlib.sha256()
    h.update(_SIG_DOMAIN)
    h.update(b"\x00" + func.encode("utf-8"))
    h.update(b"\x00" + params.encode("utf-8"))
    for sig in parent_signatures:
        h.update(b"\x00" + bytes.fromhex(sig))
    return h.hexdigest()


def _source_digest(decl: Decl, base_dir: Path) -> str:
    if not decl.args or not isinstance(decl.args[0], str):
        raise DataError(f"node {decl.name!r}: csv() needs a path string")
    path = Path(decl.args[0])
    if not path.is_absolute():
        path = base_dir / path
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise DataError(f"node {decl.name!r}: cannot read {path}: {exc}") from exc
    return hashlib.sha256(data).hexdigest()


def compile(ast: WorkflowAst, *, base_dir: str | Path = ".", default_seed: int = 0) -> WorkflowDag:
    """Build the signed DAG for an AST.

    Learner decls without an explicit seed get ``seed=default_seed`` folded
    into their params, so changing the run seed re-signs the trained model.
    """
    base = Path(base_dir)
    nodes: dict[str, DagNode] = {}
    order: list[str] = []
    for decl in ast.decls:
        extra: tuple[tuple[str, str | int | float], ...] = ()
        if decl.kind == "source" and decl.func == "csv":
            extra = (("content_sha256", _source_digest(decl, base)),)
        elif decl.kind == "learner" and "seed" not in dict(decl.kwargs):
            extra = (("seed", default_seed),)
        params = canonical_params(decl, extra)
        parents = decl.parent_names()
        sig = node_signature(decl.func, params, [nodes[p].signature for p in parents])
        merged = dict(decl.kwargs)
        merged.update(dict(extra))
        nodes[decl.name] = DagNode(
            name=decl.name,
            kind=decl.kind,
            func=decl.func,
            params=params,
            literals=tuple(a for a in decl.args if not isinstance(a, Ref)),
            kv=tuple(sorted(merged.items())),
            parents=parents,
            signature=sig,
        )
        order.append(decl.name)
    sinks = frozenset(n for n in order if nodes[n].kind in SINK_KINDS)
    if not sinks:
        raise NoSinksError(f"workflow {ast.name!r} has no output or metric node")
    return WorkflowDag(nodes=nodes, topo_order=tuple(order), sinks=sinks)


def slice(dag: WorkflowDag) -> SliceResult:
    """Split nodes into the sink-reaching live set and the static-pruned rest."""
    live: set[str] = set()
    stack = list(dag.sinks)
    while stack:
        n = stack.pop()
        if n in live:
            continue
        live.add(n)
        stack.extend(dag.nodes[n].parents)
    return SliceResult(
        live=frozenset(live),
        pruned_static=frozenset(dag.topo_order) - frozenset(live),
    )


def load_feasibility(dag: WorkflowDag, index: Container[str]) -> dict[str, bool]:
    """A node can be loaded iff the store holds its exact signature."""
    return {n: dag.nodes[n].signature in index for n in dag.topo_order}


def ancestors(parents: dict[str, tuple[str, ...]], order: tuple[str, ...]) -> dict[str, frozenset[str]]:
    """Transitive ancestor sets, computed in one pass over a topological order."""
    out: dict[str, frozenset[str]] = {}
    for n in order:
        acc: set[str] = set()
        for p in parents[n]:
            acc.add(p)
            acc |= out[p]
        out[n] = frozenset(acc)
    return out
