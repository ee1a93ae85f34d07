"""Parsing, normalization, and diffing of the workflow language.

A workflow file is line-oriented: a ``workflow NAME`` header followed by one
declaration per line, ``KIND name = func(arg, ...)``.  Positional identifier
arguments reference previously declared nodes; strings and numbers are
literals; ``key=value`` pairs are operator parameters.  Comments run from
``#`` to end of line.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

KINDS = ("source", "extractor", "features", "learner", "output", "metric", "sim")

# Operator functions allowed per declaration kind.  `sim` is a simulated
# stand-in operator and is accepted under any kind so synthetic workflows can
# declare sinks without real data.
FUNCS_BY_KIND = {
    "source": ("csv",),
    "extractor": ("numeric", "categorical", "bucketize"),
    "features": ("union",),
    "learner": ("logreg",),
    "output": ("predict",),
    "metric": ("accuracy", "f1"),
    "sim": ("sim",),
}

IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>\#.*)
  | (?P<number>-?[0-9]+(?:\.[0-9]+)?(?:[eE][+-]?[0-9]+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"(?:\\.|[^"\\])*")
  | (?P<sym>[=(),])
    """,
    re.VERBOSE,
)


class DslError(Exception):
    """Base class for workflow-language errors; carries the source line."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.message = message
        self.line = line


class DslSyntaxError(DslError):
    pass


class DuplicateNameError(DslError):
    pass


class UnknownReferenceError(DslError):
    pass


class UnknownKindError(DslError):
    pass


class UnknownFuncError(DslError):
    pass


@dataclass(frozen=True)
class Ref:
    """A positional reference to a previously declared node."""

    name: str


@dataclass(frozen=True)
class Decl:
    kind: str
    name: str
    func: str
    args: tuple  # positional args in order: Ref | str | int | float
    kwargs: tuple  # (key, value) pairs sorted by key; value: str | int | float
    line: int = field(compare=False, default=0)

    def parent_names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.args if isinstance(a, Ref))


@dataclass(frozen=True)
class WorkflowAst:
    name: str
    decls: tuple[Decl, ...]

    def decl(self, name: str) -> Decl:
        for d in self.decls:
            if d.name == name:
                return d
        raise KeyError(name)


@dataclass(frozen=True)
class DeclDiff:
    added: frozenset[str]
    removed: frozenset[str]
    modified: frozenset[str]

    def is_empty(self) -> bool:
        return not (self.added or self.removed or self.modified)


def _tokenize(text: str, lineno: int) -> list[tuple[str, str]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise DslSyntaxError(f"unexpected character {text[pos]!r}", lineno)
        pos = m.end()
        kind = m.lastgroup
        if kind in ("ws", "comment"):
            continue
        tokens.append((kind, m.group()))
    return tokens


def _unquote(raw: str, lineno: int) -> str:
    body = raw[1:-1]
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\":
            if i + 1 >= len(body):
                raise DslSyntaxError("dangling backslash in string", lineno)
            nxt = body[i + 1]
            if nxt == "n":
                out.append("\n")
            elif nxt == "t":
                out.append("\t")
            elif nxt in ('"', "\\"):
                out.append(nxt)
            else:
                raise DslSyntaxError(f"unknown escape \\{nxt}", lineno)
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def _parse_number(raw: str) -> int | float:
    if re.fullmatch(r"-?[0-9]+", raw):
        return int(raw)
    return float(raw)


class _LineParser:
    def __init__(self, tokens: list[tuple[str, str]], lineno: int):
        self.tokens = tokens
        self.pos = 0
        self.lineno = lineno

    def peek(self) -> tuple[str, str] | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self) -> tuple[str, str]:
        tok = self.peek()
        if tok is None:
            raise DslSyntaxError("unexpected end of line", self.lineno)
        self.pos += 1
        return tok

    def expect(self, kind: str, value: str | None = None) -> str:
        tk, tv = self.next()
        if tk != kind or (value is not None and tv != value):
            want = value if value is not None else kind
            raise DslSyntaxError(f"expected {want}, found {tv!r}", self.lineno)
        return tv

    def done(self) -> None:
        tok = self.peek()
        if tok is not None:
            raise DslSyntaxError(f"trailing input {tok[1]!r}", self.lineno)


def _parse_decl(p: _LineParser, known: dict[str, Decl]) -> Decl:
    kind = p.expect("ident")
    if kind not in KINDS:
        raise UnknownKindError(f"unknown declaration kind {kind!r}", p.lineno)
    name = p.expect("ident")
    if name in known:
        raise DuplicateNameError(f"duplicate declaration {name!r}", p.lineno)
    p.expect("sym", "=")
    func = p.expect("ident")
    allowed = FUNCS_BY_KIND[kind] + ("sim",)
    if func not in allowed:
        raise UnknownFuncError(f"unknown function {func!r} for kind {kind!r}", p.lineno)

    args: list = []
    kwargs: dict[str, str | int | float] = {}
    p.expect("sym", "(")
    if p.peek() == ("sym", ")"):
        p.next()
    else:
        while True:
            tk, tv = p.next()
            if tk == "ident" and p.peek() == ("sym", "="):
                p.next()
                if tv in kwargs:
                    raise DslSyntaxError(f"duplicate keyword {tv!r}", p.lineno)
                vk, vv = p.next()
                if vk == "string":
                    kwargs[tv] = _unquote(vv, p.lineno)
                elif vk == "number":
                    kwargs[tv] = _parse_number(vv)
                elif vk == "ident":
                    kwargs[tv] = vv
                else:
                    raise DslSyntaxError(f"bad value for {tv!r}", p.lineno)
            elif tk == "ident":
                if tv not in known:
                    raise UnknownReferenceError(f"unknown reference {tv!r}", p.lineno)
                if kwargs:
                    raise DslSyntaxError(
                        "positional argument after keyword argument", p.lineno
                    )
                args.append(Ref(tv))
            elif tk == "string":
                if kwargs:
                    raise DslSyntaxError(
                        "positional argument after keyword argument", p.lineno
                    )
                args.append(_unquote(tv, p.lineno))
            elif tk == "number":
                if kwargs:
                    raise DslSyntaxError(
                        "positional argument after keyword argument", p.lineno
                    )
                args.append(_parse_number(tv))
            else:
                raise DslSyntaxError(f"unexpected token {tv!r}", p.lineno)
            sk, sv = p.next()
            if sv == ")":
                break
            if sv != ",":
                raise DslSyntaxError(f"expected ',' or ')', found {sv!r}", p.lineno)
    p.done()
    return Decl(
        kind=kind,
        name=name,
        func=func,
        args=tuple(args),
        kwargs=tuple(sorted(kwargs.items())),
        line=p.lineno,
    )


def parse(text: str) -> WorkflowAst:
    """Parse workflow source text into an AST, resolving all references."""
    header: str | None = None
    decls: list[Decl] = []
    known: dict[str, Decl] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        tokens = _tokenize(raw, lineno)
        if not tokens:
            continue
        p = _LineParser(tokens, lineno)
        if header is None:
            p.expect("ident", "workflow")
            header = p.expect("ident")
            p.done()
            continue
        decl = _parse_decl(p, known)
        known[decl.name] = decl
        decls.append(decl)
    if header is None:
        raise DslSyntaxError("missing 'workflow' header", 1)
    return WorkflowAst(name=header, decls=tuple(decls))


def render_literal(value: str | int | float) -> str:
    """Canonical rendering of a literal: quoted string or shortest decimal."""
    if isinstance(value, bool):  # guard: bools are ints in Python
        raise TypeError("boolean literals are not part of the language")
    if isinstance(value, str):
        escaped = (
            value.replace("\\", "\\\\")
            .replace('"', '\\"')
            .replace("\n", "\\n")
            .replace("\t", "\\t")
        )
        return f'"{escaped}"'
    if isinstance(value, int):
        return str(value)
    return repr(value)


def render_decl(d: Decl) -> str:
    parts = [a.name if isinstance(a, Ref) else render_literal(a) for a in d.args]
    parts += [f"{k}={render_literal(v)}" for k, v in d.kwargs]
    return f"{d.kind} {d.name} = {d.func}({', '.join(parts)})"


def normalize(ast: WorkflowAst) -> str:
    """Render the AST as canonical text; parse(normalize(a)) == a."""
    lines = [f"workflow {ast.name}"]
    lines.extend(render_decl(d) for d in ast.decls)
    return "\n".join(lines) + "\n"


def diff(a: WorkflowAst, b: WorkflowAst) -> DeclDiff:
    """Name-keyed comparison of normalized declaration text."""
    ta = {d.name: render_decl(d) for d in a.decls}
    tb = {d.name: render_decl(d) for d in b.decls}
    added = frozenset(tb) - frozenset(ta)
    removed = frozenset(ta) - frozenset(tb)
    modified = frozenset(n for n in set(ta) & set(tb) if ta[n] != tb[n])
    return DeclDiff(added=frozenset(added), removed=removed, modified=modified)
