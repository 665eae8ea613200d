"""Patch text format, graph validation, and deterministic scheduling.

Format (line oriented, `#` comments):

    module <name> <kind> [key=value ...]
    connect <node>.<port> -> <node>.<port>
    probe <node>.<port> as <label>
    output left <node>.<port>
    output right <node>.<port>

Bare numbers are volts or ratios depending on the parameter; time parameters
take `ms`/`s` suffixes and frequency parameters `hz`/`khz`.  The source node
`sid` with output port `audio` is predeclared.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .kinds import KINDS, SID_NODE, SID_PORT, ModuleKind

_NAME_RE = re.compile(r"^[a-z][a-z0-9_]*$")
_LABEL_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_NUMBER_RE = re.compile(r"^[-+]?(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?")


class PatchError(Exception):
    """Patch parse or validation failure."""

    def __init__(self, detail: str, line: int | None = None):
        self.detail = detail
        self.line = line
        prefix = f"patch line {line}: " if line is not None else "patch: "
        super().__init__(prefix + detail)


@dataclass(frozen=True)
class PortRef:
    node: str
    port: str

    def __str__(self) -> str:
        return f"{self.node}.{self.port}"


@dataclass(frozen=True)
class Edge:
    src: PortRef
    dst: PortRef


@dataclass
class Node:
    kind: str
    params: dict


@dataclass
class PatchGraph:
    nodes: dict[str, Node] = field(default_factory=dict)
    edges: list[Edge] = field(default_factory=list)
    probes: list[tuple[PortRef, str]] = field(default_factory=list)
    outputs: dict[str, PortRef] = field(default_factory=dict)

    def input_ports(self, name: str) -> tuple[str, ...]:
        node = self.nodes[name]
        if node.kind == SID_NODE:
            return ()
        return KINDS[node.kind].input_ports(node.params)

    def output_ports(self, name: str) -> tuple[str, ...]:
        node = self.nodes[name]
        if node.kind == SID_NODE:
            return (SID_PORT,)
        return KINDS[node.kind].outputs


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.severity}: {self.message} [{self.code}]"


def _parse_value(text: str, spec, lineno: int):
    if spec.dimension == "bool":
        lowered = text.lower()
        if lowered in ("true", "1", "yes", "on"):
            return True
        if lowered in ("false", "0", "no", "off"):
            return False
        raise PatchError(f"parameter {spec.name} expects true/false, got {text!r}", lineno)
    if spec.dimension == "gainlist":
        gains = []
        for part in text.split(","):
            try:
                gains.append(float(part))
            except ValueError:
                raise PatchError(f"bad gain value {part!r} in {spec.name}", lineno) from None
        return tuple(gains)
    match = _NUMBER_RE.match(text)
    if not match:
        raise PatchError(f"bad numeric value {text!r} for {spec.name}", lineno)
    number = float(match.group(0))
    suffix = text[match.end():].lower()
    if suffix == "":
        return number
    if spec.dimension == "time":
        if suffix == "ms":
            return number * 1e-3
        if suffix == "s":
            return number
    elif spec.dimension == "freq":
        if suffix == "hz":
            return number
        if suffix == "khz":
            return number * 1e3
    raise PatchError(
        f"bad unit suffix {suffix!r} for {spec.dimension} parameter {spec.name}", lineno)


def _parse_port(text: str, graph: PatchGraph, lineno: int, side: str) -> PortRef:
    if "." not in text:
        raise PatchError(f"expected node.port, got {text!r}", lineno)
    node, port = text.split(".", 1)
    if node not in graph.nodes:
        raise PatchError(f"unknown node {node!r}", lineno)
    valid = graph.output_ports(node) if side == "out" else graph.input_ports(node)
    if port not in valid:
        kind = graph.nodes[node].kind
        raise PatchError(
            f"{kind} node {node!r} has no {'output' if side == 'out' else 'input'} "
            f"port {port!r} (valid: {', '.join(valid) or 'none'})", lineno)
    return PortRef(node, port)


def parse_patch(text: str) -> PatchGraph:
    graph = PatchGraph()
    graph.nodes[SID_NODE] = Node(SID_NODE, {})
    seen_labels: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        verb = fields[0]
        if verb == "module":
            if len(fields) < 3:
                raise PatchError("module needs a name and a kind", lineno)
            name, kind_name = fields[1], fields[2]
            if not _NAME_RE.match(name):
                raise PatchError(f"bad node name {name!r}", lineno)
            if name in graph.nodes:
                raise PatchError(f"duplicate node name {name!r}", lineno)
            kind = KINDS.get(kind_name)
            if kind is None:
                raise PatchError(f"unknown module kind {kind_name!r}", lineno)
            params: dict = {}
            specs = {spec.name: spec for spec in kind.param_specs}
            for assignment in fields[3:]:
                if "=" not in assignment:
                    raise PatchError(f"expected key=value, got {assignment!r}", lineno)
                key, value = assignment.split("=", 1)
                spec = specs.get(key)
                if spec is None:
                    raise PatchError(f"unknown parameter {key!r} for {kind_name}", lineno)
                params[key] = _parse_value(value, spec, lineno)
            for spec in kind.param_specs:
                params.setdefault(spec.name, spec.default)
            problem = kind.validate_params(params)
            if problem:
                raise PatchError(problem, lineno)
            graph.nodes[name] = Node(kind_name, params)
        elif verb == "connect":
            if len(fields) != 4 or fields[2] != "->":
                raise PatchError("connect syntax: connect a.out -> b.in", lineno)
            src = _parse_port(fields[1], graph, lineno, "out")
            dst = _parse_port(fields[3], graph, lineno, "in")
            graph.edges.append(Edge(src, dst))
        elif verb == "probe":
            if len(fields) != 4 or fields[2] != "as":
                raise PatchError("probe syntax: probe node.port as label", lineno)
            ref = _parse_port(fields[1], graph, lineno, "out")
            label = fields[3]
            if not _LABEL_RE.match(label):
                raise PatchError(f"bad probe label {label!r}", lineno)
            if label in seen_labels:
                raise PatchError(f"duplicate probe label {label!r}", lineno)
            seen_labels.add(label)
            graph.probes.append((ref, label))
        elif verb == "output":
            if len(fields) != 3 or fields[1] not in ("left", "right"):
                raise PatchError("output syntax: output left|right node.port", lineno)
            channel = fields[1]
            if channel in graph.outputs:
                raise PatchError(f"output {channel} already bound", lineno)
            graph.outputs[channel] = _parse_port(fields[2], graph, lineno, "out")
        else:
            raise PatchError(f"unknown directive {verb!r}", lineno)
    return graph


def _dependency_edges(graph: PatchGraph) -> list[tuple[str, str]]:
    """Node dependencies for scheduling: delay outputs are previous-sample
    boundary values, so edges leaving a delay node impose no ordering."""
    deps = []
    for edge in graph.edges:
        if graph.nodes[edge.src.node].kind == "delay":
            continue
        deps.append((edge.src.node, edge.dst.node))
    return deps


def _kahn_order(names: list[str], deps: list[tuple[str, str]]) -> tuple[list[str], list[str]]:
    """Topological order with lexicographic tie-breaking.

    Returns (order, leftover); leftover names participate in a cycle.
    """
    indegree = {name: 0 for name in names}
    followers: dict[str, list[str]] = {name: [] for name in names}
    for src, dst in deps:
        indegree[dst] += 1
        followers[src].append(dst)
    ready = sorted(name for name, deg in indegree.items() if deg == 0)
    order: list[str] = []
    while ready:
        current = ready.pop(0)
        order.append(current)
        changed = False
        for nxt in followers[current]:
            indegree[nxt] -= 1
            if indegree[nxt] == 0:
                ready.append(nxt)
                changed = True
        if changed:
            ready.sort()
    leftover = sorted(name for name in names if name not in set(order))
    return order, leftover


def validate(graph: PatchGraph) -> list[Diagnostic]:
    """Structural diagnostics; an empty list (or warnings only) means renderable."""
    diagnostics: list[Diagnostic] = []
    drivers: dict[PortRef, int] = {}
    for edge in graph.edges:
        drivers[edge.dst] = drivers.get(edge.dst, 0) + 1
    for ref, count in sorted(drivers.items(), key=lambda kv: str(kv[0])):
        if count > 1:
            diagnostics.append(Diagnostic(
                "error", "multiple-drivers",
                f"input {ref} has {count} drivers; sum signals with a mixer"))
    names = sorted(graph.nodes)
    _, leftover = _kahn_order(names, _dependency_edges(graph))
    if leftover:
        diagnostics.append(Diagnostic(
            "error", "delay-free-cycle",
            f"delay-free cycle through: {', '.join(leftover)}"))
    driven = {edge.dst for edge in graph.edges}
    for name in names:
        for port in graph.input_ports(name):
            ref = PortRef(name, port)
            if ref not in driven:
                diagnostics.append(Diagnostic(
                    "warning", "unconnected-input",
                    f"input {ref} is unconnected and reads 0 V"))
    if not graph.outputs:
        diagnostics.append(Diagnostic(
            "warning", "no-output",
            "no output binding; rendered audio will be silent"))
    return diagnostics


def has_errors(diagnostics: list[Diagnostic]) -> bool:
    return any(d.severity == "error" for d in diagnostics)


def schedule(graph: PatchGraph) -> list[str]:
    """Deterministic node evaluation order (ties broken by node name)."""
    names = sorted(graph.nodes)
    order, leftover = _kahn_order(names, _dependency_edges(graph))
    if leftover:
        raise PatchError(f"cannot schedule: delay-free cycle through {', '.join(leftover)}")
    return order
