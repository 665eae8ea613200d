"""Per-sample evaluation of a patch graph over a rendered audio buffer.

Acyclic graphs (counting delay edges) are processed node-by-node over the
whole block in a full topological order; the schedule-order-independence of
the graph semantics makes this exact.  Graphs with delay-closed feedback run
sample-by-sample using each kind's scalar step, with delay outputs pinned to
their previous-sample values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import PatchError, PatchGraph, PortRef, has_errors, validate, _kahn_order
from .kinds import KINDS, SID_NODE, SID_PORT


@dataclass
class ProcessResult:
    left: np.ndarray
    right: np.ndarray | None
    traces: dict[str, np.ndarray]


def process_block(graph: PatchGraph, schedule_order: list[str], sid_audio: np.ndarray,
                  n: int, sample_rate: float) -> ProcessResult:
    """Evaluate `n` samples of the patch fed by `sid_audio` (volts)."""
    diagnostics = validate(graph)
    if has_errors(diagnostics):
        raise PatchError("; ".join(str(d) for d in diagnostics if d.severity == "error"))
    if len(sid_audio) < n:
        raise ValueError("sid audio buffer shorter than requested sample count")
    if n == 0:
        return ProcessResult(left=np.zeros(0), right=None,
                             traces={label: np.zeros(0) for _, label in graph.probes})
    source = np.asarray(sid_audio[:n], dtype=float)

    instances = {}
    for name, node in graph.nodes.items():
        if node.kind == SID_NODE:
            continue
        instances[name] = KINDS[node.kind](node.params, sample_rate)

    driver: dict[PortRef, PortRef] = {}
    for edge in graph.edges:
        driver[edge.dst] = edge.src

    names = sorted(graph.nodes)
    full_deps = [(e.src.node, e.dst.node) for e in graph.edges]
    block_order, leftover = _kahn_order(names, full_deps)

    values: dict[PortRef, np.ndarray] = {PortRef(SID_NODE, SID_PORT): source}
    zeros = np.zeros(n)

    if not leftover:
        # Block mode: every node sees its full input buffers.
        for name in block_order:
            if name == SID_NODE:
                continue
            inst = instances[name]
            ins = {}
            for port in graph.input_ports(name):
                src = driver.get(PortRef(name, port))
                ins[port] = values[src] if src is not None else zeros
            outs = inst.process(ins, n)
            for port, data in outs.items():
                values[PortRef(name, port)] = data
    else:
        # Per-sample mode for feedback patches.
        for name in graph.nodes:
            for port in graph.output_ports(name):
                if name != SID_NODE:
                    values[PortRef(name, port)] = np.zeros(n)
        scalars: dict[PortRef, float] = {}
        delays = [name for name, node in graph.nodes.items() if node.kind == "delay"]
        order = [name for name in schedule_order if name != SID_NODE]
        input_ports = {name: graph.input_ports(name) for name in order}
        for i in range(n):
            scalars[PortRef(SID_NODE, SID_PORT)] = float(source[i])
            for name in delays:
                scalars[PortRef(name, "out")] = instances[name].value
            for name in order:
                inst = instances[name]
                ins = {}
                for port in input_ports[name]:
                    src = driver.get(PortRef(name, port))
                    ins[port] = scalars.get(src, 0.0) if src is not None else 0.0
                outs = inst.step(ins)
                for port, value in outs.items():
                    ref = PortRef(name, port)
                    scalars[ref] = value
                    values[ref][i] = value

    traces = {label: values[ref].copy() for ref, label in graph.probes}
    left_ref = graph.outputs.get("left")
    right_ref = graph.outputs.get("right")
    left = values[left_ref].copy() if left_ref is not None else np.zeros(n)
    right = values[right_ref].copy() if right_ref is not None else None
    return ProcessResult(left=left, right=right, traces=traces)
