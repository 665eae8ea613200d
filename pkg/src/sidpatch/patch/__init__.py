"""Virtual modular synthesizer: patch language, graph checks, DSP engine."""

from .engine import ProcessResult, process_block
from .graph import (Diagnostic, Edge, Node, PatchError, PatchGraph, PortRef,
                    has_errors, parse_patch, schedule, validate)
from .kinds import CLAMP_VOLTS, KINDS, ModuleKind, ParamSpec

__all__ = [
    "ProcessResult", "process_block",
    "Diagnostic", "Edge", "Node", "PatchError", "PatchGraph", "PortRef",
    "has_errors", "parse_patch", "schedule", "validate",
    "CLAMP_VOLTS", "KINDS", "ModuleKind", "ParamSpec",
]
