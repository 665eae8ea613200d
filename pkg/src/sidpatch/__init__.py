"""sidpatch: a deterministic offline simulator pairing a register-level sound
chip model driven by a line-numbered BASIC interpreter with a user-patched
virtual modular synthesizer, rendered to WAV and CSV traces."""

from .basic import (BasicError, BasicRuntimeError, BasicSyntaxError,
                    Interpreter, Program, RunReport, list_program,
                    parse_program, run, tokenize)
from .bus import SystemBus
from .cosim import CosimReport, RenderJob, RunArtifacts, cosimulate
from .output import write_trace_csv, write_wav
from .patch import (KINDS, Diagnostic, PatchError, PatchGraph, ProcessResult,
                    parse_patch, process_block, schedule, validate)
from .sid import (ATTACK_MS, BASE_ADDRESS, DECAY_RELEASE_MS, Envelope,
                  FilterUnit, SidChip, SidConfig, SidRangeError, Voice,
                  envelope_time)

__version__ = "0.1.0"

__all__ = [
    "BasicError", "BasicRuntimeError", "BasicSyntaxError", "Interpreter",
    "Program", "RunReport", "list_program", "parse_program", "run", "tokenize",
    "SystemBus",
    "CosimReport", "RenderJob", "RunArtifacts", "cosimulate",
    "write_trace_csv", "write_wav",
    "KINDS", "Diagnostic", "PatchError", "PatchGraph", "ProcessResult",
    "parse_patch", "process_block", "schedule", "validate",
    "ATTACK_MS", "BASE_ADDRESS", "DECAY_RELEASE_MS", "Envelope", "FilterUnit",
    "SidChip", "SidConfig", "SidRangeError", "Voice", "envelope_time",
    "__version__",
]
