"""Co-simulation driver: interpreter statements interleaved with chip rendering
and patch processing, producing WAV and CSV artifacts.

The interpreter advances a simulated microsecond clock (one uniform cost per
statement).  Chip rendering is flushed up to the current simulated time
whenever a statement touches the chip (a register write, or a read of the
live oscillator/envelope offsets), so audio is sample-identical to rendering
after every statement.  When the program halts early the registers freeze and
rendering continues to the full duration.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .basic.errors import BasicRuntimeError
from .basic.interpreter import Interpreter, SplitMix64
from .basic.parser import Program, parse_program
from .bus import SystemBus
from .output import remove_if_exists, write_trace_csv, write_wav
from .patch.engine import process_block
from .patch.graph import PatchError, PatchGraph, has_errors, parse_patch, schedule, validate
from .sid import LFSR_MASK, LFSR_RESET, SidChip, SidConfig


@dataclass
class RenderJob:
    """Everything one render needs."""

    program_path: str | Path
    out_wav_path: str | Path
    duration_s: float
    patch_path: str | Path | None = None
    sample_rate: int = 44100
    seed: int = 0
    statement_cost_us: int = 1000
    clock_hz: float = 985248.0
    trace_csv_path: str | Path | None = None
    trace_decimate: int = 1

    def validate(self) -> None:
        if self.duration_s <= 0:
            raise ValueError("duration must be positive")
        if self.sample_rate < 8000:
            raise ValueError("sample rate must be at least 8000 Hz")
        if self.statement_cost_us < 1:
            raise ValueError("statement cost must be at least 1 microsecond")
        if self.trace_decimate < 1:
            raise ValueError("trace decimation must be a positive integer")


@dataclass
class CosimReport:
    halt_reason: str
    statements_executed: int
    final_sim_time_us: int
    peak_volts: float
    clip_count: int
    sample_count: int
    channels: int
    print_output: str

    def lines(self) -> list[str]:
        return [
            f"halt_reason: {self.halt_reason}",
            f"statements_executed: {self.statements_executed}",
            f"final_sim_time_us: {self.final_sim_time_us}",
            f"sample_count: {self.sample_count}",
            f"channels: {self.channels}",
            f"peak_volts: {self.peak_volts:.6f}",
            f"clipped_samples: {self.clip_count}",
        ]


@dataclass
class RunArtifacts:
    wav_path: Path
    trace_csv_path: Path | None
    report: CosimReport
    traces: dict[str, np.ndarray] = field(default_factory=dict)


def seed_noise_registers(chip: SidChip, seed: int) -> None:
    """Derive per-voice noise shift-register states from the job seed.

    Seed 0 keeps the pristine reset value; pure-tone output never reads the
    shift register, so it is seed-invariant either way.
    """
    if seed == 0:
        return
    stream = SplitMix64(seed)
    for voice in chip.voices:
        bits = stream._next_raw() & LFSR_MASK
        voice.lfsr = bits if bits else LFSR_RESET


def simulate_job(job: RenderJob, program: Program, patch: PatchGraph | None):
    """Run the co-simulation loop; returns (channel buffers, traces, report fields)."""
    sr = int(job.sample_rate)
    config = SidConfig(sample_rate_hz=float(sr), clock_hz=job.clock_hz)
    chip = SidChip(config)
    seed_noise_registers(chip, job.seed)
    bus = SystemBus(chip)
    interp = Interpreter(program, bus, job.statement_cost_us, job.seed)

    target_samples = int(round(job.duration_s * sr))
    duration_us = int(round(job.duration_s * 1e6))
    blocks: list[np.ndarray] = []
    emitted = 0

    def flush() -> None:
        nonlocal emitted
        due = min(target_samples, interp.state.sim_clock_us * sr // 1_000_000)
        if due > emitted:
            blocks.append(chip.render(due - emitted))
            emitted = due

    bus.sid_access_hook = flush
    state = interp.state
    while not state.halted and state.sim_clock_us < duration_us:
        interp.step()  # BasicRuntimeError propagates to the caller
    if not state.halted:
        state.halt_reason = "time-limit"
    if emitted < target_samples:
        blocks.append(chip.render(target_samples - emitted))
    audio = np.concatenate(blocks) if blocks else np.zeros(0)

    traces: dict[str, np.ndarray] = {}
    if patch is not None:
        result = process_block(patch, schedule(patch), audio, target_samples, sr)
        traces = result.traces
        if result.right is not None:
            channels = [result.left, result.right]
        else:
            channels = [result.left]
    else:
        channels = [audio]
    peak = max((float(np.max(np.abs(c))) for c in channels if c.size), default=0.0)
    return channels, traces, interp, peak, target_samples


def cosimulate(job: RenderJob) -> RunArtifacts:
    """Render a job to its WAV (and optional CSV) artifacts.

    Raises BasicSyntaxError for program parse failures, PatchError for patch
    failures, BasicRuntimeError for runtime errors (no artifacts are left on
    disk in that case), OSError for unwritable paths.
    """
    job.validate()
    program = parse_program(Path(job.program_path).read_text())
    patch = None
    if job.patch_path is not None:
        patch = parse_patch(Path(job.patch_path).read_text())
        diagnostics = validate(patch)
        if has_errors(diagnostics):
            raise PatchError("; ".join(
                str(d) for d in diagnostics if d.severity == "error"))

    channels, traces, interp, peak, target_samples = simulate_job(job, program, patch)

    wav_path = Path(job.out_wav_path)
    trace_path = Path(job.trace_csv_path) if job.trace_csv_path is not None else None
    sr = int(job.sample_rate)
    try:
        if len(channels) == 2:
            clip_count = write_wav((channels[0], channels[1]), 2, wav_path, sr)
        else:
            clip_count = write_wav(channels[0], 1, wav_path, sr)
        if trace_path is not None:
            write_trace_csv(traces, trace_path, job.trace_decimate, sr)
    except Exception:
        remove_if_exists(wav_path)
        if trace_path is not None:
            remove_if_exists(trace_path)
        raise

    state = interp.state
    report = CosimReport(
        halt_reason=state.halt_reason,
        statements_executed=state.statements_executed,
        final_sim_time_us=state.sim_clock_us,
        peak_volts=peak,
        clip_count=clip_count,
        sample_count=target_samples,
        channels=len(channels),
        print_output=state.output_text(),
    )
    return RunArtifacts(wav_path=wav_path, trace_csv_path=trace_path,
                        report=report, traces=traces)
