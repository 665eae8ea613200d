"""Command-line interface: render, check, modules.

Exit codes: 0 success, 1 usage error, 2 BASIC parse error, 3 patch error,
4 runtime error (BASIC runtime failures, unwritable files).
"""

from __future__ import annotations

import argparse
import re
import sys
from pathlib import Path

from .basic.errors import BasicRuntimeError, BasicSyntaxError
from .basic.parser import parse_program
from .cosim import RenderJob, cosimulate
from .patch.graph import PatchError, has_errors, parse_patch, validate
from .patch.kinds import KINDS

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_BASIC_PARSE = 2
EXIT_PATCH = 3
EXIT_RUNTIME = 4

_DURATION_RE = re.compile(r"^(\d+\.?\d*|\.\d+)(s|ms)$", re.IGNORECASE)


class UsageError(Exception):
    pass


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def parse_duration(text: str) -> float:
    match = _DURATION_RE.match(text.strip())
    if not match:
        raise UsageError(f"bad duration {text!r}; use forms like 2s, 1.5s or 250ms")
    value = float(match.group(1))
    if match.group(2).lower() == "ms":
        value *= 1e-3
    if value <= 0:
        raise UsageError("duration must be positive")
    return value


def build_parser() -> _ArgumentParser:
    parser = _ArgumentParser(prog="sidpatch",
                             description="Offline chip + interpreter + patch co-simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    render = sub.add_parser("render", help="co-simulate a program (and patch) to WAV/CSV")
    render.add_argument("--program", required=True, help="BASIC source file")
    render.add_argument("--patch", help="patch file (optional)")
    render.add_argument("--duration", required=True, help="render length, e.g. 2s or 250ms")
    render.add_argument("--out", required=True, help="output WAV path")
    render.add_argument("--sample-rate", type=int, default=44100)
    render.add_argument("--seed", type=int, default=0)
    render.add_argument("--statement-cost", type=int, default=1000,
                        help="simulated microseconds per BASIC statement")
    render.add_argument("--clock", type=float, default=985248.0, help="chip clock in Hz")
    render.add_argument("--trace", help="probe trace CSV path")
    render.add_argument("--trace-decimate", type=int, default=1)

    check = sub.add_parser("check", help="parse/validate inputs without rendering")
    check.add_argument("--program", help="BASIC source file")
    check.add_argument("--patch", help="patch file")

    sub.add_parser("modules", help="print the patch module kind reference")
    return parser


def cmd_render(args) -> int:
    job = RenderJob(
        program_path=args.program,
        out_wav_path=args.out,
        duration_s=parse_duration(args.duration),
        patch_path=args.patch,
        sample_rate=args.sample_rate,
        seed=args.seed,
        statement_cost_us=args.statement_cost,
        clock_hz=args.clock,
        trace_csv_path=args.trace,
        trace_decimate=args.trace_decimate,
    )
    try:
        job.validate()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    artifacts = cosimulate(job)
    for line in artifacts.report.lines():
        print(line)
    print(f"wav: {artifacts.wav_path}")
    if artifacts.trace_csv_path is not None:
        print(f"trace: {artifacts.trace_csv_path}")
    if artifacts.report.print_output:
        print("program output:")
        sys.stdout.write(artifacts.report.print_output)
    return EXIT_OK


def cmd_check(args) -> int:
    if not args.program and not args.patch:
        raise UsageError("check needs --program and/or --patch")
    status = EXIT_OK
    if args.program:
        try:
            program = parse_program(Path(args.program).read_text())
        except BasicSyntaxError as exc:
            print(f"program: {exc}")
            return EXIT_BASIC_PARSE
        print(f"program: OK ({len(program.lines)} lines)")
    if args.patch:
        try:
            patch = parse_patch(Path(args.patch).read_text())
        except PatchError as exc:
            print(f"patch: {exc}")
            return EXIT_PATCH
        diagnostics = validate(patch)
        for diag in diagnostics:
            print(f"patch: {diag}")
        if has_errors(diagnostics):
            return EXIT_PATCH
        print(f"patch: OK ({len(patch.nodes) - 1} modules)")
    return status


def cmd_modules(_args) -> int:
    print("patch module kinds (module <name> <kind> [key=value ...]):")
    for name in sorted(KINDS):
        kind = KINDS[name]
        print(f"\n{name}: {kind.doc}")
        inputs = ", ".join(kind.input_ports({s.name: s.default for s in kind.param_specs})) or "-"
        outputs = ", ".join(kind.outputs)
        print(f"  inputs: {inputs}")
        print(f"  outputs: {outputs}")
        for spec in kind.param_specs:
            default = spec.default
            if isinstance(default, tuple):
                default = ",".join(str(g) for g in default)
            print(f"  param {spec.name} ({spec.dimension}, default {default}): {spec.doc}")
    print("\npredeclared source: sid.audio (rendered chip output, volts)")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "render":
            return cmd_render(args)
        if args.command == "check":
            return cmd_check(args)
        return cmd_modules(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BasicSyntaxError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_BASIC_PARSE
    except PatchError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_PATCH
    except BasicRuntimeError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
