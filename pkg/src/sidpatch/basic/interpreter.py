"""Tree-walking interpreter with a simulated statement-cost clock.

Every executed statement advances the simulated clock by one uniform,
configurable cost in microseconds, which is how programs time gate pulses.
Numeric values are double precision; variables truncate to two significant
name characters; comparisons yield -1/0 and AND/OR/NOT are bitwise on 16-bit
two's-complement integers.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

from .errors import BasicError, BasicRuntimeError, BasicSyntaxError
from .parser import (ArrayRef, Assign, BinOp, Call, DimStmt, EndStmt, ForStmt,
                     Gosub, Goto, IfStmt, NextStmt, Num, Poke, PrintStmt,
                     Program, RemStmt, ReturnStmt, UnaryOp, Var, format_number)

MAX_STACK_DEPTH = 64
_U64 = (1 << 64) - 1


class SplitMix64:
    """Deterministic 64-bit generator behind RND: seed in, reproducible stream."""

    def __init__(self, seed: int = 0):
        self.state = seed & _U64
        self.last = 0.0

    def _next_raw(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _U64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _U64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _U64
        return z ^ (z >> 31)

    def next_float(self) -> float:
        self.last = (self._next_raw() >> 11) / float(1 << 53)
        return self.last

    def reseed(self, value: float) -> None:
        self.state = struct.unpack("<Q", struct.pack("<d", value))[0]


@dataclass
class ForFrame:
    var_key: str
    limit: float
    step: float
    resume: tuple[int, int]  # (line index, statement index) after the FOR


@dataclass
class RunReport:
    halt_reason: str
    statements_executed: int
    final_sim_time_us: int
    output: str
    error: BasicError | None = None


@dataclass
class VmState:
    variables: dict[str, float] = field(default_factory=dict)
    arrays: dict[str, list[float]] = field(default_factory=dict)
    for_stack: list[ForFrame] = field(default_factory=list)
    gosub_stack: list[tuple[int, int]] = field(default_factory=list)
    pc: tuple[int, int] = (0, 0)
    sim_clock_us: int = 0
    halted: bool = False
    halt_reason: str = ""
    statements_executed: int = 0
    rng: SplitMix64 = field(default_factory=SplitMix64)
    output_parts: list[str] = field(default_factory=list)
    output_column: int = 0

    def output_text(self) -> str:
        return "".join(self.output_parts)


def _var_key(name: str) -> str:
    return name[:2]


class Interpreter:
    def __init__(self, program: Program, bus, statement_cost_us: int = 1000, seed: int = 0):
        if statement_cost_us < 1:
            raise ValueError("statement cost must be at least 1 microsecond")
        self.program = program
        self.bus = bus
        self.statement_cost_us = int(statement_cost_us)
        self.line_numbers = program.line_numbers()
        self.lines = [program.lines[n] for n in self.line_numbers]
        self.line_index = {n: i for i, n in enumerate(self.line_numbers)}
        self.state = VmState(rng=SplitMix64(seed))
        if not self.lines:
            self.state.halted = True
            self.state.halt_reason = "empty"
        else:
            self.state.pc = self._normalize((0, 0))

    # -- position helpers ---------------------------------------------------

    def _normalize(self, pos: tuple[int, int]) -> tuple[int, int]:
        """Skip past empty lines; halt when walking off the program end."""
        li, si = pos
        while li < len(self.lines) and si >= len(self.lines[li].statements):
            li += 1
            si = 0
        if li >= len(self.lines):
            self.state.halted = True
            self.state.halt_reason = "end-of-program"
            return (li, 0)
        return (li, si)

    def _after(self, pos: tuple[int, int]) -> tuple[int, int]:
        return (pos[0], pos[1] + 1)

    def _line_start(self, number: int, current_line: int | None) -> tuple[int, int]:
        li = self.line_index.get(number)
        if li is None:
            raise BasicRuntimeError("UNDEF'D STATEMENT", line=current_line)
        return (li, 0)

    def current_line_number(self) -> int | None:
        li = self.state.pc[0]
        if li < len(self.lines):
            return self.lines[li].number
        return None

    # -- expression evaluation ----------------------------------------------

    def _runtime_error(self, message: str) -> BasicRuntimeError:
        return BasicRuntimeError(message, line=self.current_line_number())

    def _to_int16(self, value: float) -> int:
        i = math.floor(value)
        if i < -32768 or i > 65535:
            raise self._runtime_error("ILLEGAL QUANTITY")
        return i & 0xFFFF

    def _from_int16(self, bits: int) -> float:
        bits &= 0xFFFF
        return float(bits - 65536 if bits & 0x8000 else bits)

    def _array(self, name: str) -> list[float]:
        key = _var_key(name)
        arr = self.state.arrays.get(key)
        if arr is None:
            arr = [0.0] * 11  # implicit DIM name(10)
            self.state.arrays[key] = arr
        return arr

    def _array_index(self, arr: list[float], value: float) -> int:
        idx = math.floor(value)
        if idx < 0 or idx >= len(arr):
            raise self._runtime_error("BAD SUBSCRIPT")
        return idx

    def eval(self, expr) -> float:
        if isinstance(expr, Num):
            return expr.value
        if isinstance(expr, Var):
            return self.state.variables.get(_var_key(expr.name), 0.0)
        if isinstance(expr, ArrayRef):
            arr = self._array(expr.name)
            return arr[self._array_index(arr, self.eval(expr.index))]
        if isinstance(expr, UnaryOp):
            if expr.op == "-":
                return -self.eval(expr.operand)
            bits = self._to_int16(self.eval(expr.operand))
            return self._from_int16(~bits)
        if isinstance(expr, Call):
            return self._call(expr)
        if isinstance(expr, BinOp):
            return self._binop(expr)
        raise TypeError(f"cannot evaluate {expr!r}")

    def _call(self, expr: Call) -> float:
        arg = self.eval(expr.arg)
        if expr.func == "INT":
            return float(math.floor(arg))
        if expr.func == "ABS":
            return abs(arg)
        if expr.func == "RND":
            rng = self.state.rng
            if arg > 0:
                return rng.next_float()
            if arg == 0:
                return rng.last
            rng.reseed(arg)
            return rng.next_float()
        # PEEK
        addr = math.floor(arg)
        if not 0 <= addr <= 65535:
            raise self._runtime_error("ILLEGAL QUANTITY")
        return float(self.bus.peek(addr))

    def _binop(self, expr: BinOp) -> float:
        op = expr.op
        a = self.eval(expr.left)
        b = self.eval(expr.right)
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            result = a * b
        elif op == "/":
            if b == 0:
                raise self._runtime_error("DIVISION BY ZERO")
            result = a / b
        elif op == "^":
            if a < 0 and b != int(b):
                raise self._runtime_error("ILLEGAL QUANTITY")
            if a == 0 and b < 0:
                raise self._runtime_error("DIVISION BY ZERO")
            result = a ** b
        elif op == "AND":
            return self._from_int16(self._to_int16(a) & self._to_int16(b))
        elif op == "OR":
            return self._from_int16(self._to_int16(a) | self._to_int16(b))
        elif op == "=":
            return -1.0 if a == b else 0.0
        elif op == "<>":
            return -1.0 if a != b else 0.0
        elif op == "<":
            return -1.0 if a < b else 0.0
        elif op == ">":
            return -1.0 if a > b else 0.0
        elif op == "<=":
            return -1.0 if a <= b else 0.0
        else:  # >=
            return -1.0 if a >= b else 0.0
        if math.isinf(result) or math.isnan(result):
            raise self._runtime_error("OVERFLOW")
        return result

    # -- statement execution --------------------------------------------------

    def step(self) -> int:
        """Execute the statement at pc, advance pc and the simulated clock.

        Returns the elapsed simulated microseconds (the uniform statement cost).
        """
        state = self.state
        if state.halted:
            raise RuntimeError("interpreter is halted")
        li, si = state.pc
        stmt = self.lines[li].statements[si]
        try:
            self._execute(stmt, (li, si))
        except BasicRuntimeError:
            state.halted = True
            state.halt_reason = "error"
            state.statements_executed += 1
            state.sim_clock_us += self.statement_cost_us
            raise
        state.statements_executed += 1
        state.sim_clock_us += self.statement_cost_us
        return self.statement_cost_us

    def _execute(self, stmt, pos: tuple[int, int]) -> None:
        state = self.state
        nxt = self._after(pos)

        if isinstance(stmt, Assign):
            value = self.eval(stmt.expr)
            if isinstance(stmt.target, Var):
                state.variables[_var_key(stmt.target.name)] = value
            else:
                arr = self._array(stmt.target.name)
                arr[self._array_index(arr, self.eval(stmt.target.index))] = value
        elif isinstance(stmt, Poke):
            addr = math.floor(self.eval(stmt.addr))
            value = math.floor(self.eval(stmt.value))
            if not 0 <= addr <= 65535 or not 0 <= value <= 255:
                raise self._runtime_error("ILLEGAL QUANTITY")
            self.bus.poke(addr, value)
        elif isinstance(stmt, PrintStmt):
            self._print(stmt)
        elif isinstance(stmt, ForStmt):
            key = _var_key(stmt.var)
            start = self.eval(stmt.start)
            limit = self.eval(stmt.limit)
            step = self.eval(stmt.step) if stmt.step is not None else 1.0
            state.variables[key] = start
            if (step >= 0 and start > limit) or (step < 0 and start < limit):
                state.pc = self._normalize(self._scan_past_next(nxt, key))
                return
            # Re-entering FOR with the same variable discards that frame and
            # anything nested inside it.
            for i, frame in enumerate(state.for_stack):
                if frame.var_key == key:
                    del state.for_stack[i:]
                    break
            if len(state.for_stack) >= MAX_STACK_DEPTH:
                raise self._runtime_error("OUT OF MEMORY")
            state.for_stack.append(ForFrame(key, limit, step, nxt))
        elif isinstance(stmt, NextStmt):
            frame = self._match_for_frame(stmt.var)
            key = frame.var_key
            state.variables[key] = state.variables.get(key, 0.0) + frame.step
            value = state.variables[key]
            if (frame.step >= 0 and value <= frame.limit) or (frame.step < 0 and value >= frame.limit):
                state.pc = self._normalize(frame.resume)
                return
            state.for_stack.pop()
        elif isinstance(stmt, IfStmt):
            if self.eval(stmt.cond) != 0:
                if stmt.target is not None:
                    state.pc = self._normalize(self._line_start(stmt.target, self.current_line_number()))
                    return
                # fall through to the statements after THEN
            else:
                state.pc = self._normalize((pos[0] + 1, 0))
                return
        elif isinstance(stmt, Goto):
            state.pc = self._normalize(self._line_start(stmt.target, self.current_line_number()))
            return
        elif isinstance(stmt, Gosub):
            if len(state.gosub_stack) >= MAX_STACK_DEPTH:
                raise self._runtime_error("OUT OF MEMORY")
            state.gosub_stack.append(nxt)
            state.pc = self._normalize(self._line_start(stmt.target, self.current_line_number()))
            return
        elif isinstance(stmt, ReturnStmt):
            if not state.gosub_stack:
                raise self._runtime_error("RETURN WITHOUT GOSUB")
            state.pc = self._normalize(state.gosub_stack.pop())
            return
        elif isinstance(stmt, DimStmt):
            key = _var_key(stmt.name)
            if key in state.arrays:
                raise self._runtime_error("REDIM'D ARRAY")
            size = math.floor(self.eval(stmt.size))
            if size < 0 or size > 32767:
                raise self._runtime_error("ILLEGAL QUANTITY")
            state.arrays[key] = [0.0] * (size + 1)
        elif isinstance(stmt, EndStmt):
            state.halted = True
            state.halt_reason = "end"
            return
        elif isinstance(stmt, RemStmt):
            pass
        else:
            raise TypeError(f"cannot execute {stmt!r}")
        state.pc = self._normalize(nxt)

    def _match_for_frame(self, var: str | None) -> ForFrame:
        stack = self.state.for_stack
        if var is None:
            if not stack:
                raise self._runtime_error("NEXT WITHOUT FOR")
            return stack[-1]
        key = _var_key(var)
        while stack:
            if stack[-1].var_key == key:
                return stack[-1]
            stack.pop()  # NEXT with a variable closes unfinished inner loops
        raise self._runtime_error("NEXT WITHOUT FOR")

    def _scan_past_next(self, pos: tuple[int, int], var_key: str) -> tuple[int, int]:
        """Find the statement after the NEXT matching a zero-iteration FOR."""
        li, si = pos
        depth = 0
        while li < len(self.lines):
            stmts = self.lines[li].statements
            while si < len(stmts):
                stmt = stmts[si]
                if isinstance(stmt, ForStmt):
                    depth += 1
                elif isinstance(stmt, NextStmt):
                    if depth == 0 and (stmt.var is None or _var_key(stmt.var) == var_key):
                        return (li, si + 1)
                    if depth > 0:
                        depth -= 1
                si += 1
            li += 1
            si = 0
        raise self._runtime_error("FOR WITHOUT NEXT")

    def _print(self, stmt: PrintStmt) -> None:
        state = self.state

        def write(text: str) -> None:
            state.output_parts.append(text)
            state.output_column += len(text)

        last_sep = None
        for item, sep in stmt.items:
            if isinstance(item, tuple):
                write(item[1])
            else:
                value = self.eval(item)
                digits = format_number(abs(value)) if value < 0 else format_number(value)
                sign = "-" if value < 0 else " "
                write(f"{sign}{digits} ")
            if sep == ",":
                width = (state.output_column // 10 + 1) * 10 - state.output_column
                write(" " * width)
            last_sep = sep
        if last_sep in (None, ""):
            state.output_parts.append("\n")
            state.output_column = 0

    # -- program driver -------------------------------------------------------

    def run(self, max_sim_time_us: int | None = None,
            max_statements: int | None = None) -> RunReport:
        """Step until END, falling off the end, an error, or a limit."""
        state = self.state
        error: BasicError | None = None
        while not state.halted:
            if max_statements is not None and state.statements_executed >= max_statements:
                state.halted = True
                state.halt_reason = "statement-limit"
                break
            if max_sim_time_us is not None and state.sim_clock_us >= max_sim_time_us:
                state.halted = True
                state.halt_reason = "time-limit"
                break
            try:
                self.step()
            except BasicRuntimeError as exc:
                error = exc
                break
        return RunReport(
            halt_reason=state.halt_reason,
            statements_executed=state.statements_executed,
            final_sim_time_us=state.sim_clock_us,
            output=state.output_text(),
            error=error,
        )


def run(program: Program, bus, statement_cost_us: int = 1000, seed: int = 0,
        max_sim_time_us: int | None = None,
        max_statements: int | None = None) -> RunReport:
    """Parse-and-go convenience wrapper around Interpreter.run."""
    return Interpreter(program, bus, statement_cost_us, seed).run(
        max_sim_time_us=max_sim_time_us, max_statements=max_statements)
