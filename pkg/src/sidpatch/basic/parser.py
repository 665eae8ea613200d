"""Parser for line-numbered BASIC programs: AST types, parse_program, listing.

Grammar: assignment (LET optional), POKE a,v, PEEK(a) in expressions,
FOR v=a TO b [STEP c] / NEXT [v], IF expr THEN (line | statements), GOTO n,
GOSUB n / RETURN, PRINT expr-list, DIM a(n), REM, END.  Statements split on
':'; a later duplicate line number replaces the earlier line.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import BasicSyntaxError
from .tokenizer import Token, tokenize

MAX_LINE_NUMBER = 63999


# -- expressions -----------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float
    text: str  # source spelling, kept for listing


@dataclass(frozen=True)
class Var:
    name: str  # uppercased; storage truncates to 2 significant characters


@dataclass(frozen=True)
class ArrayRef:
    name: str
    index: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class UnaryOp:
    op: str  # '-' or 'NOT'
    operand: object


@dataclass(frozen=True)
class Call:
    func: str  # PEEK INT RND ABS
    arg: object


# -- statements --------------------------------------------------------------

@dataclass(frozen=True)
class Assign:
    target: object  # Var | ArrayRef
    expr: object
    explicit_let: bool = False


@dataclass(frozen=True)
class Poke:
    addr: object
    value: object


@dataclass(frozen=True)
class ForStmt:
    var: str
    start: object
    limit: object
    step: object | None


@dataclass(frozen=True)
class NextStmt:
    var: str | None


@dataclass(frozen=True)
class IfStmt:
    cond: object
    target: int | None  # line number, or None when THEN is followed by statements


@dataclass(frozen=True)
class Goto:
    target: int


@dataclass(frozen=True)
class Gosub:
    target: int


@dataclass(frozen=True)
class ReturnStmt:
    pass


@dataclass(frozen=True)
class PrintStmt:
    # (item, separator) pairs; item is an expression node or ("str", text);
    # separator is ';', ',' or '' when the item ends the list.
    items: tuple


@dataclass(frozen=True)
class DimStmt:
    name: str
    size: object


@dataclass(frozen=True)
class RemStmt:
    text: str


@dataclass(frozen=True)
class EndStmt:
    pass


@dataclass
class Line:
    number: int
    statements: list


@dataclass
class Program:
    lines: dict[int, Line] = field(default_factory=dict)

    def line_numbers(self) -> list[int]:
        return sorted(self.lines)

    def add_line(self, line: Line) -> None:
        self.lines[line.number] = line


# -- parsing -----------------------------------------------------------------

class _Parser:
    def __init__(self, tokens: list[Token], line_number: int | None):
        self.tokens = tokens
        self.pos = 0
        self.line_number = line_number

    def error(self, detail: str) -> BasicSyntaxError:
        return BasicSyntaxError(self.line_number, detail)

    def at_end(self) -> bool:
        return self.pos >= len(self.tokens)

    def peek(self) -> Token | None:
        return None if self.at_end() else self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def accept(self, kind: str, text: str | None = None) -> Token | None:
        tok = self.peek()
        if tok is not None and tok.kind == kind and (text is None or tok.text.upper() == text):
            return self.advance()
        return None

    def expect(self, kind: str, text: str | None = None, what: str = "") -> Token:
        tok = self.accept(kind, text)
        if tok is None:
            found = self.peek()
            got = f"{found.text!r}" if found else "end of line"
            raise self.error(f"expected {what or text or kind}, got {got}")
        return tok

    # statements

    def parse_statements(self) -> list:
        stmts: list = []
        if self.at_end():
            return stmts
        while True:
            stmts.extend(self.parse_statement())
            if self.at_end():
                return stmts
            if self.accept("colon") is None:
                tok = self.peek()
                raise self.error(f"unexpected {tok.text!r} after statement")
            if self.at_end():  # trailing colon
                return stmts

    def parse_statement(self) -> list:
        tok = self.peek()
        if tok is None:
            raise self.error("statement expected")
        if tok.kind == "comment":
            self.advance()
            return [RemStmt(tok.text)]
        if tok.kind == "keyword":
            kw = tok.text
            if kw == "POKE":
                self.advance()
                addr = self.parse_expr()
                self.expect("comma", what="','")
                value = self.parse_expr()
                return [Poke(addr, value)]
            if kw == "LET":
                self.advance()
                return [self.parse_assignment(explicit_let=True)]
            if kw == "FOR":
                self.advance()
                var = self.expect("identifier", what="loop variable").text
                self.expect("operator", "=", what="'='")
                start = self.parse_expr()
                self.expect("keyword", "TO", what="TO")
                limit = self.parse_expr()
                step = None
                if self.accept("keyword", "STEP"):
                    step = self.parse_expr()
                return [ForStmt(var, start, limit, step)]
            if kw == "NEXT":
                self.advance()
                var_tok = self.accept("identifier")
                return [NextStmt(var_tok.text if var_tok else None)]
            if kw == "IF":
                self.advance()
                cond = self.parse_expr()
                self.expect("keyword", "THEN", what="THEN")
                num = self.accept("number")
                if num is not None:
                    return [IfStmt(cond, self.line_target(num))]
                if self.at_end():
                    raise self.error("THEN requires a line number or a statement")
                return [IfStmt(cond, None)] + self.parse_statement()
            if kw == "GOTO":
                self.advance()
                num = self.expect("number", what="line number")
                return [Goto(self.line_target(num))]
            if kw == "GOSUB":
                self.advance()
                num = self.expect("number", what="line number")
                return [Gosub(self.line_target(num))]
            if kw == "RETURN":
                self.advance()
                return [ReturnStmt()]
            if kw == "PRINT":
                self.advance()
                return [self.parse_print()]
            if kw == "DIM":
                self.advance()
                name = self.expect("identifier", what="array name").text
                self.expect("lparen", what="'('")
                size = self.parse_expr()
                self.expect("rparen", what="')'")
                return [DimStmt(name, size)]
            if kw == "END":
                self.advance()
                return [EndStmt()]
            raise self.error(f"{kw} cannot start a statement")
        if tok.kind == "identifier":
            return [self.parse_assignment()]
        raise self.error(f"unexpected {tok.text!r}")

    def line_target(self, tok: Token) -> int:
        value = float(tok.text)
        if value != int(value) or not 1 <= int(value) <= MAX_LINE_NUMBER:
            raise self.error(f"bad line number {tok.text}")
        return int(value)

    def parse_assignment(self, explicit_let: bool = False) -> Assign:
        name = self.expect("identifier", what="variable").text
        if self.accept("lparen"):
            index = self.parse_expr()
            self.expect("rparen", what="')'")
            target: object = ArrayRef(name, index)
        else:
            target = Var(name)
        self.expect("operator", "=", what="'='")
        return Assign(target, self.parse_expr(), explicit_let)

    def parse_print(self) -> PrintStmt:
        items: list = []
        while not self.at_end() and self.peek().kind != "colon":
            tok = self.peek()
            if tok.kind == "string":
                self.advance()
                item: object = ("str", tok.text)
            else:
                item = self.parse_expr()
            sep = ""
            if self.accept("semicolon"):
                sep = ";"
            elif self.accept("comma"):
                sep = ","
            items.append((item, sep))
            if sep == "" :
                break
        if not self.at_end() and self.peek().kind != "colon":
            raise self.error("expected ';' or ',' between PRINT items")
        return PrintStmt(tuple(items))

    # expressions, lowest precedence first

    def parse_expr(self):
        return self.parse_or()

    def parse_or(self):
        left = self.parse_and()
        while self.accept("keyword", "OR"):
            left = BinOp("OR", left, self.parse_and())
        return left

    def parse_and(self):
        left = self.parse_compare()
        while self.accept("keyword", "AND"):
            left = BinOp("AND", left, self.parse_compare())
        return left

    def parse_compare(self):
        left = self.parse_add()
        while True:
            tok = self.peek()
            if tok is not None and tok.kind == "operator" and tok.text in ("=", "<>", "<", ">", "<=", ">="):
                self.advance()
                left = BinOp(tok.text, left, self.parse_add())
            else:
                return left

    def parse_add(self):
        left = self.parse_mul()
        while True:
            tok = self.peek()
            if tok is not None and tok.kind == "operator" and tok.text in ("+", "-"):
                self.advance()
                left = BinOp(tok.text, left, self.parse_mul())
            else:
                return left

    def parse_mul(self):
        left = self.parse_power()
        while True:
            tok = self.peek()
            if tok is not None and tok.kind == "operator" and tok.text in ("*", "/"):
                self.advance()
                left = BinOp(tok.text, left, self.parse_power())
            else:
                return left

    def parse_power(self):
        left = self.parse_unary()
        while True:
            tok = self.peek()
            if tok is not None and tok.kind == "operator" and tok.text == "^":
                self.advance()
                left = BinOp("^", left, self.parse_unary())
            else:
                return left

    def parse_unary(self):
        if self.accept("operator", "-"):
            return UnaryOp("-", self.parse_unary())
        if self.accept("keyword", "NOT"):
            return UnaryOp("NOT", self.parse_unary())
        return self.parse_primary()

    def parse_primary(self):
        tok = self.peek()
        if tok is None:
            raise self.error("expression expected")
        if tok.kind == "number":
            self.advance()
            return Num(float(tok.text), tok.text)
        if tok.kind == "keyword" and tok.text in ("PEEK", "INT", "RND", "ABS"):
            self.advance()
            self.expect("lparen", what="'('")
            arg = self.parse_expr()
            self.expect("rparen", what="')'")
            return Call(tok.text, arg)
        if tok.kind == "identifier":
            self.advance()
            if self.accept("lparen"):
                index = self.parse_expr()
                self.expect("rparen", what="')'")
                return ArrayRef(tok.text, index)
            return Var(tok.text)
        if tok.kind == "lparen":
            self.advance()
            inner = self.parse_expr()
            self.expect("rparen", what="')'")
            return inner
        raise self.error(f"expression expected, got {tok.text!r}")


def parse_line(text: str) -> Line:
    """Parse one source line, which must begin with a line number."""
    stripped = text.lstrip()
    context = None
    digits = ""
    for c in stripped:
        if c.isdigit():
            digits += c
        else:
            break
    if digits:
        context = int(digits)
    tokens = tokenize(text, context)
    if not tokens:
        raise BasicSyntaxError(context, "empty line")
    head = tokens[0]
    if head.kind != "number":
        raise BasicSyntaxError(None, "missing line number")
    value = float(head.text)
    if value != int(value) or not 1 <= int(value) <= MAX_LINE_NUMBER:
        raise BasicSyntaxError(None, f"bad line number {head.text}")
    number = int(value)
    parser = _Parser(tokens[1:], number)
    return Line(number, parser.parse_statements())


def parse_program(source: str) -> Program:
    """Parse newline-separated, line-numbered source into a Program."""
    program = Program()
    for raw in source.splitlines():
        if not raw.strip():
            continue
        program.add_line(parse_line(raw))
    return program


# -- listing -----------------------------------------------------------------

_PREC = {"OR": 1, "AND": 2, "=": 3, "<>": 3, "<": 3, ">": 3, "<=": 3, ">=": 3,
         "+": 4, "-": 4, "*": 5, "/": 5, "^": 6}
_WORD_OPS = {"OR", "AND"}


def format_number(value: float) -> str:
    if value == int(value) and abs(value) < 1e10:
        return str(int(value))
    return f"{value:G}"


def _render_expr(node, parent_prec: int = 0, right_side: bool = False) -> str:
    if isinstance(node, Num):
        return format_number(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, ArrayRef):
        return f"{node.name}({_render_expr(node.index)})"
    if isinstance(node, Call):
        return f"{node.func}({_render_expr(node.arg)})"
    if isinstance(node, UnaryOp):
        inner = _render_expr(node.operand, 7)
        text = f"NOT {inner}" if node.op == "NOT" else f"-{inner}"
        return f"({text})" if parent_prec >= 7 else text
    if isinstance(node, BinOp):
        prec = _PREC[node.op]
        op = f" {node.op} " if node.op in _WORD_OPS else node.op
        text = _render_expr(node.left, prec, False) + op + _render_expr(node.right, prec, True)
        if prec < parent_prec or (prec == parent_prec and right_side):
            return f"({text})"
        return text
    raise TypeError(f"cannot render {node!r}")


def _render_stmt(stmt) -> str:
    if isinstance(stmt, Poke):
        return f"POKE {_render_expr(stmt.addr)},{_render_expr(stmt.value)}"
    if isinstance(stmt, Assign):
        prefix = "LET " if stmt.explicit_let else ""
        return f"{prefix}{_render_expr(stmt.target)}={_render_expr(stmt.expr)}"
    if isinstance(stmt, ForStmt):
        text = f"FOR {stmt.var}={_render_expr(stmt.start)} TO {_render_expr(stmt.limit)}"
        if stmt.step is not None:
            text += f" STEP {_render_expr(stmt.step)}"
        return text
    if isinstance(stmt, NextStmt):
        return f"NEXT {stmt.var}" if stmt.var else "NEXT"
    if isinstance(stmt, Goto):
        return f"GOTO {stmt.target}"
    if isinstance(stmt, Gosub):
        return f"GOSUB {stmt.target}"
    if isinstance(stmt, ReturnStmt):
        return "RETURN"
    if isinstance(stmt, PrintStmt):
        parts = []
        for item, sep in stmt.items:
            if isinstance(item, tuple):
                parts.append(f'"{item[1]}"')
            else:
                parts.append(_render_expr(item))
            parts.append(sep)
        return "PRINT " + "".join(parts) if stmt.items else "PRINT"
    if isinstance(stmt, DimStmt):
        return f"DIM {stmt.name}({_render_expr(stmt.size)})"
    if isinstance(stmt, RemStmt):
        return f"REM{stmt.text}"
    if isinstance(stmt, EndStmt):
        return "END"
    if isinstance(stmt, IfStmt):
        raise TypeError("IfStmt is rendered at line level")
    raise TypeError(f"cannot render {stmt!r}")


def _render_line(line: Line) -> str:
    parts: list[str] = []
    glue = False  # next statement attaches after THEN without a colon

    def emit(text: str) -> None:
        nonlocal glue
        if glue:
            parts[-1] = parts[-1] + " " + text
            glue = False
        else:
            parts.append(text)

    for stmt in line.statements:
        if isinstance(stmt, IfStmt):
            text = f"IF {_render_expr(stmt.cond)} THEN"
            if stmt.target is not None:
                emit(f"{text} {stmt.target}")
            else:
                emit(text)
                glue = True
        else:
            emit(_render_stmt(stmt))
    return f"{line.number} " + ": ".join(parts) if parts else str(line.number)


def list_program(program: Program) -> str:
    """Canonical text: ascending line order, normalized keyword casing."""
    return "\n".join(_render_line(program.lines[n]) for n in program.line_numbers())
