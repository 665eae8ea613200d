"""Tokenizer for the BASIC subset.

Keywords match longest-first anywhere inside an alphabetic run, the classic
"crunch" rule: TOTAL lexes as the keyword TO followed by TAL.  Identifiers are
the alphanumeric runs left over; variable storage truncates them to two
significant characters later, so sane programs use short names.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import BasicSyntaxError

KEYWORDS = (
    "POKE", "PEEK", "FOR", "TO", "STEP", "NEXT", "IF", "THEN", "GOTO",
    "GOSUB", "RETURN", "LET", "PRINT", "REM", "END", "DIM", "INT", "RND",
    "ABS", "AND", "OR", "NOT",
)
_KEYWORDS_BY_LEN = tuple(sorted(KEYWORDS, key=len, reverse=True))

MAX_LINE_LENGTH = 255


@dataclass(frozen=True)
class Token:
    kind: str  # number identifier keyword operator string colon comma semicolon lparen rparen comment
    text: str
    line: int | None
    column: int


def _keyword_at(upper: str, i: int) -> str | None:
    for kw in _KEYWORDS_BY_LEN:
        if upper.startswith(kw, i):
            return kw
    return None


def tokenize(text: str, line_number: int | None = None) -> list[Token]:
    """Tokenize one physical line (without the leading line number removed)."""
    if len(text) > MAX_LINE_LENGTH:
        raise BasicSyntaxError(line_number, "line longer than 255 characters")
    upper = text.upper()
    tokens: list[Token] = []
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c in " \t":
            i += 1
            continue
        col = i + 1
        if not c.isascii() or (not c.isprintable() and c not in " \t"):
            raise BasicSyntaxError(line_number, f"illegal character {c!r}", column=col)
        if c == '"':
            j = text.find('"', i + 1)
            if j < 0:
                # Classic interpreters accept an unterminated string at end of line.
                tokens.append(Token("string", text[i + 1:], line_number, col))
                i = n
            else:
                tokens.append(Token("string", text[i + 1:j], line_number, col))
                i = j + 1
            continue
        if c.isdigit() or (c == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            while j < n and text[j].isdigit():
                j += 1
            if j < n and text[j] == ".":
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
            if j < n and upper[j] == "E":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    j = k
                    while j < n and text[j].isdigit():
                        j += 1
            tokens.append(Token("number", text[i:j], line_number, col))
            i = j
            continue
        if c.isalpha():
            kw = _keyword_at(upper, i)
            if kw == "REM":
                tokens.append(Token("comment", text[i + 3:], line_number, col))
                i = n
                continue
            if kw is not None:
                tokens.append(Token("keyword", kw, line_number, col))
                i += len(kw)
                continue
            j = i + 1
            while j < n and text[j].isalnum() and _keyword_at(upper, j) is None:
                j += 1
            tokens.append(Token("identifier", text[i:j].upper(), line_number, col))
            i = j
            continue
        if c in "<>" and i + 1 < n and text[i + 1] in "=>":
            two = text[i:i + 2]
            if two in ("<=", ">=", "<>"):
                tokens.append(Token("operator", two, line_number, col))
                i += 2
                continue
        if c in "+-*/^=<>":
            tokens.append(Token("operator", c, line_number, col))
        elif c == ":":
            tokens.append(Token("colon", c, line_number, col))
        elif c == ",":
            tokens.append(Token("comma", c, line_number, col))
        elif c == ";":
            tokens.append(Token("semicolon", c, line_number, col))
        elif c == "(":
            tokens.append(Token("lparen", c, line_number, col))
        elif c == ")":
            tokens.append(Token("rparen", c, line_number, col))
        else:
            raise BasicSyntaxError(line_number, f"illegal character {c!r}", column=col)
        i += 1
    return tokens
