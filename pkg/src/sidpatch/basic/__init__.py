"""Line-numbered BASIC subset: tokenizer, parser, and interpreter."""

from .errors import BasicError, BasicRuntimeError, BasicSyntaxError
from .interpreter import Interpreter, RunReport, SplitMix64, VmState, run
from .parser import Line, Program, list_program, parse_line, parse_program
from .tokenizer import KEYWORDS, Token, tokenize

__all__ = [
    "BasicError", "BasicRuntimeError", "BasicSyntaxError",
    "Interpreter", "RunReport", "SplitMix64", "VmState", "run",
    "Line", "Program", "list_program", "parse_line", "parse_program",
    "KEYWORDS", "Token", "tokenize",
]
