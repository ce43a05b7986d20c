"""Pragmatic frontend for the C subset that stub files actually use.

Pipeline: preprocess_local (one-level macro expansion, line grid preserved)
-> lex -> parse_unit -> build_cfg.  Anything outside the subset degrades to
an opaque node or an UNSUPPORTED_CONSTRUCT diagnostic instead of a silent
misparse.
"""

from .preprocess import PreprocessError, PreprocessResult, preprocess_local
from .lexer import CLexError, Token, lex
from .parser import CParseError, parse_unit
from .cfg import Cfg, Node, build_cfg
from .nodes import StubFunction, StubUnit

__all__ = [
    "PreprocessError",
    "PreprocessResult",
    "preprocess_local",
    "CLexError",
    "Token",
    "lex",
    "CParseError",
    "parse_unit",
    "Cfg",
    "Node",
    "build_cfg",
    "StubFunction",
    "StubUnit",
]
