"""Extraction of `external` declarations from OCaml source.

This is deliberately not an OCaml parser.  It scans for `external` items
(top-level or inside `module ... = struct` blocks), skipping comments and
string literals, and understands just enough of the type syntax to count
top-level arrows and classify arguments.  `.ml` and `.mli` files look the
same from here; callers decide what to do about duplicates between a pair.

Arity is the number of `->` at parenthesis depth zero, so `unit -> handle`
has arity 1 and `(int -> int) -> int` also has arity 1.  A declaration that
cannot be made sense of yields one parse error and scanning resumes at the
next item, so a bad declaration never hides its neighbours.
"""

from __future__ import annotations

import bisect
import re
from dataclasses import dataclass

# Argument/return kinds.
BOXED = "boxed_value"
UNBOXED_FLOAT = "unboxed_float"
UNBOXED_INT32 = "unboxed_int32"
UNBOXED_INT64 = "unboxed_int64"
UNBOXED_NATIVEINT = "unboxed_nativeint"
UNTAGGED_INT = "untagged_int"

# Base type spelling -> kind it unboxes/untags to, when the attribute applies.
_UNBOXABLE = {
    "float": UNBOXED_FLOAT,
    "int32": UNBOXED_INT32,
    "int64": UNBOXED_INT64,
    "nativeint": UNBOXED_NATIVEINT,
}

_ATTR_WORDS = frozenset({"unboxed", "untagged", "noalloc"})

# Keywords that start a new top-level item; used to resync after a malformed
# declaration so the rest of the file still gets scanned.
_RESYNC = frozenset(
    {"external", "let", "type", "module", "open", "include", "val", "exception"}
)

_WORD_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_']*")
_CHAR_LIT_RE = re.compile(r"'(\\[^']*|[^'\\])'")


@dataclass(frozen=True)
class ExternalDecl:
    ocaml_name: str
    byte_name: str
    native_name: str | None
    arity: int
    arg_kinds: tuple[str, ...]
    return_kind: str
    attrs: frozenset[str]
    source_loc: tuple[str, int, int]  # file, 1-based line, 1-based column


@dataclass(frozen=True)
class MlParseError:
    file: str
    line: int
    column: int
    message: str


# ---------------------------------------------------------------------------
# Tokenizer


def _tokenize(text: str):
    """Yield (kind, text, pos) tokens; kind is word | string | punct.

    Comments vanish entirely (they nest, and a string literal inside a
    comment keeps the comment open, as in real OCaml).  `->` is one token.
    """
    tokens = []
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c in " \t\r\n":
            i += 1
            continue
        if c == "(" and text.startswith("(*", i):
            i = _skip_comment(text, i)
            continue
        if c == '"':
            j = _skip_string(text, i)
            tokens.append(("string", text[i:j], i))
            i = j
            continue
        if c == "'":
            m = _CHAR_LIT_RE.match(text, i)
            if m:
                i = m.end()  # char literal, nothing interesting inside
                continue
            tokens.append(("punct", "'", i))
            i += 1
            continue
        m = _WORD_RE.match(text, i)
        if m:
            tokens.append(("word", m.group(), i))
            i = m.end()
            continue
        if c == "-" and text.startswith("->", i):
            tokens.append(("punct", "->", i))
            i += 2
            continue
        tokens.append(("punct", c, i))
        i += 1
    return tokens


def _skip_comment(text: str, i: int) -> int:
    depth = 0
    n = len(text)
    while i < n:
        if text.startswith("(*", i):
            depth += 1
            i += 2
        elif text.startswith("*)", i):
            depth -= 1
            i += 2
            if depth == 0:
                return i
        elif text[i] == '"':
            i = _skip_string(text, i)
        else:
            i += 1
    return n  # unterminated comment swallows the rest of the file


def _skip_string(text: str, i: int) -> int:
    i += 1
    n = len(text)
    while i < n:
        if text[i] == "\\":
            i += 2
        elif text[i] == '"':
            return i + 1
        else:
            i += 1
    return n


def _string_value(tok_text: str) -> str:
    body = tok_text[1:-1]
    return body.replace('\\"', '"').replace("\\\\", "\\")


# ---------------------------------------------------------------------------
# Arrow counting over token slices

_OPEN = {"(": ")", "[": "]", "<": ">"}
_CLOSE = {")", "]", ">"}


def _split_top_arrows(tokens) -> list[list]:
    """Split type tokens at depth-0 arrows.  Raises ValueError if unbalanced."""
    segments = [[]]
    stack = []
    for tok in tokens:
        kind, txt, _ = tok
        if kind == "punct" and txt in _OPEN:
            stack.append(_OPEN[txt])
        elif kind == "punct" and txt in _CLOSE:
            if txt == ">":
                # `>` only closes an object type; in `[> ...]` it is variance
                # punctuation and closes nothing.
                if stack and stack[-1] == ">":
                    stack.pop()
            elif not stack or stack[-1] != txt:
                raise ValueError("unbalanced parentheses in type expression")
            else:
                stack.pop()
        if kind == "punct" and txt == "->" and not stack:
            segments.append([])
        else:
            segments[-1].append(tok)
    if stack and set(stack) != {">"}:
        raise ValueError("unbalanced parentheses in type expression")
    return segments


def compute_arity(type_expr: str) -> int:
    """Arity of an external's type: its top-level arrow count.

    Arrows inside parentheses (or brackets, or object types) do not count;
    `unit` is an ordinary argument.  Raises ValueError on unbalanced
    parentheses.
    """
    return len(_split_top_arrows(_tokenize(type_expr))) - 1


def _segment_attrs(tokens) -> set[str]:
    """Attribute words mentioned in [@...] / [@@...] islands of a segment."""
    attrs = set()
    depth = 0
    in_attr = False
    for pos, (kind, txt, _) in enumerate(tokens):
        if kind == "punct" and txt == "[":
            nxt = tokens[pos + 1] if pos + 1 < len(tokens) else None
            if nxt and nxt[0] == "punct" and nxt[1] == "@":
                in_attr = True
            depth += 1
        elif kind == "punct" and txt == "]":
            depth -= 1
            if depth == 0:
                in_attr = False
        elif in_attr and kind == "word" and txt in _ATTR_WORDS:
            attrs.add(txt)
    return attrs


def _segment_base(tokens) -> str | None:
    """The bare type word of a segment, if it is just one (possibly
    parenthesized, possibly attributed) word; None otherwise."""
    toks = [t for t in tokens]
    # strip attribute islands [@...]
    stripped = []
    depth = 0
    skipping = 0
    for pos, tok in enumerate(toks):
        kind, txt, _ = tok
        if skipping:
            if kind == "punct" and txt == "[":
                skipping += 1
            elif kind == "punct" and txt == "]":
                skipping -= 1
            continue
        if kind == "punct" and txt == "[":
            nxt = toks[pos + 1] if pos + 1 < len(toks) else None
            if nxt and nxt[0] == "punct" and nxt[1] == "@":
                skipping = 1
                continue
        stripped.append(tok)
    # strip one level of wrapping parens
    while (
        len(stripped) >= 2
        and stripped[0][1] == "("
        and stripped[-1][1] == ")"
        and _balanced_as_whole(stripped)
    ):
        stripped = stripped[1:-1]
    if len(stripped) == 1 and stripped[0][0] == "word":
        return stripped[0][1]
    return None


def _balanced_as_whole(tokens) -> bool:
    depth = 0
    for pos, (kind, txt, _) in enumerate(tokens):
        if kind != "punct":
            continue
        if txt in _OPEN:
            depth += 1
        elif txt in _CLOSE:
            depth -= 1
            if depth == 0 and pos != len(tokens) - 1:
                return False
    return depth == 0


def _kind_of_segment(tokens, decl_attrs: set[str], has_native: bool) -> str:
    attrs = _segment_attrs(tokens) | decl_attrs
    base = _segment_base(tokens)
    if base in _UNBOXABLE and "unboxed" in attrs and has_native:
        return _UNBOXABLE[base]
    if base == "int" and "untagged" in attrs and has_native:
        return UNTAGGED_INT
    return BOXED


# ---------------------------------------------------------------------------
# Declaration scanner


def parse_ml_externals(source_text: str, file_name: str):
    """Scan OCaml source for external declarations.

    Returns (decls, errors).  Declarations inside comments or string
    literals are never extracted; a malformed declaration contributes one
    MlParseError and scanning continues with the next item.  Module-nested
    externals get a dot-separated ocaml_name.
    """
    tokens = _tokenize(source_text)
    line_starts = [0]
    for pos, ch in enumerate(source_text):
        if ch == "\n":
            line_starts.append(pos + 1)

    def loc(pos: int) -> tuple[int, int]:
        idx = bisect.bisect_right(line_starts, pos) - 1
        return idx + 1, pos - line_starts[idx] + 1

    decls: list[ExternalDecl] = []
    errors: list[MlParseError] = []

    def err(pos: int, message: str):
        line, col = loc(pos)
        errors.append(MlParseError(file_name, line, col, message))

    module_stack: list[str | None] = []
    pending_module: str | None = None
    awaiting_name = False

    i = 0
    n = len(tokens)
    while i < n:
        kind, txt, pos = tokens[i]
        if kind == "word":
            if txt == "module":
                awaiting_name = True
                pending_module = None
                i += 1
                continue
            if awaiting_name:
                awaiting_name = False
                pending_module = txt if txt != "type" else None
                i += 1
                continue
            if txt == "struct":
                module_stack.append(pending_module)
                pending_module = None
                i += 1
                continue
            if txt in ("sig", "begin", "object"):
                module_stack.append(None)
                pending_module = None
                i += 1
                continue
            if txt == "end":
                if module_stack:
                    module_stack.pop()
                i += 1
                continue
            if txt == "external":
                i = _parse_external(
                    tokens, i, file_name, module_stack, decls, err, loc
                )
                continue
            pending_module = None
        elif kind == "punct" and txt == "=" and pending_module is not None:
            # inside `module Name = ...`; keep waiting for struct
            i += 1
            continue
        else:
            pending_module = None
        i += 1

    return decls, errors


def _parse_external(tokens, i, file_name, module_stack, decls, err, loc):
    """Parse one declaration starting at tokens[i] == 'external'.

    Returns the index to resume the outer scan from.
    """
    n = len(tokens)
    start_pos = tokens[i][2]
    i += 1

    # name: identifier or parenthesized operator
    if i < n and tokens[i][0] == "word":
        name = tokens[i][1]
        i += 1
    elif i < n and tokens[i][1] == "(":
        j = i + 1
        parts = []
        while j < n and tokens[j][1] != ")":
            parts.append(tokens[j][1])
            j += 1
        if j >= n:
            err(start_pos, "unterminated operator name after 'external'")
            return j
        name = " ".join(parts) if parts else "()"
        i = j + 1
    else:
        err(start_pos, "missing name after 'external'")
        return i

    if i >= n or tokens[i][1] != ":":
        err(start_pos, f"expected ':' after external name '{name}'")
        return i

    i += 1
    # collect the type: tokens until a depth-0 '='
    type_tokens = []
    stack = []
    while i < n:
        kind, txt, pos = tokens[i]
        if kind == "punct" and not stack and txt == "=":
            break
        if kind == "word" and not stack and txt in _RESYNC:
            err(start_pos, f"missing '=' in external declaration '{name}'")
            return i  # resume at this keyword
        if kind == "punct" and txt in _OPEN:
            stack.append(_OPEN[txt])
        elif kind == "punct" and txt in _CLOSE:
            if txt == ">":
                if stack and stack[-1] == ">":
                    stack.pop()
            elif not stack or stack[-1] != txt:
                err(pos, f"unbalanced parentheses in type of '{name}'")
                return i + 1
            else:
                stack.pop()
        type_tokens.append(tokens[i])
        i += 1
    if i >= n:
        err(start_pos, f"missing '=' in external declaration '{name}'")
        return i
    i += 1  # consume '='

    # C symbol names: one or two string literals; later strings that spell
    # attribute words are the pre-4.03 attribute syntax.
    strings = []
    attrs = set()
    while i < n and tokens[i][0] == "string":
        val = _string_value(tokens[i][1])
        if strings and val in _ATTR_WORDS:
            attrs.add(val)
        elif len(strings) < 2:
            strings.append(val)
        i += 1
    if not strings:
        err(start_pos, f"missing C symbol name in external '{name}'")
        return i

    # trailing [@@...] attribute islands
    while i < n and tokens[i][1] == "[":
        depth = 0
        while i < n:
            t = tokens[i]
            if t[1] == "[":
                depth += 1
            elif t[1] == "]":
                depth -= 1
            elif t[0] == "word" and t[1] in _ATTR_WORDS:
                attrs.add(t[1])
            i += 1
            if depth == 0:
                break

    byte_name = strings[0]
    native_name = strings[1] if len(strings) > 1 else None

    try:
        segments = _split_top_arrows(type_tokens)
    except ValueError as exc:
        err(start_pos, f"{exc} in external '{name}'")
        return i
    arity = len(segments) - 1
    if arity == 0:
        err(start_pos, f"external '{name}' must have a function type")
        return i

    # `attrs` so far holds declaration-level attributes ([@@...] islands and
    # old-style strings); those apply to every segment.  Per-argument
    # [@unboxed]/[@untagged] apply to their own segment only, but are still
    # recorded on the declaration.
    decl_attrs = set(attrs)
    has_native = native_name is not None
    arg_kinds = tuple(
        _kind_of_segment(seg, decl_attrs, has_native) for seg in segments[:-1]
    )
    return_kind = _kind_of_segment(segments[-1], decl_attrs, has_native)
    for seg in segments:
        attrs |= _segment_attrs(seg)

    path = [m for m in module_stack if m]
    line, col = loc(start_pos)
    decls.append(
        ExternalDecl(
            ocaml_name=".".join(path + [name]),
            byte_name=byte_name,
            native_name=native_name,
            arity=arity,
            arg_kinds=arg_kinds,
            return_kind=return_kind,
            attrs=frozenset(attrs),
            source_loc=(file_name, line, col),
        )
    )
    return i
