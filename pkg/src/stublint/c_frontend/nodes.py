"""AST shapes for the C stub subset, plus the walkers the analyses share.

Expression nodes carry (line, col) of their introducing token.  Statement
bodies are plain Python lists; there is no separate Block node.
"""

from __future__ import annotations

from dataclasses import dataclass, field

# ---------------------------------------------------------------------------
# Types


@dataclass(frozen=True)
class CType:
    base: str  # canonical spelling: "value", "int", "struct foo", ...
    pointers: int = 0
    array: bool = False

    @property
    def is_value(self) -> bool:
        return self.base == "value" and self.pointers == 0 and not self.array

    def spell(self) -> str:
        return self.base + " " + "*" * self.pointers if self.pointers else self.base


# ---------------------------------------------------------------------------
# Expressions


@dataclass
class Num:
    text: str
    value: int | float | None = None
    line: int = 0
    col: int = 0


@dataclass
class StrLit:
    text: str
    line: int = 0
    col: int = 0


@dataclass
class CharLit:
    text: str
    line: int = 0
    col: int = 0


@dataclass
class Name:
    ident: str
    line: int = 0
    col: int = 0


@dataclass
class Call:
    func: object  # usually Name
    args: list = field(default_factory=list)
    line: int = 0
    col: int = 0

    @property
    def callee(self) -> str | None:
        return self.func.ident if isinstance(self.func, Name) else None


@dataclass
class Unary:
    op: str
    operand: object = None
    prefix: bool = True
    line: int = 0
    col: int = 0


@dataclass
class Binary:
    op: str
    left: object = None
    right: object = None
    line: int = 0
    col: int = 0


@dataclass
class Ternary:
    cond: object = None
    then: object = None
    els: object = None
    line: int = 0
    col: int = 0


@dataclass
class Assign:
    target: object = None
    value: object = None
    op: str = "="
    line: int = 0
    col: int = 0


@dataclass
class Cast:
    ctype: CType = None
    operand: object = None
    line: int = 0
    col: int = 0


@dataclass
class Member:
    obj: object = None
    fieldname: str = ""
    arrow: bool = False
    line: int = 0
    col: int = 0


@dataclass
class Index:
    obj: object = None
    index: object = None
    line: int = 0
    col: int = 0


@dataclass
class SizeofType:
    ctype: CType = None
    line: int = 0
    col: int = 0


@dataclass
class CompoundLit:
    ctype: CType = None
    inits: list = field(default_factory=list)
    line: int = 0
    col: int = 0


# ---------------------------------------------------------------------------
# Statements


@dataclass
class VarDecl:
    name: str
    ctype: CType
    init: object = None
    line: int = 0
    col: int = 0


@dataclass
class DeclStmt:
    decls: list[VarDecl] = field(default_factory=list)
    line: int = 0
    col: int = 0


@dataclass
class ExprStmt:
    expr: object = None
    line: int = 0
    col: int = 0


@dataclass
class If:
    cond: object = None
    then: list = field(default_factory=list)
    els: list | None = None
    line: int = 0
    col: int = 0


@dataclass
class While:
    cond: object = None
    body: list = field(default_factory=list)
    line: int = 0
    col: int = 0


@dataclass
class DoWhile:
    body: list = field(default_factory=list)
    cond: object = None
    line: int = 0
    col: int = 0


@dataclass
class For:
    init: object = None  # DeclStmt | ExprStmt | None
    cond: object = None
    step: object = None
    body: list = field(default_factory=list)
    line: int = 0
    col: int = 0


@dataclass
class SwitchCase:
    labels: list = field(default_factory=list)  # exprs; None = default
    body: list = field(default_factory=list)
    line: int = 0
    col: int = 0


@dataclass
class Switch:
    subject: object = None
    cases: list[SwitchCase] = field(default_factory=list)
    line: int = 0
    col: int = 0


@dataclass
class Return:
    expr: object = None
    line: int = 0
    col: int = 0


@dataclass
class Break:
    line: int = 0
    col: int = 0


@dataclass
class Continue:
    line: int = 0
    col: int = 0


@dataclass
class Opaque:
    """A statement the parser cannot model (inline asm, goto target, ...).

    Analyses treat it as scrambling every derived-pointer fact while leaving
    the lock state alone.
    """

    text: str = ""
    reason: str = ""
    line: int = 0
    col: int = 0


# ---------------------------------------------------------------------------
# Top level


@dataclass
class StubFunction:
    name: str
    params: list[tuple[str, CType]]
    return_type: CType
    is_camlprim: bool
    body: list = field(default_factory=list)
    locals: list[tuple[str, CType]] = field(default_factory=list)
    file: str = ""
    line: int = 0
    col: int = 0


@dataclass
class Prototype:
    name: str
    params: list[tuple[str | None, CType]]
    return_type: CType
    is_camlprim: bool = False
    file: str = ""
    line: int = 0
    col: int = 0


@dataclass
class StubUnit:
    file: str
    functions: list[StubFunction] = field(default_factory=list)
    prototypes: list[Prototype] = field(default_factory=list)
    globals: list[VarDecl] = field(default_factory=list)
    includes: list[tuple[str, int]] = field(default_factory=list)
    diagnostics: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# Walkers

_EXPR_FIELDS = {
    Num: (),
    StrLit: (),
    CharLit: (),
    Name: (),
    Call: ("func", "args"),
    Unary: ("operand",),
    Binary: ("left", "right"),
    Ternary: ("cond", "then", "els"),
    Assign: ("target", "value"),
    Cast: ("operand",),
    Member: ("obj",),
    Index: ("obj", "index"),
    SizeofType: (),
    CompoundLit: ("inits",),
}


def walk_expr(expr):
    """Yield every node of an expression tree, children before parents
    (C evaluates arguments before the call, so this is evaluation-ish
    order for the purposes the analyses care about)."""
    if expr is None:
        return
    fields = _EXPR_FIELDS.get(type(expr))
    if fields is None:
        return
    for name in fields:
        child = getattr(expr, name)
        if isinstance(child, list):
            for sub in child:
                yield from walk_expr(sub)
        else:
            yield from walk_expr(child)
    yield expr


def stmt_exprs(stmt):
    """Expressions evaluated *at* a statement, not inside nested bodies.

    CFG lowering gives nested statements their own nodes, so the analyses
    only ever need the current node's own expressions.
    """
    if isinstance(stmt, ExprStmt):
        return [stmt.expr]
    if isinstance(stmt, VarDecl):
        return [stmt.init] if stmt.init is not None else []
    if isinstance(stmt, DeclStmt):
        return [d.init for d in stmt.decls if d.init is not None]
    if isinstance(stmt, (If, While, DoWhile)):
        return [stmt.cond]
    if isinstance(stmt, For):
        return [stmt.cond] if stmt.cond is not None else []
    if isinstance(stmt, Switch):
        return [stmt.subject]
    if isinstance(stmt, Return):
        return [stmt.expr] if stmt.expr is not None else []
    return []


def iter_calls(stmt):
    """Call nodes evaluated at this statement, arguments-first order."""
    for expr in stmt_exprs(stmt):
        for node in walk_expr(expr):
            if isinstance(node, Call):
                yield node
