"""Tracks which C expressions the OCaml GC can invalidate, and when.

Per variable and program point one of three facts:

  plain         ordinary C data; the GC cannot touch it
  ocaml_value   a tagged OCaml value (declared type `value`)
  heap_derived  a C pointer into an OCaml block's payload, with a
                possibly_stale bit that flips once a GC opportunity passes

Dereference and runtime-call events are collected against the fixpoint
facts and judged with the lock states from lock_analysis.
"""

from __future__ import annotations

from dataclasses import dataclass

from .c_frontend import nodes as ast
from .c_frontend.intrinsics import (
    ALLOC_CALLS,
    CAMLPARAM,
    CAMLXPARAM,
    DATA_DERIVE,
    ENTER_BLOCKING,
    FIELD_READ,
    FIELD_WRITE,
    STRING_DEREF,
    is_macro_name,
)
from .dataflow import forward_solve
from .diagnostics import ERROR, NOTE, WARNING, Diagnostic
from .lock_analysis import LockMap, LockState, SummaryTable

PLAIN = ("plain", False)
VALUE = ("value", False)


def heap(stale: bool):
    return ("heap", bool(stale))


def is_heap(fact) -> bool:
    return fact[0] == "heap"


def is_tracked(fact) -> bool:
    """Facts whose dereference touches the OCaml heap."""
    return fact[0] in ("value", "heap")


def join_fact(a, b):
    if a == b:
        return a
    if is_heap(a) and is_heap(b):
        return heap(a[1] or b[1])
    return PLAIN


def join_env(a, b):
    if a is None:
        return b
    if b is None:
        return a
    keys = set(a) | set(b)
    return {k: join_fact(a.get(k, PLAIN), b.get(k, PLAIN)) for k in keys}


def initial_facts(fn: ast.StubFunction) -> dict:
    env = {}
    for name, ctype in fn.params:
        if name:
            env[name] = VALUE if ctype.is_value else PLAIN
    for name, ctype in fn.locals:
        env.setdefault(name, VALUE if ctype.is_value else PLAIN)
    return env


def fact_of(expr, env, derive_stale: bool = False):
    """Classify an expression.

    derive_stale marks fresh derivations (Data_*_val, value-to-pointer
    casts) as already stale; the transfer pass sets it when the lock is not
    definitely held, because the GC may move the block between computing
    the address and any later use.  Event operands always classify with
    derive_stale=False: within a single expression there is no such window,
    so an unlocked inline dereference stays a lock finding, not a stale one.
    """
    if expr is None:
        return PLAIN
    if isinstance(expr, ast.Name):
        return env.get(expr.ident, PLAIN)
    if isinstance(expr, ast.Call):
        name = expr.callee
        if name in DATA_DERIVE:
            return heap(derive_stale)
        if name == FIELD_READ:
            return VALUE
        if name in ALLOC_CALLS:
            return VALUE
        if name is not None and name.startswith("Val_"):
            return VALUE
        return PLAIN
    if isinstance(expr, ast.Cast):
        if expr.ctype.is_value:
            return VALUE
        if expr.ctype.pointers > 0 or expr.ctype.array:
            inner = fact_of(expr.operand, env, derive_stale)
            if inner == VALUE:
                return heap(derive_stale)
            if is_heap(inner):
                return inner
        return PLAIN
    if isinstance(expr, ast.Unary):
        if expr.op in ("++", "--"):
            return fact_of(expr.operand, env, derive_stale)
        return PLAIN
    if isinstance(expr, ast.Binary):
        if expr.op in ("+", "-"):
            left = fact_of(expr.left, env, derive_stale)
            right = fact_of(expr.right, env, derive_stale)
            if is_heap(left) and not is_tracked(right):
                return left
            if is_heap(right) and not is_tracked(left):
                return right
        return PLAIN
    if isinstance(expr, ast.Ternary):
        return join_fact(
            fact_of(expr.then, env, derive_stale),
            fact_of(expr.els, env, derive_stale),
        )
    if isinstance(expr, ast.Assign):
        return fact_of(expr.value, env, derive_stale)
    return PLAIN


# -- dataflow ---------------------------------------------------------------


def _is_gc_point(stmt, table: SummaryTable) -> bool:
    for call in ast.iter_calls(stmt):
        name = call.callee
        if name is None:
            continue
        if name == ENTER_BLOCKING:
            return True
        if not is_macro_name(name) and table.may_gc(name):
            return True
    return False


def transfer_values(node, env, lockmap: LockMap, table: SummaryTable):
    if env is None or node.kind != "stmt":
        return env
    stmt = node.stmt
    env = dict(env)
    if _is_gc_point(stmt, table):
        for name, fact in env.items():
            if is_heap(fact):
                env[name] = heap(True)
    if isinstance(stmt, ast.Opaque):
        for name, fact in env.items():
            if is_heap(fact):
                env[name] = PLAIN
        return env
    derive_stale = lockmap.at(node.id) is not LockState.HELD
    for expr in ast.stmt_exprs(stmt):
        for sub in ast.walk_expr(expr):
            if (
                isinstance(sub, ast.Unary)
                and sub.op == "&"
                and isinstance(sub.operand, ast.Name)
            ):
                name = sub.operand.ident
                if is_tracked(env.get(name, PLAIN)):
                    env[name] = PLAIN
            elif isinstance(sub, ast.Assign) and isinstance(sub.target, ast.Name):
                if sub.op == "=":
                    env[sub.target.ident] = fact_of(sub.value, env, derive_stale)
    if isinstance(stmt, ast.VarDecl) and stmt.init is not None:
        env[stmt.name] = fact_of(stmt.init, env, derive_stale)
    return env


@dataclass(frozen=True)
class DerefEvent:
    kind: str  # "value_macro_deref", "explicit_deref", or "runtime_call"
    subject: str
    fact: tuple
    node_id: int
    file: str
    line: int
    col: int


def _sketch(expr) -> str:
    if isinstance(expr, ast.Name):
        return expr.ident
    if isinstance(expr, ast.Call):
        name = expr.callee
        return f"{name}(...)" if name else "<call>"
    if isinstance(expr, ast.Member):
        op = "->" if expr.arrow else "."
        return f"{_sketch(expr.obj)}{op}{expr.fieldname}"
    if isinstance(expr, ast.Index):
        return f"{_sketch(expr.obj)}[...]"
    if isinstance(expr, ast.Unary) and expr.op == "*":
        return f"*{_sketch(expr.operand)}"
    if isinstance(expr, ast.Cast):
        return _sketch(expr.operand)
    if isinstance(expr, ast.Assign):
        return _sketch(expr.target)
    return "<expr>"


def track_values(cfg, lockmap: LockMap, table: SummaryTable):
    """Fixpoint facts per node, dereference/call events, and notes."""
    init = initial_facts(cfg.fn)
    factmap, _pops = forward_solve(
        cfg,
        init,
        lambda node, env: transfer_values(node, env, lockmap, table),
        join_env,
        None,
    )
    events: list[DerefEvent] = []
    notes: list[Diagnostic] = []
    file = cfg.fn.file
    for node in cfg.statement_nodes():
        env = factmap.get(node.id)
        if env is None:
            continue

        def event(kind, subject_expr, fact, where):
            events.append(
                DerefEvent(
                    kind,
                    _sketch(subject_expr),
                    fact,
                    node.id,
                    file,
                    where.line,
                    where.col,
                )
            )

        for expr in ast.stmt_exprs(node.stmt):
            for sub in ast.walk_expr(expr):
                if isinstance(sub, ast.Call):
                    name = sub.callee
                    if name is None or name in DATA_DERIVE:
                        continue
                    if name == FIELD_READ or name == FIELD_WRITE or name in STRING_DEREF:
                        if not sub.args:
                            continue
                        operand = sub.args[0]
                        fact = fact_of(operand, env)
                        if is_tracked(fact):
                            event("value_macro_deref", operand, fact, sub)
                    elif is_macro_name(name):
                        continue
                    elif table.requires_lock(name):
                        event("runtime_call", name_expr(sub), PLAIN, sub)
                elif isinstance(sub, ast.Unary) and sub.op == "*":
                    fact = fact_of(sub.operand, env)
                    if is_tracked(fact):
                        event("explicit_deref", sub.operand, fact, sub)
                elif isinstance(sub, ast.Unary) and sub.op == "&":
                    operand = sub.operand
                    if isinstance(operand, ast.Name) and is_tracked(
                        env.get(operand.ident, PLAIN)
                    ):
                        notes.append(
                            Diagnostic(
                                "NOTE",
                                NOTE,
                                file,
                                sub.line,
                                sub.col,
                                f"address of '{operand.ident}' escapes;"
                                " it is no longer tracked as an OCaml value",
                            )
                        )
                elif isinstance(sub, ast.Member) and sub.arrow:
                    fact = fact_of(sub.obj, env)
                    if is_tracked(fact):
                        event("explicit_deref", sub.obj, fact, sub)
                elif isinstance(sub, ast.Index):
                    fact = fact_of(sub.obj, env)
                    if is_tracked(fact):
                        event("explicit_deref", sub.obj, fact, sub)
    return factmap, events, notes


def name_expr(call: ast.Call):
    return call.func


def check_deref_safety(events, lockmap: LockMap) -> list[Diagnostic]:
    diags = []
    for ev in events:
        lock = lockmap.at(ev.node_id)
        if lock is LockState.BOTTOM:
            continue
        if ev.kind == "runtime_call":
            if lock is LockState.RELEASED:
                diags.append(
                    Diagnostic(
                        "RUNTIME_CALL_UNLOCKED",
                        ERROR,
                        ev.file,
                        ev.line,
                        ev.col,
                        f"{ev.subject} called while the runtime lock is"
                        " released",
                    )
                )
            elif lock is LockState.UNKNOWN:
                diags.append(
                    Diagnostic(
                        "RUNTIME_CALL_UNLOCKED",
                        WARNING,
                        ev.file,
                        ev.line,
                        ev.col,
                        f"{ev.subject} may be called without the runtime"
                        " lock held",
                    )
                )
            continue
        if is_heap(ev.fact) and ev.fact[1]:
            diags.append(
                Diagnostic(
                    "DERIVED_PTR_STALE",
                    ERROR,
                    ev.file,
                    ev.line,
                    ev.col,
                    f"'{ev.subject}' points into an OCaml block but the GC"
                    " may have moved it since the pointer was derived",
                )
            )
        elif lock is LockState.RELEASED:
            diags.append(
                Diagnostic(
                    "VALUE_DEREF_UNLOCKED",
                    ERROR,
                    ev.file,
                    ev.line,
                    ev.col,
                    f"'{ev.subject}' dereferences an OCaml value while the"
                    " runtime lock is released",
                )
            )
        elif lock is LockState.UNKNOWN:
            diags.append(
                Diagnostic(
                    "VALUE_DEREF_UNLOCKED",
                    WARNING,
                    ev.file,
                    ev.line,
                    ev.col,
                    f"'{ev.subject}' may dereference an OCaml value without"
                    " the runtime lock held",
                )
            )
    return diags


# -- CAMLparam registration ---------------------------------------------------


def _first_executed_stmt(body):
    for stmt in body:
        if isinstance(stmt, ast.DeclStmt) and all(
            d.init is None for d in stmt.decls
        ):
            continue  # storage reservation only, nothing runs
        return stmt
    return None


def _camlparam_count(stmt) -> int | None:
    if isinstance(stmt, ast.ExprStmt) and isinstance(stmt.expr, ast.Call):
        name = stmt.expr.callee
        if name in CAMLPARAM:
            return CAMLPARAM[name]
    return None


def check_camlparam(fn: ast.StubFunction) -> list[Diagnostic]:
    if not fn.is_camlprim:
        return []
    value_params = [name for name, t in fn.params if t.is_value]
    has_value_locals = any(t.is_value for _, t in fn.locals)
    if not value_params and not has_value_locals:
        return []
    first = _first_executed_stmt(fn.body)
    registered = _camlparam_count(first) if first is not None else None
    if registered is None:
        return [
            Diagnostic(
                "MISSING_CAMLPARAM",
                WARNING,
                fn.file,
                fn.line,
                fn.col,
                f"'{fn.name}' handles OCaml values but does not start with"
                " a CAMLparam macro",
            )
        ]
    for stmt in fn.body:
        if isinstance(stmt, ast.ExprStmt) and isinstance(stmt.expr, ast.Call):
            name = stmt.expr.callee
            if name in CAMLXPARAM:
                registered += CAMLXPARAM[name]
    if registered != len(value_params):
        return [
            Diagnostic(
                "CAMLPARAM_ARITY",
                WARNING,
                fn.file,
                first.line,
                first.col,
                f"CAMLparam chain registers {registered} values but"
                f" '{fn.name}' receives {len(value_params)}",
            )
        ]
    return []
