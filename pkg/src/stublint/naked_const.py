"""Flags statically-known even constants stored into OCaml values.

OCaml's uniform representation keeps the low bit set on immediates, so an
even constant in a `value` slot reads as a heap pointer to the GC.  A flat
constant propagation catches the direct cases (`v = Tag_cons;`) and one-hop
flows through C temporaries; anything the propagation cannot prove is left
alone, since the check cannot show absence of naked pointers anyway.
"""

from __future__ import annotations

from .c_frontend import nodes as ast
from .c_frontend.intrinsics import ALLOC_CALLS, CONSTANTS
from .dataflow import forward_solve
from .diagnostics import ERROR, Diagnostic

# Environment: dict of variable -> known int.  A variable absent from the
# dict is unknown; the whole environment being None marks unreachable code.


def join_const_env(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return {k: v for k, v in a.items() if b.get(k) == v}


def eval_const(expr, env) -> int | None:
    if expr is None or env is None:
        return None
    if isinstance(expr, ast.Num):
        return expr.value if isinstance(expr.value, int) else None
    if isinstance(expr, ast.Name):
        if expr.ident in CONSTANTS:
            return CONSTANTS[expr.ident]
        return env.get(expr.ident)
    if isinstance(expr, ast.Call):
        if expr.callee == "Val_int" and len(expr.args) == 1:
            k = eval_const(expr.args[0], env)
            return None if k is None else 2 * k + 1
        return None
    if isinstance(expr, ast.Cast):
        # numeric identity through casts; the bit pattern is what matters
        return eval_const(expr.operand, env)
    if isinstance(expr, ast.Unary) and expr.prefix:
        k = eval_const(expr.operand, env)
        if k is None:
            return None
        if expr.op == "-":
            return -k
        if expr.op == "+":
            return k
        return None
    if isinstance(expr, ast.Binary):
        left = eval_const(expr.left, env)
        right = eval_const(expr.right, env)
        if left is None or right is None:
            return None
        if expr.op == "+":
            return left + right
        if expr.op == "-":
            return left - right
        if expr.op == "<<":
            return left << right if 0 <= right < 256 else None
        if expr.op == "|":
            return left | right
        return None
    if isinstance(expr, ast.Ternary):
        then = eval_const(expr.then, env)
        els = eval_const(expr.els, env)
        return then if then is not None and then == els else None
    if isinstance(expr, ast.Assign):
        return eval_const(expr.value, env)
    return None


def transfer_const(node, env):
    if env is None or node.kind != "stmt":
        return env
    stmt = node.stmt
    env = dict(env)

    def forget(name):
        env.pop(name, None)

    for expr in ast.stmt_exprs(stmt):
        for sub in ast.walk_expr(expr):
            if isinstance(sub, ast.Assign) and isinstance(sub.target, ast.Name):
                name = sub.target.ident
                if sub.op == "=":
                    k = eval_const(sub.value, env)
                    if k is None:
                        forget(name)
                    else:
                        env[name] = k
                else:
                    forget(name)
            elif isinstance(sub, ast.Unary):
                if sub.op in ("++", "--", "&") and isinstance(
                    sub.operand, ast.Name
                ):
                    forget(sub.operand.ident)
    if isinstance(stmt, ast.Opaque):
        return {}
    if isinstance(stmt, ast.VarDecl) and stmt.init is not None:
        k = eval_const(stmt.init, env)
        if k is None:
            env.pop(stmt.name, None)
        else:
            env[stmt.name] = k
    return env


def solve_consts(cfg):
    env_map, _pops = forward_solve(
        cfg, {}, transfer_const, join_const_env, None
    )
    return env_map


def _value_vars(fn: ast.StubFunction) -> set[str]:
    names = {name for name, t in fn.params if name and t.is_value}
    names.update(name for name, t in fn.locals if t.is_value)
    return names


def check_naked(cfg, env_map) -> list[Diagnostic]:
    fn = cfg.fn
    value_vars = _value_vars(fn)
    diags = []

    def check_store(name, rhs, env, line, col):
        if name not in value_vars:
            return
        if isinstance(rhs, ast.Call) and rhs.callee in ALLOC_CALLS:
            return  # runtime allocations are well-formed by construction
        k = eval_const(rhs, env)
        if k is not None and k & 1 == 0:
            diags.append(
                Diagnostic(
                    "NAKED_POINTER",
                    ERROR,
                    fn.file,
                    line,
                    col,
                    f"constant {k} stored into OCaml value '{name}' has a"
                    " clear low bit; the GC would chase it as a pointer",
                )
            )

    for node in cfg.statement_nodes():
        env = env_map.get(node.id)
        if env is None:
            continue
        stmt = node.stmt
        if isinstance(stmt, ast.VarDecl) and stmt.init is not None:
            if stmt.ctype.is_value:
                check_store(stmt.name, stmt.init, env, stmt.line, stmt.col)
            continue
        for expr in ast.stmt_exprs(stmt):
            for sub in ast.walk_expr(expr):
                if (
                    isinstance(sub, ast.Assign)
                    and sub.op == "="
                    and isinstance(sub.target, ast.Name)
                ):
                    check_store(
                        sub.target.ident, sub.value, env, sub.line, sub.col
                    )
    return diags
