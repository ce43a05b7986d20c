"""The forward worklist solver, independent of any particular lattice."""

from hypothesis import given, strategies as st

from stublint.c_frontend.cfg import build_cfg
from stublint.c_frontend.parser import parse_unit
from stublint.dataflow import forward_solve


def toy_counter(cfg):
    """Count statements along the path, capped at 9 (a finite chain)."""

    def transfer(node, k):
        return k if node.kind != "stmt" else min(k + 1, 9)

    def join(a, b):
        if a is None:
            return b
        if b is None:
            return a
        return max(a, b)

    return forward_solve(cfg, 0, transfer, join, None)


def cfg_from(src):
    return build_cfg(parse_unit(src, "t.c").functions[0])


def test_straight_line_counts_statements():
    cfg = cfg_from("value f(value a) { g(); h(); k(); return a; }")
    pre, _ = toy_counter(cfg)
    assert pre[cfg.exit.id] == 4


def test_unreachable_nodes_keep_bottom():
    cfg = cfg_from("value f(value a) { return a; g(); }")
    pre, _ = toy_counter(cfg)
    dead = next(n for n in cfg.statement_nodes() if "'g'" in repr(n.stmt))
    assert pre.get(dead.id) is None


def test_branches_join_with_the_maximum():
    cfg = cfg_from(
        "value f(value a) { if (p()) { g(); h(); } else { k(); } return a; }"
    )
    pre, _ = toy_counter(cfg)
    # longest path into exit: if + two then-statements + return
    assert pre[cfg.exit.id] == 4


def test_loops_reach_a_fixpoint():
    cfg = cfg_from("value f(value a) { while (p()) { g(); } return a; }")
    pre, pops = toy_counter(cfg)
    assert pre[cfg.exit.id] == 9  # saturates at the chain cap
    assert pops >= len(cfg.nodes)


BRANCHY = st.lists(
    st.sampled_from(
        [
            "x = g();",
            "if (p()) { x = g(); }",
            "while (q()) { x = h(x); }",
            "if (p()) { x = g(); } else { x = h(x); }",
        ]
    ),
    min_size=1,
    max_size=6,
)


@given(BRANCHY)
def test_pop_budget_tracks_lattice_height(stmts):
    """Monotone transfer over a height-2 lattice: every node is popped at
    most height+1 times, so pops never exceed 3x the node count."""
    from stublint.lock_analysis import load_summaries, solve

    src = "value f(value a)\n{\n" + "\n".join(stmts) + "\nreturn a;\n}\n"
    cfg = cfg_from(src)
    lockmap = solve(cfg, load_summaries())
    assert lockmap.pops <= 3 * len(cfg.nodes)
