"""Per-variable value/pointer facts, dereference events, CAMLparam checks."""

import textwrap

from conftest import errors_of


def wrap(body: str) -> str:
    return (
        "#define _H(__h) (*((xenevtchn_handle **)Data_custom_val(__h)))\n"
        "value f(value a, value b)\n{\n"
        + textwrap.indent(textwrap.dedent(body), "    ")
        + "}\n"
    )


def rules(diags, severity=None):
    return [
        d.rule_id
        for d in diags
        if severity is None or d.severity == severity
    ]


# -- dereference vs lock state -------------------------------------------------


def test_custom_block_deref_in_blocking_section(lint_c):
    diags = lint_c(
        wrap(
            """\
            int rc;
            caml_enter_blocking_section();
            rc = xenevtchn_notify(_H(a), Int_val(b));
            caml_leave_blocking_section();
            CAMLreturn(Val_unit);
            """
        )
    )
    assert rules(errors_of(diags)) == ["VALUE_DEREF_UNLOCKED"]
    assert errors_of(diags)[0].line == 6  # the expanded macro keeps its line


def test_same_deref_under_lock_is_fine(lint_c):
    diags = lint_c(
        wrap(
            """\
            int rc;
            rc = xenevtchn_notify(_H(a), Int_val(b));
            CAMLreturn(Val_unit);
            """
        )
    )
    assert errors_of(diags) == []


def test_int_val_is_not_a_dereference(lint_c):
    diags = lint_c(
        wrap(
            """\
            int rc;
            caml_enter_blocking_section();
            rc = slow_op(Int_val(b));
            caml_leave_blocking_section();
            CAMLreturn(Val_unit);
            """
        )
    )
    assert errors_of(diags) == []


def test_field_macros_count_as_derefs(lint_c):
    diags = lint_c(
        wrap(
            """\
            value x;
            caml_enter_blocking_section();
            x = Field(a, 0);
            caml_leave_blocking_section();
            CAMLreturn(x);
            """
        )
    )
    assert rules(errors_of(diags)) == ["VALUE_DEREF_UNLOCKED"]


def test_string_val_site_flagged_result_untracked(lint_c):
    held = lint_c(
        wrap(
            """\
            const char *p;
            p = String_val(a);
            use(p);
            CAMLreturn(Val_unit);
            """
        )
    )
    assert errors_of(held) == []
    released = lint_c(
        wrap(
            """\
            const char *p;
            caml_enter_blocking_section();
            p = String_val(a);
            caml_leave_blocking_section();
            CAMLreturn(Val_unit);
            """
        )
    )
    assert rules(errors_of(released)) == ["VALUE_DEREF_UNLOCKED"]


def test_runtime_call_needs_lock(lint_c):
    diags = lint_c(
        wrap(
            """\
            caml_enter_blocking_section();
            caml_gc_compaction(Val_unit);
            caml_leave_blocking_section();
            CAMLreturn(Val_unit);
            """
        )
    )
    assert rules(errors_of(diags)) == ["RUNTIME_CALL_UNLOCKED"]


def test_runtime_call_under_unknown_lock_is_a_warning(lint_c):
    diags = lint_c(
        wrap(
            """\
            if (Int_val(b))
                caml_enter_blocking_section();
            caml_gc_compaction(Val_unit);
            CAMLreturn(Val_unit);
            """
        )
    )
    assert "RUNTIME_CALL_UNLOCKED" in rules(diags, "warning")
    assert "RUNTIME_CALL_UNLOCKED" not in rules(diags, "error")


# -- staleness across GC points --------------------------------------------------


STALE_BODY = """\
struct mmap_interface *intf;
value result;
result = caml_alloc(4, Abstract_tag);
intf = (struct mmap_interface *) result;
caml_enter_blocking_section();
slow_op();
caml_leave_blocking_section();
intf->len = Int_val(b);
CAMLreturn(result);
"""


def test_heap_pointer_goes_stale_at_blocking_section(lint_c):
    diags = lint_c(wrap(STALE_BODY))
    errs = errors_of(diags)
    assert rules(errs) == ["DERIVED_PTR_STALE"]
    # flagged on the dereference after the section, lock already re-held:
    # staleness outranks the lock state
    assert errs[0].line == STALE_BODY.splitlines().index("intf->len = Int_val(b);") + 4


def test_allocation_is_a_gc_point_too(lint_c):
    diags = lint_c(
        wrap(
            """\
            struct mmap_interface *intf;
            value result;
            result = caml_alloc(4, Abstract_tag);
            intf = (struct mmap_interface *) result;
            result = caml_alloc(4, Abstract_tag);
            intf->len = 1;
            CAMLreturn(result);
            """
        )
    )
    assert rules(errors_of(diags)) == ["DERIVED_PTR_STALE"]


def test_rederiving_under_lock_resets_staleness(lint_c):
    diags = lint_c(
        wrap(
            """\
            struct mmap_interface *intf;
            value result;
            result = caml_alloc(4, Abstract_tag);
            caml_enter_blocking_section();
            slow_op();
            caml_leave_blocking_section();
            intf = Data_abstract_val(result);
            intf->len = Int_val(b);
            CAMLreturn(result);
            """
        )
    )
    assert errors_of(diags) == []


def test_derivation_without_lock_is_already_stale(lint_c):
    # storing a derived pointer while the lock is out means any later use
    # trusts an address the GC was free to invalidate
    diags = lint_c(
        wrap(
            """\
            char **p;
            caml_enter_blocking_section();
            p = Data_custom_val(a);
            caml_leave_blocking_section();
            use(*p);
            CAMLreturn(Val_unit);
            """
        )
    )
    assert rules(errors_of(diags)) == ["DERIVED_PTR_STALE"]


def test_address_taken_value_is_noted_and_untracked(lint_c):
    diags = lint_c(
        wrap(
            """\
            value v;
            v = caml_alloc(1, 0);
            register_root(&v);
            CAMLreturn(v);
            """
        )
    )
    assert errors_of(diags) == []
    assert any(d.rule_id == "NOTE" and "&" not in d.message for d in diags)


def test_opaque_statement_drops_heap_facts(lint_c):
    diags = lint_c(
        wrap(
            """\
            char **p;
            p = Data_custom_val(a);
            asm("nop");
            caml_enter_blocking_section();
            caml_leave_blocking_section();
            use(*p);
            CAMLreturn(Val_unit);
            """
        )
    )
    # the asm scrambles the tracked pointer; no stale report afterwards
    assert errors_of(diags) == []


# -- CAMLparam registration ------------------------------------------------------


def test_missing_camlparam_is_a_warning(lint_c):
    src = "value f(value a)\n{\n    return a;\n}\n"
    diags = lint_c(src)
    assert [(d.rule_id, d.severity, d.line) for d in diags] == [
        ("MISSING_CAMLPARAM", "warning", 1)
    ]


def test_leading_declarations_do_not_hide_camlparam(lint_c):
    src = (
        "value f(value a)\n{\n"
        "    int x;\n"
        "    struct foo *y;\n"
        "    CAMLparam1(a);\n"
        "    CAMLreturn(a);\n}\n"
    )
    assert errors_of(lint_c(src)) == []
    assert not [d for d in lint_c(src) if d.rule_id == "MISSING_CAMLPARAM"]


def test_camlparam_count_mismatch(lint_c):
    src = "value f(value a, value b)\n{\n    CAMLparam1(a);\n    CAMLreturn(a);\n}\n"
    diags = lint_c(src)
    assert [d.rule_id for d in diags] == ["CAMLPARAM_ARITY"]
    assert diags[0].severity == "warning"


def test_camlxparam_chain_counts(lint_c):
    src = (
        "value f(value a, value b, value c, value d, value e, value g, value h)\n"
        "{\n"
        "    CAMLparam5(a, b, c, d, e);\n"
        "    CAMLxparam2(g, h);\n"
        "    CAMLreturn(a);\n}\n"
    )
    assert lint_c(src) == []


def test_non_primitive_helper_needs_no_camlparam(lint_c):
    src = (
        "static xc_interface *xch_of_val(value v)\n"
        "{\n"
        "    xc_interface *xch = *(xc_interface **)Data_custom_val(v);\n"
        "    return xch;\n"
        "}\n"
    )
    assert lint_c(src) == []


def test_value_locals_alone_require_registration(lint_c):
    src = "value f(void)\n{\n    value tmp;\n    tmp = make();\n    return tmp;\n}\n"
    diags = lint_c(src)
    assert "MISSING_CAMLPARAM" in [d.rule_id for d in diags]
