"""Command-line driver: cross-checks .ml externals against .c stubs and
runs every analysis, with optional header/harness generation.

Exit status: 0 clean, 1 findings (errors, or warnings under --strict),
2 unusable input (I/O failure, fatal parse error, bad summaries file).
"""

from __future__ import annotations

import argparse
import os
import sys

from . import harness_gen, header_gen, ml_frontend
from .c_frontend import PreprocessError, build_cfg, parse_unit, preprocess_local
from .diagnostics import ERROR, NOTE, WARNING, Diagnostic, RULES, normalize
from .header_gen import MAX_DIRECT_ARITY
from .lock_analysis import (
    SummaryEntry,
    SummaryError,
    SummaryTable,
    collect_lock_diagnostics,
    load_summaries,
    solve,
)
from .naked_const import check_naked, solve_consts
from .sarif import emit_sarif
from .value_safety import check_camlparam, check_deref_safety, track_values

DEFAULT_SUMMARIES = "stublint-summaries.txt"


class FatalError(Exception):
    """Input that cannot be analyzed at all (distinct from lint findings)."""


# -- arity cross-check ------------------------------------------------------


def _is_argv_pair(params) -> bool:
    if len(params) != 2:
        return False
    (_, first), (_, second) = params
    return (
        first.base == "value"
        and first.pointers == 1
        and second.base == "int"
        and second.pointers == 0
    )


def _check_definition(decl, fn, flavor) -> Diagnostic | None:
    file, line, col = decl.source_loc
    related = (
        (file, line, col, f"external '{decl.ocaml_name}' declared here"),
    )
    nparams = len(fn.params)
    if flavor == "bytecode" and decl.arity > MAX_DIRECT_ARITY:
        if _is_argv_pair(fn.params):
            return None
        return Diagnostic(
            "ARITY_MISMATCH",
            ERROR,
            fn.file,
            fn.line,
            fn.col,
            f"'{fn.name}' implements an arity-{decl.arity} external and"
            " must use the (value *argv, int argn) form",
            related,
        )
    if nparams == 0:
        if decl.arity == 1:
            return Diagnostic(
                "VOID_STUB",
                ERROR,
                fn.file,
                fn.line,
                fn.col,
                f"'{fn.name}' takes no parameters, but OCaml always passes"
                " an argument (unit is the value 1)",
                related,
            )
        return Diagnostic(
            "ARITY_MISMATCH",
            ERROR,
            fn.file,
            fn.line,
            fn.col,
            f"'{fn.name}' takes no parameters but external"
            f" '{decl.ocaml_name}' has arity {decl.arity}",
            related,
        )
    if nparams != decl.arity:
        return Diagnostic(
            "ARITY_MISMATCH",
            ERROR,
            fn.file,
            fn.line,
            fn.col,
            f"'{fn.name}' takes {nparams} parameters but external"
            f" '{decl.ocaml_name}' has arity {decl.arity}",
            related,
        )
    return None


def check_arity(decls, units) -> list[Diagnostic]:
    definitions = {}
    for unit in units:
        for fn in unit.functions:
            definitions.setdefault(fn.name, fn)
    diags = []
    for decl in decls:
        if decl.byte_name.startswith("%"):
            continue
        file, line, col = decl.source_loc
        if decl.arity > MAX_DIRECT_ARITY and decl.native_name is None:
            diags.append(
                Diagnostic(
                    "ARITY_MISMATCH",
                    ERROR,
                    file,
                    line,
                    col,
                    f"external '{decl.ocaml_name}' has arity {decl.arity}"
                    " (> 5) but declares no separate native C name; OCaml"
                    " cannot compile this declaration",
                )
            )
        symbols = [(decl.byte_name, "bytecode")]
        if decl.native_name is not None and decl.native_name != decl.byte_name:
            symbols.append((decl.native_name, "native"))
        for symbol, flavor in symbols:
            fn = definitions.get(symbol)
            if fn is None:
                if units:
                    diags.append(
                        Diagnostic(
                            "NOTE",
                            NOTE,
                            file,
                            line,
                            col,
                            f"no definition of '{symbol}' in the given C"
                            " files; it may live elsewhere",
                        )
                    )
                continue
            found = _check_definition(decl, fn, flavor)
            if found is not None:
                diags.append(found)
    return diags


# -- per-unit analysis ------------------------------------------------------


def _unit_table(unit, base: SummaryTable) -> SummaryTable:
    """Stub-calls-stub: a CAMLprim defined here needs the lock like any
    runtime entry point, unless a summary already says otherwise."""
    table = SummaryTable(list(base.entries))
    for fn in unit.functions:
        if fn.is_camlprim and not table.lookup(fn.name):
            table.add(
                SummaryEntry(fn.name, False, frozenset({"requires_lock"}))
            )
    return table


def analyze_unit(unit, base_table: SummaryTable) -> list[Diagnostic]:
    table = _unit_table(unit, base_table)
    diags = list(unit.diagnostics)
    for fn in unit.functions:
        cfg = build_cfg(fn, is_noreturn=table.noreturn)
        lockmap = solve(cfg, table)
        diags.extend(collect_lock_diagnostics(cfg, lockmap, table))
        _facts, events, notes = track_values(cfg, lockmap, table)
        diags.extend(check_deref_safety(events, lockmap))
        diags.extend(notes)
        diags.extend(check_camlparam(fn))
        diags.extend(check_naked(cfg, solve_consts(cfg)))
    return diags


# -- driver ------------------------------------------------------------------


def _read(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return handle.read()
    except OSError as exc:
        raise FatalError(f"cannot read {path}: {exc.strerror}") from exc


def _load_table(summaries_path: str | None) -> SummaryTable:
    text = None
    path = summaries_path
    if path is None and os.path.exists(DEFAULT_SUMMARIES):
        path = DEFAULT_SUMMARIES
    if path is not None:
        text = _read(path)
    try:
        return load_summaries(text)
    except SummaryError as exc:
        raise FatalError(f"{path}: {exc}") from exc


def run(
    paths,
    summaries: str | None = None,
    header_out: str | None = None,
    harness_out: str | None = None,
    strict: bool = False,
    disabled=frozenset(),
):
    """Analyze the given files.  Returns (diagnostics, exit_code)."""
    ml_paths = [p for p in paths if p.endswith(".ml")]
    c_paths = [p for p in paths if p.endswith(".c")]
    stray = [p for p in paths if p not in ml_paths and p not in c_paths]
    if stray:
        raise FatalError(f"unsupported input (want .ml or .c): {stray[0]}")

    table = _load_table(summaries)

    diags: list[Diagnostic] = []
    decls = []
    for path in ml_paths:
        found, errors = ml_frontend.parse_ml_externals(_read(path), path)
        decls.extend(found)
        for err in errors:
            diags.append(
                Diagnostic(
                    "UNSUPPORTED_CONSTRUCT",
                    WARNING,
                    err.file,
                    err.line,
                    err.column,
                    f"external declaration skipped: {err.message}",
                )
            )

    if header_out is not None:
        _write_output(header_out, header_gen.render_header(decls))
    if harness_out is not None:
        _write_output(harness_out, harness_gen.generate_main(decls))

    units = []
    for path in c_paths:
        text = _read(path)
        try:
            pre = preprocess_local(text, path)
        except PreprocessError as exc:
            raise FatalError(f"{path}: {exc}") from exc
        diags.extend(pre.notes)
        units.append(parse_unit(pre.text, path))

    for unit in units:
        diags.extend(analyze_unit(unit, table))
    diags.extend(check_arity(decls, units))

    diags = [d for d in normalize(diags) if d.rule_id not in disabled]

    worst = 0
    for diag in diags:
        if diag.severity == ERROR or (strict and diag.severity == WARNING):
            worst = 1
            break
    return diags, worst


def _write_output(path: str, text: str):
    if path == "-":
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text)
    except OSError as exc:
        raise FatalError(f"cannot write {path}: {exc.strerror}") from exc


def _parse_rule_flag(values) -> frozenset:
    disabled = set()
    for item in values or ():
        rule, sep, state = item.partition("=")
        if not sep or state != "off" or rule not in RULES:
            raise FatalError(
                f"bad --rule value {item!r} (expected '<RULE_ID>=off')"
            )
        disabled.add(rule)
    return frozenset(disabled)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="stublint",
        description="Cross-check OCaml externals against their C stubs and"
        " lint the stubs for runtime-lock, GC and naked-pointer hazards.",
    )
    parser.add_argument(
        "paths",
        nargs="+",
        metavar="FILE",
        help=".ml files with external declarations and .c stub files",
    )
    parser.add_argument(
        "--summaries",
        metavar="FILE",
        help="function summary file (default: ./stublint-summaries.txt"
        " if present)",
    )
    parser.add_argument(
        "--sarif", metavar="FILE", help="also write findings as SARIF 2.1.0"
    )
    parser.add_argument(
        "--header-out",
        metavar="FILE",
        help="write a prototype header for the externals ('-' for stdout)",
    )
    parser.add_argument(
        "--harness-out",
        metavar="FILE",
        help="write a pthread test harness ('-' for stdout)",
    )
    parser.add_argument(
        "--strict",
        action="store_true",
        help="treat warnings as failures for the exit status",
    )
    parser.add_argument(
        "--rule",
        action="append",
        metavar="ID=off",
        help="disable a rule (repeatable)",
    )
    args = parser.parse_args(argv)

    try:
        disabled = _parse_rule_flag(args.rule)
        diags, status = run(
            args.paths,
            summaries=args.summaries,
            header_out=args.header_out,
            harness_out=args.harness_out,
            strict=args.strict,
            disabled=disabled,
        )
        if args.sarif is not None:
            _write_output(args.sarif, emit_sarif(diags))
    except FatalError as exc:
        print(f"stublint: error: {exc}", file=sys.stderr)
        return 2
    for diag in diags:
        print(diag.render())
    return status


if __name__ == "__main__":
    sys.exit(main())
