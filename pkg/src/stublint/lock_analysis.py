"""Must-analysis of the OCaml runtime-lock state across each stub.

The runtime behaves like one global mutex: a stub is entered with the lock
held, `caml_enter_blocking_section` releases it, `caml_leave_blocking_section`
takes it back.  Everything else the runtime does is described by summaries,
either built in or loaded from a plain-text file, so no runtime headers are
needed.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .c_frontend.intrinsics import ENTER_BLOCKING, LEAVE_BLOCKING, is_macro_name
from .c_frontend.nodes import iter_calls
from .dataflow import forward_solve
from .diagnostics import ERROR, WARNING, Diagnostic


class LockState(enum.Enum):
    BOTTOM = "unreached"
    HELD = "held"
    RELEASED = "released"
    UNKNOWN = "unknown"

    def __repr__(self):
        return f"LockState.{self.name}"


def join_lock(a: LockState, b: LockState) -> LockState:
    if a is b:
        return a
    if a is LockState.BOTTOM:
        return b
    if b is LockState.BOTTOM:
        return a
    return LockState.UNKNOWN


def lock_leq(a: LockState, b: LockState) -> bool:
    return a is b or a is LockState.BOTTOM or b is LockState.UNKNOWN


LOCK_LATTICE_HEIGHT = 2  # Bottom -> Held/Released -> Unknown


EFFECT_NAMES = frozenset(
    {
        "acquires_lock",
        "releases_lock",
        "requires_lock",
        "no_lock_needed",
        "may_gc",
        "noreturn",
    }
)

# Functions that never return to the stub even without a summary saying so.
NORETURN_BUILTINS = frozenset({"caml_failwith", "caml_invalid_argument"})

BUILTIN_SUMMARIES = """\
# Preloaded model of the OCaml runtime.
caml_enter_blocking_section: releases_lock
caml_leave_blocking_section: acquires_lock
caml_*: requires_lock, may_gc
caml_stat_free: no_lock_needed
caml_failwith: requires_lock, noreturn
"""


class SummaryError(Exception):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.message = message
        self.line = line


@dataclass(frozen=True)
class SummaryEntry:
    pattern: str
    is_prefix: bool
    effects: frozenset[str]
    line: int = 0


@dataclass
class SummaryTable:
    entries: list[SummaryEntry] = field(default_factory=list)

    def __post_init__(self):
        self._exact: dict[str, frozenset[str]] = {}
        self._prefix: dict[str, frozenset[str]] = {}
        for entry in self.entries:
            self._add(entry)

    def _add(self, entry: SummaryEntry):
        if entry.is_prefix:
            self._prefix[entry.pattern] = entry.effects
        else:
            self._exact[entry.pattern] = entry.effects

    def add(self, entry: SummaryEntry):
        self.entries.append(entry)
        self._add(entry)

    def extend(self, entries):
        for entry in entries:
            self.add(entry)

    def lookup(self, name: str) -> frozenset[str]:
        """Effects for a callee: exact match first, then longest prefix."""
        hit = self._exact.get(name)
        if hit is not None:
            return hit
        best = None
        best_len = -1
        for pattern, effects in self._prefix.items():
            if len(pattern) > best_len and name.startswith(pattern):
                best = effects
                best_len = len(pattern)
        return best if best is not None else frozenset()

    def noreturn(self, name: str) -> bool:
        return name in NORETURN_BUILTINS or "noreturn" in self.lookup(name)

    def may_gc(self, name: str) -> bool:
        return "may_gc" in self.lookup(name)

    def requires_lock(self, name: str) -> bool:
        return "requires_lock" in self.lookup(name)


def parse_summary_lines(text: str, first_line: int = 1) -> list[SummaryEntry]:
    entries = []
    for offset, raw in enumerate(text.splitlines()):
        lineno = first_line + offset
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise SummaryError("expected '<name>: effect, ...'", lineno)
        name, _, effect_part = line.partition(":")
        name = name.strip()
        if not name or any(ch.isspace() for ch in name):
            raise SummaryError(f"bad function name {name!r}", lineno)
        is_prefix = name.endswith("*")
        if is_prefix:
            name = name[:-1]
        effects = set()
        for word in effect_part.split(","):
            word = word.strip()
            if not word:
                continue
            if word not in EFFECT_NAMES:
                raise SummaryError(f"unknown effect {word!r}", lineno)
            effects.add(word)
        if "acquires_lock" in effects and "releases_lock" in effects:
            raise SummaryError(
                f"{name!r} cannot both acquire and release the lock", lineno
            )
        entries.append(SummaryEntry(name, is_prefix, frozenset(effects), lineno))
    return entries


def load_summaries(text: str | None = None) -> SummaryTable:
    """Built-ins, optionally extended/overridden by user summary text."""
    table = SummaryTable(parse_summary_lines(BUILTIN_SUMMARIES))
    if text is not None:
        table.extend(parse_summary_lines(text))
    return table


# -- transfer ---------------------------------------------------------------


def step_call(name: str, state: LockState, table: SummaryTable):
    """Lock state after one call, plus (rule, severity, message) when the
    call is an enter/leave that does not match the current state."""
    if name == ENTER_BLOCKING:
        finding = None
        if state is LockState.RELEASED:
            finding = (
                "UNBALANCED_LOCK",
                ERROR,
                "caml_enter_blocking_section but the runtime lock is"
                " already released",
            )
        elif state is LockState.UNKNOWN:
            finding = (
                "UNBALANCED_LOCK",
                WARNING,
                "caml_enter_blocking_section but the runtime lock may"
                " already be released",
            )
        return LockState.RELEASED, finding
    if name == LEAVE_BLOCKING:
        finding = None
        if state is LockState.HELD:
            finding = (
                "UNBALANCED_LOCK",
                ERROR,
                "caml_leave_blocking_section but the runtime lock is"
                " still held",
            )
        elif state is LockState.UNKNOWN:
            finding = (
                "UNBALANCED_LOCK",
                WARNING,
                "caml_leave_blocking_section but the runtime lock may"
                " still be held",
            )
        return LockState.HELD, finding
    effects = table.lookup(name)
    if "releases_lock" in effects:
        return LockState.RELEASED, None
    if "acquires_lock" in effects:
        return LockState.HELD, None
    return state, None


def _node_calls(node):
    if node.kind != "stmt":
        return
    for call in iter_calls(node.stmt):
        name = call.callee
        if name is None or is_macro_name(name):
            continue
        yield name, call


def transfer(node, state: LockState, table: SummaryTable) -> LockState:
    if state is LockState.BOTTOM:
        return state
    for name, _ in _node_calls(node):
        state, _finding = step_call(name, state, table)
    return state


@dataclass
class LockMap:
    states: dict[int, LockState]
    pops: int

    def at(self, node_id: int) -> LockState:
        return self.states.get(node_id, LockState.BOTTOM)


def solve(cfg, table: SummaryTable) -> LockMap:
    pre, pops = forward_solve(
        cfg,
        LockState.HELD,
        lambda node, state: transfer(node, state, table),
        join_lock,
        LockState.BOTTOM,
    )
    return LockMap(pre, pops)


def collect_lock_diagnostics(cfg, lockmap: LockMap, table: SummaryTable):
    """Enter/leave balance findings, one pass after the fixpoint.

    Calls made while the lock is released are a value_safety concern
    (RUNTIME_CALL_UNLOCKED rides along with the dereference events); this
    pass only reports mismatched blocking-section transitions.
    """
    diags = []
    file = cfg.fn.file
    for node in cfg.statement_nodes():
        state = lockmap.at(node.id)
        if state is LockState.BOTTOM:
            continue
        for name, call in _node_calls(node):
            state, finding = step_call(name, state, table)
            if finding is not None:
                rule, severity, message = finding
                diags.append(
                    Diagnostic(rule, severity, file, call.line, call.col, message)
                )
    return diags
