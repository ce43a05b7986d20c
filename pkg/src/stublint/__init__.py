"""Static checks for hand-written OCaml-to-C primitive stubs.

The package parses `external` declarations on the OCaml side, a pragmatic
subset of C on the stub side, and cross-checks the two: arity agreement,
runtime-lock discipline around blocking sections, pointers derived from
OCaml values that go stale across allocation points, CAMLparam registration
and constants stored into `value` slots that the GC would chase as pointers.
It can also emit a prototype header and a thread-per-primitive C harness for
downstream whole-program analyzers.
"""

__version__ = "0.1.0"
