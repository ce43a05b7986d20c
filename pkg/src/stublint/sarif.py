"""SARIF 2.1.0 serialization of diagnostics.

One run, one tool, rules in the fixed vocabulary order, one result per
diagnostic.  Keys are inserted in a fixed order and json.dumps preserves
it, so identical findings serialize to identical bytes.
"""

from __future__ import annotations

import json

from . import __version__
from .diagnostics import RULES

SARIF_VERSION = "2.1.0"
SARIF_SCHEMA = (
    "https://raw.githubusercontent.com/oasis-tcs/sarif-spec/master/"
    "Schemata/sarif-schema-2.1.0.json"
)


def _location(file: str, line: int, col: int, message: str | None = None):
    loc = {
        "physicalLocation": {
            "artifactLocation": {"uri": file},
            "region": {
                "startLine": max(1, line),
                "startColumn": max(1, col),
            },
        }
    }
    if message is not None:
        loc["message"] = {"text": message}
    return loc


def sarif_log(diags) -> dict:
    rule_ids = list(RULES)
    rules = [
        {"id": rule_id, "shortDescription": {"text": RULES[rule_id]}}
        for rule_id in rule_ids
    ]
    results = []
    for diag in diags:
        result = {
            "ruleId": diag.rule_id,
            "ruleIndex": rule_ids.index(diag.rule_id),
            "level": diag.severity,
            "message": {"text": diag.message},
            "locations": [_location(diag.file, diag.line, diag.column)],
        }
        if diag.related:
            result["relatedLocations"] = [
                _location(file, line, col, message)
                for file, line, col, message in diag.related
            ]
        results.append(result)
    return {
        "$schema": SARIF_SCHEMA,
        "version": SARIF_VERSION,
        "runs": [
            {
                "tool": {
                    "driver": {
                        "name": "stublint",
                        "version": __version__,
                        "rules": rules,
                    }
                },
                "results": results,
            }
        ],
    }


def emit_sarif(diags) -> str:
    return json.dumps(sarif_log(diags), indent=2) + "\n"
