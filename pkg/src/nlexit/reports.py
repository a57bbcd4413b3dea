"""Experiment reports: JSON documents plus a Markdown summary."""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

import numpy as np

SCHEMA_VERSION = "1.0"

PASS, FAIL, INFO, HYPOTHESES_VIOLATED = "pass", "fail", "informational", "hypotheses violated - expect failure"


def make_report(experiment: str, *, hypotheses: dict, metrics: dict, tolerances: dict,
                verdict: str, failures=(), notes=()) -> dict:
    return {
        "experiment": experiment,
        "hypotheses": hypotheses,
        "metrics": metrics,
        "tolerances": tolerances,
        "verdict": verdict,
        "failures": list(failures),
        "notes": list(notes),
    }


def jsonable(obj):
    """Convert numpy scalars/arrays and non-finite floats into strict JSON values."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if hasattr(obj, "to_json"):
        return jsonable(obj.to_json())
    return obj


def dumps(report: dict) -> str:
    return json.dumps(jsonable(report), indent=2, sort_keys=True) + "\n"


def code_version() -> str:
    """SHA-256 over the package sources, in sorted path order."""
    root = Path(__file__).resolve().parent
    h = hashlib.sha256()
    for p in sorted(root.rglob("*.py")):
        h.update(p.relative_to(root).as_posix().encode())
        h.update(p.read_bytes())
    return h.hexdigest()


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, (list, tuple)) and len(v) > 8:
        return f"[{len(v)} values]"
    if isinstance(v, dict):
        return "{...}"
    return str(v)


def summary_markdown(report: dict) -> str:
    lines = [f"# {report['experiment']}", "", f"**verdict:** {report['verdict']}", ""]
    hyp = report.get("hypotheses", {})
    lines += [f"hypotheses checked: {hyp.get('checked')}, passed: {hyp.get('passed')}", ""]
    lines += ["| metric | value |", "|---|---|"]
    for k, v in report.get("metrics", {}).items():
        lines.append(f"| {k} | {_fmt(jsonable(v))} |")
    if report.get("tolerances"):
        lines += ["", "| tolerance | value |", "|---|---|"]
        for k, v in report["tolerances"].items():
            lines.append(f"| {k} | {_fmt(jsonable(v))} |")
    if report.get("failures"):
        lines += ["", "## failures", ""] + [f"- {f}" for f in report["failures"]]
    if report.get("notes"):
        lines += ["", "## notes", ""] + [f"- {n}" for n in report["notes"]]
    return "\n".join(lines) + "\n"
