"""Run reports and their JSON / CSV / plot-data emission."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .groups import FiniteGroup, irreps

FORMATS = ("json", "csv", "plotdata")
_KEYS = ("tool", "version", "command", "passed", "config", "hashes", "checks", "data", "timing")
_CHECK_KEYS = ("name", "value", "tolerance", "passed")


def group_hashes(group: FiniteGroup) -> dict:
    """Multiplication-table and irrep-table hashes; the curated tables are data dependencies."""
    out = {"group": group.name, "table_hash": group.table_hash()}
    try:
        out["irrep_hash"] = irreps(group).table_hash()
    except ValueError:
        out["irrep_hash"] = None
    return out


def _clean(x):
    """JSON-safe copy: numpy scalars to Python, complex to [re, im], non-finite floats to strings."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [_clean(float(x.real)), _clean(float(x.imag))]
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    return x


@dataclass
class Report:
    command: str
    config: dict
    checks: list[dict] = field(default_factory=list)
    data: dict = field(default_factory=dict)
    hashes: list[dict] = field(default_factory=list)
    timing: float = 0.0
    tables: dict = field(default_factory=dict, repr=False)  # name -> (header, rows), written as CSV
    series: dict = field(default_factory=dict, repr=False)  # name -> (xlabel, ylabel, xs, ys)

    def check(self, name: str, value, tolerance: str, passed: bool) -> None:
        if any(c["name"] == name for c in self.checks):
            raise ValueError(f"check {name!r} listed twice")
        self.checks.append({"name": name, "value": value, "tolerance": tolerance, "passed": bool(passed)})

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)

    def failures(self) -> list[dict]:
        return [c for c in self.checks if not c["passed"]]

    def to_json(self) -> dict:
        d = {"tool": "qdgadget", "version": __version__, "command": self.command, "passed": self.passed,
             "config": self.config, "hashes": self.hashes,
             "checks": [{k: c[k] for k in _CHECK_KEYS} for c in self.checks],
             "data": self.data, "timing": round(self.timing, 3)}
        return _clean(d)

    def dumps(self) -> str:
        # top-level order is fixed; nested data is key-sorted
        d = self.to_json()
        body = ",\n".join(f"  {json.dumps(k)}: " + json.dumps(d[k], indent=2, sort_keys=True).replace("\n", "\n  ")
                          for k in _KEYS)
        return "{\n" + body + "\n}\n"

    def summary(self) -> str:
        lines = [f"{self.command}: {'PASS' if self.passed else 'FAIL'} ({len(self.checks)} checks, {self.timing:.1f}s)"]
        for c in self.checks:
            v = c["value"]
            vs = f"{v:.6g}" if isinstance(v, float) else str(v)
            lines.append(f"  [{'ok' if c['passed'] else 'FAIL'}] {c['name']} = {vs} ({c['tolerance']})")
        return "\n".join(lines)


def validate_report(obj: dict) -> None:
    """Structural schema check of a decoded JSON report."""
    if not isinstance(obj, dict):
        raise ValueError("report must be a JSON object")
    missing = [k for k in _KEYS if k not in obj]
    if missing:
        raise ValueError(f"report missing fields {missing}")
    if list(obj)[: len(_KEYS)] != list(_KEYS):
        raise ValueError("report fields out of order")
    types = {"tool": str, "version": str, "command": str, "passed": bool, "config": dict,
             "hashes": list, "checks": list, "data": dict, "timing": (int, float)}
    for k, t in types.items():
        if not isinstance(obj[k], t):
            raise ValueError(f"field {k!r} has type {type(obj[k]).__name__}")
    names = set()
    for c in obj["checks"]:
        if not isinstance(c, dict) or sorted(c) != sorted(_CHECK_KEYS):
            raise ValueError(f"malformed check entry {c!r}")
        if c["name"] in names:
            raise ValueError(f"check {c['name']!r} listed twice")
        names.add(c["name"])
        if not isinstance(c["passed"], bool):
            raise ValueError(f"check {c['name']!r}: passed must be boolean")
    if obj["passed"] != all(c["passed"] for c in obj["checks"]):
        raise ValueError("overall verdict disagrees with the checks")
    for h in obj["hashes"]:
        if not isinstance(h, dict) or "table_hash" not in h:
            raise ValueError("hash entries need a table_hash")


def write_csv(path: str | Path, header, rows) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])


def write_plotdata(path: str | Path, xlabel: str, ylabel: str, xs, ys) -> None:
    with open(path, "w") as f:
        f.write(f"# {xlabel} {ylabel}\n")
        for x, y in zip(xs, ys):
            f.write(f"{float(x)!r} {float(y)!r}\n")


def emit(report: Report, fmt: str, out: str | Path) -> list[Path]:
    """Write the report in ``fmt`` under directory ``out``; returns the files written."""
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}")
    out = Path(out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    stem = report.command.replace("-", "_")
    files = []
    if fmt == "json":
        p = out / f"{stem}.json"
        p.write_text(report.dumps())
        files.append(p)
    elif fmt == "csv":
        p = out / f"{stem}_checks.csv"
        write_csv(p, _CHECK_KEYS, [[c[k] for k in _CHECK_KEYS] for c in report.checks])
        files.append(p)
        for name, (header, rows) in sorted(report.tables.items()):
            p = out / f"{stem}_{name}.csv"
            write_csv(p, header, rows)
            files.append(p)
    else:
        for name, (xl, yl, xs, ys) in sorted(report.series.items()):
            p = out / f"{stem}_{name}.dat"
            write_plotdata(p, xl, yl, xs, ys)
            files.append(p)
    return files
