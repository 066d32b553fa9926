"""Verdict records, the JSON-lines writer and the flat key = value config reader."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigurationError


@dataclass
class Record:
    """One pass/fail check with the compared quantities."""
    check: str
    passed: bool
    lhs: float
    rhs: float
    tol: float = 0.0
    anchor: str = ""
    group: str = ""

    def as_dict(self):
        return {"check": self.check, "pass": bool(self.passed), "lhs": _num(self.lhs),
                "rhs": _num(self.rhs), "tol": _num(self.tol), "anchor": self.anchor,
                "group": self.group}


def _num(x):
    x = float(x)
    return x if math.isfinite(x) else None


def le(check, lhs, rhs, anchor, tol=0.0, group=""):
    """Record for lhs <= rhs."""
    return Record(check, bool(lhs <= rhs), float(lhs), float(rhs), tol, anchor, group)


def inside(check, value, lo, hi, anchor, group=""):
    """Record for lo < value < hi; lhs is the value and rhs the nearer edge."""
    edge = lo if abs(value - lo) < abs(value - hi) else hi
    return Record(check, bool(lo < value < hi), float(value), float(edge), 0.0, anchor, group)


def from_verdict(v, prefix="", group=""):
    """Convert a scaling_dynamics.Verdict."""
    name = f"{prefix}{v.check} j={v.j}" if v.j else f"{prefix}{v.check}"
    return Record(name, bool(v.passed), v.lhs, v.rhs, v.tol, v.anchor, group)


def write_jsonl(path, records):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        for r in records:
            fh.write(json.dumps(r.as_dict(), sort_keys=True) + "\n")


def read_jsonl(path):
    with Path(path).open() as fh:
        return [json.loads(line) for line in fh if line.strip()]


def read_config(path):
    """Parse a flat ``key = value`` file; ``#`` starts a comment.

    Keys are normalised to identifiers (dashes become underscores).  Values
    stay strings; the caller converts them with the matching flag's type.
    """
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError("cannot read config file", path=str(path), cause=str(exc)) from exc
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError("config line is not key = value", line=n, text=raw)
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigurationError("empty config key", line=n)
        out[key.replace("-", "_")] = value
    return out
