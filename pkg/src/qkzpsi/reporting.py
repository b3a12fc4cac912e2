"""Structured pass/fail reports shared by all verification operations."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass


@dataclass
class Report:
    check: str
    instance: str
    status: str              # "pass" | "fail" | "skipped"
    witness: str | None = None
    wall_time: float = 0.0

    @property
    def passed(self):
        return self.status == "pass"

    def to_json(self):
        return {
            "schema": 1,
            "check": self.check,
            "instance": self.instance,
            "status": self.status,
            "witness": self.witness,
            "wall_time": round(self.wall_time, 6),
        }

    def line(self):
        mark = {"pass": "PASS", "fail": "FAIL", "skipped": "SKIP"}[self.status]
        extra = f"  [{self.witness}]" if self.witness else ""
        return f"{mark}  {self.check}  {self.instance}{extra}"


class timer:
    """Context manager measuring wall time via `.elapsed` (usable mid-block)."""

    def __enter__(self):
        self._t0 = time.perf_counter()
        self._t1 = None
        return self

    def __exit__(self, *exc):
        self._t1 = time.perf_counter()
        return False

    @property
    def elapsed(self):
        return (self._t1 or time.perf_counter()) - self._t0


def report(check, instance, ok, witness=None, elapsed=0.0):
    return Report(
        check=check,
        instance=instance,
        status="pass" if ok else "fail",
        witness=None if ok else witness,
        wall_time=elapsed,
    )


def dump_reports(reports, fh=None):
    doc = {"schema": 1, "reports": [r.to_json() for r in reports]}
    text = json.dumps(doc, indent=2, sort_keys=True)
    if fh is not None:
        fh.write(text + "\n")
    return text
