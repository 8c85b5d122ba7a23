"""Check reports shared by every suite."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

VERDICTS = ("pass", "fail", "vacuous", "skipped")


@dataclass
class CheckReport:
    check_name: str
    residual: float
    tolerance: float
    verdict: str
    worst_point: list | None = None
    provenance: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    data: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.verdict != "fail"

    def to_dict(self) -> dict:
        return {
            "check_name": self.check_name,
            "residual": _clean(self.residual),
            "tolerance": self.tolerance,
            "verdict": self.verdict,
            "worst_point": _clean(self.worst_point),
            "provenance": _clean(self.provenance),
            "notes": list(self.notes),
            "data": _clean(self.data),
        }


def _clean(x):
    """Convert numpy values to JSON-friendly builtins (non-finite -> None)."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def verdict_for(residual: float, tolerance: float) -> str:
    return "pass" if residual < tolerance else "fail"


def from_samples(name, samples, tolerance, provenance=None, notes=None, data=None, vacuous=False):
    """Build a report from ``(residual, point)`` samples using the worst one.

    ``vacuous=True`` marks a condition quantified over an empty set; its
    residual is reported as 0.
    """
    notes = list(notes or [])
    if vacuous:
        return CheckReport(name, 0.0, tolerance, "vacuous", None, dict(provenance or {}), notes, dict(data or {}))
    if not samples:
        return CheckReport(name, 0.0, tolerance, "skipped", None, dict(provenance or {}),
                           notes + ["no samples"], dict(data or {}))
    worst_res, worst_pt = -1.0, None
    for res, pt in samples:
        res = float(res)
        if not math.isfinite(res):
            worst_res, worst_pt = math.inf, pt
            break
        if res > worst_res:
            worst_res, worst_pt = res, pt
    pt = None if worst_pt is None else [float(c) for c in np.asarray(worst_pt).ravel()]
    return CheckReport(name, worst_res, tolerance, verdict_for(worst_res, tolerance), pt,
                       dict(provenance or {}), notes, dict(data or {}))


def skipped(name, tolerance, reason, provenance=None):
    return CheckReport(name, 0.0, tolerance, "skipped", None, dict(provenance or {}), [reason], {})
