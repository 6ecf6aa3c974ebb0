"""Check records and reports shared by all verification pipelines."""

import json
import math
from dataclasses import dataclass, field

import numpy as np


@dataclass
class Check:
    """One verified identity: the worst residual over a point set."""

    id: str
    anchor: str
    residual: float
    tol: float
    worst_point: dict = None
    passed: bool = None
    detail: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.passed is None:
            self.passed = bool(math.isfinite(self.residual) and self.residual < self.tol)

    def to_dict(self):
        return {
            "id": self.id,
            "anchor": self.anchor,
            "max_residual": _clean(self.residual),
            "tol": self.tol,
            "worst_point": _clean(self.worst_point),
            "verdict": "pass" if self.passed else "fail",
            "detail": _clean(self.detail),
        }


@dataclass
class Report:
    """Ordered collection of checks plus free-form result data."""

    subject: str
    stage: str
    checks: list = field(default_factory=list)
    data: dict = field(default_factory=dict)
    children: list = field(default_factory=list)

    def add(self, check):
        self.checks.append(check)
        return check

    def extend(self, other):
        """Adopt another report as a sub-report."""
        self.children.append(other)
        return other

    def all_checks(self):
        out = list(self.checks)
        for c in self.children:
            out.extend(c.all_checks())
        return out

    @property
    def passed(self):
        return all(c.passed for c in self.all_checks())

    def failures(self):
        return [c for c in self.all_checks() if not c.passed]

    def get(self, check_id):
        for c in self.all_checks():
            if c.id == check_id:
                return c
        raise KeyError(check_id)

    def to_dict(self):
        return {
            "subject": self.subject,
            "stage": self.stage,
            "verdict": "pass" if self.passed else "fail",
            "checks": [c.to_dict() for c in self.checks],
            "data": _clean(self.data),
            "children": [c.to_dict() for c in self.children],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_markdown(self, level=1):
        lines = [f"{'#' * level} {self.subject}: {self.stage}", ""]
        lines.append(f"Overall: **{'PASS' if self.passed else 'FAIL'}**")
        lines.append("")
        if self.checks:
            lines.append("| check | identity | max residual | tol | verdict |")
            lines.append("|---|---|---|---|---|")
            for c in self.checks:
                lines.append(f"| {c.id} | {c.anchor} | {c.residual:.3e} | {c.tol:.0e} | "
                             f"{'pass' if c.passed else '**FAIL**'} |")
            lines.append("")
            bad = [c for c in self.checks if not c.passed and c.worst_point]
            for c in bad:
                lines.append(f"- `{c.id}` worst point: {_fmt_point(c.worst_point)}")
            if bad:
                lines.append("")
        if self.data:
            lines.append("```json")
            lines.append(json.dumps(_clean(self.data), indent=2, sort_keys=True))
            lines.append("```")
            lines.append("")
        for child in self.children:
            lines.append(child.to_markdown(level + 1))
        return "\n".join(lines)


def _fmt_point(p):
    return ", ".join(f"{k}={v:.6g}" for k, v in p.items())


def _clean(obj):
    """Convert numpy values to plain JSON types; non-finite floats to strings."""
    if obj is None:
        return None
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isfinite(v):
            return v
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return obj


def pointwise_max(arr):
    """Max absolute value per point of an array with points on axis 0."""
    a = np.abs(np.asarray(arr, dtype=float))
    if a.ndim == 1:
        return a
    return a.reshape(a.shape[0], -1).max(axis=1)


def residual_check(check_id, anchor, arr, pts, tol, detail=None):
    """Check that `arr` (points on axis 0) vanishes within `tol`."""
    per_point = pointwise_max(arr)
    if len(per_point) == 0:
        return Check(check_id, anchor, 0.0, tol, None, True, detail or {})
    bad = ~np.isfinite(per_point)
    i = int(np.flatnonzero(bad)[0]) if bad.any() else int(np.argmax(per_point))
    res = float(per_point[i])
    return Check(check_id, anchor, res, tol, pts.point(i), None, detail or {})


def flag_check(check_id, anchor, ok, pts, detail=None, value=None):
    """Boolean per-point condition; residual counts failing points."""
    ok = np.asarray(ok, dtype=bool)
    nbad = int((~ok).sum())
    worst = pts.point(int(np.flatnonzero(~ok)[0])) if nbad else None
    d = dict(detail or {})
    d["failing_points"] = nbad
    if value is not None:
        d["value"] = value
    return Check(check_id, anchor, float(nbad), 0.5, worst, nbad == 0, d)
