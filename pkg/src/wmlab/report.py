"""Check reports: the one result type every inequality/identity check emits."""

import json
from dataclasses import dataclass, field


@dataclass
class CheckReport:
    """Outcome of a single check.

    ``kind`` fixes the pass semantics: an ``inequality`` check passes when
    lhs <= rhs + tolerance, an ``identity`` check when |lhs - rhs| <=
    tolerance, a ``diagnostic`` carries numbers without a hard bound.
    ``gap`` is always lhs - rhs.  ``passed`` is None when a hypothesis
    failed and the theorem asserts nothing.
    """

    check_id: str
    kind: str
    lhs: float
    rhs: float
    tolerance: float = 0.0
    passed: bool | None = None
    equality: bool = False
    hypothesis_flags: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)
    history: list = field(default_factory=list)

    EQUALITY_TOL = 1e-2  # default relative band for the equality flag

    @property
    def gap(self):
        return self.lhs - self.rhs

    @property
    def relative_gap(self):
        scale = max(abs(self.lhs), abs(self.rhs), 1e-300)
        return abs(self.gap) / scale

    @property
    def status(self):
        if self.passed is None:
            return "hypothesis-failed"
        return "pass" if self.passed else "fail"

    def evaluate(self, equality_tol=None):
        """Fill ``passed``/``equality`` from lhs, rhs, tolerance."""
        if self.kind == "inequality":
            self.passed = self.gap <= self.tolerance
        elif self.kind == "identity":
            self.passed = abs(self.gap) <= self.tolerance
        else:
            self.passed = True if self.passed is None else self.passed
        if any(v is False for v in self.hypothesis_flags.values()):
            self.passed = None
        tol = self.EQUALITY_TOL if equality_tol is None else equality_tol
        self.equality = self.passed is not None and self.relative_gap < tol
        return self

    def to_dict(self):
        return {
            "check": self.check_id,
            "kind": self.kind,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "gap": self.gap,
            "relative_gap": self.relative_gap,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "status": self.status,
            "equality_flag": self.equality,
            "hypothesis_flags": dict(sorted(self.hypothesis_flags.items())),
            "details": _jsonable(self.details),
            "history": _jsonable(self.history),
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), sort_keys=True, **kw)


def _jsonable(obj):
    """Recursively coerce numpy scalars/arrays so json.dumps round-trips."""
    import numpy as np

    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj
