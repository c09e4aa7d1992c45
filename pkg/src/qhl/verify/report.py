"""Verification reports with a deterministic JSON form."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

# fixed hedge applied to the sampled delta wherever a verifier uses it
DELTA_HEDGE = 1.5


def jsonable(obj):
    """Plain Python structure with non-finite floats spelled as strings."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


@dataclass
class VerificationReport:
    property: str
    constants: dict
    witness: dict = field(default_factory=lambda: {"points": [], "values": {}})
    samples: dict = field(default_factory=dict)
    h: float | None = None
    passed: bool = True
    tolerances: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    details: dict = field(default_factory=dict)
    overlays: dict = field(default_factory=dict, repr=False)   # drawing data, not serialized

    def fail(self, note):
        self.passed = False
        if note not in self.notes:
            self.notes.append(note)

    def constant(self, name=None):
        if name is None:
            name = next(iter(self.constants))
        return self.constants[name]

    def to_dict(self):
        out = {"property": self.property, "constants": self.constants, "witness": self.witness,
               "samples": self.samples, "h": self.h, "pass": self.passed,
               "tolerances": self.tolerances}
        if self.notes:
            out["notes"] = self.notes
        if self.details:
            out["details"] = self.details
        return jsonable(out)

    def to_json(self, extra=None):
        d = self.to_dict()
        if extra:
            d.update(jsonable(extra))
        return json.dumps(d, sort_keys=True, indent=2) + "\n"


def witness(points, **values):
    return {"points": jsonable(np.asarray(points, float)), "values": jsonable(values)}
