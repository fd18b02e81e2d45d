"""JSON/CSV serialization; decimal text that round-trips doubles exactly.

Floats are emitted with Python's shortest round-trip repr (at most 17
significant digits), so reading a file back reproduces the original
binary values bit for bit.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .conformal import ConformalKillingField
from .radial_graph import StarShapedHypersurface
from .sphere_grid import GridSpec, ScalarField

__all__ = [
    "surface_to_dict",
    "surface_from_dict",
    "save_surface",
    "load_surface",
    "ckf_to_dict",
    "ckf_from_dict",
    "write_json_atomic",
    "write_csv_atomic",
]


def surface_to_dict(surface: StarShapedHypersurface, meta: dict | None = None) -> dict:
    return {
        "grid": {"n_theta": surface.spec.n_theta, "n_phi": surface.spec.n_phi},
        "f": [float(x) for x in surface.values.reshape(-1)],
        "meta": meta or {},
    }


def surface_from_dict(data: dict) -> StarShapedHypersurface:
    spec = GridSpec(int(data["grid"]["n_theta"]), int(data["grid"]["n_phi"]))
    values = np.array(data["f"], dtype=float).reshape(spec.shape)
    return StarShapedHypersurface(ScalarField(spec, values))


def ckf_to_dict(V: ConformalKillingField) -> dict:
    return {"v": [float(x) for x in V.v],
            "S_lower": [float(x) for x in V.s_lower],
            "mu": float(V.mu),
            "b": [float(x) for x in V.b]}


def ckf_from_dict(data: dict) -> ConformalKillingField:
    return ConformalKillingField(data["v"], data["S_lower"], data["mu"], data["b"])


def _atomic_write_text(path: str, text: str):
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_json_atomic(path: str, payload: dict):
    _atomic_write_text(path, json.dumps(payload, indent=1) + "\n")


def write_csv_atomic(path: str, header: list[str], rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(float(x)) for x in row))
    _atomic_write_text(path, "\n".join(lines) + "\n")


def save_surface(path: str, surface: StarShapedHypersurface, meta: dict | None = None):
    write_json_atomic(path, surface_to_dict(surface, meta))


def load_surface(path: str) -> StarShapedHypersurface:
    with open(path) as fh:
        return surface_from_dict(json.load(fh))
