"""Versioned JSON cache for Markov systems.

The cache records the group, the partition with provenance, codes, the branch table,
the transition matrix and the certified constants.  Floats are written with repr, the
shortest string that round-trips binary64, so a reload is bit-identical.
"""
from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

import numpy as np

from .bowen_series import MARKOV_TOL, MarkovSystem
from .errors import InputError
from .fuchsian import Polygon, SurfaceGroupRep
from .mobius import ANGLE_TOL
from .symbolic import PreperiodicCode

CACHE_FORMAT = "teichfun.markov-cache"
CACHE_VERSION = 1


class CacheMismatch(InputError):
    """Cache file exists but belongs to another group, tolerance block or version."""


def tolerance_block(n_max: int = 4) -> dict:
    return {"markov_tol": MARKOV_TOL, "angle_tol": ANGLE_TOL, "expansion_depth_max": n_max}


def dumps(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=1, allow_nan=False) + "\n"


def content_hash(rep: SurfaceGroupRep, tolerances: dict | None = None) -> str:
    """sha256 of the group serialization together with the tolerance block."""
    tol = tolerances if tolerances is not None else tolerance_block()
    body = json.dumps({"group": rep.to_dict(), "tolerances": tol}, sort_keys=True)
    return hashlib.sha256(body.encode()).hexdigest()


def _polygon_dict(p: Polygon | None):
    if p is None:
        return None
    return {"genus": p.genus, "circumradius": p.circumradius,
            "vertices": [[v.real, v.imag] for v in p.vertices]}


def _polygon_from(d) -> Polygon | None:
    if d is None:
        return None
    return Polygon(int(d["genus"]), float(d["circumradius"]),
                   tuple(complex(x, y) for x, y in d["vertices"]))


def system_to_dict(system: MarkovSystem, tolerances: dict | None = None) -> dict:
    tol = tolerances if tolerances is not None else tolerance_block()
    return {
        "format": CACHE_FORMAT,
        "version": CACHE_VERSION,
        "content_hash": content_hash(system.rep, tol),
        "tolerances": tol,
        "group": system.rep.to_dict(),
        "polygon": _polygon_dict(system.polygon),
        "partition": {
            "W": [float(x) for x in system.W],
            "provenance": [[list(p) for p in prov] for prov in system.provenance],
            "Jv": [list(j) for j in system.Jv],
        },
        "codes": [c.to_dict() for c in system.codes],
        "branches": {
            "side": [int(s) for s in system.side],
            "label": [system.branch_label(i) for i in range(system.k)],
            "alternatives": [list(a) for a in system.alternatives],
            "image_lo": [int(x) for x in system.image_lo],
            "image_hi": [int(x) for x in system.image_hi],
        },
        "A": ["".join(str(int(x)) for x in row) for row in system.A],
        "constants": {
            "lambda0": system.lambda0,
            "depth_used": system.depth_used,
            "n_mix": system.n_mix,
            "markov_residual": system.markov_residual,
            "rho": list(system.rho),
        },
    }


def system_from_dict(doc: dict, expected_hash: str | None = None) -> MarkovSystem:
    if doc.get("format") != CACHE_FORMAT:
        raise CacheMismatch("not a teichfun Markov cache")
    if doc.get("version") != CACHE_VERSION:
        raise CacheMismatch(f"cache version {doc.get('version')} != {CACHE_VERSION}")
    rep = SurfaceGroupRep.from_dict(doc["group"])
    digest = content_hash(rep, doc["tolerances"])
    if digest != doc["content_hash"]:
        raise CacheMismatch("content hash does not match the stored group")
    if expected_hash is not None and digest != expected_hash:
        raise CacheMismatch("cache was built for a different group or tolerance block")
    part, br, c = doc["partition"], doc["branches"], doc["constants"]
    A = np.array([[int(ch) for ch in row] for row in doc["A"]], dtype=np.uint8)
    system = MarkovSystem(
        rep,
        np.array(part["W"], dtype=float),
        np.array(br["side"], dtype=np.int64),
        A,
        np.array(br["image_lo"], dtype=np.int64),
        np.array(br["image_hi"], dtype=np.int64),
        float(c["lambda0"]), int(c["depth_used"]), int(c["n_mix"]), float(c["markov_residual"]),
        tuple(tuple(tuple(p) for p in prov) for prov in part["provenance"]),
        tuple(tuple(j) for j in part["Jv"]),
        tuple(tuple(a) for a in br["alternatives"]),
        _polygon_from(doc["polygon"]),
        tuple(float(x) for x in c["rho"]),
    )
    system._cache["codes"] = tuple(PreperiodicCode.from_dict(d) for d in doc["codes"])
    return system


def save_system(system: MarkovSystem, path, tolerances: dict | None = None) -> str:
    """Write the cache atomically; returns the content hash."""
    doc = system_to_dict(system, tolerances)
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(dumps(doc))
    os.replace(tmp, path)
    return doc["content_hash"]


def load_system(path, expected_hash: str | None = None) -> MarkovSystem:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, ValueError) as e:
        raise InputError(f"cannot read cache {path}: {e}") from None
    return system_from_dict(doc, expected_hash)


def systems_identical(x: MarkovSystem, y: MarkovSystem) -> bool:
    """Bitwise equality of every stored array and scalar."""
    arrays = ("W", "side", "A", "image_lo", "image_hi")
    if not all(np.array_equal(getattr(x, a), getattr(y, a)) and getattr(x, a).dtype == getattr(y, a).dtype
               for a in arrays):
        return False
    if x.rep.to_dict() != y.rep.to_dict():
        return False
    return all(getattr(x, f) == getattr(y, f) for f in
               ("lambda0", "depth_used", "n_mix", "markov_residual", "provenance", "Jv",
                "alternatives", "rho"))
