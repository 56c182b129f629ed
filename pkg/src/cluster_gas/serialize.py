"""Bit-stable, locale-independent serialization helpers.

Floats are written with 17 significant digits, which round-trips any IEEE
double; output bytes depend only on the values, never on locale or clock.
"""

from __future__ import annotations

import hashlib
import json
import math

__all__ = ["fmt", "dump_json", "load_json", "config_hash"]


def fmt(x) -> str:
    """Canonical text form of a value for CSV cells and key=value comments."""
    if x is None:
        return "None"
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return format(x, ".17g")


def _canon(obj):
    if isinstance(obj, dict):
        return {str(k): _canon(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canon(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):  # numpy scalars
        try:
            return _canon(obj.item())
        except Exception:
            pass
    if isinstance(obj, float):
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        if math.isnan(obj):
            return "nan"
    return obj


def dump_json(obj, path=None) -> str:
    """Deterministic JSON: sorted keys, no whitespace drift, inf as strings."""
    text = json.dumps(_canon(obj), sort_keys=True, indent=2)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    return text


def _revive(obj):
    if isinstance(obj, dict):
        return {k: _revive(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_revive(v) for v in obj]
    if obj == "inf":
        return math.inf
    if obj == "-inf":
        return -math.inf
    if obj == "nan":
        return math.nan
    return obj


def load_json(path):
    with open(path) as fh:
        return _revive(json.load(fh))


def config_hash(mapping: dict) -> str:
    """sha256 of the canonicalized flat config mapping."""
    payload = json.dumps(_canon(mapping), sort_keys=True).encode()
    return hashlib.sha256(payload).hexdigest()
