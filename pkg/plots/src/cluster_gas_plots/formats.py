"""Parsers for the cluster-gas file formats.

This package talks to the simulation toolkit only through its files:
cluster size distribution CSVs (``k,rho_k`` with ``# rho=...`` comments),
ideal solution JSONs (``minimiser``, ``rho_sat``, ``f_ideal``, ...), sweep
CSVs (``nu,beta,...,dev_mu,...``), and free-energy curve CSVs
(``rho,f_ideal`` with an optional ``# rho_sat=...`` comment).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

__all__ = [
    "SchemaError",
    "Distribution",
    "SolutionPoint",
    "load_distribution",
    "load_sweep",
    "load_curve",
    "load_solution_point",
]


class SchemaError(ValueError):
    """An input file does not match the expected cluster-gas schema."""


@dataclass
class Distribution:
    """Sparse cluster densities with derived probabilities."""

    rho_k: dict[int, float]
    density: float | None = None

    def probabilities(self) -> dict[int, float]:
        total = sum(self.rho_k.values())
        if total <= 0:
            return {}
        return {k: v / total for k, v in self.rho_k.items()}


@dataclass
class SolutionPoint:
    rho: float
    f_ideal: float
    rho_sat: float
    saturated: bool
    minimiser: dict[int, float]


def _read_csv_rows(path) -> tuple[list[str], list[list[str]], dict[str, str]]:
    header: list[str] | None = None
    rows: list[list[str]] = []
    meta: dict[str, str] = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            for tok in line[1:].split():
                if "=" in tok:
                    key, val = tok.split("=", 1)
                    meta[key] = val
            continue
        if header is None:
            header = [c.strip() for c in line.split(",")]
            continue
        rows.append([c.strip() for c in line.split(",")])
    if header is None:
        raise SchemaError(f"{path}: no header row found")
    return header, rows, meta


def _column(header: list[str], rows: list[list[str]], name: str, path) -> list[float]:
    if name not in header:
        raise SchemaError(f"{path}: missing column {name!r} (found {', '.join(header)})")
    idx = header.index(name)
    try:
        return [float(row[idx]) for row in rows]
    except (IndexError, ValueError) as err:
        raise SchemaError(f"{path}: bad value in column {name!r}: {err}") from None


def load_distribution(path) -> Distribution:
    """A cluster size distribution from either a CSV or a solution JSON."""
    path = Path(path)
    if path.suffix == ".json":
        sol = load_solution_point(path)
        return Distribution(rho_k=sol.minimiser)
    header, rows, meta = _read_csv_rows(path)
    ks = _column(header, rows, "k", path)
    vals = _column(header, rows, "rho_k", path)
    density = float(meta["rho"]) if "rho" in meta and meta["rho"] != "None" else None
    return Distribution(rho_k={int(k): v for k, v in zip(ks, vals)}, density=density)


def load_solution_point(path) -> SolutionPoint:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as err:
        raise SchemaError(f"{path}: not valid JSON: {err}") from None
    for key in ("rho", "f_ideal", "rho_sat", "saturated", "minimiser"):
        if key not in data:
            raise SchemaError(f"{path}: missing key {key!r}")
    rho_sat = data["rho_sat"]
    if isinstance(rho_sat, str):  # "inf" sentinel
        rho_sat = math.inf if rho_sat == "inf" else float(rho_sat)
    try:
        minimiser = {int(row["k"]): float(row["rho_k"]) for row in data["minimiser"]}
    except (TypeError, KeyError) as err:
        raise SchemaError(f"{path}: malformed minimiser rows ({err})") from None
    return SolutionPoint(
        rho=float(data["rho"]),
        f_ideal=float(data["f_ideal"]),
        rho_sat=float(rho_sat),
        saturated=bool(data["saturated"]),
        minimiser=minimiser,
    )


def load_sweep(path, column: str = "dev_mu") -> tuple[list[float], list[float]]:
    """(beta, |column|) pairs from a sweep CSV."""
    header, rows, _ = _read_csv_rows(path)
    betas = _column(header, rows, "beta", path)
    devs = _column(header, rows, column, path)
    return betas, [abs(d) for d in devs]


def load_curve(path) -> tuple[list[float], list[float], float | None]:
    """(rho, f_ideal, rho_sat?) from a free-energy curve CSV."""
    header, rows, meta = _read_csv_rows(path)
    rhos = _column(header, rows, "rho", path)
    fs = _column(header, rows, "f_ideal", path)
    rho_sat = None
    if "rho_sat" in meta and meta["rho_sat"] not in ("None", "inf"):
        rho_sat = float(meta["rho_sat"])
    return rhos, fs, rho_sat
