"""The three figure kinds.

* ``distribution_compare``: paired bars of two cluster size distributions
  (typically empirical vs ideal minimiser) with the total-variation distance
  annotated.
* ``free_energy_curve``: f_ideal against rho, from a family of solution
  JSONs or a curve CSV, with the saturation density marked.
* ``saha_convergence``: log-scale deviation against beta from a sweep CSV,
  with the fitted exponential rate.

Renders are pure functions of the input files: fixed hash salt, no clock
metadata, so re-rendering is byte-stable for fixed library versions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "cluster-gas-plots"

import matplotlib.pyplot as plt
import numpy as np

from .formats import SchemaError, load_curve, load_distribution, load_solution_point, load_sweep

__all__ = ["FigureSpec", "render", "load_spec", "total_variation"]

KINDS = ("distribution_compare", "free_energy_curve", "saha_convergence")


@dataclass
class FigureSpec:
    kind: str
    inputs: dict
    output: str
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r}; expected one of {', '.join(KINDS)}")
        if not isinstance(self.inputs, dict):
            raise SchemaError("inputs must be a mapping of role -> path")


def load_spec(path) -> FigureSpec:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as err:
        raise SchemaError(f"{path}: not valid JSON: {err}") from None
    for key in ("kind", "inputs", "output"):
        if key not in data:
            raise SchemaError(f"{path}: missing key {key!r}")
    return FigureSpec(
        kind=data["kind"], inputs=data["inputs"], output=data["output"], options=data.get("options", {})
    )


def total_variation(p: dict[int, float], q: dict[int, float]) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


def _save(fig, output: str):
    out = Path(output)
    out.parent.mkdir(parents=True, exist_ok=True)
    if out.suffix == ".png":
        fig.savefig(out, format="png", dpi=150)
    else:
        fig.savefig(out, format="svg", metadata={"Date": None})
    plt.close(fig)
    return str(out)


def _require(inputs: dict, role: str, kind: str):
    if role not in inputs:
        raise SchemaError(f"{kind} needs inputs.{role}")
    return inputs[role]


def _render_distribution_compare(spec: FigureSpec):
    emp = load_distribution(_require(spec.inputs, "empirical", spec.kind))
    ideal = load_distribution(_require(spec.inputs, "ideal", spec.kind))
    p, q = emp.probabilities(), ideal.probabilities()
    tv = total_variation(p, q)
    ks = sorted(set(p) | set(q))
    x = np.arange(len(ks), dtype=float)
    width = 0.4

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.bar(x - width / 2, [p.get(k, 0.0) for k in ks], width, label="empirical", color="#336699")
    ax.bar(x + width / 2, [q.get(k, 0.0) for k in ks], width, label="ideal", color="#cc7722")
    ax.set_xticks(x, [str(k) for k in ks])
    ax.set_xlabel("cluster size k")
    ax.set_ylabel("probability p_k")
    ax.set_title(spec.options.get("title", "cluster size distribution"))
    ax.legend()
    ax.annotate(f"TV = {tv:.3f}", xy=(0.97, 0.8), xycoords="axes fraction", ha="right")
    if spec.options.get("log_scale"):
        ax.set_yscale("log")
    fig.tight_layout()
    return _save(fig, spec.output)


def _render_free_energy_curve(spec: FigureSpec):
    rho_sat = None
    if "solutions" in spec.inputs:
        points = [load_solution_point(p) for p in spec.inputs["solutions"]]
        if not points:
            raise SchemaError("free_energy_curve: inputs.solutions is empty")
        points.sort(key=lambda s: s.rho)
        rhos = [s.rho for s in points]
        fs = [s.f_ideal for s in points]
        finite_sats = [s.rho_sat for s in points if math.isfinite(s.rho_sat)]
        rho_sat = finite_sats[0] if finite_sats else None
    elif "curve" in spec.inputs:
        rhos, fs, rho_sat = load_curve(spec.inputs["curve"])
    else:
        raise SchemaError("free_energy_curve needs inputs.solutions or inputs.curve")

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(rhos, fs, marker="o", markersize=3, lw=1.2, color="#336699")
    if rho_sat is not None and min(rhos) <= rho_sat <= max(rhos):
        ax.axvline(rho_sat, ls="--", lw=1.0, color="#cc2222")
        ax.annotate(
            f"rho_sat = {rho_sat:.5f}", xy=(rho_sat, 0.94), xycoords=("data", "axes fraction"),
            rotation=90, va="top", ha="right", fontsize=8,
        )
    ax.set_xlabel("density rho")
    ax.set_ylabel("ideal free energy")
    ax.set_title(spec.options.get("title", "free energy of the ideal mixture"))
    fig.tight_layout()
    return _save(fig, spec.output)


def _render_saha_convergence(spec: FigureSpec):
    column = spec.options.get("column", "dev_mu")
    betas, devs = load_sweep(_require(spec.inputs, "sweep", spec.kind), column=column)
    pairs = [(b, d) for b, d in zip(betas, devs) if d > 0.0]
    if len(pairs) < 2:
        raise SchemaError(f"saha_convergence: need at least 2 positive values in column {column!r}")
    x = np.array([p[0] for p in pairs])
    y = np.array([p[1] for p in pairs])
    slope, intercept = np.polyfit(x, np.log(y), 1)

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.semilogy(x, y, "o", color="#336699", label=f"|{column}|")
    grid = np.linspace(x.min(), x.max(), 50)
    ax.semilogy(grid, np.exp(intercept + slope * grid), "-", color="#cc7722",
                label=f"fit: rate = {-slope:.3f}")
    ax.set_xlabel("inverse temperature beta")
    ax.set_ylabel(f"|{column}|")
    ax.set_title(spec.options.get("title", "convergence in the dilute limit"))
    ax.legend()
    fig.tight_layout()
    return _save(fig, spec.output)


_RENDERERS = {
    "distribution_compare": _render_distribution_compare,
    "free_energy_curve": _render_free_energy_curve,
    "saha_convergence": _render_saha_convergence,
}


def render(spec: FigureSpec | str) -> str:
    """Render a figure spec (object or path to its JSON); returns the output path."""
    if not isinstance(spec, FigureSpec):
        spec = load_spec(spec)
    return _RENDERERS[spec.kind](spec)
