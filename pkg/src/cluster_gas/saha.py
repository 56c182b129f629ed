"""Coupled low-temperature / low-density sweeps along rho = e^(-beta*nu).

Holding the dilution parameter nu = -log(rho)/beta fixed while beta grows,
the ideal mixture concentrates: above the critical nu_star the dominant
cluster size k_star(nu) carries all but an exponentially small mass fraction
and the chemical potential approaches

    mu_pred = f_{k_star}(beta) - nu/k_star - log(k_star)/beta,

with corrections of order exp(-beta*gap/2); below nu_star the system is
condensed, mu = f_inf, and the finite-cluster mass fraction rho_sat/rho
vanishes exponentially.  This module sweeps a beta grid, records the
deviations from those predictions, and fits their exponential decay rates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .groundstate import GroundStateTable, chemical_potential
from .ideal import IdealSolution, saturation_density, solve
from .partfun import ClusterFreeEnergyTable, TailModel
from .serialize import fmt

__all__ = [
    "SahaPoint",
    "SweepKinkError",
    "sweep",
    "synthetic_exact_provider",
    "rate_fit",
    "RateFit",
    "saturation_trend",
    "SaturationTrendReport",
    "save_sweep_csv",
    "load_sweep_csv",
]


class SweepKinkError(ValueError):
    """nu sits on a kink of mu(nu); the dominant size is not unique."""


@dataclass
class SahaPoint:
    """One sweep point: the solved ideal model against its low-T predictions."""

    nu: float
    beta: float
    rho: float
    solution: IdealSolution
    k_star: int | None
    mu_pred: float
    dev_mu: float
    mass_frac_k: float  # k_star rho_{k_star} / rho  (gas branch)
    dev_mass: float  # |mass_frac_k - 1|            (gas branch)
    dev_m: float  # |m * k_star / rho - 1|          (gas branch)
    finite_mass_frac: float  # sum_k k rho_k / rho  (condensed branch)
    saturated: bool


def synthetic_exact_provider(gs: GroundStateTable, tail: TailModel | None = None):
    """Tables with f_k(beta) = E_k/k and f_inf = e_bulk, exact at every beta.

    The zero-temperature idealization: deviations from the predictions are
    then free of O(log beta / beta) smearing, which makes the exponential
    rates cleanly fittable.
    """
    if gs.e_bulk is None:
        raise ValueError("ground-state table needs e_bulk")

    def provider(beta: float) -> ClusterFreeEnergyTable:
        return ClusterFreeEnergyTable(
            beta=beta,
            radius=None,
            dim=gs.dim,
            f={k: gs.energies[k] / k for k in sorted(gs.energies)},
            stderr={},
            f_inf=gs.e_bulk,
            f_inf_residual=0.0,
            tail=tail,
            provenance="synthetic_exact",
        )

    return provider


def sweep(provider, gs: GroundStateTable, nu: float, betas) -> list[SahaPoint]:
    """Solve the ideal model at rho = e^(-beta*nu) for each beta on the grid.

    ``provider`` maps beta to a ClusterFreeEnergyTable; betas without a table
    are skipped with a note.  nu on a kink of mu(nu) is rejected.
    """
    mu_point = chemical_potential(gs, nu)
    if mu_point.kink:
        raise SweepKinkError(f"nu={nu} is a kink of mu(nu): sizes {mu_point.kink_sizes} tie")
    k_star = mu_point.k_star

    points = []
    for beta in betas:
        try:
            table = provider(beta)
        except KeyError:
            import warnings

            warnings.warn(f"no table for beta={beta}; point skipped")
            continue
        rho = math.exp(-beta * nu)
        sol = solve(table, beta, rho)
        if k_star is not None:
            mu_pred = table.f[k_star] - nu / k_star - math.log(k_star) / beta
            rho_k = sol.minimiser.get(k_star, 0.0)
            mass_frac = k_star * rho_k / rho
            dev_mass = abs(mass_frac - 1.0)
            dev_m = abs(sol.m * k_star / rho - 1.0)
        else:
            mu_pred = table.f_inf
            mass_frac = math.nan
            dev_mass = math.nan
            dev_m = math.nan
        finite_mass = sol.mass() + sol.tail_mass
        points.append(
            SahaPoint(
                nu=nu,
                beta=beta,
                rho=rho,
                solution=sol,
                k_star=k_star,
                mu_pred=mu_pred,
                dev_mu=abs(sol.mu - mu_pred),
                mass_frac_k=mass_frac,
                dev_mass=dev_mass,
                dev_m=dev_m,
                finite_mass_frac=finite_mass / rho,
                saturated=sol.saturated,
            )
        )
    return points


@dataclass
class RateFit:
    rate: float  # decay rate: slope of log|dev| vs beta is -rate
    intercept: float
    r_squared: float
    n_used: int
    dropped: list


def rate_fit(betas, deviations) -> RateFit:
    """Least-squares fit of log|deviation| against beta.

    Zero deviations are already converged and are dropped with a note; at
    least 3 positive points are required.
    """
    betas = [float(b) for b in betas]
    deviations = [float(d) for d in deviations]
    dropped = [b for b, d in zip(betas, deviations) if d == 0.0]
    pairs = [(b, d) for b, d in zip(betas, deviations) if d > 0.0]
    if len(pairs) < 3:
        raise ValueError("rate fit needs at least 3 points with positive deviation")
    x = np.array([p[0] for p in pairs])
    y = np.log(np.array([p[1] for p in pairs]))
    slope, intercept = np.polyfit(x, y, 1)
    fitted = slope * x + intercept
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return RateFit(rate=-float(slope), intercept=float(intercept), r_squared=r2, n_used=len(pairs), dropped=dropped)


@dataclass
class SaturationTrendRow:
    beta: float
    rho_sat: float
    nu_estimate: float  # -(1/beta) log rho_sat


@dataclass
class SaturationTrendReport:
    """Convergence of -(1/beta) log rho_sat toward the critical nu.

    The envelope fit regresses beta*|deviation| on log(beta): deviation
    within (a log beta + b)/beta.  Points with infinite rho_sat are excluded
    and listed.  ``assumptions_met`` records whether every source table
    carries a surface-law tail in d >= 2, the regime where the convergence
    is guaranteed; outside it the check still runs, so labelled.
    """

    rows: list
    nu_star: float | None
    envelope_a: float | None
    envelope_b: float | None
    excluded: list
    assumptions_met: bool


def saturation_trend(provider, betas, nu_star: float | None = None) -> SaturationTrendReport:
    rows = []
    excluded = []
    assumptions_met = True
    for beta in betas:
        table = provider(beta)
        if table.tail is None or table.dim < 2:
            assumptions_met = False
        sat = saturation_density(table)
        if not sat.is_finite:
            excluded.append(float(beta))
            continue
        rows.append(SaturationTrendRow(beta=float(beta), rho_sat=sat.value, nu_estimate=-math.log(sat.value) / beta))
    a = b = None
    if nu_star is not None and len(rows) >= 2:
        x = np.array([math.log(r.beta) for r in rows])
        y = np.array([r.beta * abs(r.nu_estimate - nu_star) for r in rows])
        a, b = (float(v) for v in np.polyfit(x, y, 1))
    return SaturationTrendReport(
        rows=rows, nu_star=nu_star, envelope_a=a, envelope_b=b, excluded=excluded, assumptions_met=assumptions_met
    )


_SWEEP_COLUMNS = "nu,beta,rho,mu_ideal,mu_pred,dev_mu,m_ideal,mass_frac_knu,sat_flag"


def save_sweep_csv(points: list[SahaPoint], path):
    with open(path, "w") as fh:
        fh.write(_SWEEP_COLUMNS + "\n")
        for p in points:
            frac = p.mass_frac_k if p.k_star is not None else p.finite_mass_frac
            fh.write(
                ",".join(
                    [
                        fmt(p.nu),
                        fmt(p.beta),
                        fmt(p.rho),
                        fmt(p.solution.mu),
                        fmt(p.mu_pred),
                        fmt(p.dev_mu),
                        fmt(p.solution.m),
                        fmt(frac),
                        "1" if p.saturated else "0",
                    ]
                )
                + "\n"
            )


def load_sweep_csv(path) -> list[dict]:
    """Rows of the sweep CSV as dicts keyed by the column names."""
    out = []
    with open(path) as fh:
        header = None
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if header is None:
                header = line.split(",")
                continue
            vals = line.split(",")
            row = {key: (float(v) if key != "sat_flag" else bool(int(v))) for key, v in zip(header, vals)}
            out.append(row)
    return out
