"""Ground-state energies of k-particle clusters and their dilute-limit geometry.

E_k is the infimum of the pair-sum energy over all k-point configurations;
the values produced here are upper bounds from restarted basin hopping with
quasi-Newton local descent.  From a table of E_k we estimate the bulk energy
per particle e_bulk = lim E_k/k, the minimal excess nu_star = inf_k (E_k -
k*e_bulk), and the zero-temperature chemical potential

    mu(nu) = inf_k (E_k - nu) / k,

a nonincreasing concave piecewise-affine function that equals e_bulk for
nu <= nu_star.  Off its kinks the minimising size k_star(nu) is unique and
separated from the competitors by a positive gap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize as _scipy_minimize

from .potential import PairPotential, derivative, evaluate, pairwise_distances, total_energy
from .serialize import fmt

__all__ = [
    "GroundStateTable",
    "MuPoint",
    "ChemicalPotentialCurve",
    "BulkFit",
    "minimize_energy",
    "build_table",
    "bulk_limits",
    "chemical_potential",
    "chemical_potential_curve",
    "groundstate_rate",
    "shape_diagnostics",
    "OptimizationFailure",
]


class OptimizationFailure(RuntimeError):
    """Every restart diverged or stayed at +inf (e.g. impossible packing)."""


@dataclass
class GroundStateTable:
    """Tabulated E_k with witnesses and fitted bulk quantities.

    ``e_bulk`` and ``nu_star`` may be set by :func:`bulk_limits` or injected
    directly for synthetic tables.  ``boundary_flag`` marks nu_star <= tol,
    where the gas/condensed geometry degenerates.
    """

    dim: int
    energies: dict[int, float]
    witnesses: dict[int, np.ndarray] = field(default_factory=dict)
    e_bulk: float | None = None
    e_bulk_residual: float | None = None
    nu_star: float | None = None
    nu_star_argmin: int | None = None
    boundary_flag: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def k_max(self) -> int:
        return max(self.energies)

    def energy(self, k: int) -> float:
        return self.energies[k]

    def save_csv(self, path):
        with open(path, "w") as fh:
            fh.write(
                f"# e_bulk={fmt(self.e_bulk)} nu_star={fmt(self.nu_star)} dim={self.dim}"
                f" residual={fmt(self.e_bulk_residual)}\n"
            )
            fh.write("k,E_k,min_dist,max_dist\n")
            for k in sorted(self.energies):
                wit = self.witnesses.get(k)
                if wit is not None and wit.shape[0] >= 2:
                    dists = pairwise_distances(wit)
                    lo, hi = float(dists.min()), float(dists.max())
                else:
                    lo = hi = float("nan")
                fh.write(f"{k},{fmt(self.energies[k])},{fmt(lo)},{fmt(hi)}\n")

    @classmethod
    def load_csv(cls, path, dim: int | None = None) -> "GroundStateTable":
        energies: dict[int, float] = {}
        meta: dict[str, float | None] = {}
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("k,"):
                    continue
                if line.startswith("#"):
                    for tok in line[1:].split():
                        if "=" in tok:
                            key, val = tok.split("=", 1)
                            meta[key] = None if val == "None" else float(val)
                    continue
                parts = line.split(",")
                energies[int(parts[0])] = float(parts[1])
        table_dim = dim if dim is not None else int(meta.get("dim") or 1)
        table = cls(dim=table_dim, energies=energies)
        if meta.get("e_bulk") is not None:
            table.e_bulk = float(meta["e_bulk"])
        if meta.get("nu_star") is not None:
            table.nu_star = float(meta["nu_star"])
        table.e_bulk_residual = meta.get("residual")
        return table

    def save_witness_xyz(self, k: int, path):
        """One particle per line, d whitespace-separated coordinates."""
        wit = self.witnesses[k]
        with open(path, "w") as fh:
            for row in np.atleast_2d(wit):
                fh.write(" ".join(fmt(x) for x in row) + "\n")


def _pair_minimum(potential: PairPotential) -> tuple[float, float]:
    """(argmin, min) of v on a fine grid over (r_hc, b]."""
    lo = potential.hard_core + max(potential.support - potential.hard_core, 1e-6) * 1e-4
    grid = np.linspace(lo, potential.support, 4001)
    vals = evaluate(potential, grid)
    i = int(np.argmin(vals))
    return float(grid[i]), float(vals[i])


def _make_objective(potential: PairPotential, k: int, dim: int, r_pen: float, kappa: float):
    """Vectorized smooth surrogate: exact v above r_pen, quadratic wall below.

    The wall takes over at r_pen with matched value and slope, so the gradient
    stays finite inside the hard core; the exact pair-sum energy is
    re-evaluated on candidates outside this function.
    """
    iu, ju = np.triu_indices(k, 1)
    v_pen = float(evaluate(potential, r_pen))
    dv_pen = float(derivative(potential, r_pen))

    def objective(x):
        pos = x.reshape(k, dim)
        diff = pos[iu] - pos[ju]
        r = np.sqrt((diff * diff).sum(axis=1))
        r = np.maximum(r, 1e-12)
        e_pair = np.zeros_like(r)
        dv = np.zeros_like(r)
        wall = r < r_pen
        finite = ~wall & (r <= potential.support)
        if np.any(finite):
            rf = r[finite]
            e_pair[finite] = potential.energy_fn(rf)
            dv[finite] = derivative(potential, rf)
        if np.any(wall):
            dr = r[wall] - r_pen
            e_pair[wall] = v_pen + dv_pen * dr + 0.5 * kappa * dr * dr
            dv[wall] = dv_pen + kappa * dr
        grad = np.zeros((k, dim))
        contrib = (dv / r)[:, None] * diff
        np.add.at(grad, iu, contrib)
        np.add.at(grad, ju, -contrib)
        return float(e_pair.sum()), grad.ravel()

    return objective


def minimize_energy(
    potential: PairPotential,
    k: int,
    dim: int,
    restarts: int = 20,
    iterations: int = 400,
    seed=0,
) -> tuple[float, np.ndarray]:
    """Best upper bound on E_k from basin hopping, with its witness.

    Each restart perturbs the incumbent by Gaussian steps of scale
    0.3 * (pair-minimum distance) and runs L-BFGS-B on the penalized
    surrogate; the exact pair-sum energy is re-evaluated at the candidate.
    The restart stream is prefix-stable: growing the budget can only lower
    the returned energy.
    """
    if k < 1:
        raise ValueError("cluster size must be >= 1")
    if restarts < 1:
        raise ValueError("need at least one restart")
    if k == 1:
        return 0.0, np.zeros((1, dim))

    master = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    streams = master.spawn(restarts)

    r_star, v_min = _pair_minimum(potential)
    use_surrogate = potential.hard_core > 0
    r_pen = potential.hard_core + 1e-6 if use_surrogate else 1e-9
    kappa = 1e7 * max(1.0, abs(v_min)) / max(r_pen, 1e-3) ** 2
    objective = _make_objective(potential, k, dim, r_pen, kappa)

    best_energy = math.inf
    best_pos: np.ndarray | None = None
    for idx, stream in enumerate(streams):
        rng = np.random.default_rng(stream)
        if best_pos is None:
            scale = max(r_star, potential.hard_core * 1.2 + 1e-3)
            start = None
            for _ in range(200):
                cand = rng.uniform(-0.6, 0.6, size=(k, dim)) * scale * k ** (1.0 / dim)
                if math.isfinite(total_energy(potential, cand)) or use_surrogate:
                    start = cand
                    break
            if start is None:
                continue
        else:
            start = best_pos + rng.normal(scale=0.3 * r_star, size=(k, dim))

        res = _scipy_minimize(
            objective,
            start.ravel(),
            jac=True,
            method="L-BFGS-B",
            options={"maxiter": iterations},
        )
        cand_pos = res.x.reshape(k, dim)
        exact = total_energy(potential, cand_pos)
        if math.isfinite(exact) and exact < best_energy:
            best_energy = exact
            best_pos = cand_pos

    if best_pos is None or not math.isfinite(best_energy):
        raise OptimizationFailure(
            f"no finite-energy minimum found for k={k}, d={dim} "
            f"(hard core {potential.hard_core}, {restarts} restarts)"
        )
    if k >= 2:
        min_dist = float(pairwise_distances(best_pos).min())
        if min_dist <= potential.hard_core:
            raise OptimizationFailure("witness violates the hard core")
    best_pos = best_pos - best_pos.mean(axis=0)  # centroid at the origin
    return best_energy, best_pos


def build_table(
    potential: PairPotential,
    k_max: int,
    dim: int,
    restarts: int = 20,
    iterations: int = 400,
    seed: int = 0,
    fit_window: int | None = None,
) -> GroundStateTable:
    """Run the optimizer for k = 1..k_max and fit the bulk quantities."""
    master = np.random.SeedSequence(seed)
    streams = master.spawn(k_max)
    energies: dict[int, float] = {}
    witnesses: dict[int, np.ndarray] = {}
    for k in range(1, k_max + 1):
        e, wit = minimize_energy(potential, k, dim, restarts=restarts, iterations=iterations, seed=streams[k - 1])
        energies[k] = e
        witnesses[k] = wit
    table = GroundStateTable(
        dim=dim,
        energies=energies,
        witnesses=witnesses,
        meta={"restarts": restarts, "iterations": iterations, "seed": seed},
    )
    bulk_limits(table, window=fit_window)
    return table


@dataclass
class BulkFit:
    e_bulk: float
    amplitude: float
    residual: float
    nu_star: float
    nu_star_argmin: int
    boundary_flag: bool
    residual_warning: bool


def bulk_limits(
    table: GroundStateTable,
    window: int | None = None,
    residual_threshold: float = 1e-2,
    boundary_tol: float = 1e-9,
) -> BulkFit:
    """Fit E_k/k = e_bulk + a*k^(-1/d) over the largest k, then nu_star.

    The k^(-1/d) law is the surface scaling of a compact droplet.  The fit
    window defaults to the top half of the tabulated sizes; nu_star is the
    tabulated minimum of E_k - k*e_bulk with its attaining k.
    """
    ks = np.array(sorted(table.energies), dtype=float)
    if ks.size < 4:
        raise ValueError("bulk fit needs a table with K_max >= 4")
    n_win = window if window is not None else max(2, ks.size // 2)
    tail = ks[-n_win:]
    y = np.array([table.energies[int(k)] / k for k in tail])
    design = np.column_stack([np.ones_like(tail), tail ** (-1.0 / table.dim)])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    e_bulk, amplitude = float(coef[0]), float(coef[1])
    residual = float(np.max(np.abs(design @ coef - y)))

    excess = {int(k): table.energies[int(k)] - k * e_bulk for k in ks}
    k_at = min(excess, key=lambda k: excess[k])
    nu_star = excess[k_at]
    boundary = nu_star <= boundary_tol

    table.e_bulk = e_bulk
    table.e_bulk_residual = residual
    table.nu_star = nu_star
    table.nu_star_argmin = k_at
    table.boundary_flag = boundary
    return BulkFit(
        e_bulk=e_bulk,
        amplitude=amplitude,
        residual=residual,
        nu_star=nu_star,
        nu_star_argmin=k_at,
        boundary_flag=boundary,
        residual_warning=residual > residual_threshold,
    )


@dataclass
class MuPoint:
    """mu(nu) with the minimising size (None = infinite-cluster branch) and gap."""

    nu: float
    mu: float
    k_star: int | None
    gap: float
    kink: bool
    kink_sizes: list
    table_too_short: bool


def chemical_potential(table: GroundStateTable, nu: float, kink_tol: float = 1e-9) -> MuPoint:
    """Evaluate mu(nu) = inf_k (E_k - nu)/k against the infinite-cluster branch.

    Sizes beyond the table cannot win when the excess bound
    (E_k - nu)/k >= e_bulk - (nu - nu_star)/k rules them out for all
    k > K_max; otherwise the point is flagged table_too_short.
    Two finite sizes (or a finite size and the bulk branch) within
    kink_tol*(1+|mu|) tie into a kink.
    """
    if nu <= 0:
        raise ValueError("nu must be positive")
    if table.e_bulk is None:
        raise ValueError("table needs e_bulk (run bulk_limits or set it)")
    e_bulk = table.e_bulk
    values = {k: (table.energies[k] - nu) / k for k in sorted(table.energies)}
    k_fin = min(values, key=lambda k: values[k])
    mu_fin = values[k_fin]
    tol = kink_tol * (1.0 + abs(min(mu_fin, e_bulk)))

    # can any k > K_max beat the finite minimum?  E_k >= k e_bulk + nu_star
    too_short = False
    if table.nu_star is not None and nu > table.nu_star:
        k_next = table.k_max + 1
        tail_floor = e_bulk - (nu - table.nu_star) / k_next
        if tail_floor < mu_fin - tol:
            too_short = True

    if mu_fin >= e_bulk - tol:
        # bulk branch; gap reported to the best finite size
        kink = abs(mu_fin - e_bulk) <= tol
        return MuPoint(
            nu=nu,
            mu=e_bulk,
            k_star=None,
            gap=mu_fin - e_bulk,
            kink=kink,
            kink_sizes=[k_fin, None] if kink else [],
            table_too_short=too_short,
        )

    ties = [k for k, val in values.items() if val <= mu_fin + tol]
    kink = len(ties) > 1
    competitors = [val for k, val in values.items() if k != k_fin]
    gap_candidates = [val - mu_fin for val in competitors] + [e_bulk - mu_fin]
    if table.nu_star is not None and nu > table.nu_star:
        gap_candidates.append(e_bulk - (nu - table.nu_star) / (table.k_max + 1) - mu_fin)
    gap = min(gap_candidates) if gap_candidates else math.inf
    return MuPoint(
        nu=nu,
        mu=mu_fin,
        k_star=k_fin,
        gap=gap,
        kink=kink,
        kink_sizes=ties if kink else [],
        table_too_short=too_short,
    )


@dataclass
class ChemicalPotentialCurve:
    """mu(nu) sampled on a grid, with the kinks detected at that resolution."""

    nu_grid: np.ndarray
    mu_values: np.ndarray
    k_star: list
    gaps: np.ndarray
    kinks: list
    resolution: float


def chemical_potential_curve(table: GroundStateTable, nu_grid) -> ChemicalPotentialCurve:
    """Scan mu(nu) on a grid; kinks are the nu where the minimising size changes."""
    nu_grid = np.asarray(nu_grid, dtype=float)
    points = [chemical_potential(table, nu) for nu in nu_grid]
    kinks = [float(p.nu) for p in points if p.kink]
    for prev, cur in zip(points, points[1:]):
        if prev.k_star != cur.k_star and not (prev.kink or cur.kink):
            kinks.append(0.5 * (prev.nu + cur.nu))
    res = float(np.max(np.diff(nu_grid))) if nu_grid.size > 1 else math.inf
    return ChemicalPotentialCurve(
        nu_grid=nu_grid,
        mu_values=np.array([p.mu for p in points]),
        k_star=[p.k_star for p in points],
        gaps=np.array([p.gap for p in points]),
        kinks=sorted(set(kinks)),
        resolution=res,
    )


def groundstate_rate(table: GroundStateTable, q: dict[int, float], nu: float) -> float:
    """Zero-temperature mixture rate: (1 - sum q_k) e_bulk + sum q_k (E_k - nu)/k.

    q assigns mass fractions to finite sizes (sum <= 1); the remainder sits
    in the bulk.  Linear in q, so its infimum over the simplex is mu(nu).
    """
    if table.e_bulk is None:
        raise ValueError("table needs e_bulk")
    total = 0.0
    acc = 0.0
    for k, qk in q.items():
        if qk < 0:
            raise ValueError("mass fractions must be >= 0")
        if qk == 0:
            continue
        if k not in table.energies:
            raise ValueError(f"mass on untabulated cluster size k={k}")
        total += qk
        acc += qk * (table.energies[k] - nu) / k
    if total > 1.0 + 1e-12:
        raise ValueError("mass fractions must sum to at most 1")
    return (1.0 - total) * table.e_bulk + acc


@dataclass
class ShapeDiagnostics:
    k: int
    min_dist: float
    max_dist: float
    min_dist_ok: bool
    max_dist_ok: bool


def shape_diagnostics(witness: np.ndarray, r_min: float, c: float) -> ShapeDiagnostics:
    """Witness geometry vs the compactness expectations.

    Checks min pair distance >= r_min (no clumping below the smooth region)
    and max pair distance <= c*k^(1/d) (droplet fits a box of volume ~ k).
    A single particle passes vacuously.
    """
    pos = np.atleast_2d(np.asarray(witness, dtype=float))
    k, dim = pos.shape
    if k < 2:
        return ShapeDiagnostics(k=k, min_dist=math.inf, max_dist=0.0, min_dist_ok=True, max_dist_ok=True)
    dists = pairwise_distances(pos)
    lo, hi = float(dists.min()), float(dists.max())
    return ShapeDiagnostics(
        k=k,
        min_dist=lo,
        max_dist=hi,
        min_dist_ok=lo >= r_min,
        max_dist_ok=hi <= c * k ** (1.0 / dim),
    )
