"""Radial pair potentials with hard core, compact support, and attractive tail.

The model class is Lennard-Jones-like: ``v(r) = +inf`` for ``r <= r_hc``
(optional hard core), finite elsewhere, identically zero beyond a finite
range ``b``, and strictly negative just inside ``b``.  Total configuration
energies are plain pair sums ``U = sum_{i<j} v(|x_i - x_j|)``.

Infinity is represented by ``math.inf`` so that Boltzmann factors vanish
exactly inside the hard core; large finite surrogates are never used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "PairPotential",
    "Configuration",
    "HolderInfo",
    "hat_well",
    "ts_lennard_jones",
    "square_well",
    "free_gas",
    "tabulated",
    "tabulated_from_file",
    "potential_from_config",
    "evaluate",
    "total_energy",
    "pairwise_distances",
    "validate_potential",
    "ValidityReport",
    "ItemCheck",
]


@dataclass(frozen=True)
class HolderInfo:
    """Smoothness metadata: |v(r)-v(s)| <= constant*|r-s|^exponent for r,s >= r_min."""

    exponent: float
    constant: float
    r_min: float


@dataclass(frozen=True)
class PairPotential:
    """Immutable radial pair potential.

    ``energy_fn`` evaluates the finite part for scalar or ndarray ``r`` in
    ``(hard_core, support]``; the wrapper handles the hard core and the zero
    region beyond ``support``.  ``tail_width`` is a stored witness delta > 0
    with ``v < 0`` on ``(support - tail_width, support)`` for admissible
    potentials (degenerate test potentials may store 0; see
    :func:`validate_potential`).
    """

    name: str
    hard_core: float
    support: float
    tail_width: float
    energy_fn: Callable = field(repr=False)
    deriv_fn: Callable | None = field(default=None, repr=False)
    holder: HolderInfo | None = None

    def __post_init__(self):
        if self.hard_core < 0:
            raise ValueError("hard core radius must be >= 0")
        if self.support < self.hard_core:
            raise ValueError("support bound must be >= hard core radius")

    def __call__(self, r):
        return evaluate(self, r)


def evaluate(potential: PairPotential, r):
    """Evaluate ``v(r)`` for scalar or array ``r > 0``.

    Returns ``+inf`` iff ``r <= hard_core`` and exactly 0 for ``r > support``.
    """
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= 0.0):
        raise ValueError("pair distance must be positive")
    out = np.zeros_like(r_arr)
    core = r_arr <= potential.hard_core
    mid = ~core & (r_arr <= potential.support)
    out[core] = math.inf
    if np.any(mid):
        out[mid] = potential.energy_fn(r_arr[mid])
    if np.isscalar(r) or r_arr.ndim == 0:
        return float(out)
    return out


def derivative(potential: PairPotential, r, h: float = 1e-7):
    """dv/dr on the finite region; analytic when available, else finite difference.

    Accepts scalars or arrays with all entries in (hard_core, support].
    """
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= potential.hard_core):
        raise ValueError("derivative undefined inside the hard core")
    if potential.deriv_fn is not None:
        out = np.where(r_arr > potential.support, 0.0, potential.deriv_fn(np.minimum(r_arr, potential.support)))
    else:
        lo = np.maximum(r_arr - h, potential.hard_core * (1 + 1e-12) + 1e-15)
        hi = r_arr + h
        out = (evaluate(potential, hi) - evaluate(potential, lo)) / (hi - lo)
        out = np.where(r_arr > potential.support, 0.0, out)
    if np.isscalar(r) or r_arr.ndim == 0:
        return float(out)
    return out


# ---------------------------------------------------------------------------
# built-in potentials
# ---------------------------------------------------------------------------


# energy/derivative callables are module-level classes so potentials pickle
# cleanly into worker processes


@dataclass(frozen=True)
class _HatWellV:
    well_range: float
    slope: float

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return np.where(r <= self.well_range, self.slope * (r - self.well_range), 0.0)


@dataclass(frozen=True)
class _HatWellDV:
    well_range: float
    slope: float

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return np.where(r <= self.well_range, self.slope, 0.0)


def hat_well(hard_core: float = 0.5, well_range: float = 1.0, slope: float = 4.0) -> PairPotential:
    """Piecewise-linear well: v(r) = slope*(r - well_range) on (hard_core, well_range].

    Closed-form integrable, which makes it the testing workhorse: the pair
    cluster integral has an explicit antiderivative.
    """
    if well_range <= hard_core:
        raise ValueError("well_range must exceed hard_core")
    return PairPotential(
        name="hat_well",
        hard_core=hard_core,
        support=well_range,
        tail_width=well_range - hard_core,
        energy_fn=_HatWellV(well_range, slope),
        deriv_fn=_HatWellDV(well_range, slope),
        holder=HolderInfo(exponent=1.0, constant=slope, r_min=hard_core * 1.2),
    )


@dataclass(frozen=True)
class _TsLJV:
    epsilon: float
    sigma: float
    shift: float

    def __call__(self, r):
        x = (self.sigma / np.asarray(r, dtype=float)) ** 6
        return 4.0 * self.epsilon * (x * x - x) + self.shift


@dataclass(frozen=True)
class _TsLJDV:
    epsilon: float
    sigma: float

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        x = (self.sigma / r) ** 6
        return 4.0 * self.epsilon * (-12.0 * x * x + 6.0 * x) / r


def ts_lennard_jones(epsilon: float = 1.0, sigma: float = 1.0, cutoff: float = 2.5) -> PairPotential:
    """Truncated and shifted Lennard-Jones: 4*eps*((s/r)^12-(s/r)^6) + shift, zero past cutoff.

    The shift makes v continuous at the cutoff.  No hard core (r_hc = 0); the
    r^-12 wall keeps the potential stable.
    """
    x_c = (sigma / cutoff) ** 6
    shift = -4.0 * epsilon * (x_c * x_c - x_c)
    return PairPotential(
        name="ts_lennard_jones",
        hard_core=0.0,
        support=cutoff,
        tail_width=cutoff - 2.0 ** (1.0 / 6.0) * sigma,
        energy_fn=_TsLJV(epsilon, sigma, shift),
        deriv_fn=_TsLJDV(epsilon, sigma),
        holder=HolderInfo(exponent=1.0, constant=57.1 * epsilon / sigma, r_min=sigma),
    )


@dataclass(frozen=True)
class _StepV:
    value: float
    well_range: float

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return np.where(r <= self.well_range, self.value, 0.0)


@dataclass(frozen=True)
class _ZeroV:
    def __call__(self, r):
        return np.zeros_like(np.asarray(r, dtype=float))


def square_well(depth: float = 1.0, well_range: float = 1.0, hard_core: float = 0.0) -> PairPotential:
    """Square well: v = -depth on (hard_core, well_range], 0 beyond.

    Without a hard core this potential is unstable (near-coincident points
    give U ~ -depth*k^2/2); mainly used to exercise the admissibility probes.
    """
    return PairPotential(
        name="square_well",
        hard_core=hard_core,
        support=well_range,
        tail_width=well_range - hard_core,
        energy_fn=_StepV(-depth, well_range),
        deriv_fn=_ZeroV(),
    )


def free_gas() -> PairPotential:
    """Identically-zero interaction (sampler tests only; fails admissibility)."""
    return PairPotential(
        name="free_gas",
        hard_core=0.0,
        support=1e-9,
        tail_width=0.0,
        energy_fn=_ZeroV(),
        deriv_fn=_ZeroV(),
    )


class _InterpV:
    def __init__(self, r_arr, v_arr):
        self.r_arr = np.asarray(r_arr, dtype=float)
        self.v_arr = np.asarray(v_arr, dtype=float)

    def __call__(self, r):
        return np.interp(np.asarray(r, dtype=float), self.r_arr, self.v_arr, left=self.v_arr[0], right=0.0)


def tabulated(
    r_values: Sequence[float],
    v_values: Sequence[float],
    hard_core: float = 0.0,
    name: str = "tabulated",
) -> PairPotential:
    """Potential from (r, v) samples with linear interpolation.

    Below the first sample the value is held flat at v[0] (outside the hard
    core); beyond the last nonzero sample the potential is zero.
    """
    r_arr = np.asarray(r_values, dtype=float)
    v_arr = np.asarray(v_values, dtype=float)
    if r_arr.ndim != 1 or r_arr.shape != v_arr.shape or r_arr.size < 2:
        raise ValueError("need two same-length 1-d arrays with at least 2 samples")
    if np.any(np.diff(r_arr) <= 0):
        raise ValueError("r samples must be strictly ascending")
    if not np.all(np.isfinite(v_arr)):
        raise ValueError("tabulated v values must be finite (hard core is separate)")

    nonzero = np.nonzero(np.abs(v_arr) > 0)[0]
    support = float(r_arr[nonzero[-1]]) if nonzero.size else float(r_arr[-1])
    _v = _InterpV(r_arr, v_arr)

    # detected width of the trailing negative region, for the tail witness
    tail = 0.0
    step = (support - hard_core) / 4096.0
    r_scan = support - step
    while r_scan > hard_core and float(_v(r_scan)) < 0.0:
        tail = support - r_scan
        r_scan -= step

    return PairPotential(
        name=name,
        hard_core=hard_core,
        support=support,
        tail_width=tail,
        energy_fn=_v,
    )


def tabulated_from_file(path, hard_core: float = 0.0) -> PairPotential:
    """Load a two-column whitespace-separated (r, v) table, r ascending."""
    data = np.loadtxt(path, dtype=float, comments="#")
    if data.ndim != 2 or data.shape[1] != 2:
        raise ValueError(f"{path}: expected two whitespace-separated columns")
    return tabulated(data[:, 0], data[:, 1], hard_core=hard_core, name=f"tabulated:{path}")


def potential_from_config(kind: str, params: dict | None = None, table_path=None) -> PairPotential:
    """Build a potential from CLI config keys (potential.kind / params / table_path)."""
    params = dict(params or {})
    if kind == "hat_well":
        return hat_well(**params)
    if kind == "ts_lennard_jones":
        return ts_lennard_jones(**params)
    if kind == "square_well":
        return square_well(**params)
    if kind == "free_gas":
        return free_gas()
    if kind == "tabulated":
        if table_path is None:
            raise ValueError("potential.kind=tabulated requires potential.table_path")
        return tabulated_from_file(table_path, **params)
    raise ValueError(f"unknown potential.kind {kind!r}")


# ---------------------------------------------------------------------------
# configurations and total energy
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Configuration:
    """k particle positions in R^d, optionally confined to the box [0, L]^d."""

    positions: np.ndarray
    box: float | None = None

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.positions, dtype=float))
        if pos.ndim != 2 or pos.shape[1] not in (1, 2, 3):
            raise ValueError("positions must be (k, d) with d in {1,2,3}")
        if not np.all(np.isfinite(pos)):
            raise ValueError("positions must be finite")
        if self.box is not None:
            if self.box <= 0:
                raise ValueError("box side must be positive")
            if np.any(pos < -1e-12) or np.any(pos > self.box + 1e-12):
                raise ValueError("positions must lie in [0, L]^d")
        object.__setattr__(self, "positions", pos)

    @property
    def k(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]


def pairwise_distances(positions: np.ndarray) -> np.ndarray:
    """Condensed vector of Euclidean pair distances (i<j, row-major)."""
    pos = np.atleast_2d(np.asarray(positions, dtype=float))
    n = pos.shape[0]
    if n < 2:
        return np.empty(0)
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.sqrt((diff * diff).sum(axis=-1))
    iu = np.triu_indices(n, k=1)
    return dist[iu]


def total_energy(potential: PairPotential, config: Configuration | np.ndarray) -> float:
    """Sum of v over all particle pairs; +inf if any pair is inside the hard core."""
    pos = config.positions if isinstance(config, Configuration) else np.atleast_2d(np.asarray(config, dtype=float))
    if pos.shape[0] < 2:
        return 0.0
    dist = pairwise_distances(pos)
    if np.any(dist <= potential.hard_core):
        return math.inf
    inside = dist <= potential.support
    if not np.any(inside):
        return 0.0
    return float(np.sum(potential.energy_fn(dist[inside])))


# ---------------------------------------------------------------------------
# admissibility report
# ---------------------------------------------------------------------------

PASS = "pass"
FAIL = "fail"
INCONCLUSIVE = "inconclusive"


@dataclass
class ItemCheck:
    status: str
    detail: str
    value: float | None = None


@dataclass
class ValidityReport:
    """Outcome of the five admissibility checks on a finite grid.

    Items: finiteness outside the hard core, stability (necessary-condition
    probe only), compact support, attractive tail, continuity on the open
    interval above the hard core.
    """

    items: dict
    tail_delta: float | None
    max_jump: float | None
    stability_constant: float | None

    @property
    def all_pass(self) -> bool:
        return all(item.status == PASS for item in self.items.values())


def _stability_probe(potential: PairPotential, dim: int, sizes, rng) -> tuple[str, str, float]:
    """Necessary-condition probe: look for per-particle energies drifting with k.

    Samples clumped and well-scale point clouds; a stable potential keeps
    min U_k / k bounded, an unstable one (square well without core) shows
    u_k ~ -(k-1)/2 growth.  With a hard core a packing bound gives a provable
    constant and the probe only tightens it.
    """
    b = potential.support
    per_particle = {}
    for k in sizes:
        best = 0.0
        scales = [max(b * 0.05, potential.hard_core * 1.05 + 1e-9), b * 0.45, b * 0.9]
        for scale in scales:
            for _ in range(40):
                pos = rng.uniform(-scale, scale, size=(k, dim))
                u = total_energy(potential, Configuration(pos + scale * 2))
                if math.isfinite(u):
                    best = min(best, u / k)
        per_particle[k] = best

    ks = sorted(per_particle)
    drift = (per_particle[ks[-1]] - per_particle[ks[0]]) / (ks[-1] - ks[0])
    bound = max(0.0, -min(per_particle.values()))

    if potential.hard_core > 0:
        # packing bound: at pair distances > r_hc at most (1+2b/r_hc)^d points
        # interact with any given one, each pair bounded by the well depth
        grid = np.linspace(potential.hard_core * (1 + 1e-9), b, 2001)
        vmin = float(np.min(evaluate(potential, grid)))
        n_max = (1.0 + 2.0 * b / potential.hard_core) ** dim
        provable = n_max * max(0.0, -vmin) / 2.0
        return PASS, f"hard-core packing bound B={provable:.6g}; probe min U/k={-bound:.6g}", provable

    grid = np.linspace(b * 1e-4, b, 2001)
    vmin = float(np.min(evaluate(potential, grid)))
    if drift < 0.05 * vmin:  # vmin <= 0; drift more negative than 5% of depth per unit k
        return (
            FAIL,
            f"per-particle energy drifts with k (slope {drift:.4g}); clumped probes behave like -k(k-1)/2",
            bound,
        )
    return PASS, f"no instability evidence on probes; B={bound:.6g}", bound


def validate_potential(
    potential: PairPotential,
    resolution: float = 1e-4,
    r_max: float | None = None,
    dim: int = 3,
    probe_sizes: Sequence[int] = (5, 10, 20),
    seed: int = 2024,
) -> ValidityReport:
    """Check the admissibility items on a finite grid; inconclusive, never silent.

    The stability item uses only the necessary condition U_k >= -B k on random
    probe configurations.  Continuity is checked on the open interval above
    the hard core (the jump onto the hard core is inherent and exempt).
    """
    if resolution <= 0:
        raise ValueError("grid resolution must be positive")
    rng = np.random.default_rng(seed)
    b = potential.support
    hi = r_max if r_max is not None else b + 1.0
    items: dict[str, ItemCheck] = {}

    # (1) finite except hard core
    grid = np.arange(potential.hard_core + resolution, hi, resolution)
    vals = evaluate(potential, grid) if grid.size else np.empty(0)
    finite_ok = bool(np.all(np.isfinite(vals)))
    core_ok = True
    if potential.hard_core > 0:
        probes = np.linspace(potential.hard_core * 0.1, potential.hard_core, 16)
        core_ok = bool(np.all(np.isinf(evaluate(potential, probes))))
    items["finiteness"] = ItemCheck(
        PASS if finite_ok and core_ok else FAIL,
        f"finite on ({potential.hard_core:g}, {hi:g}) grid" if finite_ok else "non-finite value outside hard core",
    )

    # (2) stability probe
    status, detail, constant = _stability_probe(potential, dim, probe_sizes, rng)
    items["stability"] = ItemCheck(status, detail, constant)

    # (3) compact support
    beyond = np.arange(b + resolution, hi, resolution)
    support_ok = bool(np.all(evaluate(potential, beyond) == 0.0)) if beyond.size else True
    inside_tail = np.arange(max(potential.hard_core + resolution, b - 10 * resolution), b, resolution)
    touches = bool(inside_tail.size) and bool(np.any(np.abs(evaluate(potential, inside_tail)) > 0))
    items["compact_support"] = ItemCheck(
        PASS if support_ok else FAIL,
        f"v = 0 beyond b = {b:g}" + ("" if touches else " (no nonzero values detected just inside b)"),
        b,
    )

    # (4) attractive tail: largest delta with v < 0 on (b-delta, b)
    delta = 0.0
    r = b - resolution
    while r > potential.hard_core and float(evaluate(potential, r)) < 0.0:
        delta = b - r
        r -= resolution
    if delta > 0:
        items["attractive_tail"] = ItemCheck(PASS, f"v < 0 on (b-{delta:.6g}, b)", delta)
    else:
        items["attractive_tail"] = ItemCheck(FAIL, "no negative values found just inside the support bound", 0.0)

    # (5) continuity on the open interval: jumps must shrink with the grid.
    # A divergence toward the hard core (r^-12 type walls) is continuous but
    # numerically unresolvable, so the scan starts where |v| <= 1e4.
    def scan_start(h: float) -> float:
        r = potential.hard_core + max(h, 1e-9) * 1.5
        while r < hi and abs(float(evaluate(potential, r))) > 1e4:
            r += h
        return r

    def max_jump(h: float) -> float:
        g = np.arange(scan_start(h), hi, h)
        if g.size < 3:
            return 0.0
        v = evaluate(potential, g)
        return float(np.max(np.abs(np.diff(v))))

    j1, j2 = max_jump(resolution), max_jump(resolution / 2.0)
    if j1 == 0.0 and j2 == 0.0:
        items["continuity"] = ItemCheck(PASS, "constant on the sampled grid", 0.0)
    elif j2 <= 0.75 * j1 or j2 < 16 * resolution:
        items["continuity"] = ItemCheck(PASS, f"max jump scales with grid ({j1:.3g} -> {j2:.3g})", j2)
    else:
        items["continuity"] = ItemCheck(FAIL, f"jump of size {j2:.6g} persists under grid refinement", j2)

    return ValidityReport(
        items=items,
        tail_delta=items["attractive_tail"].value,
        max_jump=items["continuity"].value,
        stability_constant=items["stability"].value,
    )
