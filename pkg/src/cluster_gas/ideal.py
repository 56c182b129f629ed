"""Equilibrium ideal mixture of clusters: saturation, chemical potential, minimiser.

The ideal model treats clusters as non-interacting species.  For a table of
cluster free energies f_k at inverse temperature beta, the saturation density

    rho_sat = sum_k k * exp(beta*k*(f_inf - f_k))

separates a gas phase (all mass in finite clusters) from a condensed phase.
Below saturation the chemical potential mu solves the mass balance

    sum_k k * exp(beta*k*(mu - f_k)) = rho,

a strictly increasing map on (-inf, f_inf), and the minimising cluster
densities are rho_k = exp(beta*k*(mu - f_k)); at and above saturation
mu = f_inf.  The free energy is f = rho*mu - m/beta with m = sum_k rho_k,
analytic and strictly convex below saturation and linear with slope f_inf
above it.

Sums are truncated at the table's largest size; a surface-law tail model
extends them with numerically summed remainders plus rigorous-under-model
bounds (geometric domination on the gas branch, an incomplete-gamma integral
bound at saturation), carried as intervals on the results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as _gamma_fn
from scipy.special import gammaincc as _gammaincc

from .clustering import ClusterSizeDistribution
from .partfun import ClusterFreeEnergyTable
from .serialize import dump_json, load_json

__all__ = [
    "SaturationDensity",
    "IdealSolution",
    "AmbiguousPhaseError",
    "saturation_density",
    "solve",
    "mass_function",
    "free_energy_functional",
    "truncation_error",
    "relative_entropy",
    "total_variation",
    "entropy_decomposition",
    "comparison_report",
    "tail_report",
    "resample_envelope",
    "g_entropy",
    "ComparisonMetrics",
    "TailRatios",
    "Envelope",
]

_MASS_TOL = 1e-12


class AmbiguousPhaseError(RuntimeError):
    """rho falls inside the saturation uncertainty interval.

    Carries the solutions of both branches (``gas`` may be None when the
    gas-branch mass balance cannot bracket rho).
    """

    def __init__(self, message, gas=None, condensed=None):
        super().__init__(message)
        self.gas = gas
        self.condensed = condensed


def g_entropy(x: float) -> float:
    """g(x) = 1 - x + x log x >= 0, = 0 iff x = 1; g(x) ~ (1-x)^2/2 near 1."""
    if x < 0:
        raise ValueError("g is defined on [0, inf)")
    if x == 0.0:
        return 1.0
    return 1.0 - x + x * math.log(x)


# ---------------------------------------------------------------------------
# truncation tails under the surface-law model
# ---------------------------------------------------------------------------


@dataclass
class _TailSums:
    number: float  # sum_{k>K} s^k e^(-beta C k^p), numeric part
    mass: float  # sum_{k>K} k s^k e^(-beta C k^p), numeric part
    mass_bound: float  # rigorous-under-model remainder beyond the numeric part
    number_bound: float
    valid: bool
    note: str = ""


def _model_tail_sums(beta: float, amp: float, p: float, log_s: float, k_start: int) -> _TailSums:
    """Tail sums for k >= k_start with weights s^k * exp(-beta*amp*k^p).

    log_s = beta*(mu - f_inf) <= 0.  Terms are summed numerically until
    negligible; the remainder is bounded geometrically when s < 1 and via the
    integral/incomplete-gamma comparison at s = 1 (p > 0).
    """
    if amp <= 0:
        raise ValueError("tail model amplitude must be positive")
    if p <= 0 and log_s >= 0:
        return _TailSums(math.inf, math.inf, math.inf, math.inf, False, "no decay: p <= 0 at saturation")

    number = 0.0
    mass = 0.0
    k = k_start
    chunk = 2048
    cap = 2_000_000
    with np.errstate(under="ignore"):
        while k <= cap:
            ks = np.arange(k, min(k + chunk, cap + 1), dtype=float)
            logs = ks * log_s - beta * amp * ks**p
            terms = np.exp(logs)
            number += float(terms.sum())
            mass += float((ks * terms).sum())
            last_term = float(ks[-1] * terms[-1])
            k = int(ks[-1]) + 1
            if last_term < 1e-18 * (1.0 + mass):
                break
    k_stop = k - 1

    s = math.exp(log_s)
    q = s * (k_stop + 1) / k_stop  # >= sup ratio of successive mass terms (p >= 0)
    if q < 1.0:
        t_next = (k_stop + 1) * math.exp((k_stop + 1) * log_s - beta * amp * (k_stop + 1) ** p)
        mass_bound = t_next / (1.0 - q)
        number_bound = mass_bound / (k_stop + 1)
        return _TailSums(number, mass, mass_bound, number_bound, True)
    if p > 0:
        # integral comparison, valid once x e^(-beta amp x^p) is decreasing
        x_star = (1.0 / (beta * amp * p)) ** (1.0 / p)
        if k_stop < x_star:
            return _TailSums(number, mass, math.inf, math.inf, False, "tail not yet decreasing at the summation cap")
        a2, a1 = 2.0 / p, 1.0 / p
        x0 = beta * amp * k_stop**p
        scale = 1.0 / (p * (beta * amp) ** a1)
        upper1 = scale * _gamma_fn(a1) * _gammaincc(a1, x0)
        upper2 = (1.0 / (p * (beta * amp) ** a2)) * _gamma_fn(a2) * _gammaincc(a2, x0)
        return _TailSums(number, mass, upper2 + upper1, upper1, True)
    return _TailSums(number, mass, math.inf, math.inf, False, "geometric ratio >= 1")


@dataclass
class SaturationDensity:
    """rho_sat as an interval: tabulated sum, plus the modeled tail when present."""

    value: float
    lower: float
    upper: float
    diverged: bool
    tail_note: str = ""

    @property
    def is_finite(self) -> bool:
        return not self.diverged and math.isfinite(self.value)


def saturation_density(table: ClusterFreeEnergyTable) -> SaturationDensity:
    """sum_k k exp(beta k (f_inf - f_k)) over the table, extended by the tail model.

    With no tail model the truncated mixture is the model: the tabulated sum
    is exact, except that visibly non-decaying terms mean the untruncated
    series diverges and the +inf sentinel is returned.
    """
    if table.f_inf is None:
        raise ValueError("table needs f_inf")
    beta = table.beta
    ks = table.sizes
    terms = [k * math.exp(beta * k * (table.f_inf - table.f[k])) for k in ks]
    partial = float(sum(terms))

    if table.tail is None:
        if len(terms) >= 2 and terms[-1] >= terms[-2] * (1.0 - 1e-12) and terms[-1] > 0:
            return SaturationDensity(math.inf, partial, math.inf, True, "terms do not decay and no tail model")
        return SaturationDensity(partial, partial, partial, False)

    tail = _model_tail_sums(beta, table.tail.amplitude, table.tail.exponent, 0.0, table.k_max + 1)
    if not tail.valid:
        return SaturationDensity(math.inf, partial, math.inf, True, tail.note)
    return SaturationDensity(partial + tail.mass, partial, partial + tail.mass + tail.mass_bound, False)


def mass_function(table: ClusterFreeEnergyTable, mu: float, beta: float | None = None) -> float:
    """sum_k k exp(beta k (mu - f_k)) including the modeled tail (strictly increasing in mu)."""
    beta = beta if beta is not None else table.beta
    total = 0.0
    for k in table.sizes:
        total += k * math.exp(beta * k * (mu - table.f[k]))
    if table.tail is not None and table.f_inf is not None:
        log_s = beta * (mu - table.f_inf)
        if log_s >= 0:
            tail = _model_tail_sums(beta, table.tail.amplitude, table.tail.exponent, 0.0, table.k_max + 1)
        else:
            tail = _model_tail_sums(beta, table.tail.amplitude, table.tail.exponent, log_s, table.k_max + 1)
        total += tail.mass
    return total


# ---------------------------------------------------------------------------
# the solver
# ---------------------------------------------------------------------------


@dataclass
class IdealSolution:
    """Minimiser of the ideal rate functional at (beta, rho).

    ``minimiser`` holds the tabulated sizes; ``tail_mass``/``tail_number``
    are the modeled contributions beyond the table and ``tail_mass_bound``
    is the rigorous-under-model remainder past the numeric summation, carried
    as the certified truncation interval.
    """

    beta: float
    rho: float
    mu: float
    saturated: bool
    rho_sat: float
    minimiser: dict[int, float]
    m: float
    f: float
    residual: float
    tail_mass: float = 0.0
    tail_mass_bound: float = 0.0
    tail_number: float = 0.0
    f_inf: float | None = None

    def probabilities(self) -> dict[int, float]:
        m_tab = sum(self.minimiser.values())
        return {k: v / m_tab for k, v in self.minimiser.items()}

    def mass(self, up_to: int | None = None) -> float:
        return sum(k * v for k, v in self.minimiser.items() if up_to is None or k <= up_to)

    def save_json(self, path=None) -> str:
        payload = {
            "beta": self.beta,
            "rho": self.rho,
            "mu_ideal": self.mu,
            "saturated": self.saturated,
            "rho_sat": self.rho_sat,
            "m_ideal": self.m,
            "f_ideal": self.f,
            "residual": self.residual,
            "minimiser": [{"k": k, "rho_k": v} for k, v in sorted(self.minimiser.items())],
            "tail_bound": self.tail_mass_bound,
        }
        return dump_json(payload, path)

    @classmethod
    def load_json(cls, path) -> "IdealSolution":
        data = load_json(path)
        return cls(
            beta=data["beta"],
            rho=data["rho"],
            mu=data["mu_ideal"],
            saturated=data["saturated"],
            rho_sat=data["rho_sat"],
            minimiser={int(row["k"]): float(row["rho_k"]) for row in data["minimiser"]},
            m=data["m_ideal"],
            f=data["f_ideal"],
            residual=data["residual"],
            tail_mass_bound=data.get("tail_bound", 0.0),
        )


def _minimiser_at(table: ClusterFreeEnergyTable, beta: float, mu: float) -> dict[int, float]:
    return {k: math.exp(beta * k * (mu - table.f[k])) for k in table.sizes}


def _build_solution(table, beta, rho, mu, saturated, rho_sat, residual) -> IdealSolution:
    minimiser = _minimiser_at(table, beta, mu)
    m = float(sum(minimiser.values()))
    tail_mass = tail_mass_bound = tail_number = 0.0
    if table.tail is not None and table.f_inf is not None:
        log_s = min(beta * (mu - table.f_inf), 0.0)
        tail = _model_tail_sums(beta, table.tail.amplitude, table.tail.exponent, log_s, table.k_max + 1)
        if tail.valid:
            m += tail.number
            tail_mass, tail_mass_bound, tail_number = tail.mass, tail.mass_bound, tail.number
    f_val = rho * mu - m / beta
    return IdealSolution(
        beta=beta,
        rho=rho,
        mu=mu,
        saturated=saturated,
        rho_sat=rho_sat,
        minimiser=minimiser,
        m=m,
        f=f_val,
        residual=residual,
        tail_mass=tail_mass,
        tail_mass_bound=tail_mass_bound,
        tail_number=tail_number,
        f_inf=table.f_inf,
    )


def solve(table: ClusterFreeEnergyTable, beta: float | None, rho: float) -> IdealSolution:
    """Solve the ideal mixture at density rho.

    Saturated branch (rho >= rho_sat): mu = f_inf and the excess mass
    rho - rho_sat sits in infinite clusters.  Gas branch: bisection for mu in
    (-inf, f_inf) on the strictly increasing mass balance, started from the
    bracket [f_inf + log(rho)/beta - 10, f_inf), to relative mass tolerance
    1e-12.  A rho inside the saturation uncertainty interval raises
    AmbiguousPhaseError carrying both branch solutions.
    """
    if rho <= 0:
        raise ValueError("density must be positive")
    if beta is None:
        beta = table.beta
    elif table.beta is not None and abs(beta - table.beta) > 1e-12 * max(1.0, abs(beta)):
        raise ValueError(f"table was built at beta={table.beta}, got beta={beta}")
    if table.f_inf is None:
        raise ValueError("table needs f_inf")
    f_inf = table.f_inf

    sat = saturation_density(table)
    rho_sat_val = sat.value

    # MC uncertainty on the f_k can leave the phase of rho undecidable
    has_err = any(table.stderr_of(k) > 0 for k in table.sizes) or (table.f_inf_residual or 0.0) > 0
    if has_err:
        corners = []
        for sign in (-1.0, +1.0):
            shifted = ClusterFreeEnergyTable(
                beta=table.beta,
                radius=table.radius,
                dim=table.dim,
                f={k: table.f[k] + sign * table.stderr_of(k) for k in table.sizes},
                stderr={},
                f_inf=f_inf - sign * (table.f_inf_residual or 0.0),
                f_inf_residual=0.0,
                tail=table.tail,
                provenance="phase_corner",
            )
            corners.append(saturation_density(shifted))
        finite_vals = [c.value for c in corners if c.is_finite]
        if len(finite_vals) == 2:
            lo, hi = min(finite_vals), max(finite_vals)
            if hi > lo * (1 + 1e-12) and lo <= rho <= hi:
                condensed = _build_solution(table, beta, rho, f_inf, True, rho_sat_val, 0.0)
                gas = None
                try:
                    gas = _solve_gas(table, beta, rho, f_inf, rho_sat_val)
                except Exception:
                    pass
                raise AmbiguousPhaseError(
                    f"rho={rho} lies inside the MC saturation interval [{lo}, {hi}]",
                    gas=gas,
                    condensed=condensed,
                )

    if sat.is_finite and rho >= rho_sat_val * (1.0 - 1e-12):
        return _build_solution(table, beta, rho, f_inf, True, rho_sat_val, 0.0)
    return _solve_gas(table, beta, rho, f_inf, rho_sat_val)


def _solve_gas(table, beta, rho, f_inf, rho_sat_val) -> IdealSolution:
    mu_hi = np.nextafter(f_inf, -math.inf)
    mu_lo = f_inf + math.log(rho) / beta - 10.0
    for _ in range(60):
        if mass_function(table, mu_lo, beta) < rho:
            break
        mu_lo -= 10.0
    else:
        raise RuntimeError("could not bracket the chemical potential from below")
    if mass_function(table, mu_hi, beta) < rho:
        raise RuntimeError("mass balance cannot reach rho below f_inf (saturated regime)")

    mu = mu_lo
    for _ in range(200):
        mu = 0.5 * (mu_lo + mu_hi)
        mass = mass_function(table, mu, beta)
        if abs(mass - rho) <= _MASS_TOL * rho:
            break
        if mass < rho:
            mu_lo = mu
        else:
            mu_hi = mu
        if (mu_hi - mu_lo) <= max(1.0, abs(mu_hi)) * 1e-16:
            mu = 0.5 * (mu_lo + mu_hi)
            break
    residual = abs(mass_function(table, mu, beta) - rho) / rho
    return _build_solution(table, beta, rho, mu, False, rho_sat_val, residual)


# ---------------------------------------------------------------------------
# the rate functional and the error functional
# ---------------------------------------------------------------------------


def _as_dict(dist) -> dict[int, float]:
    if isinstance(dist, ClusterSizeDistribution):
        return dict(dist.rho_k)
    if isinstance(dist, dict):
        return {int(k): float(v) for k, v in dist.items()}
    return {i + 1: float(v) for i, v in enumerate(dist)}


def free_energy_functional(table: ClusterFreeEnergyTable, beta: float, rho: float, dist) -> float:
    """sum_k k rho_k f_k + (rho - sum_k k rho_k) f_inf + (1/beta) sum_k rho_k (log rho_k - 1).

    0 * (log 0 - 1) = 0; mass above rho (beyond 1e-9 relative) is a domain
    error; sizes beyond the table need the tail model.
    """
    rho_k = _as_dict(dist)
    if any(v < 0 for v in rho_k.values()):
        raise ValueError("cluster densities must be >= 0")
    mass = sum(k * v for k, v in rho_k.items())
    if mass > rho * (1.0 + 1e-9):
        raise ValueError(f"cluster mass {mass} exceeds the total density {rho}")
    total = (rho - mass) * table.f_inf
    for k, v in rho_k.items():
        if v == 0.0:
            continue
        if k in table.f:
            f_k = table.f[k]
        elif table.tail is not None:
            f_k = float(table.tail.f_of_k(table.f_inf, k))
        else:
            raise ValueError(f"size k={k} is beyond the table and no tail model is present")
        total += k * v * f_k + v * (math.log(v) - 1.0) / beta
    return total


def truncation_error(beta: float, rho: float, dist, K: int, dim: int, collapse: bool = False) -> float:
    """Error functional rho_{<=K}^((d+2)/(d+1)) + (rho - rho_{<=K}) log(beta) - m_{>K} log m_{>K}.

    With the collapse flag the middle term uses the tail mass sum_{k>K} k rho_k
    instead of rho - rho_{<=K}.  The stated validity window K < (rho/3)^(-1/(d+1))
    is enforced as a warning only.
    """
    if K < 1:
        raise ValueError("cutoff K must be >= 1")
    if K >= (rho / 3.0) ** (-1.0 / (dim + 1)):
        import warnings

        warnings.warn(f"K={K} is outside the validity window K < (rho/3)^(-1/(d+1))")
    rho_k = _as_dict(dist)
    rho_le = sum(k * v for k, v in rho_k.items() if k <= K)
    m_gt = sum(v for k, v in rho_k.items() if k > K)
    mass_gt = sum(k * v for k, v in rho_k.items() if k > K)
    mid = mass_gt if collapse else (rho - rho_le)
    ent = -m_gt * math.log(m_gt) if m_gt > 0 else 0.0
    return rho_le ** ((dim + 2.0) / (dim + 1.0)) + mid * math.log(beta) + ent


# ---------------------------------------------------------------------------
# entropy metrics
# ---------------------------------------------------------------------------


def relative_entropy(a, b) -> float:
    """H(a; b) = sum_k (b_k - a_k + a_k log(a_k/b_k)) for finite measures.

    0 log(0/b) = 0; a_k > 0 with b_k = 0 returns +inf (absolute-continuity
    failure).
    """
    a_map, b_map = _as_dict(a), _as_dict(b)
    total = 0.0
    for k in set(a_map) | set(b_map):
        ak, bk = a_map.get(k, 0.0), b_map.get(k, 0.0)
        total += bk - ak
        if ak > 0.0:
            if bk == 0.0:
                return math.inf
            total += ak * math.log(ak / bk)
    return total


def total_variation(p, q) -> float:
    """||p - q||_var = (1/2) sum_k |p_k - q_k|."""
    p_map, q_map = _as_dict(p), _as_dict(q)
    return 0.5 * sum(abs(p_map.get(k, 0.0) - q_map.get(k, 0.0)) for k in set(p_map) | set(q_map))


def entropy_decomposition(dist, solution: IdealSolution) -> tuple[float, float]:
    """Split H(rho; rho_ideal) = m_ideal g(m/m_ideal) + m H(p; p_ideal).

    Both terms are nonnegative; their sum is checked against the direct
    relative entropy to 1e-12 relative.  m = 0 degenerates to
    (m_ideal, 0) by the g(0) = 1 limit.
    """
    a = _as_dict(dist)
    b = dict(solution.minimiser)
    m = sum(a.values())
    m_id = sum(b.values())
    if m == 0.0:
        return m_id, 0.0
    term_g = m_id * g_entropy(m / m_id)
    p = {k: v / m for k, v in a.items() if v > 0}
    p_id = {k: v / m_id for k, v in b.items()}
    h_p = relative_entropy(p, p_id)
    term_h = m * h_p
    direct = relative_entropy(a, b)
    if math.isfinite(direct):
        if abs((term_g + term_h) - direct) > 1e-12 * max(1.0, abs(direct)):
            raise AssertionError("entropy decomposition identity violated beyond 1e-12")
    return term_g, term_h


@dataclass
class ComparisonMetrics:
    mass_ratio_dev: float  # |m/m_ideal - 1|
    half_relative_entropy: float
    tv: float
    pinsker_slack: float  # (1/2) H - TV^2, nonnegative by Pinsker when H finite


def comparison_report(empirical, solution: IdealSolution) -> ComparisonMetrics:
    """Distance of an empirical cluster size distribution from the ideal minimiser."""
    emp = _as_dict(empirical)
    m = sum(emp.values())
    m_id = sum(solution.minimiser.values())
    p = {k: v / m for k, v in emp.items()} if m > 0 else {}
    p_id = solution.probabilities()
    half_h = 0.5 * relative_entropy(p, p_id)
    tv = total_variation(p, p_id)
    return ComparisonMetrics(
        mass_ratio_dev=abs(m / m_id - 1.0),
        half_relative_entropy=half_h,
        tv=tv,
        pinsker_slack=half_h - tv * tv,
    )


@dataclass
class TailRatios:
    K: int
    number_fraction: float  # m_{>K} / m_ideal
    mass_fraction: float  # sum_{k>K} k rho_k / m_ideal
    mean_size: float  # sum_k k rho_k / m_ideal
    number_fraction_upper: float
    mass_fraction_upper: float


def tail_report(solution: IdealSolution, K: int) -> TailRatios:
    """Tail ratios of the ideal minimiser beyond the cutoff K, with intervals."""
    m_id = solution.m
    num_gt = sum(v for k, v in solution.minimiser.items() if k > K) + solution.tail_number
    mass_gt = sum(k * v for k, v in solution.minimiser.items() if k > K) + solution.tail_mass
    mean = (solution.mass() + solution.tail_mass) / m_id
    return TailRatios(
        K=K,
        number_fraction=num_gt / m_id,
        mass_fraction=mass_gt / m_id,
        mean_size=mean,
        number_fraction_upper=(num_gt + solution.tail_mass_bound / max(K + 1, 1)) / m_id,
        mass_fraction_upper=(mass_gt + solution.tail_mass_bound) / m_id,
    )


@dataclass
class Envelope:
    mu_lo: float
    mu_hi: float
    f_lo: float
    f_hi: float


def resample_envelope(table: ClusterFreeEnergyTable, beta: float | None, rho: float) -> Envelope:
    """Min/max envelopes for mu and f from the f_k +- stderr corner tables.

    The mass balance is monotone in every f_k, so the two uniform corners
    bound mu; f is reported at the same corners.
    """
    solutions = []
    for sign in (-1.0, +1.0):
        shifted = ClusterFreeEnergyTable(
            beta=table.beta,
            radius=table.radius,
            dim=table.dim,
            f={k: table.f[k] + sign * table.stderr_of(k) for k in table.sizes},
            stderr={},
            f_inf=(table.f_inf + sign * (table.f_inf_residual or 0.0)) if table.f_inf is not None else None,
            f_inf_residual=0.0,
            tail=table.tail,
            provenance="resample_corner",
        )
        try:
            solutions.append(solve(shifted, beta, rho))
        except AmbiguousPhaseError as err:
            solutions.append(err.condensed)
    mus = [s.mu for s in solutions]
    fs = [s.f for s in solutions]
    return Envelope(mu_lo=min(mus), mu_hi=max(mus), f_lo=min(fs), f_hi=max(fs))
