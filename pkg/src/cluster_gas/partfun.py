"""Cluster partition functions Z_k and per-particle cluster free energies.

Z_k is the configurational integral over connected k-particle clusters with
one particle pinned at the origin; f_k = -log(Z_k)/(beta*k) and f_inf is its
large-k limit, extrapolated here with a surface-order correction
f_k = f_inf + C*k^(-1/d).

k = 2 reduces to a radial integral (adaptive quadrature); k >= 3 uses
importance sampling with a random-labelled-tree proposal: a uniform tree on
the k vertices with edge displacements uniform in the ball of radius R is
connected by construction, and the exact mixture density over all trees is
(number of spanning trees of the <=R proximity graph) / (k^(k-2) * V_R^(k-1)),
computable per sample through the matrix-tree theorem.  The box-constrained
variant Z_k^a confines all k particles to [0, a]^d and divides by a^d.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .potential import PairPotential, evaluate
from .serialize import fmt

__all__ = [
    "MCEstimate",
    "ClusterFreeEnergyTable",
    "TailModel",
    "TableConstructionError",
    "surface_area",
    "ball_volume",
    "z2_quadrature",
    "z2_box_quadrature",
    "z3_grid_oracle",
    "estimate_zk",
    "estimate_zk_box",
    "build_table",
    "low_temperature_check",
    "collapse_diagnostic",
    "LOG_BOUND_CONSTANT",
]

# sup over |x| <= 2/3 of |log(1-x)/x|, attained at x = 2/3
LOG_BOUND_CONSTANT = 1.5 * math.log(3.0)


def _safe_exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


class TableConstructionError(RuntimeError):
    """A Z_k estimate is nonpositive at three standard errors."""


def surface_area(dim: int) -> float:
    """Surface area of the unit sphere in R^d (2, 2*pi, 4*pi for d = 1, 2, 3)."""
    return {1: 2.0, 2: 2.0 * math.pi, 3: 4.0 * math.pi}[dim]


def ball_volume(dim: int, radius: float) -> float:
    return surface_area(dim) * radius**dim / dim


@dataclass
class MCEstimate:
    """Monte Carlo estimate with its standard error and provenance."""

    value: float
    stderr: float
    n_samples: int
    n_effective: int
    seed: int | None
    method: str

    def __post_init__(self):
        if self.stderr < 0:
            raise ValueError("standard error must be >= 0")
        if self.n_samples < 1:
            raise ValueError("sample count must be >= 1")

    @property
    def zero_effective(self) -> bool:
        """All samples rejected (e.g. hard core): value 0, infinite relative error."""
        return self.n_effective == 0

    @property
    def relative_error(self) -> float:
        if self.value == 0.0:
            return math.inf
        return self.stderr / abs(self.value)


# ---------------------------------------------------------------------------
# quadrature (k = 2) and the k = 3 grid oracle
# ---------------------------------------------------------------------------


def _radial_pieces(potential: PairPotential, upper: float):
    """Smooth integration pieces of (0, upper], cut at the hard core and support."""
    cuts = {0.0, upper}
    for x in (potential.hard_core, potential.support):
        if 0.0 < x < upper:
            cuts.add(x)
    cuts = sorted(cuts)
    return [(lo, hi) for lo, hi in zip(cuts, cuts[1:]) if hi > lo]


def z2_quadrature(potential: PairPotential, beta: float, radius: float, dim: int) -> float:
    """Z_2 = (1/2) * S_d * integral_0^R e^(-beta v(r)) r^(d-1) dr.

    Adaptive quadrature on the smooth pieces, with hard cuts at the hard core
    and the support bound; absolute tolerance well below 1e-10.
    """
    if radius <= potential.support:
        raise ValueError("connectivity radius must exceed the interaction range")
    if beta <= 0:
        raise ValueError("beta must be positive")

    def integrand(r):
        return math.exp(-beta * float(evaluate(potential, r))) * r ** (dim - 1)

    total = 0.0
    for lo, hi in _radial_pieces(potential, radius):
        val, err = quad(integrand, lo, hi, epsabs=1e-13, epsrel=1e-12, limit=200)
        if not math.isfinite(val):
            raise ArithmeticError("non-integrable pair Boltzmann factor")
        total += val
    return 0.5 * surface_area(dim) * total


def z2_box_quadrature(potential: PairPotential, beta: float, box: float, radius: float) -> float:
    """d = 1 box-constrained pair integral, exact up to quadrature error.

    Z_2^a = (1/(2a)) * int_{[0,a]^2} e^(-beta v(|x-y|)) 1{|x-y| <= R}
          = int_0^{min(R,a)} e^(-beta v(r)) (1 - r/a) dr.
    """
    if box <= 0:
        raise ValueError("box side must be positive")
    upper = min(radius, box)

    def integrand(r):
        return math.exp(-beta * float(evaluate(potential, r))) * (1.0 - r / box)

    total = 0.0
    for lo, hi in _radial_pieces(potential, upper):
        val, _ = quad(integrand, lo, hi, epsabs=1e-13, epsrel=1e-12, limit=200)
        total += val
    return total


def z3_grid_oracle(potential: PairPotential, beta: float, radius: float, resolution: float = 2e-3) -> float:
    """Brute-force d = 1 three-particle oracle on a midpoint tensor grid.

    Z_3 = (1/6) * double integral of e^(-beta U(0,y,z)) over the connected
    region; connectivity of {0, y, z} means two of the three pair distances
    are <= R with a shared vertex.
    """
    half = 2.0 * radius
    n = int(math.ceil(2.0 * half / resolution))
    h = 2.0 * half / n
    ys = -half + (np.arange(n) + 0.5) * h
    total = 0.0
    r_hc = potential.hard_core
    for chunk_start in range(0, n, 256):
        y = ys[chunk_start : chunk_start + 256][:, None]
        z = ys[None, :]
        d01 = np.abs(y) + np.zeros_like(z)
        d02 = np.abs(z) + np.zeros_like(y)
        d12 = np.abs(y - z)
        e01, e02, e12 = d01 <= radius, d02 <= radius, d12 <= radius
        connected = (e01 & e02) | (e01 & e12) | (e02 & e12)
        hard = (d01 <= r_hc) | (d02 <= r_hc) | (d12 <= r_hc)
        ok = connected & ~hard
        if not np.any(ok):
            continue
        u = np.zeros_like(d01)
        for dist in (d01, d02, d12):
            sel = ok & (dist <= potential.support)
            if np.any(sel):
                vals = np.zeros_like(dist)
                vals[sel] = potential.energy_fn(dist[sel])
                u += vals
        total += float(np.sum(np.where(ok, np.exp(-beta * u), 0.0)))
    return total * h * h / 6.0


# ---------------------------------------------------------------------------
# tree-proposal importance sampling
# ---------------------------------------------------------------------------


def _prufer_to_edges(seq, k: int):
    """Decode a Prüfer sequence into the k-1 edges of a labelled tree."""
    if k == 2:
        return [(0, 1)]
    degree = [1] * k
    for v in seq:
        degree[v] += 1
    import heapq

    leaves = [i for i in range(k) if degree[i] == 1]
    heapq.heapify(leaves)
    edges = []
    for v in seq:
        leaf = heapq.heappop(leaves)
        edges.append((leaf, v))
        degree[v] -= 1
        if degree[v] == 1:
            heapq.heappush(leaves, v)
    u, w = leaves
    edges.append((u, w))
    return edges


def _ball_directions(rng, n: int, dim: int, radius: float) -> np.ndarray:
    """n points uniform in the d-ball of the given radius."""
    if dim == 1:
        return radius * (2.0 * rng.random((n, 1)) - 1.0)
    if dim == 2:
        theta = 2.0 * math.pi * rng.random(n)
        rad = radius * np.sqrt(rng.random(n))
        return np.column_stack([rad * np.cos(theta), rad * np.sin(theta)])
    vec = rng.normal(size=(n, 3))
    vec /= np.linalg.norm(vec, axis=1, keepdims=True)
    rad = radius * rng.random(n) ** (1.0 / 3.0)
    return vec * rad[:, None]


def _positions_from_tree(edges, disp: np.ndarray, k: int, dim: int) -> np.ndarray:
    """Walk the tree from vertex 0, assigning each edge its displacement."""
    adj: list[list[tuple[int, int, int]]] = [[] for _ in range(k)]
    for e_idx, (a, b) in enumerate(edges):
        adj[a].append((b, e_idx, 1))
        adj[b].append((a, e_idx, -1))
    pos = np.zeros((k, dim))
    seen = [False] * k
    seen[0] = True
    stack = [0]
    while stack:
        a = stack.pop()
        for b, e_idx, sign in adj[a]:
            if not seen[b]:
                seen[b] = True
                pos[b] = pos[a] + sign * disp[e_idx]
                stack.append(b)
    return pos


def _spanning_tree_count(adj: np.ndarray) -> float:
    """Matrix-tree theorem: any cofactor of the graph Laplacian."""
    k = adj.shape[0]
    if k == 2:
        return 1.0
    lap = np.diag(adj.sum(axis=1).astype(float)) - adj.astype(float)
    return float(round(np.linalg.det(lap[1:, 1:])))


def _pair_energy_and_adjacency(potential: PairPotential, pos: np.ndarray, radius: float, iu, ju):
    """(U, adjacency) for a small configuration; U = +inf inside the hard core."""
    diff = pos[iu] - pos[ju]
    dist = np.sqrt((diff * diff).sum(axis=1))
    k = pos.shape[0]
    adj = np.zeros((k, k), dtype=bool)
    within = dist <= radius
    adj[iu[within], ju[within]] = True
    adj |= adj.T
    if np.any(dist <= potential.hard_core):
        return math.inf, adj
    inside = dist <= potential.support
    energy = float(np.sum(potential.energy_fn(dist[inside]))) if np.any(inside) else 0.0
    return energy, adj


def _tree_sampler_sums(
    potential: PairPotential,
    k: int,
    beta: float,
    radius: float,
    dim: int,
    n: int,
    seed_seq,
    box: float | None = None,
):
    """(sum w, sum w^2, n, n_nonzero) for one substream of the tree proposal."""
    rng = np.random.default_rng(seed_seq)
    iu, ju = np.triu_indices(k, 1)
    prefactor = k ** (k - 2) * ball_volume(dim, radius) ** (k - 1) / math.factorial(k)
    sum_w = 0.0
    sum_w2 = 0.0
    nonzero = 0
    chunk = 4096
    done = 0
    while done < n:
        m = min(chunk, n - done)
        prufer = rng.integers(0, k, size=(m, max(k - 2, 0)))
        disp = _ball_directions(rng, m * (k - 1), dim, radius).reshape(m, k - 1, dim)
        root = rng.uniform(0.0, box, size=(m, dim)) if box is not None else None
        for s in range(m):
            edges = _prufer_to_edges(prufer[s], k)
            pos = _positions_from_tree(edges, disp[s], k, dim)
            if box is not None:
                pos = pos + root[s]
                if np.any(pos < 0.0) or np.any(pos > box):
                    done += 1
                    continue
            energy, adj = _pair_energy_and_adjacency(potential, pos, radius, iu, ju)
            done += 1
            if not math.isfinite(energy):
                continue
            for a, b in edges:  # tree edges certify connectivity
                assert adj[a, b]
            n_span = _spanning_tree_count(adj)
            w = prefactor * _safe_exp(-beta * energy) / n_span
            sum_w += w
            sum_w2 += w * w
            nonzero += 1
    return sum_w, sum_w2, n, nonzero


def _merge_substream_sums(parts, n_total: int):
    sum_w = sum(p[0] for p in parts)
    sum_w2 = sum(p[1] for p in parts)
    nonzero = sum(p[3] for p in parts)
    mean = sum_w / n_total
    if n_total > 1:
        var = max(0.0, (sum_w2 - n_total * mean * mean) / (n_total - 1))
        stderr = math.sqrt(var / n_total)
    else:
        stderr = 0.0
    return mean, stderr, nonzero


def estimate_zk(
    potential: PairPotential,
    k: int,
    beta: float,
    radius: float,
    dim: int,
    samples: int,
    seed: int = 0,
    workers: int = 1,
) -> MCEstimate:
    """Importance-sampling estimate of Z_k with the tree proposal.

    Samples split across `workers` independent substreams; the merge is a
    deterministic ordered reduction, so results are reproducible for a fixed
    (seed, workers) pair.  k = 1 is exact.
    """
    if k < 1 or samples < 1:
        raise ValueError("need k >= 1 and samples >= 1")
    if k == 1:
        return MCEstimate(1.0, 0.0, samples, samples, seed, "exact")
    parts = _run_substreams(
        _tree_sampler_sums, (potential, k, beta, radius, dim), samples, seed, workers, box=None
    )
    mean, stderr, nonzero = _merge_substream_sums(parts, samples)
    return MCEstimate(mean, stderr, samples, nonzero, seed, f"tree_mc(workers={workers})")


def _run_substreams(fn, args, samples: int, seed: int, workers: int, **kw):
    streams = np.random.SeedSequence(seed).spawn(max(workers, 1))
    base = samples // len(streams)
    counts = [base + (1 if i < samples % len(streams) else 0) for i in range(len(streams))]
    jobs = [(args + (counts[i], streams[i])) for i in range(len(streams)) if counts[i] > 0]
    if workers <= 1:
        return [fn(*job, **kw) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, *job, **kw) for job in jobs]
        return [f.result() for f in futures]


def _uniform_box_sums(potential, k, beta, radius, dim, box, n, seed_seq):
    """Vectorized uniform-box sampling: (sum w, sum w^2, n, n_nonzero)."""
    rng = np.random.default_rng(seed_seq)
    iu, ju = np.triu_indices(k, 1)
    pref = box ** (dim * (k - 1)) / math.factorial(k)
    sum_w = 0.0
    sum_w2 = 0.0
    nonzero = 0
    done = 0
    while done < n:
        m = min(1 << 14, n - done)
        pos = rng.uniform(0.0, box, size=(m, k, dim))
        diff = pos[:, iu, :] - pos[:, ju, :]
        dist = np.sqrt((diff * diff).sum(axis=2))
        hard = np.any(dist <= potential.hard_core, axis=1)
        adj = np.zeros((m, k, k), dtype=np.int32)
        within = dist <= radius
        adj[:, iu, ju] = within
        adj += np.transpose(adj, (0, 2, 1))
        reach = adj + np.eye(k, dtype=np.int32)
        for _ in range(max(1, math.ceil(math.log2(max(k, 2))))):
            reach = np.minimum(reach @ reach, 1)
        connected = np.all(reach[:, 0, :] > 0, axis=1)
        ok = connected & ~hard
        w = np.zeros(m)
        if np.any(ok):
            inside = dist <= potential.support
            vals = np.zeros_like(dist)
            sel = inside & ok[:, None]
            if np.any(sel):
                vals[sel] = potential.energy_fn(dist[sel])
            u = vals.sum(axis=1)
            w[ok] = pref * np.exp(-beta * u[ok])
        sum_w += float(w.sum())
        sum_w2 += float((w * w).sum())
        nonzero += int(np.count_nonzero(w))
        done += m
    return sum_w, sum_w2, n, nonzero


def estimate_zk_box(
    potential: PairPotential,
    k: int,
    beta: float,
    box: float,
    radius: float,
    dim: int,
    samples: int,
    seed: int = 0,
    workers: int = 1,
    method: str = "uniform",
) -> MCEstimate:
    """MC estimate of the box-constrained Z_k^a.

    method="uniform" samples all k particles uniformly in the box (the plain
    definition); method="tree" reuses the tree proposal with the first
    particle uniform in the box, which keeps the variance workable at low
    temperature (cross-validated against "uniform" in tests).
    """
    if box <= 0:
        raise ValueError("box side must be positive")
    if k < 1 or samples < 1:
        raise ValueError("need k >= 1 and samples >= 1")
    if k == 1:
        return MCEstimate(1.0, 0.0, samples, samples, seed, "exact")
    if method == "uniform":
        parts = _run_substreams(_uniform_box_sums, (potential, k, beta, radius, dim, box), samples, seed, workers)
        label = f"uniform_box(workers={workers})"
    elif method == "tree":
        parts = _run_substreams(
            _tree_sampler_sums, (potential, k, beta, radius, dim), samples, seed, workers, box=box
        )
        label = f"tree_box(workers={workers})"
    else:
        raise ValueError("method must be 'uniform' or 'tree'")
    mean, stderr, nonzero = _merge_substream_sums(parts, samples)
    return MCEstimate(mean, stderr, samples, nonzero, seed, label)


# ---------------------------------------------------------------------------
# free-energy tables
# ---------------------------------------------------------------------------


@dataclass
class TailModel:
    """Surface-order correction: k*(f_k - f_inf) ~ amplitude * k^exponent."""

    amplitude: float
    exponent: float

    @property
    def tag(self) -> str:
        return f"surface_law(C={fmt(self.amplitude)},p={fmt(self.exponent)})"

    def f_of_k(self, f_inf: float, k) -> np.ndarray:
        """Modeled f_k for untabulated sizes."""
        k = np.asarray(k, dtype=float)
        return f_inf + self.amplitude * k ** (self.exponent - 1.0)


@dataclass
class ClusterFreeEnergyTable:
    """Per-size cluster free energies at one temperature.

    ``f[k]`` with standard errors, the extrapolated ``f_inf`` with its fit
    residual, and an optional surface-law tail model for k beyond the table.
    """

    beta: float
    radius: float | None
    dim: int
    f: dict[int, float]
    stderr: dict[int, float] = field(default_factory=dict)
    f_inf: float | None = None
    f_inf_residual: float | None = None
    tail: TailModel | None = None
    provenance: str = "synthetic"

    def __post_init__(self):
        self.f = {int(k): float(v) for k, v in sorted(self.f.items())}
        self.stderr = {int(k): float(v) for k, v in self.stderr.items()}
        if any(v < 0 for v in self.stderr.values()):
            raise ValueError("standard errors must be >= 0")
        if self.tail is not None and self.tail.amplitude <= 0:
            raise ValueError("surface-law tail requires a positive amplitude")

    @property
    def k_max(self) -> int:
        return max(self.f)

    @property
    def sizes(self) -> list[int]:
        return sorted(self.f)

    def stderr_of(self, k: int) -> float:
        return self.stderr.get(k, 0.0)

    @classmethod
    def synthetic(cls, f: dict[int, float], f_inf: float, beta: float = 1.0, dim: int = 1, tail: TailModel | None = None):
        return cls(beta=beta, radius=None, dim=dim, f=dict(f), f_inf=f_inf, f_inf_residual=0.0, tail=tail, provenance="synthetic")

    def save_csv(self, path):
        with open(path, "w") as fh:
            fh.write("k,f_k,stderr_k\n")
            for k in self.sizes:
                fh.write(f"{k},{fmt(self.f[k])},{fmt(self.stderr_of(k))}\n")
            tag = self.tail.tag if self.tail is not None else "none"
            fh.write(
                f"# f_inf={fmt(self.f_inf)} f_inf_residual={fmt(self.f_inf_residual)}"
                f" beta={fmt(self.beta)} R={fmt(self.radius)} tail={tag}\n"
            )
            fh.write(f"# dim={self.dim} provenance={self.provenance}\n")

    @classmethod
    def load_csv(cls, path) -> "ClusterFreeEnergyTable":
        f: dict[int, float] = {}
        stderr: dict[int, float] = {}
        meta: dict[str, str] = {}
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("k,"):
                    continue
                if line.startswith("#"):
                    for tok in line[1:].split():
                        if "=" in tok:
                            key, val = tok.split("=", 1)
                            meta[key] = val
                    continue
                parts = line.split(",")
                k = int(parts[0])
                f[k] = float(parts[1])
                if len(parts) > 2:
                    stderr[k] = float(parts[2])
        tail = None
        tag = meta.get("tail", "none")
        if tag.startswith("surface_law"):
            inner = tag[tag.index("(") + 1 : tag.rindex(")")]
            kv = dict(item.split("=") for item in inner.split(","))
            tail = TailModel(amplitude=float(kv["C"]), exponent=float(kv["p"]))

        def _opt(key):
            val = meta.get(key)
            return None if val in (None, "None") else float(val)

        return cls(
            beta=_opt("beta") or 1.0,
            radius=_opt("R"),
            dim=int(float(meta.get("dim", "1"))),
            f=f,
            stderr=stderr,
            f_inf=_opt("f_inf"),
            f_inf_residual=_opt("f_inf_residual"),
            tail=tail,
            provenance=meta.get("provenance", "loaded"),
        )


def fit_f_inf(table: ClusterFreeEnergyTable, window: int | None = None) -> tuple[float, float, float]:
    """Least squares f_k = f_inf + C*k^(-1/d) over the top half of the sizes."""
    ks = np.array(table.sizes, dtype=float)
    n_win = window if window is not None else max(2, ks.size // 2)
    tail_ks = ks[-n_win:]
    y = np.array([table.f[int(k)] for k in tail_ks])
    design = np.column_stack([np.ones_like(tail_ks), tail_ks ** (-1.0 / table.dim)])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = float(np.sqrt(np.mean((design @ coef - y) ** 2)))
    return float(coef[0]), float(coef[1]), resid


def build_table(
    potential: PairPotential,
    beta: float,
    radius: float,
    k_max: int,
    dim: int,
    samples: int | dict[int, int] = 50_000,
    seed: int = 0,
    workers: int = 1,
    quadrature_k2: bool = True,
    max_mc_size: int = 8,
) -> ClusterFreeEnergyTable:
    """Estimate f_k for k = 1..k_max and extrapolate f_inf.

    f_1 = 0 exactly; k = 2 by quadrature unless disabled; k >= 3 by tree MC
    with delta-method errors sigma_f = sigma_Z / (beta k Z).  Fails loudly if
    any Z_k is nonpositive at three standard errors.  Direct MC is capped at
    ``max_mc_size`` (default 8): beyond that the estimator variance is not a
    desk-scale problem and sizes belong in synthetic tables.
    """
    if k_max < 2:
        raise ValueError("table needs K >= 2")
    if k_max > max_mc_size:
        raise ValueError(
            f"k_max={k_max} exceeds the direct-MC cap {max_mc_size}; "
            "raise max_mc_size explicitly or use a synthetic table"
        )
    f: dict[int, float] = {1: 0.0}
    err: dict[int, float] = {1: 0.0}
    streams = np.random.SeedSequence(seed).spawn(k_max + 1)
    n_of = (lambda k: samples.get(k, 50_000)) if isinstance(samples, dict) else (lambda k: samples)
    for k in range(2, k_max + 1):
        if k == 2 and quadrature_k2:
            z = z2_quadrature(potential, beta, radius, dim)
            sigma = 0.0
        else:
            est = estimate_zk(
                potential, k, beta, radius, dim, n_of(k), seed=int(streams[k].generate_state(1)[0]), workers=workers
            )
            z, sigma = est.value, est.stderr
            if z - 3.0 * sigma <= 0.0:
                raise TableConstructionError(f"Z_{k} = {z:.3g} +- {sigma:.3g} is nonpositive at 3 sigma")
        f[k] = -math.log(z) / (beta * k)
        err[k] = sigma / (beta * k * z) if sigma else 0.0

    table = ClusterFreeEnergyTable(
        beta=beta,
        radius=radius,
        dim=dim,
        f=f,
        stderr=err,
        provenance="quadrature+tree_mc" if quadrature_k2 else "tree_mc",
    )
    f_inf, amp, resid = fit_f_inf(table)
    table.f_inf = f_inf
    table.f_inf_residual = resid
    table.tail = TailModel(amplitude=amp, exponent=1.0 - 1.0 / dim) if amp > 0 else None
    return table


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------


@dataclass
class LowTempRow:
    k: int
    f_k: float
    e_k_over_k: float
    lower_margin: float  # f_k - (E_k/k - C/beta) at the fitted C
    upper_margin: float  # E_k/k + (C/beta) log(beta) - f_k


@dataclass
class LowTempReport:
    """Smallest constant making E_k/k - C/b <= f_k <= E_k/k + (C/b) log b hold."""

    beta: float
    constant: float
    lower_constant: float
    upper_constant: float
    rows: list


def low_temperature_check(table: ClusterFreeEnergyTable, gs, beta: float | None = None) -> LowTempReport:
    beta = beta if beta is not None else table.beta
    if beta <= 1.0:
        raise ValueError("the log(beta) envelope needs beta > 1")
    c_lo = 0.0
    c_up = 0.0
    for k in table.sizes:
        if k not in gs.energies:
            continue
        gap = gs.energies[k] / k - table.f[k]
        c_lo = max(c_lo, beta * gap)
        c_up = max(c_up, beta * (-gap) / math.log(beta))
    constant = max(c_lo, c_up)
    rows = []
    for k in table.sizes:
        if k not in gs.energies:
            continue
        ek = gs.energies[k] / k
        rows.append(
            LowTempRow(
                k=k,
                f_k=table.f[k],
                e_k_over_k=ek,
                lower_margin=table.f[k] - (ek - constant / beta),
                upper_margin=ek + constant / beta * math.log(beta) - table.f[k],
            )
        )
    return LowTempReport(beta=beta, constant=constant, lower_constant=c_lo, upper_constant=c_up, rows=rows)


@dataclass
class CollapseRow:
    k: int
    box: float
    log_z_free: float
    log_z_box: float
    ratio: float | None
    difference: float
    stderr_combined: float


def collapse_diagnostic(
    potential: PairPotential,
    ks,
    beta: float,
    c: float,
    radius: float,
    dim: int,
    samples: int = 50_000,
    seed: int = 0,
) -> list[CollapseRow]:
    """Compare log Z_k in a box of side c*k^(1/d) against the free cluster.

    The per-particle difference vanishing with k (or with c) is the compact-
    shape signature; k = 1 is reported as ratio-undefined with difference 0.
    Quadrature at k = 2 in d = 1; tree-proposal MC otherwise (box variant in
    tree mode for variance, see module notes).
    """
    if c <= 0:
        raise ValueError("shape constant must be positive")
    rows = []
    streams = np.random.SeedSequence(seed).spawn(2 * len(list(ks)))
    for i, k in enumerate(ks):
        box = c * k ** (1.0 / dim)
        if k == 1:
            rows.append(CollapseRow(k=1, box=box, log_z_free=0.0, log_z_box=0.0, ratio=None, difference=0.0, stderr_combined=0.0))
            continue
        if k == 2 and dim == 1:
            z_free = z2_quadrature(potential, beta, radius, dim)
            z_box = z2_box_quadrature(potential, beta, box, radius)
            err = 0.0
        else:
            est_free = estimate_zk(potential, k, beta, radius, dim, samples, seed=int(streams[2 * i].generate_state(1)[0]))
            est_box = estimate_zk_box(
                potential, k, beta, box, radius, dim, samples,
                seed=int(streams[2 * i + 1].generate_state(1)[0]), method="tree",
            )
            z_free, z_box = est_free.value, est_box.value
            err = math.sqrt(
                (est_free.stderr / max(z_free, 1e-300)) ** 2 + (est_box.stderr / max(z_box, 1e-300)) ** 2
            )
        lf, lb = math.log(z_free), math.log(z_box)
        rows.append(
            CollapseRow(
                k=k,
                box=box,
                log_z_free=lf,
                log_z_box=lb,
                ratio=(lb / lf) if lf != 0.0 else None,
                difference=lf - lb,
                stderr_combined=err,
            )
        )
    return rows
