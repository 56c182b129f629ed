"""Stochastic validation samplers.

Two kinds of chains:

* A canonical-ensemble Metropolis simulation of N particles in the box
  [0, L]^d with reflecting walls, producing time-averaged cluster size
  distributions at connectivity radius R.

* Samplers for two random integer-partition models of N: the ideal-mixture
  weights prod_k lambda_k^{N_k} / N_k! (lambda_k = |V| Z_k) and the
  ground-state weights (|V|^M / M!) prod_k e^(-beta E_k N_k), either exactly
  by enumeration (N <= 14) or by a merge/split Metropolis chain whose
  acceptance ratios carry the exact proposal asymmetry.

All weights are handled in log space; chains are seeded and strictly
sequential, so runs are reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .clustering import ClusterSizeDistribution, decompose
from .potential import PairPotential

__all__ = [
    "CanonicalSpec",
    "CanonicalDiagnostics",
    "canonical_mcmc",
    "SeedingFailure",
    "PartitionModel",
    "partition_exact",
    "exact_mean_counts",
    "partition_mcmc",
    "PartitionMCMCResult",
    "load_partition_means",
    "integer_partitions",
]


class SeedingFailure(RuntimeError):
    """Could not place the initial configuration at finite energy."""


# ---------------------------------------------------------------------------
# canonical-ensemble Metropolis
# ---------------------------------------------------------------------------


@dataclass
class CanonicalSpec:
    """Run parameters; L is derived from rho when not given (L^d = N/rho)."""

    potential: PairPotential
    n: int
    dim: int
    beta: float
    radius: float
    box: float | None = None
    rho: float | None = None
    sweeps: int = 10_000
    burn_in_sweeps: int = 1_000
    thinning: int | None = None  # steps between decompositions; default one sweep
    seed: int = 0
    step_scale: float | None = None
    target_acceptance: float = 0.4
    use_cells: bool | None = None  # None = auto by size; forced value for testing

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("need at least one particle")
        if (self.box is None) == (self.rho is None):
            raise ValueError("give exactly one of box side L or density rho")
        if self.box is None:
            self.box = (self.n / self.rho) ** (1.0 / self.dim)
        if self.rho is None:
            self.rho = self.n / self.box**self.dim
        if abs(self.box**self.dim - self.n / self.rho) > 1e-12 * (self.n / self.rho):
            raise ValueError("box volume and density are inconsistent")
        if self.burn_in_sweeps >= self.sweeps:
            raise ValueError("burn-in must be smaller than the sweep budget")


@dataclass
class CanonicalDiagnostics:
    acceptance: float
    steps: int
    seed: int
    energy_mean: float
    energy_var: float
    step_scale: float
    n_samples: int
    rho_stderr: dict = field(default_factory=dict)  # batch-means error per cluster size


class _CellGrid:
    """Uniform cells over [0, L]^d for O(1) local-energy neighbourhoods."""

    def __init__(self, box: float, dim: int, cell_side: float):
        from itertools import product

        self.n_cells = max(1, int(box / cell_side))
        self.side = box / self.n_cells
        self.dim = dim
        self.cells: dict[tuple, set[int]] = {}
        self.key_of: list[tuple] = []
        self.offsets = [off for off in product((-1, 0, 1), repeat=dim)]

    def key(self, x) -> tuple:
        return tuple(min(int(c / self.side), self.n_cells - 1) for c in x)

    def build(self, positions):
        self.cells.clear()
        self.key_of = [self.key(p) for p in positions]
        for i, key in enumerate(self.key_of):
            self.cells.setdefault(key, set()).add(i)

    def move(self, i: int, new_pos):
        new_key = self.key(new_pos)
        old_key = self.key_of[i]
        if new_key != old_key:
            self.cells[old_key].discard(i)
            self.cells.setdefault(new_key, set()).add(i)
            self.key_of[i] = new_key

    def neighbours(self, x, exclude: int):
        key = self.key(x)
        out = []
        cells = self.cells
        for off in self.offsets:
            nkey = tuple(k + o for k, o in zip(key, off))
            members = cells.get(nkey)
            if members:
                for j in members:
                    if j != exclude:
                        out.append(j)
        return out


def _local_energy(potential, positions, i, x, others) -> float:
    """Energy of particle at x against the listed others."""
    total = 0.0
    hard = potential.hard_core
    supp = potential.support
    fn = potential.energy_fn
    for j in others:
        diff = positions[j] - x
        r = math.sqrt(float(diff @ diff))
        if r <= hard:
            return math.inf
        if r <= supp:
            total += float(fn(r))
    return total


def _initial_configuration(spec: CanonicalSpec, rng) -> np.ndarray:
    """Uniform rejection placement, one particle at a time against the cores."""
    hard = spec.potential.hard_core
    pos = np.empty((spec.n, spec.dim))
    for i in range(spec.n):
        for attempt in range(1000):
            cand = rng.uniform(0.0, spec.box, size=spec.dim)
            if i == 0 or hard == 0.0:
                pos[i] = cand
                break
            diff = pos[:i] - cand
            if float(np.min((diff * diff).sum(axis=1))) > hard * hard:
                pos[i] = cand
                break
        else:
            raise SeedingFailure(
                f"no finite-energy placement for particle {i + 1} of {spec.n} in 1000 attempts"
            )
    return pos


def _accumulate_counts_small(positions, n, radius, counts_acc):
    """Union-find cluster counting on plain floats; fast path for small n."""
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    r2 = radius * radius
    for i in range(n - 1):
        pi = positions[i]
        for j in range(i + 1, n):
            diff = positions[j] - pi
            if float(diff @ diff) <= r2:
                ra, rb = find(i), find(j)
                if ra != rb:
                    parent[rb] = ra
    sizes: dict[int, int] = {}
    for i in range(n):
        root = find(i)
        sizes[root] = sizes.get(root, 0) + 1
    for size in sizes.values():
        counts_acc[size] = counts_acc.get(size, 0.0) + 1.0


def canonical_mcmc(spec: CanonicalSpec) -> tuple[ClusterSizeDistribution, CanonicalDiagnostics]:
    """Single-particle Metropolis with reflecting walls and auto-tuned steps.

    Proposals displace one particle uniformly in [-step, step]^d, reflected
    at the walls; the step size is tuned toward the target acceptance during
    burn-in and then frozen.  Every ``thinning`` steps after burn-in the
    configuration is decomposed at radius R and the cluster counts are
    accumulated; the returned distribution is the time average.
    """
    rng = np.random.default_rng(spec.seed)
    potential = spec.potential
    n, dim, box = spec.n, spec.dim, spec.box
    positions = _initial_configuration(spec, rng)
    thinning = spec.thinning if spec.thinning is not None else n
    steps_total = spec.sweeps * n
    burn_steps = spec.burn_in_sweeps * n

    if spec.use_cells is None:
        use_cells = n > 24 and box > 3.0 * max(spec.radius, potential.support)
    else:
        use_cells = spec.use_cells and box > 3.0 * max(spec.radius, potential.support)
    grid = None
    if use_cells:
        grid = _CellGrid(box, dim, max(spec.radius, potential.support))
        grid.build(positions)

    step = spec.step_scale if spec.step_scale is not None else min(box / 4.0, max(potential.support, 0.1))
    from .potential import total_energy

    energy = total_energy(potential, positions)

    accepted = 0
    tune_window = max(50, 10 * n)
    window_accepts = 0

    counts_acc: dict[int, float] = {}
    n_batches = 16
    batch_acc: list[dict[int, float]] = [dict() for _ in range(n_batches)]
    expected_samples = max(1, (steps_total - burn_steps) // thinning)
    n_samples = 0
    e_sum = 0.0
    e_sq_sum = 0.0

    all_indices = list(range(n))
    beta = spec.beta
    chunk = 8192
    idx_buf = disp_buf = logu_buf = None
    buf_at = chunk
    for step_idx in range(steps_total):
        if buf_at >= chunk:
            idx_buf = rng.integers(0, n, size=chunk)
            disp_buf = rng.uniform(-1.0, 1.0, size=(chunk, dim))
            logu_buf = np.log(rng.random(size=chunk))
            buf_at = 0
        i = int(idx_buf[buf_at])
        old = positions[i].copy()
        prop = old + step * disp_buf[buf_at]
        for c in range(dim):
            val = prop[c]
            while val < 0.0 or val > box:
                val = -val if val < 0.0 else 2.0 * box - val
            prop[c] = val

        if grid is not None:
            others_old = grid.neighbours(old, i)
            others_new = grid.neighbours(prop, i)
        else:
            others_old = others_new = [j for j in all_indices if j != i]
        e_old = _local_energy(potential, positions, i, old, others_old)
        e_new = _local_energy(potential, positions, i, prop, others_new)

        accept = e_new <= e_old or (math.isfinite(e_new) and logu_buf[buf_at] < -beta * (e_new - e_old))
        buf_at += 1
        if accept:
            positions[i] = prop
            if grid is not None:
                grid.move(i, prop)
            energy += e_new - e_old
            accepted += 1
            window_accepts += 1

        in_burn = step_idx < burn_steps
        if in_burn and (step_idx + 1) % tune_window == 0:
            rate = window_accepts / tune_window
            step = min(box / 2.0, step * math.exp(0.5 * (rate - spec.target_acceptance)))
            window_accepts = 0

        if not in_burn and (step_idx + 1) % thinning == 0:
            batch = batch_acc[min(n_samples * n_batches // expected_samples, n_batches - 1)]
            if n <= 8:
                _accumulate_counts_small(positions, n, spec.radius, batch)
            else:
                for k, cnt in decompose(positions, spec.radius).counts.items():
                    batch[k] = batch.get(k, 0.0) + cnt
            n_samples += 1
            e_sum += energy
            e_sq_sum += energy * energy

    for batch in batch_acc:
        for k, v in batch.items():
            counts_acc[k] = counts_acc.get(k, 0.0) + v

    volume = box**dim
    rho_k = {k: v / (n_samples * volume) for k, v in counts_acc.items()}
    per_batch_n = n_samples / n_batches
    rho_stderr = {}
    for k in counts_acc:
        vals = np.array([batch.get(k, 0.0) / per_batch_n / volume for batch in batch_acc])
        rho_stderr[k] = float(vals.std(ddof=1) / math.sqrt(n_batches))
    dist = ClusterSizeDistribution(rho_k=rho_k, density=n / volume, volume=volume, radius=spec.radius)
    e_mean = e_sum / n_samples
    diag = CanonicalDiagnostics(
        acceptance=accepted / steps_total,
        steps=steps_total,
        seed=spec.seed,
        energy_mean=e_mean,
        energy_var=max(0.0, e_sq_sum / n_samples - e_mean * e_mean),
        step_scale=step,
        n_samples=n_samples,
        rho_stderr=rho_stderr,
    )
    return dist, diag


# ---------------------------------------------------------------------------
# integer-partition models
# ---------------------------------------------------------------------------


def integer_partitions(n: int):
    """Yield the partitions of n as count vectors (N_1, ..., N_n)."""

    def _gen(remaining: int, largest: int, counts):
        if remaining == 0:
            yield tuple(counts)
            return
        for part in range(min(remaining, largest), 0, -1):
            counts[part - 1] += 1
            yield from _gen(remaining - part, part, counts)
            counts[part - 1] -= 1

    yield from _gen(n, n, [0] * n)


@dataclass
class PartitionModel:
    """Weights on integer partitions of n.

    kind="ideal": log-weight sum_k (N_k log lambda_k - log N_k!).
    kind="groundstate": M log|V| - log M! - beta sum_k N_k E_k, M = sum N_k.
    """

    kind: str
    n: int
    log_lambda: np.ndarray | None = None
    beta: float | None = None
    energies: np.ndarray | None = None
    volume: float | None = None

    def __post_init__(self):
        if self.kind not in ("ideal", "groundstate"):
            raise ValueError("kind must be 'ideal' or 'groundstate'")
        if self.kind == "ideal":
            if self.log_lambda is None or len(self.log_lambda) < self.n:
                raise ValueError("ideal model needs log_lambda for k = 1..n")
            self.log_lambda = np.asarray(self.log_lambda, dtype=float)[: self.n]
        else:
            if self.beta is None or self.energies is None or self.volume is None:
                raise ValueError("groundstate model needs beta, energies, volume")
            if len(self.energies) < self.n:
                raise ValueError("need E_k for k = 1..n")
            self.energies = np.asarray(self.energies, dtype=float)[: self.n]

    @classmethod
    def ideal_from_table(cls, table, volume: float, n: int) -> "PartitionModel":
        """lambda_k = |V| Z_k = |V| e^(-beta k f_k); untabulated sizes get weight 0."""
        log_lam = np.full(n, -math.inf)
        for k in table.sizes:
            if k <= n:
                log_lam[k - 1] = math.log(volume) - table.beta * k * table.f[k]
        return cls(kind="ideal", n=n, log_lambda=log_lam)

    def log_weight(self, counts) -> float:
        total = 0.0
        m = 0
        if self.kind == "ideal":
            for k_idx, nk in enumerate(counts):
                if nk == 0:
                    continue
                ll = self.log_lambda[k_idx]
                if ll == -math.inf:
                    return -math.inf
                total += nk * ll - math.lgamma(nk + 1)
                m += nk
            return total
        for k_idx, nk in enumerate(counts):
            if nk:
                total -= self.beta * nk * self.energies[k_idx]
                m += nk
        return total + m * math.log(self.volume) - math.lgamma(m + 1)


def partition_exact(model: PartitionModel) -> dict[tuple, float]:
    """Exact distribution over the partitions of n (n <= 14)."""
    if model.n > 14:
        raise ValueError("exact enumeration is limited to n <= 14")
    states = list(integer_partitions(model.n))
    logs = np.array([model.log_weight(s) for s in states])
    finite = np.isfinite(logs)
    if not np.any(finite):
        raise ValueError("all partitions have zero weight")
    top = logs[finite].max()
    weights = np.where(finite, np.exp(logs - top), 0.0)
    weights /= weights.sum()
    return {state: float(w) for state, w in zip(states, weights)}


def exact_mean_counts(model: PartitionModel) -> np.ndarray:
    """E[N_k] for k = 1..n under the exact distribution."""
    dist = partition_exact(model)
    out = np.zeros(model.n)
    for state, prob in dist.items():
        out += prob * np.asarray(state, dtype=float)
    return out


@dataclass
class PartitionMCMCResult:
    mean_counts: np.ndarray  # E[N_k], k = 1..n
    stderr: np.ndarray  # batch-means errors
    acceptance: float
    steps: int
    seed: int
    transition_counts: dict | None = None

    def save_csv(self, path):
        from .serialize import fmt

        with open(path, "w") as fh:
            fh.write("k,mean_Nk,stderr\n")
            for k in range(1, len(self.mean_counts) + 1):
                fh.write(f"{k},{fmt(self.mean_counts[k - 1])},{fmt(self.stderr[k - 1])}\n")


def load_partition_means(path) -> tuple[np.ndarray, np.ndarray]:
    """(mean N_k, stderr) arrays from a partition_means.csv."""
    means: list[float] = []
    errs: list[float] = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("k,"):
                continue
            _, mean, err = line.split(",")
            means.append(float(mean))
            errs.append(float(err))
    return np.array(means), np.array(errs)


def _pick_cluster(counts, m, rng) -> int:
    """Index k (1-based size) of a uniformly chosen cluster."""
    target = rng.integers(m)
    acc = 0
    for k_idx, nk in enumerate(counts):
        acc += nk
        if target < acc:
            return k_idx + 1
    raise AssertionError("cluster pick fell through")


def partition_mcmc(
    model: PartitionModel,
    steps: int,
    seed: int = 0,
    burn_in: int | None = None,
    n_batches: int = 16,
    record_transitions: bool = False,
    check_mass: bool = False,
) -> PartitionMCMCResult:
    """Merge/split Metropolis over partitions of n.

    MERGE picks an unordered pair of clusters uniformly and fuses them;
    SPLIT picks a cluster of size >= 2 uniformly and cuts it at a uniform
    point.  The acceptance ratio contains the exact proposal probabilities,
    so the chain is in detailed balance with the model weights.  Every move
    preserves sum_k k N_k = n.
    """
    n = model.n
    if n < 2:
        raise ValueError("partition chain needs n >= 2")
    rng = np.random.default_rng(seed)
    burn = burn_in if burn_in is not None else steps // 10

    counts = [0] * n
    counts[0] = n  # all monomers
    log_w = model.log_weight(counts)
    if not math.isfinite(log_w):
        # fall back to the single cluster of size n
        counts = [0] * n
        counts[-1] = 1
        log_w = model.log_weight(counts)
        if not math.isfinite(log_w):
            raise ValueError("neither all-monomers nor the single n-cluster has positive weight")
    m = sum(counts)

    sums = np.zeros(n)
    batch_sums = np.zeros((n_batches, n))
    kept = 0
    accepted = 0
    transitions: dict[tuple, int] = {}

    for step_idx in range(steps + burn):
        move_merge = rng.random() < 0.5
        proposed = None
        if move_merge and m >= 2:
            j = _pick_cluster(counts, m, rng)
            counts[j - 1] -= 1
            l = _pick_cluster(counts, m - 1, rng)
            counts[j - 1] += 1
            fused = j + l
            # forward probability: unordered pair {j, l} out of C(m, 2)
            if j == l:
                pair = counts[j - 1] * (counts[j - 1] - 1) / 2.0
            else:
                pair = counts[j - 1] * counts[l - 1]
            q_fwd = 0.5 * pair / (m * (m - 1) / 2.0)
            proposed = ("merge", j, l, fused, q_fwd)
        elif not move_merge:
            s = sum(counts[idx] for idx in range(1, n))
            if s > 0:
                target = rng.integers(s)
                acc = 0
                k = None
                for idx in range(1, n):
                    acc += counts[idx]
                    if target < acc:
                        k = idx + 1
                        break
                cut = int(rng.integers(1, k))
                j, l = cut, k - cut
                c_sym = 1.0 if 2 * j == k else 2.0
                q_fwd = 0.5 * (counts[k - 1] / s) * (c_sym / (k - 1))
                proposed = ("split", k, j, l, q_fwd)

        if proposed is None:
            pass  # impossible move type: stay
        elif proposed[0] == "merge":
            _, j, l, fused, q_fwd = proposed
            if fused <= n:
                new_counts = counts.copy()
                new_counts[j - 1] -= 1
                new_counts[l - 1] -= 1
                new_counts[fused - 1] += 1
                new_log_w = model.log_weight(new_counts)
                if math.isfinite(new_log_w):
                    s_new = sum(new_counts[idx] for idx in range(1, n))
                    c_sym = 1.0 if j == l else 2.0
                    q_rev = 0.5 * (new_counts[fused - 1] / s_new) * (c_sym / (fused - 1))
                    log_alpha = new_log_w - log_w + math.log(q_rev) - math.log(q_fwd)
                    if log_alpha >= 0 or math.log(rng.random()) < log_alpha:
                        if record_transitions:
                            key = (tuple(counts), tuple(new_counts))
                            transitions[key] = transitions.get(key, 0) + 1
                        counts = new_counts
                        log_w = new_log_w
                        m -= 1
                        accepted += 1
        else:
            _, k, j, l, q_fwd = proposed
            new_counts = counts.copy()
            new_counts[k - 1] -= 1
            new_counts[j - 1] += 1
            new_counts[l - 1] += 1
            new_log_w = model.log_weight(new_counts)
            if math.isfinite(new_log_w):
                m_new = m + 1
                if j == l:
                    pair = new_counts[j - 1] * (new_counts[j - 1] - 1) / 2.0
                else:
                    pair = new_counts[j - 1] * new_counts[l - 1]
                q_rev = 0.5 * pair / (m_new * (m_new - 1) / 2.0)
                log_alpha = new_log_w - log_w + math.log(q_rev) - math.log(q_fwd)
                if log_alpha >= 0 or math.log(rng.random()) < log_alpha:
                    if record_transitions:
                        key = (tuple(counts), tuple(new_counts))
                        transitions[key] = transitions.get(key, 0) + 1
                    counts = new_counts
                    log_w = new_log_w
                    m += 1
                    accepted += 1

        if check_mass:
            assert sum((idx + 1) * nk for idx, nk in enumerate(counts)) == n

        if step_idx >= burn:
            sums += counts
            batch_sums[(step_idx - burn) * n_batches // steps] += counts
            kept += 1

    mean = sums / kept
    per_batch = batch_sums / (kept / n_batches)
    stderr = per_batch.std(axis=0, ddof=1) / math.sqrt(n_batches)
    return PartitionMCMCResult(
        mean_counts=mean,
        stderr=stderr,
        acceptance=accepted / (steps + burn),
        steps=steps,
        seed=seed,
        transition_counts=transitions if record_transitions else None,
    )
