"""Radius-R cluster decomposition and empirical cluster size distributions.

Two particles are joined when their Euclidean distance is <= R (closed
condition); clusters are the connected components of that geometric graph.
Distances are plain Euclidean; the box has free (non-periodic) boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .potential import Configuration

__all__ = [
    "ClusterDecomposition",
    "ClusterSizeDistribution",
    "decompose",
    "decompose_brute_force",
    "empirical_distribution",
]

_ALL_PAIRS_MAX = 64  # cell lists only pay off past this


class _UnionFind:
    """Union by size with path compression."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, i: int) -> int:
        root = i
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[i] != root:
            self.parent[i], i = root, self.parent[i]
        return root

    def union(self, i: int, j: int):
        ri, rj = self.find(i), self.find(j)
        if ri == rj:
            return
        if self.size[ri] < self.size[rj]:
            ri, rj = rj, ri
        self.parent[rj] = ri
        self.size[ri] += self.size[rj]


@dataclass(frozen=True)
class ClusterDecomposition:
    """Partition of particles into radius-R connected components.

    ``labels[i]`` is the smallest particle index in i's cluster, which makes
    the labelling deterministic and order-independent.
    """

    labels: np.ndarray
    radius: float

    @property
    def n_particles(self) -> int:
        return int(self.labels.size)

    @property
    def sizes(self) -> dict[int, int]:
        """Cluster label -> particle count."""
        out: dict[int, int] = {}
        for lab in self.labels:
            out[int(lab)] = out.get(int(lab), 0) + 1
        return out

    @property
    def counts(self) -> dict[int, int]:
        """Cluster size k -> number N_k of k-clusters."""
        out: dict[int, int] = {}
        for size in self.sizes.values():
            out[size] = out.get(size, 0) + 1
        return out

    def members(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        for i, lab in enumerate(self.labels):
            out.setdefault(int(lab), []).append(i)
        return out


def _edges_all_pairs(pos: np.ndarray, radius: float):
    n = pos.shape[0]
    r2 = radius * radius
    for i in range(n - 1):
        diff = pos[i + 1 :] - pos[i]
        d2 = (diff * diff).sum(axis=1)
        for off in np.nonzero(d2 <= r2)[0]:
            yield i, i + 1 + int(off)


def _edges_cell_list(pos: np.ndarray, radius: float):
    """Candidate pairs from a uniform grid with cell side = radius."""
    n, d = pos.shape
    r2 = radius * radius
    cells: dict[tuple, list[int]] = {}
    keys = np.floor(pos / radius).astype(int)
    for i in range(n):
        cells.setdefault(tuple(keys[i]), []).append(i)
    offsets = [off for off in product((-1, 0, 1), repeat=d)]
    for key, members in cells.items():
        for off in offsets:
            nkey = tuple(k + o for k, o in zip(key, off))
            if nkey < key:
                continue
            others = cells.get(nkey)
            if others is None:
                continue
            if nkey == key:
                m = len(members)
                for a in range(m - 1):
                    i = members[a]
                    for b in range(a + 1, m):
                        j = members[b]
                        diff = pos[i] - pos[j]
                        if float(diff @ diff) <= r2:
                            yield i, j
            else:
                for i in members:
                    for j in others:
                        diff = pos[i] - pos[j]
                        if float(diff @ diff) <= r2:
                            yield i, j


def decompose(config: Configuration | np.ndarray, radius: float, support_bound: float | None = None) -> ClusterDecomposition:
    """Connected components of the graph with edges {|x_i - x_j| <= radius}.

    ``support_bound`` is the interaction range b; physically meaningful
    decompositions need radius > b, so a smaller radius only warns.
    An empty configuration yields an empty (valid) decomposition.
    """
    if radius <= 0:
        raise ValueError("connectivity radius must be positive")
    if support_bound is not None and radius <= support_bound:
        import warnings

        warnings.warn(f"connectivity radius {radius} is not above the interaction range {support_bound}")
    if isinstance(config, Configuration):
        pos, box = config.positions, config.box
    else:
        pos, box = np.atleast_2d(np.asarray(config, dtype=float)), None
    n = pos.shape[0]
    if n == 0:
        return ClusterDecomposition(labels=np.empty(0, dtype=int), radius=radius)

    uf = _UnionFind(n)
    use_cells = n > _ALL_PAIRS_MAX and box is not None
    edges = _edges_cell_list(pos, radius) if use_cells else _edges_all_pairs(pos, radius)
    for i, j in edges:
        uf.union(i, j)

    roots = [uf.find(i) for i in range(n)]
    smallest: dict[int, int] = {}
    for i, root in enumerate(roots):
        if root not in smallest or i < smallest[root]:
            smallest[root] = min(smallest.get(root, i), i)
    labels = np.array([smallest[root] for root in roots], dtype=int)
    return ClusterDecomposition(labels=labels, radius=radius)


def decompose_brute_force(config: Configuration | np.ndarray, radius: float) -> ClusterDecomposition:
    """Reference implementation: transitive closure of the adjacency matrix (N <= 12)."""
    pos = config.positions if isinstance(config, Configuration) else np.atleast_2d(np.asarray(config, dtype=float))
    n = pos.shape[0]
    if n > 12:
        raise ValueError("brute-force closure is intended for N <= 12")
    if n == 0:
        return ClusterDecomposition(labels=np.empty(0, dtype=int), radius=radius)
    diff = pos[:, None, :] - pos[None, :, :]
    adj = (diff * diff).sum(axis=-1) <= radius * radius
    reach = adj.copy()
    for _ in range(n):
        reach = reach | (reach @ reach)
    labels = np.array([int(np.nonzero(reach[i])[0][0]) for i in range(n)], dtype=int)
    return ClusterDecomposition(labels=labels, radius=radius)


@dataclass
class ClusterSizeDistribution:
    """Sparse cluster densities rho_k (clusters of size k per unit volume).

    ``density`` is the carried total particle density rho; the distribution
    may account for less mass than rho (the remainder sits in clusters larger
    than any recorded size).
    """

    rho_k: dict[int, float] = field(default_factory=dict)
    density: float = 0.0
    volume: float | None = None
    radius: float | None = None

    def __post_init__(self):
        clean = {}
        for k, val in sorted(self.rho_k.items()):
            k = int(k)
            val = float(val)
            if k < 1:
                raise ValueError("cluster sizes must be >= 1")
            if val < 0:
                raise ValueError("cluster densities must be >= 0")
            if val > 0:
                clean[k] = val
        self.rho_k = clean
        if self.density < 0:
            raise ValueError("total density must be >= 0")
        if self.mass() > self.density * (1 + 1e-9) + 1e-300:
            raise ValueError("recorded cluster mass exceeds the carried total density")

    def mass(self, up_to: int | None = None) -> float:
        """rho_{<=K} = sum_{k<=K} k rho_k (all k when up_to is None)."""
        return sum(k * v for k, v in self.rho_k.items() if up_to is None or k <= up_to)

    def number_density(self, above: int = 0) -> float:
        """m (above=0) or m_{>K}: clusters per unit volume with size > above."""
        return sum(v for k, v in self.rho_k.items() if k > above)

    def probabilities(self) -> dict[int, float]:
        m = self.number_density()
        if m == 0:
            return {}
        return {k: v / m for k, v in self.rho_k.items()}

    def save_csv(self, path):
        from .serialize import fmt

        with open(path, "w") as fh:
            fh.write(f"# rho={fmt(self.density)} volume={fmt(self.volume)} R={fmt(self.radius)}\n")
            fh.write("k,rho_k\n")
            for k in sorted(self.rho_k):
                fh.write(f"{k},{fmt(self.rho_k[k])}\n")

    @classmethod
    def load_csv(cls, path) -> "ClusterSizeDistribution":
        meta = {"rho": 0.0, "volume": None, "R": None}
        rho_k: dict[int, float] = {}
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    for tok in line[1:].split():
                        if "=" in tok:
                            key, val = tok.split("=", 1)
                            meta[key] = None if val == "None" else float(val)
                    continue
                if line.startswith("k,"):
                    continue
                k_str, v_str = line.split(",")
                rho_k[int(k_str)] = float(v_str)
        return cls(rho_k=rho_k, density=meta["rho"] or 0.0, volume=meta["volume"], radius=meta["R"])


def empirical_distribution(decomp: ClusterDecomposition, volume: float) -> ClusterSizeDistribution:
    """rho_k = N_k / volume with the reference density rho = N / volume."""
    if volume <= 0:
        raise ValueError("volume must be positive")
    counts = decomp.counts
    rho_k = {k: n / volume for k, n in counts.items()}
    return ClusterSizeDistribution(
        rho_k=rho_k,
        density=decomp.n_particles / volume,
        volume=volume,
        radius=decomp.radius,
    )
