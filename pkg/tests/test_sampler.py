import math
import pathlib

import numpy as np
import pytest

from cluster_gas import ideal
from cluster_gas import partfun as pf
from cluster_gas import potential as pot
from cluster_gas import sampler as sm
from cluster_gas.clustering import ClusterSizeDistribution

FIXTURES = pathlib.Path(__file__).parent / "fixtures"


def two_particle_pair_probability(box: float, radius: float) -> float:
    """P(|X - Y| <= R) for X, Y uniform on [0, L]: (2RL - R^2)/L^2."""
    return (2.0 * radius * box - radius**2) / box**2


class TestCanonical:
    def test_single_particle(self):
        spec = sm.CanonicalSpec(
            potential=pot.free_gas(), n=1, dim=1, beta=1.0, radius=1.0, box=5.0,
            sweeps=500, burn_in_sweeps=50, seed=1,
        )
        dist, diag = sm.canonical_mcmc(spec)
        assert dist.rho_k == {1: pytest.approx(0.2)}
        assert diag.energy_mean == 0.0 and diag.energy_var == 0.0

    @pytest.mark.parametrize("box", [5.0, 10.0, 20.0])
    def test_free_gas_pair_probability(self, box):
        spec = sm.CanonicalSpec(
            potential=pot.free_gas(), n=2, dim=1, beta=1.0, radius=1.0, box=box,
            sweeps=60_000, burn_in_sweeps=3_000, seed=7,
        )
        dist, diag = sm.canonical_mcmc(spec)
        p_exact = two_particle_pair_probability(box, 1.0)
        est = dist.rho_k.get(2, 0.0) * box
        sigma = diag.rho_stderr.get(2, 0.0) * box
        assert abs(est - p_exact) <= 3.0 * max(sigma, 1e-4)

    def test_density_box_coupling(self):
        spec = sm.CanonicalSpec(
            potential=pot.free_gas(), n=10, dim=2, beta=1.0, radius=1.0, rho=0.1,
            sweeps=10, burn_in_sweeps=1, seed=1,
        )
        assert spec.box == pytest.approx(10.0)
        with pytest.raises(ValueError):
            sm.CanonicalSpec(
                potential=pot.free_gas(), n=2, dim=1, beta=1.0, radius=1.0,
                box=5.0, rho=0.1, sweeps=10, burn_in_sweeps=1, seed=1,
            )

    def test_seeding_failure(self):
        # 30 hard cores of diameter 0.5 cannot fit in a box of side 2
        dense = sm.CanonicalSpec(
            potential=pot.hat_well(), n=30, dim=1, beta=1.0, radius=1.1, box=2.0,
            sweeps=10, burn_in_sweeps=1, seed=1,
        )
        with pytest.raises(sm.SeedingFailure):
            sm.canonical_mcmc(dense)

    def test_determinism(self):
        def run():
            spec = sm.CanonicalSpec(
                potential=pot.hat_well(), n=8, dim=1, beta=2.0, radius=1.1, box=20.0,
                sweeps=2_000, burn_in_sweeps=200, seed=42,
            )
            return sm.canonical_mcmc(spec)

        d1, g1 = run()
        d2, g2 = run()
        assert d1.rho_k == d2.rho_k
        assert g1.acceptance == g2.acceptance
        assert g1.energy_mean == g2.energy_mean

    def test_free_gas_pair_probability_2d(self):
        """d=2 chain agrees with direct iid sampling of the same observable."""
        box, radius = 4.0, 1.0
        spec = sm.CanonicalSpec(
            potential=pot.free_gas(), n=2, dim=2, beta=1.0, radius=radius, box=box,
            sweeps=60_000, burn_in_sweeps=3_000, seed=17,
        )
        dist, diag = sm.canonical_mcmc(spec)
        est = dist.rho_k.get(2, 0.0) * box**2
        sigma = diag.rho_stderr.get(2, 0.0) * box**2
        rng = np.random.default_rng(99)
        x = rng.uniform(0, box, size=(400_000, 2, 2))
        hits = ((x[:, 0] - x[:, 1]) ** 2).sum(axis=1) <= radius**2
        p_direct = hits.mean()
        sigma_direct = hits.std() / math.sqrt(hits.size)
        assert abs(est - p_direct) <= 3.0 * math.hypot(sigma, sigma_direct)

    def test_cell_list_chain_identical_to_all_pairs(self, hat):
        """Cell lists change the bookkeeping, not the chain."""
        def run(use_cells):
            spec = sm.CanonicalSpec(
                potential=hat, n=30, dim=2, beta=2.0, radius=1.1, box=14.0,
                sweeps=800, burn_in_sweeps=100, seed=23, use_cells=use_cells,
            )
            return sm.canonical_mcmc(spec)

        d_cells, g_cells = run(True)
        d_plain, g_plain = run(False)
        assert d_cells.rho_k == d_plain.rho_k
        assert g_cells.acceptance == g_plain.acceptance
        assert g_cells.energy_mean == g_plain.energy_mean

    def test_interacting_run_against_fixture(self, hat):
        """Seeded hat-well chain reproduces the committed distribution."""
        spec = sm.CanonicalSpec(
            potential=hat, n=40, dim=1, beta=3.0, radius=1.1,
            rho=math.exp(-3.0 * 0.4), sweeps=6_000, burn_in_sweeps=800, seed=2024,
        )
        dist, diag = sm.canonical_mcmc(spec)
        ref = ClusterSizeDistribution.load_csv(FIXTURES / "hat_canonical_n40.csv")
        assert set(dist.rho_k) == set(ref.rho_k)
        for k, v in ref.rho_k.items():
            assert dist.rho_k[k] == pytest.approx(v, rel=1e-12)
        assert 0.2 <= diag.acceptance <= 0.7  # tuned toward 0.4

    def test_comparison_report_against_ideal(self, hat):
        """The fixture run is nearer the matching ideal minimiser than a cold one."""
        ref = ClusterSizeDistribution.load_csv(FIXTURES / "hat_canonical_n40.csv")
        table = pf.ClusterFreeEnergyTable.load_csv(FIXTURES / "hat_beta3_table.csv")
        sol = ideal.solve(table, 3.0, ref.density)
        metrics = ideal.comparison_report(ref, sol)
        assert math.isfinite(metrics.tv)
        assert metrics.pinsker_slack >= -1e-12
        cold = ideal.solve(table, 3.0, ref.density / 50.0)
        metrics_cold = ideal.comparison_report(ref, cold)
        assert metrics.tv < metrics_cold.tv


class TestPartitionExact:
    def test_two_particles_closed_form(self, hat):
        z2 = pf.z2_quadrature(hat, 1.0, 1.1, 1)
        lam = [10.0, 10.0 * z2]
        model = sm.PartitionModel(kind="ideal", n=2, log_lambda=np.log(lam))
        dist = sm.partition_exact(model)
        p_dimer = dist[(0, 1)]
        assert p_dimer == pytest.approx(lam[1] / (lam[1] + lam[0] ** 2 / 2.0), abs=1e-14)
        assert p_dimer == pytest.approx(0.2534265, abs=1e-6)

    def test_single_particle(self):
        model = sm.PartitionModel(kind="ideal", n=1, log_lambda=[math.log(3.0)])
        dist = sm.partition_exact(model)
        assert dist == {(1,): pytest.approx(1.0)}

    def test_groundstate_weights(self):
        model = sm.PartitionModel(
            kind="groundstate", n=3, beta=1.0, energies=[0.0, -1.0, -2.0], volume=10.0
        )
        dist = sm.partition_exact(model)
        raw = {
            (3, 0, 0): 1000.0 / 6.0,
            (1, 1, 0): 50.0 * math.e,
            (0, 0, 1): 10.0 * math.e**2,
        }
        total = sum(raw.values())
        for state, weight in raw.items():
            assert dist[state] == pytest.approx(weight / total, abs=1e-12)

    def test_size_cap(self):
        with pytest.raises(ValueError):
            sm.partition_exact(sm.PartitionModel(kind="ideal", n=15, log_lambda=np.zeros(15)))

    def test_partition_count(self):
        assert len(list(sm.integer_partitions(14))) == 135


class TestPartitionMCMC:
    def test_two_particle_marginal(self, hat):
        z2 = pf.z2_quadrature(hat, 1.0, 1.1, 1)
        lam = [10.0, 10.0 * z2]
        model = sm.PartitionModel(kind="ideal", n=2, log_lambda=np.log(lam))
        oracle = lam[1] / (lam[1] + lam[0] ** 2 / 2.0)
        res = sm.partition_mcmc(model, steps=100_000, seed=3)
        assert abs(res.mean_counts[1] - oracle) <= 3.0 * res.stderr[1]

    def test_n6_marginals_match_enumeration(self):
        lam = [10.0, 17.0, 28.0, 47.0, 80.0, 135.0]
        model = sm.PartitionModel(kind="ideal", n=6, log_lambda=np.log(lam))
        exact = sm.exact_mean_counts(model)
        res = sm.partition_mcmc(model, steps=150_000, seed=4)
        for k in range(6):
            assert abs(res.mean_counts[k] - exact[k]) <= max(3.0 * res.stderr[k], 5e-3)

    def test_frozen_chain_without_dimers(self):
        log_lam = np.array([math.log(5.0)] + [-math.inf] * 4)
        model = sm.PartitionModel(kind="ideal", n=5, log_lambda=log_lam)
        res = sm.partition_mcmc(model, steps=5_000, seed=5)
        assert res.mean_counts[0] == pytest.approx(5.0)
        assert res.acceptance == 0.0

    def test_mass_preserved_every_step(self):
        model = sm.PartitionModel(kind="ideal", n=7, log_lambda=np.log(np.arange(1, 8) * 3.0))
        sm.partition_mcmc(model, steps=4_000, seed=6, check_mass=True)

    def test_groundstate_model_marginals(self):
        model = sm.PartitionModel(
            kind="groundstate", n=5, beta=0.7, energies=[0.0, -1.0, -1.8, -2.5, -3.1], volume=8.0
        )
        exact = sm.exact_mean_counts(model)
        res = sm.partition_mcmc(model, steps=120_000, seed=8)
        for k in range(5):
            assert abs(res.mean_counts[k] - exact[k]) <= max(3.0 * res.stderr[k], 5e-3)

    def test_detailed_balance_flows(self):
        # N <= 6: empirical pair flows J(s->s') - J(s'->s) vanish within MC error
        lam = [6.0, 9.0, 12.0, 10.0, 8.0, 7.0]
        model = sm.PartitionModel(kind="ideal", n=6, log_lambda=np.log(lam))
        res = sm.partition_mcmc(model, steps=200_000, seed=9, record_transitions=True)
        flows = res.transition_counts
        seen = set()
        checked = 0
        for (a, b), count in flows.items():
            if (a, b) in seen or (b, a) in seen:
                continue
            seen.add((a, b))
            rev = flows.get((b, a), 0)
            if count + rev < 200:
                continue
            assert abs(count - rev) <= 4.0 * math.sqrt(count + rev)
            checked += 1
        assert checked >= 3

    def test_needs_two_particles(self):
        model = sm.PartitionModel(kind="ideal", n=1, log_lambda=[0.0])
        with pytest.raises(ValueError):
            sm.partition_mcmc(model, steps=10)


class TestConcentrationTrend:
    def test_variation_distance_shrinks_with_volume(self):
        """Light version of the volume-concentration trend (two volumes)."""
        table = pf.ClusterFreeEnergyTable.load_csv(FIXTURES / "hat_beta1_table.csv")
        rho = 0.05
        tvs = []
        for volume in (40.0, 160.0):
            n = round(rho * volume)
            model = sm.PartitionModel.ideal_from_table(table, volume, n)
            res = sm.partition_mcmc(model, steps=120_000, seed=31)
            sol = ideal.solve(table, table.beta, n / volume)
            p_id = sol.probabilities()
            m = res.mean_counts.sum()
            p_emp = {k + 1: res.mean_counts[k] / m for k in range(len(res.mean_counts))}
            tvs.append(ideal.total_variation(p_emp, p_id))
        assert tvs[1] < tvs[0]
