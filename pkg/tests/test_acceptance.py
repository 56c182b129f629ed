"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines and timings.  Tolerances are fixed here, not calibrated elsewhere.
"""

import math
import time

import numpy as np
import pytest

from cluster_gas import groundstate as gs
from cluster_gas import ideal
from cluster_gas import partfun as pf
from cluster_gas import potential as pot
from cluster_gas import saha
from cluster_gas import sampler as sm
from conftest import random_feasible_dist, unsat_oracle

HAT = pot.hat_well()
HAT_Z2 = (math.e**2 - 1.0) / 4.0 + 0.1


class _Criterion:
    def __init__(self, name: str, budget_seconds: float):
        self.name = name
        self.budget = budget_seconds
        self.start = time.perf_counter()
        self.checks: list[tuple[bool, str]] = []

    def check(self, ok: bool, detail: str):
        self.checks.append((bool(ok), detail))

    def finish(self):
        elapsed = time.perf_counter() - self.start
        ok = all(c for c, _ in self.checks) and elapsed <= self.budget
        status = "PASS" if ok else "FAIL"
        print(f"ACCEPTANCE {self.name}: {status} ({elapsed:.2f}s / budget {self.budget:.0f}s)")
        for c_ok, detail in self.checks:
            if not c_ok:
                print(f"  failed: {detail}")
        assert ok, f"{self.name}: " + "; ".join(d for c, d in self.checks if not c)


def test_quadrature_oracle():
    crit = _Criterion("quadrature-oracle", 1.0)
    z2 = pf.z2_quadrature(HAT, 1.0, 1.1, 1)
    crit.check(abs(z2 - HAT_Z2) <= 1e-8, f"|Z2 - closed form| = {abs(z2 - HAT_Z2):.2e} > 1e-8")
    crit.finish()


def test_mc_vs_quadrature():
    crit = _Criterion("mc-vs-quadrature", 30.0)
    est2 = pf.estimate_zk(HAT, 2, 1.0, 1.1, 1, 100_000, seed=101)
    pull2 = abs(est2.value - HAT_Z2) / est2.stderr
    crit.check(pull2 <= 3.0, f"k=2 pull {pull2:.2f} > 3")
    crit.check(est2.relative_error <= 0.02, f"k=2 relative error {est2.relative_error:.3f} > 2%")
    oracle3 = pf.z3_grid_oracle(HAT, 1.0, 1.1, 2e-3)
    est3 = pf.estimate_zk(HAT, 3, 1.0, 1.1, 1, 60_000, seed=102)
    pull3 = abs(est3.value - oracle3) / est3.stderr
    crit.check(pull3 <= 3.0, f"k=3 pull {pull3:.2f} > 3")
    crit.finish()


def test_ideal_solver_closed_forms(unsat_table, sat_table):
    crit = _Criterion("ideal-solver-closed-form", 1.0)
    oracle = unsat_oracle()
    sol = ideal.solve(unsat_table, 1.0, 0.1)
    crit.check(abs(sol.mu - oracle["mu"]) <= 1e-9, f"gas mu off by {abs(sol.mu - oracle['mu']):.2e}")
    crit.check(abs(sol.f - oracle["f"]) <= 1e-9, f"gas f off by {abs(sol.f - oracle['f']):.2e}")
    sat_exact = math.exp(-3.0) + 2.0 * math.exp(-5.0)
    sol2 = ideal.solve(sat_table, 1.0, 0.1)
    crit.check(sol2.mu == -3.0, f"condensed mu {sol2.mu} != -3")
    crit.check(abs(sol2.rho_sat - sat_exact) <= 1e-12, f"rho_sat off by {abs(sol2.rho_sat - sat_exact):.2e}")
    f_exact = 0.1 * (-3.0) - (math.exp(-3.0) + math.exp(-5.0))
    crit.check(abs(sol2.f - f_exact) <= 1e-10, f"condensed f off by {abs(sol2.f - f_exact):.2e}")
    crit.finish()


def test_identity_suite(unsat_table, sat_table):
    crit = _Criterion("identity-suite", 5.0)
    rng = np.random.default_rng(2025)
    worst_resid = 0.0
    for table, rho in ((unsat_table, 0.1), (sat_table, 0.1), (unsat_table, 0.02), (sat_table, 0.05)):
        sol = ideal.solve(table, 1.0, rho)
        functional = ideal.free_energy_functional(table, 1.0, rho, sol.minimiser)
        worst_resid = max(worst_resid, abs(functional - (rho * sol.mu - sol.m / 1.0)))
    crit.check(worst_resid <= 1e-12, f"free-energy identity residual {worst_resid:.2e} > 1e-12")

    sol = ideal.solve(unsat_table, 1.0, 0.1)
    worst_split = 0.0
    for _ in range(100):
        dist = {k: v * float(rng.uniform(0.2, 1.0)) for k, v in sol.minimiser.items()}
        term_g, term_h = ideal.entropy_decomposition(dist, sol)
        direct = ideal.relative_entropy(dist, sol.minimiser)
        worst_split = max(worst_split, abs(term_g + term_h - direct) / max(direct, 1e-30))
    crit.check(worst_split <= 1e-12, f"entropy split relative residual {worst_split:.2e} > 1e-12")

    pinsker_ok = True
    for _ in range(1000):
        n = int(rng.integers(2, 7))
        p = rng.random(n)
        q = rng.random(n)
        p /= p.sum()
        q /= q.sum()
        h = ideal.relative_entropy(dict(enumerate(p, 1)), dict(enumerate(q, 1)))
        tv = ideal.total_variation(dict(enumerate(p, 1)), dict(enumerate(q, 1)))
        if 0.5 * h < tv * tv - 1e-14:
            pinsker_ok = False
    crit.check(pinsker_ok, "Pinsker inequality violated on a random pair")
    crit.finish()


def test_minimality_and_convexity(sat_table, unsat_table):
    crit = _Criterion("minimality-and-convexity", 5.0)
    rng = np.random.default_rng(77)
    sol = ideal.solve(unsat_table, 1.0, 0.1)
    min_ok = True
    for _ in range(200):
        dist = random_feasible_dist(rng, [1, 2], 0.1)
        if ideal.free_energy_functional(unsat_table, 1.0, 0.1, dist) < sol.f - 1e-10:
            min_ok = False
    crit.check(min_ok, "a random feasible profile beat the minimiser by more than 1e-10")

    rho_sat = ideal.saturation_density(sat_table).value
    rhos = np.linspace(0.01, 0.2, 50)
    f_vals = np.array([ideal.solve(sat_table, 1.0, float(r)).f for r in rhos])
    below = rhos < rho_sat
    fb = f_vals[below]
    convex_ok = bool(np.all(fb[1:-1] <= 0.5 * (fb[:-2] + fb[2:]) + 1e-12))
    crit.check(convex_ok, "midpoint convexity violated below saturation")
    f_at_sat = ideal.solve(sat_table, 1.0, float(rho_sat)).f
    linear_err = max(
        abs((f - f_at_sat) - (rho - rho_sat) * sat_table.f_inf)
        for rho, f in zip(rhos[~below], f_vals[~below])
    )
    crit.check(linear_err <= 1e-12, f"linear branch deviates by {linear_err:.2e} > 1e-12")
    crit.finish()


def test_box_to_free_inequality():
    crit = _Criterion("box-vs-free-inequality", 60.0)
    z_free = {2: HAT_Z2, 3: pf.z3_grid_oracle(HAT, 1.0, 1.1, 2e-3)}
    seeds = iter(range(300, 320))
    for k in (2, 3):
        for a in (5.0, 10.0, 20.0):
            est = pf.estimate_zk_box(HAT, k, 1.0, a, 1.1, 1, 100_000, seed=next(seeds))
            margin = est.value - z_free[k]
            crit.check(
                margin <= 3.0 * max(est.stderr, 1e-12),
                f"Z_box(k={k}, a={a}) exceeds Z_free by {margin:.3g} > 3 sigma",
            )
    # quantitative bound via quadrature at k=2 for boxes above 3kR = 6.6
    for a in (10.0, 20.0):
        f_free = -math.log(HAT_Z2) / 2.0
        f_box = -math.log(pf.z2_box_quadrature(HAT, 1.0, a, 1.1)) / 2.0
        bound = pf.LOG_BOUND_CONSTANT * 1 * 1.1 / (1.0 * a)
        crit.check(f_box <= f_free + bound, f"f_box(a={a}) violates the d*R*C/(beta*A) bound")
    crit.finish()


def test_partition_model_exactness():
    crit = _Criterion("partition-exactness", 60.0)
    z2 = pf.z2_quadrature(HAT, 1.0, 1.1, 1)
    lam = [10.0, 10.0 * z2]
    oracle = lam[1] / (lam[1] + lam[0] ** 2 / 2.0)
    model = sm.PartitionModel(kind="ideal", n=2, log_lambda=np.log(lam))
    res = sm.partition_mcmc(model, steps=100_000, seed=401)
    pull = abs(res.mean_counts[1] - oracle) / res.stderr[1]
    crit.check(pull <= 3.0, f"N=2 dimer marginal pull {pull:.2f} > 3")

    lam6 = [10.0, 10.0 * z2, 28.0, 47.0, 80.0, 135.0]
    model6 = sm.PartitionModel(kind="ideal", n=6, log_lambda=np.log(lam6))
    exact = sm.exact_mean_counts(model6)
    res6 = sm.partition_mcmc(model6, steps=200_000, seed=402)
    for k in range(6):
        pull = abs(res6.mean_counts[k] - exact[k]) / max(res6.stderr[k], 1e-9)
        crit.check(pull <= 3.0, f"N=6 marginal k={k+1} pull {pull:.2f} > 3")
    crit.finish()


def test_canonical_sampler_oracle():
    crit = _Criterion("canonical-sampler-oracle", 120.0)
    spec = sm.CanonicalSpec(
        potential=pot.free_gas(), n=2, dim=1, beta=1.0, radius=1.0, box=10.0,
        sweeps=1_000_000, burn_in_sweeps=20_000, seed=505,
    )
    dist, diag = sm.canonical_mcmc(spec)
    est = dist.rho_k.get(2, 0.0) * 10.0
    sigma = diag.rho_stderr.get(2, 1e-12) * 10.0
    pull = abs(est - 0.19) / sigma
    crit.check(pull <= 3.0, f"E[N_2] = {est:.5f}, pull {pull:.2f} > 3 (sigma={sigma:.2e})")
    crit.finish()


def test_saha_convergence(toy_gs, shifted_gs):
    crit = _Criterion("saha-convergence", 5.0)
    provider = saha.synthetic_exact_provider(toy_gs)
    points = saha.sweep(provider, toy_gs, 2.0, [4.0, 8.0, 16.0])
    devs = [p.dev_mass for p in points]
    crit.check(devs[0] > devs[1] > devs[2], f"mass-fraction deviations not monotone: {devs}")
    fit = saha.rate_fit([p.beta for p in points], devs)
    crit.check(fit.rate >= 0.20, f"gas-branch rate {fit.rate:.3f} < 0.20")

    provider2 = saha.synthetic_exact_provider(shifted_gs)
    points2 = saha.sweep(provider2, shifted_gs, 0.5, [4.0, 8.0, 16.0])
    fracs = [p.finite_mass_frac for p in points2]
    crit.check(fracs[0] > fracs[1] > fracs[2], f"finite-mass fractions not monotone: {fracs}")
    fit2 = saha.rate_fit([p.beta for p in points2], fracs)
    crit.check(fit2.rate >= 0.45, f"condensed-branch rate {fit2.rate:.3f} < 0.45")
    crit.finish()


def test_saturation_asymptotics(shifted_gs):
    crit = _Criterion("saturation-asymptotics", 1.0)
    provider = saha.synthetic_exact_provider(shifted_gs)
    rep = saha.saturation_trend(provider, [16.0], nu_star=1.0)
    dev = abs(rep.rows[0].nu_estimate - 1.0)
    bound = 2.0 * math.log(16.0) / 16.0
    crit.check(dev <= bound, f"|nu estimate - 1| = {dev:.3e} > (2 log beta)/beta = {bound:.3e}")
    crit.finish()


def test_concentration_trend():
    crit = _Criterion("concentration-trend", 600.0)
    import pathlib

    table = pf.ClusterFreeEnergyTable.load_csv(
        pathlib.Path(__file__).parent / "fixtures" / "hat_beta1_table.csv"
    )
    rho = 0.05
    volumes = (50.0, 100.0, 200.0)
    decreasing_triples = 0
    for trial, seed in enumerate((601, 602, 603)):
        tvs = []
        for volume in volumes:
            n = int(math.floor(rho * volume + 0.5))
            model = sm.PartitionModel.ideal_from_table(table, volume, n)
            res = sm.partition_mcmc(model, steps=150_000, seed=seed + 10 * trial)
            sol = ideal.solve(table, table.beta, n / volume)
            p_id = sol.probabilities()
            m = res.mean_counts.sum()
            p_emp = {k + 1: res.mean_counts[k] / m for k in range(len(res.mean_counts))}
            tvs.append(ideal.total_variation(p_emp, p_id))
        if tvs[0] > tvs[1] > tvs[2]:
            decreasing_triples += 1
        print(f"  volumes {volumes} -> TV {[round(t, 5) for t in tvs]}")
    crit.check(decreasing_triples >= 2, f"TV decreased in only {decreasing_triples} of 3 seed triples")
    crit.finish()
