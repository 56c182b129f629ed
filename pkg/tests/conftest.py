import math

import numpy as np
import pytest

from cluster_gas import groundstate, partfun, potential

PAIR_MIN = 2.0 ** (1.0 / 6.0)
TSLJ_PAIR_ENERGY = -0.983683108864  # 4*(r^-12 - r^-6) + shift at r = 2^(1/6)


@pytest.fixture(scope="session")
def hat():
    return potential.hat_well()


@pytest.fixture(scope="session")
def tslj():
    return potential.ts_lennard_jones()


@pytest.fixture(scope="session")
def unsat_table():
    """Two-species toy whose gas branch has a quadratic closed form."""
    return partfun.ClusterFreeEnergyTable.synthetic({1: 0.0, 2: -0.5}, f_inf=-2.0, beta=1.0)


@pytest.fixture(scope="session")
def sat_table():
    """Two-species toy that saturates at rho_sat = e^-3 + 2 e^-5."""
    return partfun.ClusterFreeEnergyTable.synthetic({1: 0.0, 2: -0.5}, f_inf=-3.0, beta=1.0)


@pytest.fixture(scope="session")
def toy_gs():
    """E_k = -(k-1): e_bulk = -1 and every size attains the excess minimum 1."""
    return groundstate.GroundStateTable(
        dim=1, energies={k: -(k - 1.0) for k in range(1, 11)}, e_bulk=-1.0, nu_star=1.0, nu_star_argmin=1
    )


@pytest.fixture(scope="session")
def shifted_gs():
    """E_k = -k with e_bulk = -2: excess gaps grow linearly, nu_star = 1 at k = 1."""
    return groundstate.GroundStateTable(
        dim=1, energies={k: -float(k) for k in range(1, 11)}, e_bulk=-2.0, nu_star=1.0, nu_star_argmin=1
    )


def unsat_oracle():
    """Closed-form gas-branch solution of the unsaturated toy at beta=1, rho=0.1.

    Mass balance z + 2 e z^2 = 0.1 with z = e^mu.
    """
    z = (-1.0 + math.sqrt(1.0 + 0.8 * math.e)) / (4.0 * math.e)
    mu = math.log(z)
    rho_1 = z
    rho_2 = math.e * z * z
    m = rho_1 + rho_2
    f = 0.1 * mu - m
    return {"mu": mu, "rho_1": rho_1, "rho_2": rho_2, "m": m, "f": f}


def random_feasible_dist(rng, sizes, rho):
    """Random nonnegative cluster densities with mass at most rho."""
    raw = {k: float(rng.random()) for k in sizes}
    mass = sum(k * v for k, v in raw.items())
    scale = float(rng.uniform(0.05, 1.0)) * rho / mass
    return {k: v * scale for k, v in raw.items()}
