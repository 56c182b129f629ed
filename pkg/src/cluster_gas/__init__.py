"""Ideal-mixture (droplet) approximation of a dilute classical particle gas.

Submodules
----------
potential    radial pair potentials, total energies, admissibility checks
clustering   radius-R cluster decomposition, empirical size distributions
groundstate  ground-state energies E_k, bulk limits, zero-temperature chemical potential
partfun      cluster partition functions Z_k and free-energy tables
ideal        equilibrium ideal-mixture solver and comparison metrics
sampler      canonical Metropolis MC and integer-partition samplers
saha         coupled low-temperature / low-density sweeps and rate fits
cli          reproducible command-line pipelines
"""

from . import clustering, groundstate, ideal, partfun, potential, saha, sampler

__version__ = "0.1.0"

__all__ = [
    "potential",
    "clustering",
    "groundstate",
    "partfun",
    "ideal",
    "sampler",
    "saha",
    "__version__",
]
