"""Simulation laboratory for the symbiotic branching model and the parabolic Anderson model.

Modules:

- :mod:`sbmlab.grid` periodic grid, grid functions, pairings, heat flow
- :mod:`sbmlab.descriptors` initial-data descriptors and their text form
- :mod:`sbmlab.noise` seeded white-noise streams
- :mod:`sbmlab.spde` SBM / PAM steppers and trajectories
- :mod:`sbmlab.duality` duality, self-duality, martingale and uniqueness checks
- :mod:`sbmlab.experiments` long-time experiments
- :mod:`sbmlab.config`, :mod:`sbmlab.runner`, :mod:`sbmlab.cli` the command line
"""

__version__ = "0.1.0"

from .descriptors import const, cutoff_bump, gaussian, parse_descriptor, sine, table
from .grid import GridFunction, GridSpec, heat_semigroup, heat_step, make_grid, pair, sample, total_mass
from .noise import SeedSpec
from .spde import PamState, SbmState, SchemeParams, simulate, step_pam, step_sbm, xy_view

__all__ = [
    "__version__",
    "const",
    "cutoff_bump",
    "gaussian",
    "parse_descriptor",
    "sine",
    "table",
    "GridFunction",
    "GridSpec",
    "heat_semigroup",
    "heat_step",
    "make_grid",
    "pair",
    "sample",
    "total_mass",
    "SeedSpec",
    "PamState",
    "SbmState",
    "SchemeParams",
    "simulate",
    "step_pam",
    "step_sbm",
    "xy_view",
]
