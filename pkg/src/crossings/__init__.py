"""Entrance/exit chains of Markov chains and random walks.

Builds the chains obtained by sampling a Markov chain at its entrances into a
set (and at the exits from the complement), evaluates their closed-form
invariant measures for random walks, and verifies the underlying identities
two ways: exactly by linear algebra on finite-state chains, and statistically
by seeded Monte Carlo on walks in R^d and on lattices.
"""

from .laws import (
    IncrementLaw,
    StateSpace,
    make_lattice_law,
    make_continuous_law,
    law_from_spec,
    tail_gt,
    cdf_le,
    rademacher,
    simple_walk_2d,
)

__version__ = "0.1.0"
