"""Belief-propagation decoding of low-density lattice codes with
Gaussian-mixture messages.

Modules:
    gmix     mixture type, moment matching, pairwise loss, greedy reduction
    lattice  sparse Latin-square code generation, encoding, integer recovery
    bp       message-passing node operations and the iterative decoder
    channel  unconstrained-power AWGN channel and word-error simulation
    mcde     Monte Carlo density evolution and noise-threshold search
    cli      command-line entry points
"""

__version__ = "0.1.0"

from .gmix import GaussianComponent, GaussianMixture, ReductionParams, gql, moment_match, reduce

__all__ = [
    "GaussianComponent",
    "GaussianMixture",
    "ReductionParams",
    "gql",
    "moment_match",
    "reduce",
    "__version__",
]
