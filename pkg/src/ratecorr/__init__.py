"""Correlation structure of finite stochastic rate-neuron networks.

Library plus experiment CLI for structured connectivities (circulant,
block circulant, graph products): closed-form spectra, the spectral
propagator, first-order analytic covariance/correlation, seeded
Euler-Maruyama Monte Carlo of the exact and perturbative systems, the
chaos/synchronization analyses, and the activation-function radius of
convergence.
"""

from .analytic import (
    CovarianceReport,
    NoiseSpec,
    correlation,
    covariance,
    covariance_report,
    higher_order_correlation_fc,
    variance,
)
from .neuron import NetworkParams, SigmoidParams, sigmoid, stationary_state
from .propagator import PropagatorHandle, build_propagator
from .spectral import Spectrum, spectrum_of
from .topology import (
    BlockCirculantBand,
    Circulant,
    Cycle,
    GraphProduct,
    Path,
    WeightedAdjacency,
    complete,
    cycle,
    realize,
)

__version__ = "0.1.0"

__all__ = [
    "BlockCirculantBand",
    "Circulant",
    "CovarianceReport",
    "Cycle",
    "GraphProduct",
    "NetworkParams",
    "NoiseSpec",
    "Path",
    "PropagatorHandle",
    "SigmoidParams",
    "Spectrum",
    "WeightedAdjacency",
    "build_propagator",
    "complete",
    "correlation",
    "covariance",
    "covariance_report",
    "cycle",
    "higher_order_correlation_fc",
    "realize",
    "sigmoid",
    "spectrum_of",
    "stationary_state",
    "variance",
    "__version__",
]
