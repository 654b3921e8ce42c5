"""Momentum-resolved truncated operator propagator for the kicked Ising chain.

The package builds the one-step Heisenberg propagator of translationally
summed Pauli strings, truncated to strings supported on at most r consecutive
sites, directly on the infinite lattice.  Its eigenvalues are the
Ruelle-Pollicott resonances that govern the asymptotic decay of
autocorrelation functions.
"""

__version__ = "0.1.0"

from .pauli import PauliString, Sector, SectorBasis, build_sector_basis, string_index
from .model import ModelParams, GateSet, build_gates, convert_params, observable
from .propagator import PropagatorHandle, make_handle
from .spectral import (
    full_spectrum,
    leading_eigenvalues,
    singular_values,
    ring_prediction,
    condition_number,
)
from .correlations import (
    CorrelationSeries,
    exact_correlation,
    truncated_correlation,
    asymptotic_decay,
    fit_decay,
)
from .bch import TIDensity, ti_commutator, bch_series, eff_overlap, divergence_order
