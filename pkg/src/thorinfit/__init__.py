"""Fit multivariate generalized Gamma convolutions by random-projection particle descent."""

from .cumulants import jacobian_b, mu_from_tau, shifted_moments, tau_from_mu_1d
from .laguerre import build_a_matrix, laguerre_phi
from .multiindex import IndexSet, count_coefficients, enumerate_index_set
from .sgd import FitConfig, FitReport, fit, standardize
from .thorin import ConicParams, ThorinMeasure, check_well_behaved, sample, tau_of_measure

__all__ = [
    "ConicParams",
    "FitConfig",
    "FitReport",
    "IndexSet",
    "ThorinMeasure",
    "build_a_matrix",
    "check_well_behaved",
    "count_coefficients",
    "enumerate_index_set",
    "fit",
    "jacobian_b",
    "laguerre_phi",
    "mu_from_tau",
    "sample",
    "shifted_moments",
    "standardize",
    "tau_from_mu_1d",
    "tau_of_measure",
]

__version__ = "0.1.0"
