"""Frequency-domain causal structure learning and effect estimation for
networks of linearly coupled time series."""

__version__ = "0.1.0"

from .errors import (
    ArgumentError,
    ConditioningError,
    CoverageError,
    InadmissibleError,
    SpectralCausalError,
    StabilityError,
    StructuralError,
    UnsupportedStructureError,
)
from .graphs import CausalGraph, Cpdag, d_separated, kin_graph, topology
from .model import FrequencyGrid, LdimSpec, SpectralMatrixField, closed_form_psd, validate_ldim
from .simulate import ArSpec, InterventionSpec, TimeSeriesPanel, restart_and_record, simulate_ar, simulate_circular
from .spectral import SpectralEnsemble, estimate_psd_correlogram, estimate_psd_ensemble, segment_fft
from .wiener import WienerField, wiener_cofactor, wiener_freq, wiener_freq_field, wiener_from_psd, wiener_time
from .discovery import DiscoveryConfig, kin_edges, wiener_pc, wiener_phase_cpdag

__all__ = [
    "ArSpec",
    "ArgumentError",
    "CausalGraph",
    "ConditioningError",
    "CoverageError",
    "Cpdag",
    "DiscoveryConfig",
    "FrequencyGrid",
    "InadmissibleError",
    "InterventionSpec",
    "LdimSpec",
    "SpectralCausalError",
    "SpectralEnsemble",
    "SpectralMatrixField",
    "StabilityError",
    "StructuralError",
    "TimeSeriesPanel",
    "UnsupportedStructureError",
    "WienerField",
    "closed_form_psd",
    "d_separated",
    "estimate_psd_correlogram",
    "estimate_psd_ensemble",
    "kin_edges",
    "kin_graph",
    "restart_and_record",
    "segment_fft",
    "simulate_ar",
    "simulate_circular",
    "topology",
    "validate_ldim",
    "wiener_cofactor",
    "wiener_freq",
    "wiener_freq_field",
    "wiener_from_psd",
    "wiener_pc",
    "wiener_phase_cpdag",
    "wiener_time",
]
