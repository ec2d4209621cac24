"""Infinite-temperature spin transport and chaos diagnostics for the long-range XXZ chain."""
__version__ = "0.1.0"

from lrxxz.hamiltonian import (  # noqa: E402
    ChainSpec,
    CouplingTable,
    apply_hamiltonian,
    apply_sigma_z,
    build_couplings,
    build_sector_matrix,
    kac_norm,
)
from lrxxz.evolution import (  # noqa: E402
    CorrelationSeries,
    PropagatorConfig,
    correlator_dqt,
    correlator_exact_trace,
    correlator_sampled,
    draw_typical_state,
    propagate,
    short_time_prediction,
)

__all__ = [
    "ChainSpec",
    "CouplingTable",
    "CorrelationSeries",
    "PropagatorConfig",
    "apply_hamiltonian",
    "apply_sigma_z",
    "build_couplings",
    "build_sector_matrix",
    "correlator_dqt",
    "correlator_exact_trace",
    "correlator_sampled",
    "draw_typical_state",
    "kac_norm",
    "propagate",
    "short_time_prediction",
]
