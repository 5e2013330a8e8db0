"""
swingbench public package API.

Closed-form stability metrics of linearized swing networks (eigenvalues,
damping ratios, H2 and H-infinity norms) together with the numerical oracles
that check them and the sweeps that tabulate them.  Submodules can be imported
individually; the names below are the ones most scripts need.
"""

from .closed_form import (
    NormResult,
    Regime,
    closed_form_norms,
    frequency_output_norms,
    min_damping_ratio,
    per_mode_hinf,
    phase_output_norms,
    regime_boundaries,
    resonant_peak_frequency,
    smib_norms,
    system_eigenvalues,
)
from .config import SwingBenchConfig
from .exceptions import (
    DisconnectedGraph,
    HorizonTooShort,
    IntervalTooSparse,
    NonPositiveParameter,
    NotOrthogonal,
    ObservableMarginalMode,
    ParseError,
    SingularResolvent,
    SwingBenchError,
    ValidationError,
)
from .network import Edge, GraphPreset, LaplacianSpectrum, NetworkSpec, build_laplacian, build_preset, spectrum
from .oracles import bode_table, h2_gramian, h2_impulse_energy, hinf_search
from .schema import emit_network, parse_network
from .simulate import simulate
from .sweeps import Grid, SweepPlan, combined_sweep, norm_sweep, root_locus, shape_check
from .system import OutputKind, assemble, modal_decompose, sigma_max, transform_io

__all__ = [
    "DisconnectedGraph",
    "Edge",
    "GraphPreset",
    "Grid",
    "HorizonTooShort",
    "IntervalTooSparse",
    "LaplacianSpectrum",
    "NetworkSpec",
    "NonPositiveParameter",
    "NormResult",
    "NotOrthogonal",
    "ObservableMarginalMode",
    "OutputKind",
    "ParseError",
    "Regime",
    "SingularResolvent",
    "SweepPlan",
    "SwingBenchConfig",
    "SwingBenchError",
    "ValidationError",
    "assemble",
    "bode_table",
    "build_laplacian",
    "build_preset",
    "closed_form_norms",
    "combined_sweep",
    "emit_network",
    "frequency_output_norms",
    "h2_gramian",
    "h2_impulse_energy",
    "hinf_search",
    "min_damping_ratio",
    "modal_decompose",
    "norm_sweep",
    "parse_network",
    "per_mode_hinf",
    "phase_output_norms",
    "regime_boundaries",
    "resonant_peak_frequency",
    "root_locus",
    "shape_check",
    "sigma_max",
    "simulate",
    "smib_norms",
    "spectrum",
    "system_eigenvalues",
    "transform_io",
]
