"""Uplink spectral-efficiency simulator for cell-free XL-MIMO.

Channels follow the Fourier plane-wave (wavenumber-domain) model with
isotropic scattering; cell-free MR processing is evaluated in closed form
and by Monte Carlo, small-cell processing by Monte Carlo.
"""
from .geometry import Role, SurfaceGeometry, WavenumberLattice, build_surface, enumerate_lattice
from .variance import VarianceProfile, compute_variance_profile
from .channel import FullCorrelation, LinkModel, build_fourier_basis, build_link_model, sample_channel
from .spectral_efficiency import (SEResult, Scenario, build_scenario, cf_se_closed_form,
                                  cf_se_monte_carlo, smallcell_se)
from .config import ConfigError, ScenarioConfig, parse_config
from .experiments import ResultsTable, SweepSpec, figure_preset, run_sweep, write_results

__version__ = "0.1.0"
