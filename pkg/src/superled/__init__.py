"""Numerical simulator of single-mode superradiant LED spectra.

Closed-form quantum Langevin field spectra below the lasing threshold,
with population fluctuations treated at four levels of approximation,
closed self-consistently through the energy-conservation law.
"""

__version__ = "0.1.0"

from .params import (CONSTANTS, DeviceParams, DerivedRates, ParameterError,
                     PhysicalConstants, derive_rates, exchange_rates)
from .pf import PFModel, narrowness_check, pf_bandwidth, pf_dispersion
from .solver import (Diagnostics, FixedPointDivergence, NoRoot,
                     OperatingPoint, PeakReport, QuadratureNoConvergence,
                     SolverConfig, WindowTooNarrow, enhancement_factor,
                     find_crs_peaks, integrate_spectrum,
                     solve_operating_point)
from .spectra import (MediumState, SpectrumTable, SpectrumVariant,
                      StabilityViolation, build_spectrum_table, c_of_omega,
                      default_omega_grid, langevin_power_spectrum, s_of_omega,
                      spectrum, stability_margin)

__all__ = [
    "CONSTANTS", "DeviceParams", "DerivedRates", "Diagnostics",
    "FixedPointDivergence", "MediumState", "NoRoot", "OperatingPoint",
    "PFModel", "ParameterError", "PeakReport", "PhysicalConstants",
    "QuadratureNoConvergence", "SolverConfig", "SpectrumTable",
    "SpectrumVariant", "StabilityViolation", "WindowTooNarrow",
    "build_spectrum_table", "c_of_omega", "default_omega_grid",
    "derive_rates", "enhancement_factor", "exchange_rates",
    "find_crs_peaks", "integrate_spectrum", "langevin_power_spectrum",
    "narrowness_check", "pf_bandwidth", "pf_dispersion", "s_of_omega",
    "solve_operating_point", "spectrum", "stability_margin",
]
