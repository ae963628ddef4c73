"""Figure presets: parameter bundles behind the published curves.

Two rate bundles share every other parameter and map onto each other by
the 2*kappa <-> gamma_perp exchange: the non-SR bundle has adiabatic
parameter 2 kappa / gamma_perp = 0.05, the SR bundle 20. Curves sweep the
normalized cavity volume; the largest-coupling curve is doubled with
N0 = 200.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .params import DeviceParams
from .spectra import SpectrumVariant

NON_SR_RATES = {"kappa": 2.5e10, "gamma_perp": 1.0e12}
SR_RATES = {"kappa": 5.0e11, "gamma_perp": 5.0e10}

# (n_c, N0); N0 = 100 everywhere except the extra strongest-coupling curve
CURVES = ((100.0, 100), (50.0, 100), (10.0, 100), (5.0, 100),
          (2.0, 100), (2.0, 200))

FOUR_VARIANTS = (SpectrumVariant.ZERO_ORDER,
                 SpectrumVariant.SPONTANEOUS_ONLY,
                 SpectrumVariant.PERTURBATIVE,
                 SpectrumVariant.NON_PERTURBATIVE)


@dataclass(frozen=True)
class Preset:
    name: str
    kind: str                 # power | spectra | power-variants | spectra-variants
    rates: dict
    curves: tuple             # ((n_c, N0), ...)
    variants: tuple           # variants compared per curve
    p_min: float = 0.01
    p_max: float = 2.0
    p_points: int = 60
    pump: float = 1.0         # fixed P for spectra presets

    def pump_grid(self) -> np.ndarray:
        return np.geomspace(self.p_min, self.p_max, self.p_points)

    def device(self, n_c: float, N0: int, base: DeviceParams) -> DeviceParams:
        return replace(base, n_c=n_c, N0=N0, **self.rates)


_PF_PAIR = (SpectrumVariant.ZERO_ORDER, SpectrumVariant.NON_PERTURBATIVE)

PRESETS = {
    "fig2": Preset("fig2", "power", NON_SR_RATES, CURVES, _PF_PAIR),
    "fig5": Preset("fig5", "power", SR_RATES, CURVES, _PF_PAIR),
    "fig3": Preset("fig3", "spectra", NON_SR_RATES, CURVES, _PF_PAIR),
    "fig6": Preset("fig6", "spectra", SR_RATES, CURVES, _PF_PAIR),
    "fig4a": Preset("fig4a", "power-variants", NON_SR_RATES,
                    ((2.0, 200),), FOUR_VARIANTS),
    "fig7a": Preset("fig7a", "power-variants", SR_RATES,
                    ((2.0, 200),), FOUR_VARIANTS),
    "fig4b": Preset("fig4b", "spectra-variants", NON_SR_RATES,
                    ((2.0, 200),), FOUR_VARIANTS),
    "fig7b": Preset("fig7b", "spectra-variants", SR_RATES,
                    ((2.0, 200),), FOUR_VARIANTS),
}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(
            f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}")
