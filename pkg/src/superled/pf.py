"""Population-fluctuation dispersion and bandwidth models.

The field spectrum needs the dispersion delta^2 N_e of the upper-state
population. No closed form is available for the exact dispersion of the
driven, field-coupled medium, so two pluggable models are provided:

* ``binomial`` (default): the stationary variance N_e * N_g / N0 of N0
  independent two-state emitters. Parameter-free and bounded; the cavity
  photon number enters only through the self-consistent N_e(n).
* ``langevin-rate``: stationary variance of the linearized population
  equation with a rate-equation diffusion coefficient, which couples the
  dispersion to n directly.
* ``none``: dispersion identically zero (disables the PF channel).

Quantitative results that depend on the dispersion magnitude inherit this
model choice; see the acceptance notes in the README.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .params import DerivedRates

PF_MODELS = ("binomial", "langevin-rate", "none")


@dataclass(frozen=True)
class PFModel:
    """Dispersion model selector plus model-specific options."""

    tag: str = "binomial"
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.tag not in PF_MODELS:
            raise ValueError(
                f"unknown PF model {self.tag!r}; choose from {PF_MODELS}")

    @property
    def is_zero(self) -> bool:
        return self.tag == "none"


def pf_bandwidth(n: float, P: float, rates: DerivedRates) -> float:
    """Effective decay rate Gamma_N of population fluctuations (rad/s).

    gamma_par*(P+1) from pump and decay, plus stimulated broadening
    2*g*n*f from the cavity field; the zero-field limit is exactly the
    population-equation decay term.
    """
    return rates.gamma_par * (P + 1.0) + 2.0 * rates.g_diff * n * rates.f


def pf_dispersion(N_e: float, n: float, P: float, rates: DerivedRates,
                  N0: int, model: PFModel) -> float:
    """Dispersion delta^2 N_e of the upper-state population.

    Requires 0 <= N_e <= N0, n >= 0, P >= 0. Both physical models return
    values in [0, N0^2/4].
    """
    if not 0.0 <= N_e <= N0:
        raise ValueError(f"N_e = {N_e} outside [0, N0 = {N0}]")
    if n < 0 or P < 0:
        raise ValueError("n and P must be non-negative")
    if model.tag == "none":
        return 0.0
    N_g = N0 - N_e
    if model.tag == "binomial":
        return N_e * N_g / N0
    # langevin-rate: diffusion over twice the PF bandwidth
    gamma_N = pf_bandwidth(n, P, rates)
    if gamma_N == 0.0:
        return 0.0
    diffusion = (rates.gamma_par * (P * N_g + N_e)
                 + 2.0 * rates.g_diff * n * rates.f * N0)
    return diffusion / (2.0 * gamma_N)


def narrowness_check(rates: DerivedRates, bandwidth: float,
                     threshold: float = 0.1) -> tuple[float, bool]:
    """Check that the PF spectrum is narrow against the field/polarization scales.

    Returns (ratio, passed) with ratio = Gamma_N / min(kappa, gamma_perp/2);
    passes when the ratio is at or below the threshold (inclusive). The
    product form of the field spectrum assumes this separation of scales,
    so callers should warn when it fails.
    """
    ratio = bandwidth / min(rates.kappa, rates.gamma_perp / 2.0)
    return ratio, ratio <= threshold
