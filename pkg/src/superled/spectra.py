"""Cavity field spectra of the LED below threshold.

The stationary Langevin equations give the field spectrum as a rational
function of frequency. With the population-fluctuation (PF) spectrum much
narrower than the field and polarization spectra, the spectrum closes to

    n(w) = f Omega^2 (2 Omega^2 f c(w) d2Ne + gamma_perp N_e)
           / (|s(w)|^2 - 4 Omega^4 f^2 d2Ne)

with the complex response s(w) and the kernel c(w) defined below. Four
treatments of the dispersion d2Ne are supported (see SpectrumVariant).
Frequencies are offsets from the carrier, in rad/s; the resonant case is
assumed, so every spectrum is even in w.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .params import DerivedRates


class StabilityViolation(RuntimeError):
    """Non-perturbative denominator touches zero: the narrow-PF LED closure
    breaks down (effective threshold crossed)."""


class SpectrumVariant(enum.Enum):
    """How the PF dispersion enters the closed field spectrum."""

    ZERO_ORDER = "zero-order"            # d2Ne neglected entirely
    SPONTANEOUS_ONLY = "spont-only"      # d2Ne in the numerator only
    PERTURBATIVE = "perturbative"        # first order in d2Ne
    NON_PERTURBATIVE = "non-perturbative"  # full nonlinear dependence

    @classmethod
    def from_label(cls, label: str) -> "SpectrumVariant":
        for v in cls:
            if v.value == label or v.name == label:
                return v
        raise ValueError(f"unknown spectrum variant {label!r}")


@dataclass(frozen=True)
class MediumState:
    """Mean populations, inversion, PF dispersion and pump at one operating point."""

    N_e: float
    N_g: float
    N: float
    delta2_Ne: float
    P: float

    @classmethod
    def from_excited(cls, N_e: float, N0: int, delta2_Ne: float = 0.0,
                     P: float = 0.0) -> "MediumState":
        if not 0.0 <= N_e <= N0:
            raise ValueError(f"N_e = {N_e} outside [0, N0 = {N0}]")
        if delta2_Ne < 0:
            raise ValueError("delta2_Ne must be non-negative")
        N_g = N0 - N_e
        return cls(N_e=N_e, N_g=N_g, N=N_e - N_g, delta2_Ne=delta2_Ne, P=P)

    @property
    def N0(self) -> float:
        return self.N_e + self.N_g


def s_of_omega(omega, rates: DerivedRates, state: MediumState):
    """Complex semiclassical response s(w) (rad^2/s^2).

    s(w) = (kappa - i w)(gamma_perp/2 - i w) - kappa gamma_perp N / (2 N_th);
    its zero at w = 0, N = N_th is the lasing threshold.
    """
    k, gp = rates.kappa, rates.gamma_perp
    omega = np.asarray(omega, dtype=float)
    return ((k - 1j * omega) * (gp / 2.0 - 1j * omega)
            - k * gp * state.N / (2.0 * rates.N_th))


def _abs_s_squared(omega, rates: DerivedRates, state: MediumState):
    s = s_of_omega(omega, rates, state)
    return (s * s.conjugate()).real


def _c_numerator(omega, rates: DerivedRates, state: MediumState):
    k, gp = rates.kappa, rates.gamma_perp
    omega = np.asarray(omega, dtype=float)
    return (2.0 * k * omega**2
            + (k * gp**2 / 2.0) * (1.0 - state.N / rates.N_th))


def c_of_omega(omega, rates: DerivedRates, state: MediumState):
    """PF-to-field conversion kernel c(w) (dimensionless).

    c(w) = [2 kappa w^2 + (kappa gamma_perp^2 / 2)(1 - N/N_th)] / |s(w)|^2.
    Non-negative for N <= N_th; decays as 2 kappa / w^2.
    """
    s2 = _abs_s_squared(omega, rates, state)
    if np.any(s2 == 0.0):
        raise ZeroDivisionError(
            "|s(w)|^2 = 0: threshold singularity in c(w)")
    return _c_numerator(omega, rates, state) / s2


def quartic_coefficients(rates: DerivedRates, state: MediumState,
                         include_pf: bool = True):
    """Coefficients (1, q2, q0) of |s(w)|^2 - 4 Omega^4 f^2 d2Ne as an even
    quartic in w.

    |s(w)|^2 = w^4 + (r - 2b) w^2 + b^2 with b = (kappa gamma_perp/2)
    (1 - N/N_th) and r = (kappa + gamma_perp/2)^2; the PF term only shifts
    the constant coefficient.
    """
    k, gp = rates.kappa, rates.gamma_perp
    b = (k * gp / 2.0) * (1.0 - state.N / rates.N_th)
    r = (k + gp / 2.0) ** 2
    q2 = r - 2.0 * b
    q0 = b * b
    if include_pf:
        q0 -= 4.0 * rates.Omega**4 * rates.f**2 * state.delta2_Ne
    return 1.0, q2, q0


def stability_margin(rates: DerivedRates, state: MediumState) -> float:
    """min over w of |s(w)|^2, minus 4 Omega^4 f^2 d2Ne.

    The quartic |s(w)|^2 is a parabola in x = w^2; its minimum over x >= 0
    is at the vertex clamped to zero, so the margin is closed-form. A
    non-positive margin means the non-perturbative spectrum denominator
    has a real zero.
    """
    _, q2, q0_s = quartic_coefficients(rates, state, include_pf=False)
    x_vertex = max(-q2 / 2.0, 0.0)
    min_s2 = x_vertex**2 + q2 * x_vertex + q0_s
    return min_s2 - 4.0 * rates.Omega**4 * rates.f**2 * state.delta2_Ne


def spectrum(omega, rates: DerivedRates, state: MediumState,
             variant: SpectrumVariant = SpectrumVariant.NON_PERTURBATIVE):
    """Cavity field spectrum n(w) (dimensionless), per the chosen variant.

    All variants coincide when d2Ne = 0 and are even in w. For the
    non-perturbative variant the denominator must stay positive
    (stability_margin > 0), otherwise StabilityViolation is raised.
    """
    f, Om, gp = rates.f, rates.Omega, rates.gamma_perp
    d2 = state.delta2_Ne
    s2 = _abs_s_squared(omega, rates, state)
    zero_order = f * Om**2 * gp * state.N_e / s2
    if d2 == 0.0 or variant is SpectrumVariant.ZERO_ORDER:
        return zero_order

    ctil = _c_numerator(omega, rates, state)
    pf_source = f * Om**2 * 2.0 * Om**2 * f * ctil * d2 / s2  # numerator PF term
    if variant is SpectrumVariant.SPONTANEOUS_ONLY:
        return zero_order + pf_source / s2
    if variant is SpectrumVariant.PERTURBATIVE:
        c4 = 4.0 * Om**4 * f**2
        return zero_order + (pf_source + c4 * d2 * f * Om**2 * gp * state.N_e / s2) / s2
    if variant is SpectrumVariant.NON_PERTURBATIVE:
        if stability_margin(rates, state) <= 0.0:
            raise StabilityViolation(
                "|s(w)|^2 - 4 Omega^4 f^2 d2Ne reaches zero: "
                f"margin = {stability_margin(rates, state):.3e}")
        denom = s2 - 4.0 * Om**4 * f**2 * d2
        return (f * Om**2 * gp * state.N_e + pf_source) / denom
    raise ValueError(f"unhandled variant {variant}")


def langevin_power_spectrum(omega, rates: DerivedRates, state: MediumState,
                            pf_spectrum_dispersion: float):
    """Power spectrum of the polarization Langevin force (rad/s).

    f gamma_perp N_e from the polarization noise of excited emitters plus
    2 f^2 Omega^2 c(w) d2Ne from population fluctuations (narrow-PF
    product form). Diagnostic: quantifies the PF share of spontaneous
    emission into the mode.
    """
    base = rates.f * rates.gamma_perp * state.N_e
    if pf_spectrum_dispersion == 0.0:
        return base + np.zeros_like(np.asarray(omega, dtype=float))
    return base + (2.0 * rates.f**2 * rates.Omega**2
                   * c_of_omega(omega, rates, state) * pf_spectrum_dispersion)


def crs_peak_estimate(rates: DerivedRates, state: MediumState) -> float:
    """Analytic estimate of the spectral peak position (rad/s).

    Vertex of the denominator quartic in w^2, clamped to zero; 0 means a
    single central maximum is expected. Used to seed grids and quadrature
    break points, not as a result.
    """
    _, q2, _ = quartic_coefficients(rates, state)
    x = max(-q2 / 2.0, 0.0)
    return float(np.sqrt(x))


def default_omega_grid(rates: DerivedRates, state: MediumState,
                       n_base: int = 240, n_peak: int = 160) -> np.ndarray:
    """Symmetric frequency grid, log-dense at the center and refined near
    the expected collective-Rabi peaks.

    Spans +/- 20 * max(kappa, gamma_perp/2, Omega sqrt(f N0)) which covers
    the peak region and the power-law tails.
    """
    scale = max(rates.kappa, rates.gamma_perp / 2.0,
                rates.Omega * np.sqrt(rates.f * state.N0))
    w_max = 20.0 * scale
    grid = np.geomspace(w_max * 1e-5, w_max, n_base)
    w_peak = crs_peak_estimate(rates, state)
    if w_peak > 0.0:
        grid = np.concatenate([
            grid,
            np.linspace(0.7 * w_peak, 1.3 * w_peak, n_peak),
            np.linspace(w_max * 1e-5, min(3.0 * w_peak, w_max), n_peak // 2),
        ])
    grid = np.unique(grid)
    return np.concatenate([-grid[::-1], [0.0], grid])


@dataclass(frozen=True)
class SpectrumTable:
    """Sampled spectrum on an ordered frequency grid.

    p_out_of_omega = 2 kappa n(w), in photons/s per rad/s. meta records the
    window and a tail-fraction estimate for the grid.
    """

    omega: np.ndarray
    n_of_omega: np.ndarray
    p_out_of_omega: np.ndarray
    variant: SpectrumVariant
    meta: dict

    def half(self) -> tuple[np.ndarray, np.ndarray]:
        """The w >= 0 half of the table (spectra are even)."""
        sel = self.omega >= 0.0
        return self.omega[sel], self.p_out_of_omega[sel]


def build_spectrum_table(rates: DerivedRates, state: MediumState,
                         variant: SpectrumVariant,
                         omega: np.ndarray | None = None) -> SpectrumTable:
    """Evaluate the spectrum on a grid (default: default_omega_grid)."""
    if omega is None:
        omega = default_omega_grid(rates, state)
    n_w = spectrum(omega, rates, state, variant)
    w_max = float(np.max(np.abs(omega)))
    # crude fraction of spectral weight outside the window: the integrand
    # decays at least as fast as the zero-order w^-4 envelope
    edge = float(spectrum(w_max, rates, state, variant))
    total = float(np.trapezoid(n_w, omega))
    tail = 2.0 * edge * w_max / 3.0
    meta = {"window": w_max,
            "tail_fraction_estimate": tail / total if total > 0 else 0.0}
    return SpectrumTable(omega=omega, n_of_omega=n_w,
                         p_out_of_omega=2.0 * rates.kappa * n_w,
                         variant=variant, meta=meta)
