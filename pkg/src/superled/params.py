"""Device parameters and derived rates for a single-mode two-level LED.

All frequencies and rates are angular (rad/s). The CLI may display Hz,
but every formula here is angular.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class ParameterError(ValueError):
    """Raised when a device parameter fails physical validation.

    The message always names the offending field.
    """

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


@dataclass(frozen=True)
class PhysicalConstants:
    """Fixed CODATA constants; not user-configurable."""

    c_light: float = 299_792_458.0          # m/s
    hbar: float = 1.054_571_817e-34         # J*s
    eps0: float = 8.854_187_8128e-12        # F/m


CONSTANTS = PhysicalConstants()


@dataclass(frozen=True)
class DeviceParams:
    """Raw physical inputs describing the cavity and the emitters.

    lambda0     vacuum wavelength (m)
    n_r         refractive index
    d           transition dipole moment (C*m)
    n_c         normalized cavity volume, in units of the minimal volume (>= 1)
    N0          number of two-level emitters
    gamma_perp  polarization decay rate (rad/s); the transition width is
                gamma_perp/2
    gamma_par   upper-state decay rate (rad/s)
    kappa       cavity field decay rate (rad/s)
    f           coupling-averaging factor, mean of f_i^2 over emitters
    """

    lambda0: float = 1.55e-6
    n_r: float = 3.3
    d: float = 1.0e-28
    n_c: float = 100.0
    N0: int = 100
    gamma_perp: float = 1.0e12
    gamma_par: float = 1.0e9
    kappa: float = 2.5e10
    f: float = 0.5

    def validate(self) -> None:
        if not self.lambda0 > 0:
            raise ParameterError("lambda0", "wavelength must be positive")
        if not self.n_r > 0:
            raise ParameterError("n_r", "refractive index must be positive")
        if not self.d > 0:
            raise ParameterError(
                "d", "dipole moment must be positive (d = 0 gives zero "
                "coupling and an infinite threshold inversion)")
        if not self.n_c >= 1:
            raise ParameterError("n_c", "normalized cavity volume must be >= 1")
        if not (self.N0 >= 1 and float(self.N0).is_integer()):
            raise ParameterError("N0", "emitter count must be an integer >= 1")
        for field in ("gamma_perp", "gamma_par", "kappa"):
            if not getattr(self, field) > 0:
                raise ParameterError(field, "rate must be strictly positive")
        if not 0 < self.f <= 1:
            raise ParameterError("f", "coupling factor must satisfy 0 < f <= 1")


@dataclass(frozen=True)
class DerivedRates:
    """Constants derived from DeviceParams.

    omega0  carrier frequency (rad/s)
    V_min   minimal resonant cavity volume (m^3)
    V_c     mode volume (m^3)
    Omega   field-medium Rabi coupling (rad/s)
    g_diff  differential gain: spontaneous emission rate into the cavity
            mode per emitter (rad/s)
    beta    spontaneous-emission factor g/(g + gamma_par)
    N_th    semiclassical threshold inversion
    """

    omega0: float
    V_min: float
    V_c: float
    Omega: float
    g_diff: float
    beta: float
    N_th: float
    # carried along so downstream spectral code needs only one object
    kappa: float
    gamma_perp: float
    gamma_par: float
    f: float
    N0: int


def derive_rates(params: DeviceParams,
                 constants: PhysicalConstants = CONSTANTS) -> DerivedRates:
    """Compute all derived constants from validated device parameters.

    Omega = (d/n_r) * sqrt(omega0 / (eps0 * hbar * V_c)) with
    V_c = n_c * (lambda0 / 2 n_r)^3. The differential gain is
    g = 4 Omega^2 f / (2 kappa + gamma_perp) and the threshold inversion
    N_th = kappa gamma_perp / (2 Omega^2 f).
    """
    params.validate()
    omega0 = 2.0 * math.pi * constants.c_light / params.lambda0
    V_min = (params.lambda0 / (2.0 * params.n_r)) ** 3
    V_c = params.n_c * V_min
    Omega = (params.d / params.n_r) * math.sqrt(
        omega0 / (constants.eps0 * constants.hbar * V_c))
    g_diff = 4.0 * Omega**2 * params.f / (2.0 * params.kappa + params.gamma_perp)
    beta = g_diff / (g_diff + params.gamma_par)
    N_th = params.kappa * params.gamma_perp / (2.0 * Omega**2 * params.f)
    return DerivedRates(
        omega0=omega0, V_min=V_min, V_c=V_c, Omega=Omega,
        g_diff=g_diff, beta=beta, N_th=N_th,
        kappa=params.kappa, gamma_perp=params.gamma_perp,
        gamma_par=params.gamma_par, f=params.f, N0=params.N0)


def exchange_rates(params: DeviceParams) -> DeviceParams:
    """Swap 2*kappa and gamma_perp (kappa' = gamma_perp/2, gamma_perp' = 2*kappa).

    Without population fluctuations the output power and its spectrum are
    invariant under this exchange; with them the symmetry is broken.
    """
    return DeviceParams(
        lambda0=params.lambda0, n_r=params.n_r, d=params.d, n_c=params.n_c,
        N0=params.N0, gamma_perp=2.0 * params.kappa,
        gamma_par=params.gamma_par, kappa=params.gamma_perp / 2.0,
        f=params.f)
