"""Self-consistent operating points and spectral peak analysis.

The mean photon number follows from integrating the field spectrum; the
energy-conservation law 2 kappa n = gamma_par (P N_g - N_e) then fixes the
upper-state population. Integration has two independent backends: adaptive
quadrature over a finite window with an analytic power-law tail, and exact
residue summation over the factored denominator quartics.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .params import DeviceParams, DerivedRates, derive_rates
from .pf import PFModel, narrowness_check, pf_bandwidth, pf_dispersion
from .spectra import (MediumState, SpectrumTable, SpectrumVariant,
                      StabilityViolation, crs_peak_estimate,
                      quartic_coefficients, spectrum, stability_margin)
from .validation import (factor_quartic, residue_integral,
                         residue_integral_double)


class QuadratureNoConvergence(RuntimeError):
    """Window/order budget exhausted without meeting the error target."""


class FixedPointDivergence(RuntimeError):
    """Inner (n, d2Ne) iteration failed to settle."""


class NoRoot(RuntimeError):
    """Energy-balance residual has no sign change on the physical bracket.

    Cannot happen for a correct residual (internal error)."""


class WindowTooNarrow(RuntimeError):
    """The dominant spectral maximum sits at the edge of the sampled grid."""


@dataclass(frozen=True)
class SolverConfig:
    ne_tol: float = 1e-10           # relative tolerance on N_e
    quad_rel_tol: float = 1e-9      # relative tolerance of the integration
    max_outer_iters: int = 200      # cap for bracketing and fixed-point loops
    window_factor: float = 20.0     # half-window in units of the spectral scale
    max_window_doublings: int = 40
    narrowness_threshold: float = 0.1
    inner_damping: float = 0.5

    def __post_init__(self):
        if self.ne_tol <= 0 or self.quad_rel_tol <= 0:
            raise ValueError("tolerances must be strictly positive")


@dataclass(frozen=True)
class Diagnostics:
    stability_margin: float
    narrowness_ratio: float
    narrowness_pass: bool
    residual: float
    inner_iters: int
    outer_evals: int


@dataclass(frozen=True)
class OperatingPoint:
    """Self-consistent state of the LED at pump P."""

    P: float
    N_e: float
    N_g: float
    N: float
    delta2_Ne: float
    n: float
    p_out: float             # 2 kappa n, photons/s
    variant: SpectrumVariant
    diagnostics: Diagnostics

    def state(self) -> MediumState:
        return MediumState(N_e=self.N_e, N_g=self.N_g, N=self.N,
                           delta2_Ne=self.delta2_Ne, P=self.P)


@dataclass(frozen=True)
class PeakReport:
    """Locations and heights of the spectral maxima (even spectrum)."""

    peak_positions: tuple    # (+w, -w) for split spectra, (0,) otherwise
    peak_heights: tuple
    splitting: float         # 2 w_peak
    is_split: bool


# ----------------------------------------------------------------------
# spectrum integration
# ----------------------------------------------------------------------

def _integrand_pieces(rates: DerivedRates, state: MediumState,
                      variant: SpectrumVariant):
    """Decompose n(w) into (numerator, denominator-power, quartic) pieces.

    Every variant reduces to terms (p2 w^2 + p0) / Q(w)^k with Q either
    |s|^2 or the PF-shifted quartic; the non-perturbative term over the
    product splits by partial fractions since the quartics differ only in
    their constant coefficient.
    """
    f, Om, gp = rates.f, rates.Omega, rates.gamma_perp
    d2 = state.delta2_Ne
    amp = f * Om**2 * gp * state.N_e
    qs = quartic_coefficients(rates, state, include_pf=False)
    k = rates.kappa
    c2 = 2.0 * k
    c0 = (k * gp**2 / 2.0) * (1.0 - state.N / rates.N_th)
    pf_amp = 2.0 * f**2 * Om**4 * d2          # weight of the c-kernel term
    c4 = 4.0 * Om**4 * f**2

    if d2 == 0.0 or variant is SpectrumVariant.ZERO_ORDER:
        return [((0.0, amp), 1, qs)]
    if variant is SpectrumVariant.SPONTANEOUS_ONLY:
        return [((0.0, amp), 1, qs),
                ((pf_amp * c2, pf_amp * c0), 2, qs)]
    if variant is SpectrumVariant.PERTURBATIVE:
        return [((0.0, amp), 1, qs),
                ((pf_amp * c2, pf_amp * c0 + c4 * d2 * amp), 2, qs)]
    if variant is SpectrumVariant.NON_PERTURBATIVE:
        if stability_margin(rates, state) <= 0.0:
            raise StabilityViolation(
                f"stability margin {stability_margin(rates, state):.3e} <= 0 "
                f"at N_e = {state.N_e:.6g}, d2Ne = {d2:.6g}")
        qd = quartic_coefficients(rates, state, include_pf=True)
        return [((0.5 * c2, 0.5 * c0 + amp), 1, qd),
                ((-0.5 * c2, -0.5 * c0), 1, qs)]
    raise ValueError(f"unhandled variant {variant}")


def _tail_integral(p2: float, p0: float, q2: float, q0: float, w: float,
                   power: int) -> tuple[float, float]:
    """Analytic tail of (p2 x^2 + p0)/Q(x)^power over [w, inf).

    Three-term (simple quartic) or two-term (squared quartic) large-x
    expansion; the magnitude of the last kept term serves as the error
    estimate.
    """
    if power == 1:
        t1 = p2 / w
        t2 = (p0 - p2 * q2) / (3.0 * w**3)
        t3 = (p2 * (q2**2 - q0) - p0 * q2) / (5.0 * w**5)
        return t1 + t2 + t3, abs(t3)
    t1 = p2 / (5.0 * w**5)
    t2 = (p0 - 2.0 * p2 * q2) / (7.0 * w**7)
    return t1 + t2, abs(t2)


def _base_window(rates: DerivedRates, state: MediumState) -> float:
    scale = max(rates.kappa, rates.gamma_perp / 2.0,
                rates.Omega * np.sqrt(rates.f * state.N0),
                1.5 * crs_peak_estimate(rates, state))
    return scale


def integrate_spectrum_adaptive(rates: DerivedRates, state: MediumState,
                                variant: SpectrumVariant,
                                config: SolverConfig) -> float:
    """n = (2 pi)^-1 Integral of n(w) dw by adaptive quadrature.

    Uses evenness: quadrature on [0, W] with break points at the spectral
    features plus the analytic tail of each rational piece beyond W; W is
    doubled until the tail-expansion error is negligible.
    """
    pieces = _integrand_pieces(rates, state, variant)
    if all(p2 == 0.0 and p0 == 0.0 for (p2, p0), _, _ in pieces):
        return 0.0
    scale = _base_window(rates, state)
    w_peak = crs_peak_estimate(rates, state)

    # characteristic frequencies of each denominator quartic; near threshold
    # the central feature is far narrower than kappa or gamma_perp
    feature_pts = [w_peak, 0.5 * w_peak, 2.0 * w_peak,
                   rates.kappa, rates.gamma_perp / 2.0]
    for _, _, (q4, q2, q0) in pieces:
        for x in np.roots([q4, q2, q0]):
            s = float(np.sqrt(abs(x)))
            feature_pts.extend((s, 3.0 * s))

    def f_central(w):
        return spectrum(w, rates, state, variant)

    window = config.window_factor * scale
    for _ in range(config.max_window_doublings):
        tail = 0.0
        tail_err = 0.0
        for (p2, p0), power, (q4, q2, q0) in pieces:
            t, e = _tail_integral(p2 / q4**power, p0 / q4**power,
                                  q2 / q4, q0 / q4, window, power)
            tail += t
            tail_err += e
        pts = sorted({p for p in feature_pts if 0.0 < p < window})
        central, quad_err = quad(f_central, 0.0, window,
                                 points=pts or None,
                                 limit=800, epsabs=0.0,
                                 epsrel=max(config.quad_rel_tol / 5.0, 5e-13))
        total = (central + tail) / np.pi
        err = (abs(quad_err) + tail_err) / np.pi
        if total > 0 and err <= config.quad_rel_tol * total:
            return total
        window *= 2.0
    raise QuadratureNoConvergence(
        f"window grew to {window:.3e} rad/s without converging")


def integrate_spectrum_residue(rates: DerivedRates, state: MediumState,
                               variant: SpectrumVariant,
                               config: SolverConfig) -> float:
    """n = (2 pi)^-1 Integral of n(w) dw by exact residue summation."""
    total = 0.0
    for (p2, p0), power, (q4, q2, q0) in _integrand_pieces(rates, state, variant):
        fac = factor_quartic(q4, q2, q0)
        if power == 1:
            total += residue_integral((p2, p0), fac)
        else:
            total += residue_integral_double((p2, p0), fac)
    return total


_BACKENDS = ("residue", "adaptive", "both")


def integrate_spectrum(rates: DerivedRates, state: MediumState,
                       variant: SpectrumVariant, config: SolverConfig,
                       backend: str = "residue") -> float:
    """Mean cavity photon number for the given state and variant.

    backend 'both' runs the two routes and raises if they disagree beyond
    100x the quadrature tolerance (cross-check mode).
    """
    if backend not in _BACKENDS:
        raise ValueError(f"unknown backend {backend!r}; choose from {_BACKENDS}")
    if backend == "adaptive":
        return integrate_spectrum_adaptive(rates, state, variant, config)
    n_res = integrate_spectrum_residue(rates, state, variant, config)
    if backend == "both":
        n_ada = integrate_spectrum_adaptive(rates, state, variant, config)
        rel = abs(n_res - n_ada) / max(abs(n_res), 1e-300)
        if rel > 100.0 * config.quad_rel_tol:
            raise QuadratureNoConvergence(
                f"backend cross-check failed: residue {n_res:.12e} vs "
                f"adaptive {n_ada:.12e} (rel {rel:.3e})")
    return n_res


# ----------------------------------------------------------------------
# operating point
# ----------------------------------------------------------------------

def _inner_fixed_point(N_e: float, P: float, rates: DerivedRates, N0: int,
                       variant: SpectrumVariant, pf_model: PFModel,
                       config: SolverConfig, backend: str):
    """Joint (n, d2Ne) fixed point at fixed N_e, damped iteration.

    The dispersion feeds the spectrum, which feeds n, which feeds the
    dispersion; below threshold the map is contracting and for the
    binomial model it converges immediately (no n dependence).
    """
    use_pf = variant is not SpectrumVariant.ZERO_ORDER and not pf_model.is_zero
    d2 = pf_dispersion(N_e, 0.0, P, rates, N0, pf_model) if use_pf else 0.0
    n = 0.0
    for it in range(1, config.max_outer_iters + 1):
        state = MediumState.from_excited(N_e, N0, d2, P)
        n_new = integrate_spectrum(rates, state, variant, config, backend)
        d2_target = (pf_dispersion(N_e, n_new, P, rates, N0, pf_model)
                     if use_pf else 0.0)
        d2_new = d2 + config.inner_damping * (d2_target - d2)
        n_done = abs(n_new - n) <= 1e-12 * max(n_new, 1e-30) + 1e-300
        d2_done = abs(d2_new - d2) <= 1e-12 * max(abs(d2), 1.0) * 1e2 * config.ne_tol + 1e-300
        n, d2 = n_new, d2_new
        if n_done and d2_done:
            return n, d2, it
        if abs(d2_target - d2) <= 1e-13 * max(abs(d2), 1e-30):
            # dispersion already self-consistent; n is pure function of it
            state = MediumState.from_excited(N_e, N0, d2, P)
            n = integrate_spectrum(rates, state, variant, config, backend)
            return n, d2, it
    raise FixedPointDivergence(
        f"inner (n, d2Ne) iteration did not settle at N_e = {N_e:.6g}")


def solve_operating_point(P: float, params: DeviceParams,
                          variant: SpectrumVariant = SpectrumVariant.NON_PERTURBATIVE,
                          pf_model: PFModel = PFModel("binomial"),
                          config: SolverConfig = SolverConfig(),
                          backend: str = "residue") -> OperatingPoint:
    """Solve 2 kappa n(N_e) = gamma_par (P N_g - N_e) for N_e >= 0.

    The bracket is [0, P N0/(P+1)] (the no-field population bounds N_e
    from above since emission only depletes it), trimmed below the
    effective threshold; the residual is strictly increasing on it.
    """
    if P < 0:
        raise ValueError("pump P must be non-negative")
    rates = derive_rates(params)
    N0 = params.N0
    gpar = rates.gamma_par

    evals: list[tuple[float, float]] = []
    cache: dict[float, tuple[float, float, int]] = {}

    def inner(N_e: float):
        if N_e not in cache:
            cache[N_e] = _inner_fixed_point(N_e, P, rates, N0, variant,
                                            pf_model, config, backend)
        return cache[N_e]

    def residual(N_e: float) -> float:
        n, _, _ = inner(N_e)
        F = 2.0 * rates.kappa * n - gpar * (P * (N0 - N_e) - N_e)
        evals.append((N_e, F))
        return F

    if P == 0.0:
        d2 = 0.0 if pf_model.is_zero or variant is SpectrumVariant.ZERO_ORDER \
            else pf_dispersion(0.0, 0.0, 0.0, rates, N0, pf_model)
        diag = Diagnostics(
            stability_margin=stability_margin(
                rates, MediumState.from_excited(0.0, N0, d2, 0.0)),
            narrowness_ratio=narrowness_check(
                rates, pf_bandwidth(0.0, 0.0, rates),
                config.narrowness_threshold)[0],
            narrowness_pass=True, residual=0.0, inner_iters=0, outer_evals=0)
        return OperatingPoint(P=0.0, N_e=0.0, N_g=float(N0), N=-float(N0),
                              delta2_Ne=d2, n=0.0, p_out=0.0,
                              variant=variant, diagnostics=diag)

    hi_nofield = P * N0 / (P + 1.0)
    # stay strictly below the semiclassical threshold inversion
    hi_threshold = 0.5 * (N0 + rates.N_th) * (1.0 - 1e-9)
    hi = min(hi_nofield * (1.0 - 1e-12), hi_threshold)
    lo, F_lo = 0.0, residual(0.0)
    if F_lo > 0.0:
        raise NoRoot(f"residual positive at N_e = 0 (F = {F_lo:.3e})")

    # find an evaluable upper end with positive residual; StabilityViolation
    # marks the unstable side, negative residual the stable side
    bad = hi_nofield
    F_hi = None
    for _ in range(config.max_outer_iters):
        try:
            F_hi = residual(hi)
        except StabilityViolation:
            bad = hi
            hi = 0.5 * (lo + hi)
            continue
        if F_hi > 0.0:
            break
        lo, F_lo = hi, F_hi
        if bad <= hi * (1.0 + 1e-12):
            raise NoRoot("no positive residual below the stability boundary")
        hi = 0.5 * (hi + bad)
    else:
        raise NoRoot("could not bracket the energy-balance root")

    N_e_root = brentq(residual, lo, hi, xtol=config.ne_tol * N0 * 1e-2,
                      rtol=8.9e-16, maxiter=300)

    n, d2, inner_iters = inner(N_e_root)
    F = 2.0 * rates.kappa * n - gpar * (P * (N0 - N_e_root) - N_e_root)
    res_scale = gpar * N0 * max(1.0, P)
    if abs(F) > config.ne_tol * res_scale:
        # polish with a secant step on the cached smooth residual
        h = max(N_e_root * 1e-9, N0 * 1e-12)
        dF = (residual(min(N_e_root + h, hi)) - residual(max(N_e_root - h, lo))) / (2 * h)
        if dF > 0:
            N_e_root = min(max(N_e_root - F / dF, lo), hi)
            n, d2, inner_iters = inner(N_e_root)
            F = 2.0 * rates.kappa * n - gpar * (P * (N0 - N_e_root) - N_e_root)
    if abs(F) > 10.0 * config.ne_tol * res_scale:
        raise NoRoot(f"energy residual {F:.3e} above tolerance after polish")

    # residual must be increasing along the bracket; tolerate only
    # integration-level noise
    evals.sort()
    slack = 1e-9 * res_scale + 1e-9 * 2.0 * rates.kappa * max(n, 1e-30)
    for (x0, f0), (x1, f1) in zip(evals, evals[1:]):
        if x1 > x0 and f1 < f0 - slack:
            raise NoRoot(
                f"energy residual not monotone: F({x0:.6g}) = {f0:.6e} vs "
                f"F({x1:.6g}) = {f1:.6e}")

    state = MediumState.from_excited(N_e_root, N0, d2, P)
    ratio, narrow_ok = narrowness_check(rates, pf_bandwidth(n, P, rates),
                                        config.narrowness_threshold)
    if not narrow_ok:
        warnings.warn(
            f"PF spectrum not narrow (ratio {ratio:.3f} > "
            f"{config.narrowness_threshold}); product closure is strained",
            RuntimeWarning, stacklevel=2)
    diag = Diagnostics(stability_margin=stability_margin(rates, state),
                       narrowness_ratio=ratio, narrowness_pass=narrow_ok,
                       residual=F, inner_iters=inner_iters,
                       outer_evals=len(evals))
    return OperatingPoint(P=P, N_e=N_e_root, N_g=N0 - N_e_root,
                          N=2.0 * N_e_root - N0, delta2_Ne=d2, n=n,
                          p_out=2.0 * rates.kappa * n, variant=variant,
                          diagnostics=diag)


def enhancement_factor(P: float, params: DeviceParams,
                       pf_model: PFModel = PFModel("binomial"),
                       config: SolverConfig = SolverConfig(),
                       backend: str = "residue") -> float:
    """R = p_out(non-perturbative, PF on) / p_out(PF off) at identical P."""
    with_pf = solve_operating_point(P, params,
                                    SpectrumVariant.NON_PERTURBATIVE,
                                    pf_model, config, backend)
    without = solve_operating_point(P, params, SpectrumVariant.ZERO_ORDER,
                                    PFModel("none"), config, backend)
    return with_pf.p_out / without.p_out


# ----------------------------------------------------------------------
# peak analysis
# ----------------------------------------------------------------------

def _refine_quadratic(x: np.ndarray, y: np.ndarray, i: int) -> tuple[float, float]:
    """Vertex of the parabola through three neighbouring grid points."""
    xs = x[i - 1:i + 2] - x[i]     # center for conditioning
    ys = y[i - 1:i + 2]
    a, b, c = np.polyfit(xs, ys, 2)
    if a >= 0.0:   # degenerate / flat triple: keep the grid point
        return float(x[i]), float(y[i])
    xv = -b / (2.0 * a)
    if not (xs[0] <= xv <= xs[2]):
        return float(x[i]), float(y[i])
    return float(xv + x[i]), float(np.polyval([a, b, c], xv))


def find_crs_peaks(table: SpectrumTable) -> PeakReport:
    """Locate the maxima of an even spectrum table.

    Scans the w >= 0 half, refines each local maximum with a quadratic
    through its neighbours, and mirrors the result. Raises WindowTooNarrow
    when the dominant maximum touches the grid edge.
    """
    w, v = table.half()
    if w.size < 3:
        raise WindowTooNarrow("need at least 3 non-negative grid points")
    candidates: list[tuple[float, float]] = []
    if v[0] > v[1]:
        candidates.append((0.0, float(v[0])))
    interior = np.nonzero((v[1:-1] > v[:-2]) & (v[1:-1] >= v[2:]))[0] + 1
    for i in interior:
        candidates.append(_refine_quadratic(w, v, int(i)))
    if v[-1] > v[-2]:
        raise WindowTooNarrow(
            f"spectrum still rising at the window edge w = {w[-1]:.3e}")
    if not candidates:
        raise WindowTooNarrow("no local maximum found inside the window")
    pos, height = max(candidates, key=lambda c: c[1])
    grid_step = float(np.min(np.diff(w))) if w.size > 1 else 0.0
    if pos <= max(grid_step, 1e-9 * w[-1]):
        return PeakReport(peak_positions=(0.0,), peak_heights=(height,),
                          splitting=0.0, is_split=False)
    return PeakReport(peak_positions=(pos, -pos),
                      peak_heights=(height, height),
                      splitting=2.0 * pos, is_split=True)
