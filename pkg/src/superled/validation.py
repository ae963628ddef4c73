"""Independent oracles and the runnable property suite.

The residue integrator here is the exact counterpart of the adaptive
quadrature backend: even rational integrands are summed over their
upper-half-plane poles, so the two routes share nothing but the integrand.
Quartic roots come from companion-matrix eigenvalues (numpy.roots).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad


class DegenerateRoots(RuntimeError):
    """Quartic has (numerically) repeated roots; residues are unreliable."""


@dataclass(frozen=True)
class QuarticFactorization:
    """Roots and leading coefficient of an even real quartic in w.

    For q4 w^4 + q2 w^2 + q0 with positive definite values on the real
    axis the roots form conjugate/mirror pairs and none are real.
    """

    roots: np.ndarray           # the four complex roots
    lead: float                 # q4
    coeffs: np.ndarray          # [q4, 0, q2, 0, q0] for evaluation

    @property
    def upper(self) -> np.ndarray:
        return self.roots[self.roots.imag > 0.0]

    def max_root_residual(self) -> float:
        """max |Q(root)|, for precision audits."""
        return float(np.max(np.abs(np.polyval(self.coeffs, self.roots))))

    def min_root_separation(self) -> float:
        z = self.roots
        d = np.abs(z[:, None] - z[None, :])
        d[np.diag_indices_from(d)] = np.inf
        return float(d.min())

    def is_degenerate(self, rel: float = 1e-8) -> bool:
        scale = float(np.max(np.abs(self.roots)))
        return self.min_root_separation() < rel * max(scale, 1.0)


def factor_quartic(q4: float, q2: float, q0: float) -> QuarticFactorization:
    """Factor q4 w^4 + q2 w^2 + q0 over the complex w plane."""
    coeffs = np.array([q4, 0.0, q2, 0.0, q0], dtype=float)
    roots = np.roots(coeffs)
    return QuarticFactorization(roots=roots, lead=q4, coeffs=coeffs)


def _quad_fallback(p: np.ndarray, denom_factors: list[QuarticFactorization]) -> float:
    def integrand(w):
        val = np.polyval(p, w)
        for fac in denom_factors:
            val = val / np.polyval(fac.coeffs, w)
        return val

    est, _ = quad(integrand, -np.inf, np.inf, limit=400)
    return est / (2.0 * np.pi)


def residue_integral(numerator: tuple[float, float],
                     factorization: QuarticFactorization) -> float:
    """(2 pi)^-1 Integral of (p2 w^2 + p0) / Q(w) over the real line.

    Q is the factored quartic; the contour closes in the upper half-plane,
    so the result is i * sum of residues p(z)/Q'(z) over the two upper
    roots. Falls back to adaptive quadrature (with a warning) if the roots
    are numerically repeated.
    """
    p2, p0 = numerator
    p = np.array([p2, 0.0, p0], dtype=float)
    if factorization.is_degenerate():
        warnings.warn("repeated quartic roots; falling back to quadrature",
                      RuntimeWarning, stacklevel=2)
        return _quad_fallback(p, [factorization])
    upper = factorization.upper
    if upper.size != 2:
        raise DegenerateRoots(
            f"expected 2 upper-half-plane roots, found {upper.size}")
    dq = np.polyder(factorization.coeffs)
    total = 0.0 + 0.0j
    for z in upper:
        total += np.polyval(p, z) / np.polyval(dq, z)
    val = 1j * total
    if abs(val.imag) > 1e-8 * abs(val.real) + 1e-300:
        raise DegenerateRoots(
            f"residue sum not real: {val!r} (ill-conditioned roots)")
    return float(val.real)


def residue_integral_double(numerator: tuple[float, float],
                            factorization: QuarticFactorization) -> float:
    """(2 pi)^-1 Integral of (p2 w^2 + p0) / Q(w)^2 over the real line.

    Each upper root of Q is a double pole of 1/Q^2 with residue
    (p' Q' - p Q'') / Q'^3 evaluated at the root.
    """
    p2, p0 = numerator
    p = np.array([p2, 0.0, p0], dtype=float)
    if factorization.is_degenerate():
        warnings.warn("repeated quartic roots; falling back to quadrature",
                      RuntimeWarning, stacklevel=2)
        return _quad_fallback(p, [factorization, factorization])
    upper = factorization.upper
    if upper.size != 2:
        raise DegenerateRoots(
            f"expected 2 upper-half-plane roots, found {upper.size}")
    dp = np.polyder(p)
    dq = np.polyder(factorization.coeffs)
    ddq = np.polyder(dq)
    total = 0.0 + 0.0j
    for z in upper:
        q1 = np.polyval(dq, z)
        q2v = np.polyval(ddq, z)
        total += (np.polyval(dp, z) * q1 - np.polyval(p, z) * q2v) / q1**3
    val = 1j * total
    if abs(val.imag) > 1e-8 * abs(val.real) + 1e-300:
        raise DegenerateRoots(
            f"residue sum not real: {val!r} (ill-conditioned roots)")
    return float(val.real)


def residue_integral_product(numerator: tuple[float, float],
                             fac_a: QuarticFactorization,
                             fac_b: QuarticFactorization) -> float:
    """(2 pi)^-1 Integral of (p2 w^2 + p0) / (Qa(w) Qb(w)) over the real line.

    Eight simple poles when Qa and Qb share no roots; used for the
    non-perturbative integrand without the partial-fraction split.
    """
    p2, p0 = numerator
    p = np.array([p2, 0.0, p0], dtype=float)
    roots = np.concatenate([fac_a.roots, fac_b.roots])
    d = np.abs(roots[:, None] - roots[None, :])
    d[np.diag_indices_from(d)] = np.inf
    scale = float(np.max(np.abs(roots)))
    if d.min() < 1e-8 * max(scale, 1.0):
        warnings.warn("nearly shared roots; falling back to quadrature",
                      RuntimeWarning, stacklevel=2)
        return _quad_fallback(p, [fac_a, fac_b])
    da = np.polyder(fac_a.coeffs)
    db = np.polyder(fac_b.coeffs)
    total = 0.0 + 0.0j
    for z in fac_a.roots[fac_a.roots.imag > 0.0]:
        total += (np.polyval(p, z)
                  / (np.polyval(da, z) * np.polyval(fac_b.coeffs, z)))
    for z in fac_b.roots[fac_b.roots.imag > 0.0]:
        total += (np.polyval(p, z)
                  / (np.polyval(db, z) * np.polyval(fac_a.coeffs, z)))
    val = 1j * total
    if abs(val.imag) > 1e-8 * abs(val.real) + 1e-300:
        raise DegenerateRoots(
            f"residue sum not real: {val!r} (ill-conditioned roots)")
    return float(val.real)


# ----------------------------------------------------------------------
# property suite
# ----------------------------------------------------------------------

@dataclass
class SuiteResult:
    name: str
    detail: str
    value: float
    tolerance: float
    passed: bool


def run_property_suite(verbose: bool = True) -> list[SuiteResult]:
    """Execute the cross-module invariants on the standard presets.

    Returns one row per check; the CLI `validate` subcommand prints them
    and exits nonzero if any fail. Deterministic (fixed RNG seed).
    """
    # imported here to keep this module importable from solver
    from . import solver
    from .params import DeviceParams, derive_rates, exchange_rates
    from .pf import PFModel
    from .spectra import (MediumState, SpectrumVariant, spectrum,
                          stability_margin)

    results: list[SuiteResult] = []

    def record(name, detail, value, tol, ok=None):
        passed = bool(value <= tol) if ok is None else bool(ok)
        results.append(SuiteResult(name, detail, float(value), tol, passed))

    config = solver.SolverConfig()
    rng = np.random.default_rng(20240917)

    # exchange symmetry of the zero-order solve on three parameter sets
    for n_c, N0, kappa, gperp in ((100.0, 100, 2.5e10, 1e12),
                                  (10.0, 100, 2.5e10, 1e12),
                                  (2.0, 200, 2.5e10, 1e12)):
        params = DeviceParams(n_c=n_c, N0=N0, kappa=kappa, gamma_perp=gperp)
        swapped = exchange_rates(params)
        worst = 0.0
        for P in (0.2, 1.0, 2.0):
            a = solver.solve_operating_point(
                P, params, SpectrumVariant.ZERO_ORDER, PFModel("none"), config)
            b = solver.solve_operating_point(
                P, swapped, SpectrumVariant.ZERO_ORDER, PFModel("none"), config)
            worst = max(worst, abs(a.p_out - b.p_out) / a.p_out)
        record("exchange-symmetry", f"n_c={n_c:g} N0={N0}", worst, 1e-9)

    # pointwise variant ordering on random below-threshold states
    params = DeviceParams(n_c=2.0, N0=200)
    rates = derive_rates(params)
    violations = 0
    trials = 1000
    for _ in range(trials):
        N_e = rng.uniform(0.0, 0.45 * params.N0)
        d2 = rng.uniform(0.0, N_e * (params.N0 - N_e) / params.N0)
        state = MediumState.from_excited(N_e, params.N0, d2, P=1.0)
        if stability_margin(rates, state) <= 0.0:
            continue
        w = rng.uniform(-5e12, 5e12, size=8)
        zo = spectrum(w, rates, state, SpectrumVariant.ZERO_ORDER)
        sp = spectrum(w, rates, state, SpectrumVariant.SPONTANEOUS_ONLY)
        npv = spectrum(w, rates, state, SpectrumVariant.NON_PERTURBATIVE)
        if not (np.all(npv >= sp * (1 - 1e-12))
                and np.all(sp >= zo * (1 - 1e-12))):
            violations += 1
    record("variant-ordering", f"{trials} random states", violations, 0)

    # perturbative error is quadratic in the dispersion
    state0 = MediumState.from_excited(60.0, 200, 0.0, P=1.0)
    d2_base = 60.0 * 140.0 / 200.0
    eps = np.array([1e-2, 1e-3, 1e-4])
    gaps = []
    for e in eps:
        st = MediumState.from_excited(60.0, 200, d2_base * e, P=1.0)
        npv = float(spectrum(0.0, rates, st, SpectrumVariant.NON_PERTURBATIVE))
        pt = float(spectrum(0.0, rates, st, SpectrumVariant.PERTURBATIVE))
        gaps.append(abs(npv - pt))
    slope = np.polyfit(np.log(eps), np.log(gaps), 1)[0]
    record("perturbative-order", "log-log slope vs 2.0", abs(slope - 2.0), 0.1)

    # finite-difference check of the first derivative in the dispersion
    h = d2_base * 1e-7
    st_p = MediumState.from_excited(60.0, 200, h, P=1.0)
    fd = (float(spectrum(0.0, rates, st_p, SpectrumVariant.NON_PERTURBATIVE))
          - float(spectrum(0.0, rates, state0, SpectrumVariant.NON_PERTURBATIVE))) / h
    st_unit = MediumState.from_excited(60.0, 200, 1.0, P=1.0)
    analytic = (float(spectrum(0.0, rates, st_unit, SpectrumVariant.PERTURBATIVE))
                - float(spectrum(0.0, rates, state0, SpectrumVariant.ZERO_ORDER)))
    record("pf-derivative", "finite difference vs analytic",
           abs(fd - analytic) / abs(analytic), 1e-6)

    # backend agreement across representative operating points
    worst = 0.0
    for n_c, N0 in ((100.0, 100), (5.0, 100), (2.0, 200)):
        for kappa, gperp in ((2.5e10, 1e12), (5e11, 5e10)):
            pars = DeviceParams(n_c=n_c, N0=N0, kappa=kappa, gamma_perp=gperp)
            rts = derive_rates(pars)
            for variant in (SpectrumVariant.ZERO_ORDER,
                            SpectrumVariant.NON_PERTURBATIVE):
                op = solver.solve_operating_point(
                    1.0, pars, variant, PFModel("binomial"), config)
                st = MediumState.from_excited(
                    op.N_e, pars.N0, op.delta2_Ne, P=1.0)
                n_res = solver.integrate_spectrum(rts, st, variant, config,
                                                  backend="residue")
                n_ada = solver.integrate_spectrum(rts, st, variant, config,
                                                  backend="adaptive")
                worst = max(worst, abs(n_res - n_ada) / n_res)
    record("backend-agreement", "residue vs adaptive", worst, 1e-8)

    # quartic root residuals on a stiff case
    st = MediumState.from_excited(20.0, 200, 18.0, P=1.0)
    from .spectra import quartic_coefficients
    q4, q2, q0 = quartic_coefficients(rates, st)
    fac = factor_quartic(q4, q2, q0)
    bound = 1e-6 * abs(fac.lead) * max(rates.kappa, rates.gamma_perp) ** 4
    record("root-residual", "|Q(root)| bound", fac.max_root_residual(), bound)

    if verbose:
        for row in results:
            flag = "PASS" if row.passed else "FAIL"
            print(f"[{flag}] {row.name:22s} {row.detail:28s} "
                  f"value={row.value:.3e} tol={row.tolerance:.3e}")
    return results
