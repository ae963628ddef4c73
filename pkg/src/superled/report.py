"""Machine-readable run outputs: CSV tables, run manifest, figures.

One CSV per curve with the fixed column schema

    P_or_omega, value, N_e, n, delta2_Ne, stability_margin,
    narrowness_ratio, residual, status

plus a structured-text manifest of every resolved parameter in SI units.
Floats are written in shortest round-trip form so files re-parse to the
exact values and repeated runs are byte-identical. Figures are rendered
with the Agg backend next to the tables they plot.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from . import __version__
from .params import DeviceParams, derive_rates
from .pf import PFModel
from .presets import Preset
from .solver import (OperatingPoint, SolverConfig, integrate_spectrum,
                     solve_operating_point)
from .spectra import MediumState, SpectrumVariant, build_spectrum_table

CSV_COLUMNS = ("P_or_omega", "value", "N_e", "n", "delta2_Ne",
               "stability_margin", "narrowness_ratio", "residual", "status")


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x):
        return "nan"
    return repr(x)


@dataclass
class Row:
    P_or_omega: float
    value: float
    N_e: float = math.nan
    n: float = math.nan
    delta2_Ne: float = math.nan
    stability_margin: float = math.nan
    narrowness_ratio: float = math.nan
    residual: float = math.nan
    status: str = "ok"

    @classmethod
    def from_point(cls, axis: float, value: float, op: OperatingPoint) -> "Row":
        d = op.diagnostics
        return cls(axis, value, op.N_e, op.n, op.delta2_Ne,
                   d.stability_margin, d.narrowness_ratio, d.residual, "ok")

    @classmethod
    def failed(cls, axis: float, exc: BaseException) -> "Row":
        return cls(axis, math.nan, status=f"error:{type(exc).__name__}")


@dataclass
class Table:
    name: str                 # file stem
    label: str                # human label for plots
    axis: str                 # "P" or "omega"
    rows: list

    def write(self, out_dir: Path) -> Path:
        path = out_dir / f"{self.name}.csv"
        lines = [",".join(CSV_COLUMNS)]
        for row in self.rows:
            d = asdict(row)
            lines.append(",".join(fmt(d[c]) for c in CSV_COLUMNS))
        path.write_text("\n".join(lines) + "\n")
        return path


def read_table(path: Path) -> list[Row]:
    lines = Path(path).read_text().strip().split("\n")
    if lines[0] != ",".join(CSV_COLUMNS):
        raise ValueError(f"unexpected CSV header in {path}")
    rows = []
    for line in lines[1:]:
        parts = line.split(",")
        vals = [float(p) for p in parts[:-1]]
        rows.append(Row(*vals, status=parts[-1]))
    return rows


# ----------------------------------------------------------------------
# per-curve computations (module-level so they pickle for worker pools)
# ----------------------------------------------------------------------

def _slug(variant: SpectrumVariant) -> str:
    return variant.value


def _curve_tag(n_c: float, N0: int) -> str:
    return f"nc{n_c:g}_N{N0}"


@dataclass(frozen=True)
class Checkpoint:
    """A solved state kept aside for backend cross-checking."""

    params: DeviceParams
    variant: SpectrumVariant
    N_e: float
    delta2_Ne: float
    P: float
    n: float


def compute_power_curve(job: dict) -> tuple[list[Table], list[Checkpoint]]:
    """p_out(P) per variant for one curve, plus R(P) when both the PF-on
    and PF-off variants are present."""
    preset: Preset = job["preset"]
    params: DeviceParams = job["params"]
    pf_model: PFModel = job["pf_model"]
    config: SolverConfig = job["config"]
    backend: str = job["backend"]
    tag = _curve_tag(params.n_c, params.N0)
    grid = preset.pump_grid()

    checkpoints: list[Checkpoint] = []
    points: dict[SpectrumVariant, list] = {v: [] for v in preset.variants}
    for variant in preset.variants:
        model = PFModel("none") if variant is SpectrumVariant.ZERO_ORDER else pf_model
        for P in grid:
            try:
                op = solve_operating_point(P, params, variant, model,
                                           config, backend)
                points[variant].append((P, op))
                if op.n > 0:
                    checkpoints.append(Checkpoint(params, variant, op.N_e,
                                                  op.delta2_Ne, P, op.n))
            except Exception as exc:  # keep the row, flag it, continue
                points[variant].append((P, exc))

    tables = []
    for variant in preset.variants:
        rows = [Row.from_point(P, op.p_out, op) if isinstance(op, OperatingPoint)
                else Row.failed(P, op) for P, op in points[variant]]
        tables.append(Table(f"{preset.name}_pout_{tag}_{_slug(variant)}",
                            f"{tag} {_slug(variant)}", "P", rows))

    zo = SpectrumVariant.ZERO_ORDER
    if zo in points:
        for variant in preset.variants:
            if variant is zo:
                continue
            rows = []
            for (P, op), (_, ref) in zip(points[variant], points[zo]):
                if isinstance(op, OperatingPoint) and isinstance(ref, OperatingPoint):
                    rows.append(Row.from_point(P, op.p_out / ref.p_out, op))
                else:
                    bad = op if not isinstance(op, OperatingPoint) else ref
                    rows.append(Row.failed(P, bad))
            tables.append(Table(f"{preset.name}_R_{tag}_{_slug(variant)}",
                                f"{tag} R {_slug(variant)}", "P", rows))
    return tables, checkpoints


def compute_spectrum_curve(job: dict) -> tuple[list[Table], list[Checkpoint]]:
    """p_out(w) at fixed pump for one curve, one table per variant."""
    preset: Preset = job["preset"]
    params: DeviceParams = job["params"]
    pf_model: PFModel = job["pf_model"]
    config: SolverConfig = job["config"]
    backend: str = job["backend"]
    tag = _curve_tag(params.n_c, params.N0)
    rates = derive_rates(params)

    checkpoints: list[Checkpoint] = []
    tables = []
    for variant in preset.variants:
        model = PFModel("none") if variant is SpectrumVariant.ZERO_ORDER else pf_model
        name = f"{preset.name}_spectrum_{tag}_{_slug(variant)}"
        try:
            op = solve_operating_point(preset.pump, params, variant, model,
                                       config, backend)
            table = build_spectrum_table(rates, op.state(), variant)
            rows = [Row.from_point(w, p, op)
                    for w, p in zip(table.omega, table.p_out_of_omega)]
            checkpoints.append(Checkpoint(params, variant, op.N_e,
                                          op.delta2_Ne, preset.pump, op.n))
        except Exception as exc:
            rows = [Row.failed(preset.pump, exc)]
        tables.append(Table(name, f"{tag} {_slug(variant)}", "omega", rows))
    return tables, checkpoints


def _run_job(job: dict) -> tuple[list[Table], list[Checkpoint]]:
    if job["preset"].kind in ("power", "power-variants"):
        return compute_power_curve(job)
    return compute_spectrum_curve(job)


def cross_check_deviation(checkpoints: list[Checkpoint],
                          config: SolverConfig,
                          max_points: int = 40) -> float:
    """Max relative residue-vs-adaptive deviation over solved points.

    Checks an evenly spaced subsample to keep cross-check mode fast.
    """
    worst = 0.0
    stride = max(1, len(checkpoints) // max_points)
    for cp in checkpoints[::stride]:
        rates = derive_rates(cp.params)
        state = MediumState.from_excited(cp.N_e, cp.params.N0,
                                         cp.delta2_Ne, cp.P)
        n_ada = integrate_spectrum(rates, state, cp.variant, config,
                                   backend="adaptive")
        n_res = integrate_spectrum(rates, state, cp.variant, config,
                                   backend="residue")
        worst = max(worst, abs(n_ada - n_res) / n_res)
    return worst


# ----------------------------------------------------------------------
# driver
# ----------------------------------------------------------------------

def run_preset(preset: Preset, base_params: DeviceParams, pf_model: PFModel,
               config: SolverConfig, out_dir: Path, backend: str = "residue",
               jobs: int = 1, figures: bool = True,
               cross_check: bool = False) -> list[Path]:
    """Compute every curve of a preset and write tables, manifest, figures.

    Row/curve computations are pure; with jobs > 1 curves run in a worker
    pool and results are assembled in a fixed order, so the written files
    do not depend on the worker count.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    job_list = [{"preset": preset,
                 "params": preset.device(n_c, N0, base_params),
                 "pf_model": pf_model, "config": config, "backend": backend}
                for n_c, N0 in preset.curves]

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_job, job_list))
    else:
        results = [_run_job(job) for job in job_list]

    tables: list[Table] = [t for group, _ in results for t in group]
    checkpoints = [cp for _, cps in results for cp in cps]
    written = [table.write(out_dir) for table in tables]

    deviation = None
    if cross_check:
        deviation = cross_check_deviation(checkpoints, config)

    manifest = write_manifest(out_dir, preset, job_list, pf_model, config,
                              backend, deviation)
    written.append(manifest)
    if figures:
        written.extend(render_figures(preset, tables, out_dir))
    return written


def write_manifest(out_dir: Path, preset: Preset, job_list: list,
                   pf_model: PFModel, config: SolverConfig, backend: str,
                   cross_check_deviation_value=None) -> Path:
    lines = ["[run]",
             f"preset = {preset.name}",
             f"kind = {preset.kind}",
             f"pf_model = {pf_model.tag}",
             f"backend = {backend}",
             f"code_version = {__version__}",
             f"variants = {', '.join(v.value for v in preset.variants)}"]
    if preset.kind.startswith("power"):
        lines.append(f"pump_grid = {preset.p_points} log-spaced in "
                     f"[{fmt(preset.p_min)}, {fmt(preset.p_max)}]")
    else:
        lines.append(f"pump = {fmt(preset.pump)}")
    if cross_check_deviation_value is not None:
        lines.append("max_backend_deviation = "
                     f"{fmt(cross_check_deviation_value)}")
    lines += ["", "[solver]"]
    for key, val in asdict(config).items():
        lines.append(f"{key} = {fmt(val)}")
    for job in job_list:
        p: DeviceParams = job["params"]
        rates = derive_rates(p)
        lines += ["", f"[device.{_curve_tag(p.n_c, p.N0)}]"]
        for key in ("lambda0", "n_r", "d", "n_c", "N0", "gamma_perp",
                    "gamma_par", "kappa", "f"):
            lines.append(f"{key} = {fmt(getattr(p, key))}")
        for key in ("omega0", "V_c", "Omega", "g_diff", "beta", "N_th"):
            lines.append(f"{key} = {fmt(getattr(rates, key))}")
    path = out_dir / "run_manifest.txt"
    path.write_text("\n".join(lines) + "\n")
    return path


# ----------------------------------------------------------------------
# figures
# ----------------------------------------------------------------------

def _plot_groups(tables: list[Table], stem: str):
    return [t for t in tables if t.name.startswith(stem)]


def render_figures(preset: Preset, tables: list[Table],
                   out_dir: Path) -> list[Path]:
    """Render one figure per table family next to the CSVs."""
    written = []
    if preset.kind in ("power", "power-variants"):
        fams = [(f"{preset.name}_pout", "output power p_out (photons/s)", "loglog"),
                (f"{preset.name}_R", "enhancement factor R", "semilogx")]
    else:
        fams = [(f"{preset.name}_spectrum",
                 "p_out(w) (photons/s per rad/s)", "spectrum")]
    for stem, ylabel, style in fams:
        group = _plot_groups(tables, stem)
        if not group:
            continue
        fig, ax = plt.subplots(figsize=(7.0, 5.0))
        for table in group:
            x = np.array([r.P_or_omega for r in table.rows])
            y = np.array([r.value for r in table.rows])
            ok = np.array([r.status == "ok" for r in table.rows])
            dashed = table.name.endswith(SpectrumVariant.ZERO_ORDER.value)
            ls = "--" if dashed else "-"
            if style == "spectrum":
                ax.plot(x[ok] / 1e12, y[ok], ls, lw=1.2, label=table.label)
            elif style == "loglog":
                ax.loglog(x[ok], y[ok], ls, lw=1.2, label=table.label)
            else:
                ax.semilogx(x[ok], y[ok], ls, lw=1.2, label=table.label)
        if style == "spectrum":
            ax.set_xlabel("frequency offset from carrier (10^12 rad/s)")
        else:
            ax.set_xlabel("normalized pump P")
        ax.set_ylabel(ylabel)
        ax.legend(fontsize=7, ncol=2)
        ax.grid(True, alpha=0.3)
        fig.tight_layout()
        path = out_dir / f"{stem}.png"
        fig.savefig(path, dpi=150, metadata={"Software": "superled"})
        plt.close(fig)
        written.append(path)
    return written
