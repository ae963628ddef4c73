"""Command-line batch runner.

Subcommands
-----------
run       compute a figure preset and write CSV tables + manifest (+ figures)
sweep     Cartesian parameter sweep with the same record format
validate  execute the cross-module property suite; nonzero exit on failure

Config file schema (INI; every key optional, CLI --set overrides win)
---------------------------------------------------------------------
[device]
lambda0 = 1.55e-6        ; vacuum wavelength, m
n_r = 3.3                ; refractive index
d = 1e-28                ; dipole moment, C*m
n_c = 100                ; normalized cavity volume (>= 1)
N0 = 100                 ; emitter count
gamma_perp = 1e12        ; polarization decay rate, rad/s
gamma_par = 1e9          ; upper-state decay rate, rad/s
kappa = 2.5e10           ; cavity field decay rate, rad/s
f = 0.5                  ; coupling-averaging factor

[solver]
ne_tol = 1e-10
quad_rel_tol = 1e-9
max_outer_iters = 200
window_factor = 20
narrowness_threshold = 0.1

[pf]
model = binomial         ; binomial | langevin-rate | none

[run]
p_min = 0.01
p_max = 2.0
p_points = 60
pump = 1.0               ; fixed pump for spectrum presets

The same dotted keys work with --set, e.g. --set device.gamma_par=2e9
or --set run.p_points=12. Preset bundles fix kappa, gamma_perp, n_c and
N0 per curve; device overrides for those keys replace them in every curve.
"""

from __future__ import annotations

import argparse
import configparser
import sys
from dataclasses import fields, replace
from pathlib import Path

from .params import DeviceParams
from .pf import PF_MODELS, PFModel
from .presets import get_preset, PRESETS
from .report import run_preset
from .solver import SolverConfig
from .spectra import SpectrumVariant

_INT_FIELDS = {"N0", "max_outer_iters", "p_points", "max_window_doublings"}


def _coerce(key: str, value: str):
    if key in _INT_FIELDS:
        return int(float(value))
    return float(value)


def _load_overrides(config_path: str | None, sets: list[str]) -> dict:
    """Merge config-file sections and --set entries into {section: {key: raw}}."""
    merged: dict[str, dict] = {"device": {}, "solver": {}, "pf": {}, "run": {}}
    if config_path:
        parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        with open(config_path) as fh:
            parser.read_file(fh)
        for section in merged:
            if parser.has_section(section):
                merged[section].update(dict(parser.items(section)))
    for item in sets or []:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise SystemExit(f"--set expects section.key=value, got {item!r}")
        dotted, value = item.split("=", 1)
        section, key = dotted.split(".", 1)
        if section not in merged:
            raise SystemExit(f"unknown config section {section!r}")
        merged[section][key] = value
    return merged


def _build_device(overrides: dict) -> DeviceParams:
    params = DeviceParams()
    valid = {f.name for f in fields(DeviceParams)}
    for key, raw in overrides.get("device", {}).items():
        if key not in valid:
            raise SystemExit(f"unknown device parameter {key!r}")
        params = replace(params, **{key: _coerce(key, raw)})
    return params


def _build_solver(overrides: dict) -> SolverConfig:
    config = SolverConfig()
    valid = {f.name for f in fields(SolverConfig)}
    for key, raw in overrides.get("solver", {}).items():
        if key not in valid:
            raise SystemExit(f"unknown solver parameter {key!r}")
        config = replace(config, **{key: _coerce(key, raw)})
    return config


def _build_pf(overrides: dict, flag_value: str | None) -> PFModel:
    tag = overrides.get("pf", {}).get("model", "binomial")
    if flag_value:
        tag = flag_value
    if tag not in PF_MODELS:
        raise SystemExit(f"unknown PF model {tag!r}; choose from {PF_MODELS}")
    return PFModel(tag)


def _apply_run_overrides(preset, overrides: dict):
    run = overrides.get("run", {})
    kwargs = {}
    for key in ("p_min", "p_max", "p_points", "pump"):
        if key in run:
            kwargs[key] = _coerce(key, run[key])
    return replace(preset, **kwargs) if kwargs else preset


def cmd_run(args) -> int:
    overrides = _load_overrides(args.config, args.set)
    preset = _apply_run_overrides(get_preset(args.preset), overrides)
    device = _build_device(overrides)
    config = _build_solver(overrides)
    pf_model = _build_pf(overrides, args.pf_model)
    written = run_preset(preset, device, pf_model, config, Path(args.out),
                         backend="residue" if args.quad == "both" else args.quad,
                         jobs=args.jobs, figures=args.figures,
                         cross_check=args.quad == "both")
    for path in written:
        print(path)
    return 0


def cmd_sweep(args) -> int:
    from dataclasses import replace as _replace
    from itertools import product

    from .report import Row, Table, write_manifest
    from .solver import solve_operating_point

    overrides = _load_overrides(args.config, args.set)
    device = _build_device(overrides)
    config = _build_solver(overrides)
    pf_model = _build_pf(overrides, args.pf_model)
    variant = SpectrumVariant.from_label(args.variant)

    pumps = [float(p) for p in args.pump.split(",")] if args.pump else []
    if not pumps:
        raise SystemExit("empty sweep: no pump values given")
    axes: list[tuple[str, list[float]]] = []
    valid = {f.name for f in fields(DeviceParams)}
    for vary in args.vary or []:
        if "=" not in vary:
            raise SystemExit(f"--vary expects key=v1,v2,..., got {vary!r}")
        key, vals = vary.split("=", 1)
        if key not in valid:
            raise SystemExit(f"unknown device parameter {key!r}")
        values = [_coerce(key, v) for v in vals.split(",") if v.strip()]
        if not values:
            raise SystemExit(f"empty sweep: no values for {key!r}")
        axes.append((key, values))

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    combos = list(product(*[vals for _, vals in axes])) if axes else [()]
    written = []
    for combo in combos:
        params = device
        slug_parts = []
        for (key, _), value in zip(axes, combo):
            params = _replace(params, **{key: value})
            slug_parts.append(f"{key}{value:g}")
        slug = "_".join(slug_parts) or "base"
        rows = []
        for P in pumps:
            try:
                op = solve_operating_point(P, params, variant, pf_model,
                                           config, args.quad if args.quad != "both"
                                           else "residue")
                rows.append(Row.from_point(P, op.p_out, op))
            except Exception as exc:
                rows.append(Row.failed(P, exc))
        table = Table(f"sweep_{slug}_{variant.value}", slug, "P", rows)
        written.append(table.write(out_dir))
    lines = ["[sweep]",
             f"variant = {variant.value}",
             f"pf_model = {pf_model.tag}",
             f"pumps = {args.pump}",
             f"combinations = {len(combos)}"]
    (out_dir / "sweep_manifest.txt").write_text("\n".join(lines) + "\n")
    for path in written:
        print(path)
    return 0


def cmd_validate(args) -> int:
    from .validation import run_property_suite

    results = run_property_suite(verbose=True)
    failures = [r for r in results if not r.passed]
    print(f"\n{len(results) - len(failures)}/{len(results)} checks passed")
    return 1 if failures else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="superled",
        description="Superradiant-LED spectral simulator: presets, sweeps, "
                    "property validation.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="compute a figure preset")
    run.add_argument("--preset", required=True, choices=sorted(PRESETS))
    run.add_argument("--pf-model", choices=PF_MODELS)
    run.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                     help="override a config value (repeatable)")
    run.add_argument("--config", help="INI config file (see module docstring)")
    run.add_argument("--out", default="out", help="output directory")
    run.add_argument("--quad", choices=("adaptive", "residue", "both"),
                     default="residue",
                     help="'both' cross-checks the backends and records the "
                          "max deviation in the manifest")
    run.add_argument("--jobs", type=int, default=1,
                     help="worker processes for curve computation")
    run.add_argument("--figures", action=argparse.BooleanOptionalAction,
                     default=True, help="render PNG figures next to tables")
    run.set_defaults(func=cmd_run)

    sweep = sub.add_parser("sweep", help="Cartesian parameter sweep")
    sweep.add_argument("--pump", required=True,
                       help="comma-separated pump values, e.g. 0.5,1,2")
    sweep.add_argument("--vary", action="append", metavar="KEY=V1,V2,...",
                       help="device parameter axis (repeatable)")
    sweep.add_argument("--variant", default="non-perturbative",
                       choices=[v.value for v in SpectrumVariant])
    sweep.add_argument("--pf-model", choices=PF_MODELS)
    sweep.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE")
    sweep.add_argument("--config")
    sweep.add_argument("--out", default="out")
    sweep.add_argument("--quad", choices=("adaptive", "residue", "both"),
                       default="residue")
    sweep.set_defaults(func=cmd_sweep)

    validate = sub.add_parser("validate", help="run the property suite")
    validate.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
