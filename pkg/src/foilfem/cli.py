"""Command-line front end: run, sweep and compare.

Configuration is a TOML file (see ``configs/`` and the README for the
schema) or the name of a built-in preset. Exit codes: 0 success, 2
configuration error, 3 solver error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import logging
import math
import re
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import postproc as pp
from .formulations import (FORMULATIONS, VARIANTS, CapabilityError, ExcitationSpec, FoilWindingSpec,
                           Material, MaterialField, assemble_system)
from .mesh import GeometryError, MeshSizing, build_benchmark_geometry, generate_structured_mesh
from .solvers import HtsLaw, SolverError, TransientConfig, solve_harmonic, solve_transient
from .topology import parse_basis

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


PRESETS = {
    "axi20": {
        "geometry": {"preset": "axi20"},
        "mesh": {"refinement": 1},
        "model": {"formulation": "hphi", "variant": "fw", "basis": "poly:3"},
        "materials": {"foil": {"sigma": 5.9e7}, "core": {"mu_r": 10.0}},
        "excitation": {"mode": "harmonic", "frequency": 50.0, "amplitude": 1.0},
    },
    "hts20": {
        "geometry": {"preset": "hts20"},
        "mesh": {"refinement": 1, "cells_per_turn": 1, "cells_across_width": 64, "core_size": 1e-3,
                 "max_size": 2e-3, "growth": 0.3, "width_grading": 1.0},
        "model": {"formulation": "hphi", "variant": "fw", "basis": "poly:3",
                  "spurious_resistivity": 1e-3},
        "materials": {"foil": {"hts": {"e_c": 1e-4, "j_c": 2.5e10, "n": 20.0}}},
        "excitation": {"mode": "transient", "frequency": 50.0, "amplitude": 50.0},
        "transient": {"theta": 1.0, "steps_per_period": 200, "periods": 1.0},
    },
}

_SECTIONS = {"preset", "geometry", "mesh", "model", "materials", "excitation", "transient", "output", "sweep"}
_MESH_KEYS = {"refinement", "cells_per_turn", "cells_across_width", "core_size", "max_size", "growth",
              "width_grading"}
_MODEL_KEYS = {"formulation", "variant", "basis", "order", "spurious_resistivity"}
_EXC_KEYS = {"mode", "frequency", "amplitude"}
_TRANSIENT_KEYS = {"theta", "steps_per_period", "periods", "newton_tol", "max_newton", "increment_tol"}
_OUTPUT_KEYS = {"directory", "fields", "plots"}
_SWEEP_KEYS = {"axis", "values", "models", "reference"}


@dataclass
class RunConfig:
    """Validated run description; ``raw`` keeps the merged tables for the summary."""

    preset: str
    geometry: dict
    sizing: MeshSizing
    refinement: int
    formulation: str
    variant: str
    basis: str
    order: int
    materials: MaterialField
    foil: Material
    excitation: ExcitationSpec
    transient: TransientConfig
    output_dir: Path
    fields: str = "vtk"
    plots: bool = True
    sweep: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    @property
    def model(self) -> str:
        return f"{self.formulation}-{self.variant}"


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _check_keys(table: dict, allowed: set, where: str):
    extra = set(table) - allowed
    if extra:
        raise ConfigError(f"unknown key(s) in [{where}]: {', '.join(sorted(extra))}")


def _positive(value, name):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0:
        raise ConfigError(f"{name} must be a positive number, got {value!r}")
    return value


def parse_model(text: str) -> tuple[str, str | None]:
    """'hphi-fw', 'hphixfw', 'av:resolved' or just 'h' -> (formulation, variant or None)."""
    m = re.fullmatch(r"(av|hphi|h)(?:[-:_x](resolved|fw))?", text.strip())
    if not m:
        raise ConfigError(f"bad formulation {text!r}; expected av|h|hphi optionally with -resolved or -fw")
    return m.group(1), m.group(2)


def _material(table: dict, where: str) -> Material:
    _check_keys(table, {"mu_r", "sigma", "hts"}, where)
    hts = None
    if "hts" in table:
        h = table["hts"]
        _check_keys(h, {"e_c", "j_c", "n"}, f"{where}.hts")
        try:
            hts = HtsLaw(float(h.get("e_c", 1e-4)), float(h["j_c"]), float(h.get("n", 20.0)))
        except KeyError:
            raise ConfigError(f"[{where}.hts] needs j_c") from None
        except ValueError as exc:
            raise ConfigError(f"[{where}.hts]: {exc}") from None
    try:
        return Material(float(table.get("mu_r", 1.0)),
                        None if table.get("sigma") is None else float(table["sigma"]), hts)
    except ValueError as exc:
        raise ConfigError(f"[{where}]: {exc}") from None


def config_from_dict(data: dict, *, base_dir: Path | None = None) -> RunConfig:
    """Merge ``data`` over its preset and validate everything."""
    data = dict(data)
    _check_keys(data, _SECTIONS, "top level")
    preset = data.pop("preset", None) or data.get("geometry", {}).get("preset", "axi20")
    if preset not in PRESETS and preset != "custom":
        raise ConfigError(f"unknown preset {preset!r}; choose from {', '.join(sorted(PRESETS))} or custom")
    merged = _merge(PRESETS.get(preset, PRESETS["axi20"]), data)

    geom = dict(merged.get("geometry", {}))
    geom.pop("preset", None)
    geom_preset = data.get("geometry", {}).get("preset") or preset
    if geom_preset not in ("axi20", "hts20", "custom"):
        raise ConfigError(f"unknown geometry preset {geom_preset!r}")

    mesh_t = merged.get("mesh", {})
    _check_keys(mesh_t, _MESH_KEYS, "mesh")
    refinement = mesh_t.get("refinement", 1)
    if isinstance(refinement, bool) or not isinstance(refinement, int) or refinement < 1:
        raise ConfigError(f"mesh refinement must be an integer >= 1, got {refinement!r}")
    sizing_kw = {k: v for k, v in mesh_t.items() if k != "refinement"}
    try:
        default_sizing = _default_sizing(geom_preset, geom)
    except GeometryError as exc:
        raise ConfigError(f"[geometry]: {exc}") from None
    try:
        sizing = MeshSizing(**{**default_sizing.__dict__, **sizing_kw})
    except (GeometryError, TypeError) as exc:
        raise ConfigError(f"[mesh]: {exc}") from None

    model_t = merged.get("model", {})
    _check_keys(model_t, _MODEL_KEYS, "model")
    formulation, variant = parse_model(str(model_t.get("formulation", "hphi")))
    variant = model_t.get("variant", variant) if variant is None else variant
    if variant not in VARIANTS:
        raise ConfigError(f"variant must be one of {VARIANTS}, got {variant!r}")
    basis = str(model_t.get("basis", "poly:3"))
    try:
        parse_basis(basis)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    order = int(model_t.get("order", 2))
    if order < 1:
        raise ConfigError("quadrature order must be >= 1")
    spurious = _positive(model_t.get("spurious_resistivity", 1.0), "spurious_resistivity")

    mats_t = merged.get("materials", {})
    if "foil" not in mats_t:
        raise ConfigError("[materials.foil] is required")
    foil = _material(mats_t["foil"], "materials.foil")
    if not foil.conducting:
        raise ConfigError("the foil material must be conducting (sigma or hts)")
    regions = {"turn:*": foil}
    for name, table in mats_t.items():
        if name != "foil":
            regions[name] = _material(table, f"materials.{name}")
    materials = MaterialField(regions, spurious_resistivity=float(spurious))

    exc_t = merged.get("excitation", {})
    _check_keys(exc_t, _EXC_KEYS, "excitation")
    try:
        excitation = ExcitationSpec(str(exc_t.get("mode", "harmonic")),
                                    float(_positive(exc_t.get("frequency", 50.0), "frequency")),
                                    float(exc_t.get("amplitude", 1.0)))
    except ValueError as exc:
        raise ConfigError(f"[excitation]: {exc}") from None
    tr_t = merged.get("transient", {})
    _check_keys(tr_t, _TRANSIENT_KEYS, "transient")
    try:
        transient = TransientConfig(**tr_t)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[transient]: {exc}") from None
    if transient.steps_per_period < 20:
        raise ConfigError("transient steps_per_period must be >= 20")
    if not transient.newton_tol > 0:
        raise ConfigError("newton_tol must be positive")
    if foil.hts is not None and excitation.mode == "harmonic":
        raise ConfigError("superconducting models need a transient excitation")

    out_t = merged.get("output", {})
    _check_keys(out_t, _OUTPUT_KEYS, "output")
    out_dir = Path(out_t.get("directory", "out"))
    if base_dir is not None and not out_dir.is_absolute():
        out_dir = base_dir / out_dir
    fields = str(out_t.get("fields", "vtk"))
    if fields not in ("vtk", "csv", "none"):
        raise ConfigError(f"output fields must be vtk, csv or none, got {fields!r}")
    sweep_t = merged.get("sweep", {})
    _check_keys(sweep_t, _SWEEP_KEYS, "sweep")
    try:
        build_benchmark_geometry(geom_preset, geom, sizing)
    except GeometryError as exc:
        raise ConfigError(f"[geometry]: {exc}") from None
    return RunConfig(preset, {"preset": geom_preset, **geom}, sizing, refinement, formulation, variant,
                     basis, order, materials, foil, excitation, transient, out_dir, fields,
                     bool(out_t.get("plots", True)), sweep_t, merged)


def _default_sizing(preset, geom):
    return build_benchmark_geometry(preset, geom).sizing


def load_config(source: str | Path) -> RunConfig:
    """Read a TOML file, or a bare preset name."""
    if str(source) in PRESETS and not Path(source).exists():
        return config_from_dict({"preset": str(source)})
    path = Path(source)
    try:
        text = path.read_text()
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc}") from exc
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config_from_dict(data)


def with_overrides(cfg: RunConfig, *, refine=None, basis=None, formulation=None, out=None,
                   frequency=None) -> RunConfig:
    data = copy.deepcopy(cfg.raw)
    data["preset"] = cfg.preset
    if refine is not None:
        data.setdefault("mesh", {})["refinement"] = int(refine)
    if basis is not None:
        data.setdefault("model", {})["basis"] = basis
    if formulation is not None:
        f, v = parse_model(formulation)
        data.setdefault("model", {})["formulation"] = f
        if v is not None:
            data["model"]["variant"] = v
    if frequency is not None:
        data.setdefault("excitation", {})["frequency"] = float(frequency)
    if out is not None:
        data.setdefault("output", {})["directory"] = str(out)
    return config_from_dict(data)


# --------------------------------------------------------------------------
# running


@dataclass
class RunResult:
    config: RunConfig
    solution: object
    summary: dict
    timing: dict


def _solve(cfg: RunConfig):
    t0 = time.perf_counter()
    geom = build_benchmark_geometry(cfg.geometry["preset"],
                                    {k: v for k, v in cfg.geometry.items() if k != "preset"}, cfg.sizing)
    mesh = generate_structured_mesh(geom, cfg.refinement)
    t_mesh = time.perf_counter()
    fw = None
    if cfg.variant == "fw":
        fw = FoilWindingSpec(geom.n_turns, geom.alpha_map, parse_basis(cfg.basis), cfg.foil, geom.fill_factor)
    system = assemble_system(cfg.formulation, mesh, cfg.materials, cfg.variant, fw, cfg.order)
    t_asm = time.perf_counter()
    if cfg.excitation.mode == "harmonic":
        sol = solve_harmonic(system, cfg.excitation.frequency, cfg.excitation.amplitude)
    else:
        sol = solve_transient(system, cfg.excitation, cfg.transient)
    t_sol = time.perf_counter()
    timing = {"mesh_s": t_mesh - t0, "assembly_s": t_asm - t_mesh, "solve_s": t_sol - t_asm,
              "wall_time_s": t_sol - t0}
    return geom, mesh, system, sol, timing


def _summary(cfg, geom, mesh, system, sol) -> dict:
    s = {
        "version": __version__,
        "preset": cfg.preset,
        "formulation": cfg.formulation,
        "variant": cfg.variant,
        "model": cfg.model,
        "coordinate_system": mesh.coordinate_system,
        "refinement": cfg.refinement,
        "n_turns": geom.n_turns,
        "n_triangles": mesh.n_triangles,
        "n_edges": mesh.n_edges,
        "mode": cfg.excitation.mode,
        "frequency": cfg.excitation.frequency,
        "amplitude": cfg.excitation.amplitude,
    }
    for k, v in system.dofspace.counts().items():
        s[f"dofs_{k}"] = int(v)
    s["dofs"] = s["dofs_total"]
    if cfg.variant == "fw":
        s["basis"] = cfg.basis
        s["n_basis"] = system.fw_spec.basis.n
    if sol.kind == "harmonic":
        lp = pp.lumped_params(sol)
        s.update({k: v for k, v in lp.as_dict().items() if k not in ("frequency", "dofs")})
        s["abs_V_tot"] = abs(lp.V_tot)
        s["loss_mean"] = pp.ac_losses(sol)
        s["residual"] = sol.residual
        if cfg.variant == "fw":
            u = np.asarray(sol.voltages)
            s["voltage_coefficients_re"] = [float(v) for v in u.real]
            s["voltage_coefficients_im"] = [float(v) for v in u.imag]
    else:
        losses = pp.ac_losses(sol)
        s["steps"] = len(sol.times) - 1
        s["loss_cycle_average"] = losses.cycle_average
        s["newton_max"] = int(max(sol.newton_iterations, default=0))
        s["newton_total"] = int(sum(sol.newton_iterations))
        V = np.atleast_1d(pp.total_voltage(sol))
        s["V_tot_final"] = float(V[-1])
        if cfg.variant == "fw":
            s["voltage_coefficients_final"] = [float(v) for v in np.asarray(sol.voltages)[-1]]
    return {k: _plain(v) for k, v in s.items()}


def _plain(v):
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def _write_json(path: Path, data: dict):
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def _write_outputs(cfg: RunConfig, mesh, sol, summary, timing, out: Path):
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "summary.json", summary)
    _write_json(out / "timing.json", {k: round(v, 6) for k, v in timing.items()})
    tv = pp.turn_voltages(sol)
    vals = np.asarray(tv.values)
    header = ["turn"]
    if sol.kind == "harmonic":
        header += ["V_re", "V_im", "abs_V"]
        rows = [[str(i + 1), v.real, v.imag, abs(v)] for i, v in enumerate(vals)]
        if tv.centers is not None:
            header += ["center_re", "center_im"]
            rows = [r + [c.real, c.imag] for r, c in zip(rows, tv.centers)]
    else:
        header += ["V_final"]
        rows = [[str(i + 1), v] for i, v in enumerate(vals[-1])]
    pp.write_csv(out / "turn_voltages.csv", header, rows)
    if sol.kind == "harmonic":
        pp.write_csv(out / "losses.csv", ["frequency", "loss_mean"], [[sol.frequency, summary["loss_mean"]]])
    else:
        ls = pp.ac_losses(sol)
        V = np.atleast_1d(pp.total_voltage(sol))
        pp.write_csv(out / "losses.csv", ["time", "current", "V_tot", "power", "window_average"],
                     [[t, i, v, p, w] for t, i, v, p, w in
                      zip(ls.times, sol.currents, V, ls.power, ls.window_average)])
    if cfg.fields != "none":
        pp.export_fields(sol, out / f"fields.{cfg.fields}", cfg.fields)
    if cfg.plots:
        from . import plotting
        plotting.plot_turn_voltages(pp.TurnVoltages(vals if sol.kind == "harmonic" else vals[-1],
                                                    tv.centers, tv.distribution if sol.kind == "harmonic"
                                                    else None),
                                    out / "turn_voltages.png", label=cfg.model)
        plotting.plot_current_density(sol, out / "current_density.png")
        if sol.kind == "transient":
            plotting.plot_losses(pp.ac_losses(sol), out / "losses.png")


def run(cfg: RunConfig, out: Path | None = None) -> RunResult:
    """Solve one configuration and write its result files."""
    out = Path(out) if out is not None else cfg.output_dir
    geom, mesh, system, sol, timing = _solve(cfg)
    summary = _summary(cfg, geom, mesh, system, sol)
    _write_outputs(cfg, mesh, sol, summary, timing, out)
    log.info("%s: %d DoFs, %.2f s -> %s", cfg.model, summary["dofs"], timing["wall_time_s"], out)
    return RunResult(cfg, sol, summary, timing)


# --------------------------------------------------------------------------
# sweep and compare


def _turn_values(sol):
    v = np.asarray(pp.turn_voltages(sol).values)
    return v if sol.kind == "harmonic" else v[-1]


def sweep(cfg: RunConfig, axis: str, values, models=None, reference: str | None = None,
          out: Path | None = None) -> list[dict]:
    """One run per value and model; 1 - R^2 of per-turn voltages against ``reference``."""
    out = Path(out) if out is not None else cfg.output_dir
    if axis not in ("refinement", "basis", "frequency"):
        raise ConfigError(f"sweep axis must be refinement, basis or frequency, got {axis!r}")
    values = list(values)
    if not values:
        raise ConfigError("a sweep needs at least one value")
    models = list(models or [cfg.model])
    for m in models:
        parse_model(m)
    if reference is not None:
        parse_model(reference)
    rows = []
    ref_vals = None
    for value in values:
        kw = {"refinement": {"refine": value}, "basis": {"basis": str(value)},
              "frequency": {"frequency": value}}[axis]
        if reference is not None:
            rc = with_overrides(cfg, formulation=reference, **kw)
            # a resolved reference does not depend on the basis
            shared = axis == "basis" and rc.variant == "resolved"
            if ref_vals is None or not shared:
                rr = run(rc, out / ("reference" if shared else f"reference_{_slug(value)}"))
                ref_vals = _turn_values(rr.solution)
        for m in models:
            mc = with_overrides(cfg, formulation=m, **kw)
            res = run(mc, out / f"{mc.model}_{_slug(value)}")
            row = {"axis": axis, "value": value, "model": mc.model, "dofs": res.summary["dofs"]}
            for key in ("R_tot", "L_tot"):
                if key in res.summary:
                    row[key] = res.summary[key]
            if "loss_cycle_average" in res.summary:
                row["loss"] = res.summary["loss_cycle_average"]
            if ref_vals is not None:
                row["one_minus_r2"] = 1.0 - pp.r_squared(ref_vals, _turn_values(res.solution))
            rows.append(row)
    out.mkdir(parents=True, exist_ok=True)
    cols = ["axis", "value", "model", "dofs", "R_tot", "L_tot", "loss", "one_minus_r2"]
    cols = [c for c in cols if any(c in r for r in rows)]
    pp.write_csv(out / "sweep.csv", cols,
                 [[r[c] if isinstance(r.get(c), str) else (str(r[c]) if c in ("value", "dofs") else
                                                           r.get(c, math.nan)) for c in cols]
                  for r in rows])
    if cfg.plots:
        from . import plotting
        plotting.plot_sweep(rows, axis, out / "sweep.png")
    return rows


def _slug(value) -> str:
    return re.sub(r"[^A-Za-z0-9.]+", "_", str(value))


def _read_run(d: Path):
    d = Path(d)
    try:
        summary = json.loads((d / "summary.json").read_text())
        with open(d / "turn_voltages.csv", newline="") as fh:
            tv = list(csv.DictReader(fh))
        with open(d / "losses.csv", newline="") as fh:
            losses = list(csv.DictReader(fh))
    except OSError as exc:
        raise OSError(f"cannot read run directory {d}: {exc}") from exc
    if "V_re" in tv[0]:
        v = np.array([complex(float(r["V_re"]), float(r["V_im"])) for r in tv])
    else:
        v = np.array([float(r["V_final"]) for r in tv])
    power = np.array([float(r["power"]) for r in losses]) if losses and "power" in losses[0] else None
    return summary, v, power


def compare(dir_a, dir_b) -> dict:
    """Per-turn max relative deviation, R^2 and loss-curve deviation of two runs."""
    sa, va, pa = _read_run(dir_a)
    sb, vb, pb = _read_run(dir_b)
    for key in ("n_turns", "mode", "frequency", "amplitude"):
        if sa.get(key) != sb.get(key):
            raise ConfigError(f"runs are not comparable: {key} differs ({sa.get(key)} vs {sb.get(key)})")
    scale = np.abs(va)
    dev = np.abs(vb - va) / np.where(scale > 0, scale, 1.0)
    try:
        r2 = pp.r_squared(va, vb)
    except pp.PostprocessingError:
        r2 = 1.0 if np.array_equal(va, vb) else math.nan
    report = {"run_a": str(dir_a), "run_b": str(dir_b), "model_a": sa.get("model"), "model_b": sb.get("model"),
              "max_relative_deviation": float(dev.max()), "r_squared": float(r2),
              "one_minus_r2": float(1.0 - r2)}
    if pa is not None and pb is not None:
        if len(pa) != len(pb):
            raise ConfigError("loss curves have different lengths")
        report["loss_max_deviation"] = float(np.max(np.abs(pb - pa)) / max(np.max(np.abs(pa)), 1e-300))
        report["loss_cycle_a"] = sa.get("loss_cycle_average")
        report["loss_cycle_b"] = sb.get("loss_cycle_average")
        la, lb = report["loss_cycle_a"], report["loss_cycle_b"]
        if la and lb is not None:
            report["loss_cycle_relative_difference"] = abs(lb - la) / abs(la)
    return report


# --------------------------------------------------------------------------
# entry point


def _values(axis, text):
    parts = [p for p in text.split(",") if p]
    if axis == "refinement":
        try:
            return [int(p) for p in parts]
        except ValueError:
            raise ConfigError(f"refinement values must be integers: {text!r}") from None
    if axis == "frequency":
        try:
            return [float(p) for p in parts]
        except ValueError:
            raise ConfigError(f"frequency values must be numbers: {text!r}") from None
    return parts


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="foilfem", description="2-D foil-winding finite-element solver")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def common(q):
        q.add_argument("config", help="TOML config file or preset name (axi20, hts20)")
        q.add_argument("--refine", type=int)
        q.add_argument("--basis", help="poly:p or pwl:N")
        q.add_argument("--formulation", help="av|h|hphi, optionally with -resolved or -fw")
        q.add_argument("--out", help="output directory")

    common(sub.add_parser("run", help="solve one configuration"))
    sw = sub.add_parser("sweep", help="refinement, basis or frequency sweep")
    common(sw)
    sw.add_argument("--axis", choices=("refinement", "basis", "frequency"))
    sw.add_argument("--values", help="comma-separated values")
    sw.add_argument("--models", help="comma-separated models, e.g. av-fw,hphi-fw")
    sw.add_argument("--reference", help="model that defines R^2, e.g. hphi-resolved")
    cp = sub.add_parser("compare", help="compare two run directories")
    cp.add_argument("run_a")
    cp.add_argument("run_b")
    cp.add_argument("--out", help="write the report as JSON")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s: %(message)s")
    try:
        if args.command == "compare":
            report = compare(args.run_a, args.run_b)
            text = json.dumps(report, indent=2, sort_keys=True)
            print(text)
            if args.out:
                Path(args.out).write_text(text + "\n")
            return EXIT_OK
        cfg = with_overrides(load_config(args.config), refine=args.refine, basis=args.basis,
                             formulation=args.formulation, out=args.out)
        if args.command == "run":
            res = run(cfg)
            keys = ("model", "dofs", "R_tot", "L_tot", "loss_mean", "loss_cycle_average", "newton_max")
            print(" ".join(f"{k}={res.summary[k]}" for k in keys if k in res.summary))
            return EXIT_OK
        axis = args.axis or cfg.sweep.get("axis")
        if axis is None:
            raise ConfigError("sweep needs --axis or [sweep] axis")
        values = _values(axis, args.values) if args.values else cfg.sweep.get("values")
        if values is None:
            raise ConfigError("sweep needs --values or [sweep] values")
        models = args.models.split(",") if args.models else cfg.sweep.get("models")
        reference = args.reference or cfg.sweep.get("reference")
        rows = sweep(cfg, axis, values, models, reference)
        for r in rows:
            print(" ".join(f"{k}={v}" for k, v in r.items()))
        return EXIT_OK
    except (ConfigError, GeometryError, CapabilityError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
