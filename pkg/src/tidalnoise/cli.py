"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 config/validation error,
3 numerical failure. Errors go to stderr prefixed with ``error_code: N``.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import tempfile
from pathlib import Path

from . import __version__
from .bioimpact import SpeciesDataError, default_mammal
from .config import ConfigError, load_config
from .flowdata import FlowDataError, synthesize_semidiurnal, write_flow_csv
from .scenario import (RunResult, ScenarioError, SweepSpec, run_scenario, settled_correlations, sweep,
                       tts_onset_speed)
from .turbine import SimulationError

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

STATE_COLUMNS = ("t_s", "u_mps", "omega_rad_s", "lambda", "cp", "torque_rotor_nm", "torque_gen_nm", "p_mech_w")
SPL_COLUMNS = ("t_s", "r_m", "spl_turb_db", "spl_gear_db", "spl_gen_db", "spl_total_db")
IMPACT_COLUMNS = ("species", "tts_db", "pts_db", "audible_radius_m", "tts_radius_m", "pts_radius_m")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _num(x):
    """Serializable number: silent (-inf) and NaN become None."""
    if x is None or (isinstance(x, int) and not isinstance(x, bool)):
        return x
    x = float(x)
    return x if math.isfinite(x) else None


def _cell(x) -> str:
    if isinstance(x, str):
        return x
    v = _num(x)
    return "" if v is None else repr(v)


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_table(out_dir: Path, stem: str, columns, rows, fmt: str) -> Path:
    if fmt == "json":
        records = [{c: (v if isinstance(v, str) else _num(v)) for c, v in zip(columns, row)} for row in rows]
        path = out_dir / f"{stem}.json"
        write_atomic(path, json.dumps(records, indent=1) + "\n")
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
        path = out_dir / f"{stem}.csv"
        write_atomic(path, buf.getvalue())
    return path


def state_rows(result: RunResult):
    for s in result.states:
        yield (s.t, s.u, s.omega, s.lam, s.cp, s.torque_rotor, s.torque_gen, s.p_mech)


def spl_rows(result: RunResult):
    for s, row in zip(result.states, result.received):
        for rec in row:
            ps = rec.per_source
            yield (s.t, rec.r, ps["turb"], ps.get("gear"), ps["gen"], rec.total)


def impact_rows(impacts):
    for i in impacts:
        yield (i.species, i.tts_level, i.pts_level, i.audible_radius, i.tts_radius, i.pts_radius)


def _summary(args, cfg, resolved, results: dict) -> dict:
    inputs = {"config": _sha256(args.config)}
    flow = resolved["flow"]
    if "path" in flow:
        inputs["flow"] = _sha256(flow["path"])
    inputs["species"] = _sha256(resolved["species"])
    return {
        "tool": "tidalnoise",
        "version": __version__,
        "command": args.command,
        "overrides": list(args.set),
        "config": resolved,
        "applied_defaults": list(cfg.applied_defaults),
        "input_sha256": inputs,
        "results": results,
    }


def _write_summary(out: Path, summary: dict) -> None:
    write_atomic(out / "summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")


def _run_results(result: RunResult) -> dict:
    return {
        "spl_max_50m_db": _num(result.spl_max_50m),
        "spl_max_db": {repr(r): _num(result.spl_max(r)) for r in result.distances},
        "energy_j": result.energy,
        "max_spl_time_s": result.states[result.max_index].t,
        "source_levels_at_max_db": {k: _num(v) for k, v in result.levels[result.max_index].as_dict().items()},
        "n_states": len(result.states),
    }


def _pick_impacts(impacts, name):
    if name is None:
        return impacts
    picked = [i for i in impacts if i.species == name]
    if not picked:
        raise SpeciesDataError(f"species {name!r} not in the configured species set")
    return picked


def cmd_run(args, cfg, resolved, out):
    result = run_scenario(cfg)
    write_table(out, "states", STATE_COLUMNS, state_rows(result), args.format)
    write_table(out, "spl", SPL_COLUMNS, spl_rows(result), args.format)
    write_table(out, "impacts", IMPACT_COLUMNS, impact_rows(result.impacts), args.format)
    _write_summary(out, _summary(args, cfg, resolved, _run_results(result)))


def cmd_assess(args, cfg, resolved, out):
    result = run_scenario(cfg)
    impacts = _pick_impacts(result.impacts, args.species)
    write_table(out, "impacts", IMPACT_COLUMNS, impact_rows(impacts), args.format)
    _write_summary(out, _summary(args, cfg, resolved, _run_results(result)))


def _parse_values(param: str, text: str | None):
    if not text:
        raise UsageError("sweep needs --values")
    items = [v.strip() for v in text.split(",") if v.strip()]
    if param == "drivetrain_kind":
        return tuple(items)
    try:
        return tuple(float(v) for v in items)
    except ValueError:
        raise ConfigError(f"--values for {param} must be numbers, got {text!r}") from None


def cmd_sweep(args, cfg, resolved, out):
    if not args.param:
        raise UsageError("sweep needs --param")
    spec = SweepSpec(args.param, _parse_values(args.param, args.values))
    rows = sweep(cfg, spec)
    write_table(out, "sweep", ("value", "spl_max_50m_db", "energy_j"),
                ((r.value, r.spl_max_50m, r.energy) for r in rows), args.format)
    write_table(out, "sweep_impacts", ("value",) + IMPACT_COLUMNS,
                ((r.value,) + row for r in rows for row in impact_rows(r.impacts)), args.format)
    results = {"parameter": spec.parameter,
               "rows": [{"value": r.value, "spl_max_50m_db": _num(r.spl_max_50m), "energy_j": r.energy}
                        for r in rows]}
    _write_summary(out, _summary(args, cfg, resolved, results))


def cmd_correlate(args, cfg, resolved, out):
    result = run_scenario(cfg)
    r = args.distance if args.distance is not None else 50.0
    corr = settled_correlations(result, cfg.settle_time, r)
    results = {"distance_m": r, "settle_time_s": cfg.settle_time, "n_samples": corr["n"],
               "pearson_spl_omega": corr["omega"], "pearson_spl_u": corr["u"]}
    write_table(out, "correlation", ("distance_m", "n_samples", "pearson_spl_omega", "pearson_spl_u"),
                [(r, corr["n"], corr["omega"], corr["u"])], args.format)
    _write_summary(out, _summary(args, cfg, resolved, results))


def cmd_onset(args, cfg, resolved, out):
    species = cfg.load_species()
    if args.species is None:
        sp = default_mammal(species)
    else:
        matches = [s for s in species if s.name == args.species]
        if not matches:
            raise SpeciesDataError(f"species {args.species!r} not in the configured species set")
        sp = matches[0]
    r = args.distance if args.distance is not None else 100.0
    u = tts_onset_speed(cfg, sp, r)
    results = {"species": sp.name, "distance_m": r, "onset_speed_mps": u,
               "status": "onset" if u is not None else "no onset in range"}
    write_table(out, "onset", ("species", "distance_m", "onset_speed_mps"), [(sp.name, r, u)], args.format)
    _write_summary(out, _summary(args, cfg, resolved, results))


def cmd_synth_flow(args, out):
    series = synthesize_semidiurnal(args.u_mean, args.u_amp, args.ti, args.dt, args.duration)
    path = out / "flow.csv"
    buf = path.with_name(".flow.csv.build")
    write_flow_csv(series, buf)
    os.replace(buf, path)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tidalnoise", description="Tidal turbine noise and marine impact simulator.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True, help="scenario JSON file")
            p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                           help="override a config value, e.g. control.f_s=2000 (repeatable)")
            p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--out", default=".", help="output directory")

    common(sub.add_parser("run", help="simulate a scenario and write all tables"))
    p = sub.add_parser("sweep", help="sweep one control-strategy parameter")
    common(p)
    p.add_argument("--param", choices=("f_s", "kopt_factor", "drivetrain_kind"))
    p.add_argument("--values", help="comma-separated sweep values")
    p = sub.add_parser("assess", help="impact radii at the loudest timestep")
    common(p)
    p.add_argument("--species", help="restrict output to one species name")
    p = sub.add_parser("correlate", help="SPL vs rotor/flow speed correlation on the settled window")
    common(p)
    p.add_argument("--distance", type=float, help="receiver range in m (default 50)")
    p = sub.add_parser("onset", help="lowest flow speed reaching the TTS level")
    common(p)
    p.add_argument("--distance", type=float, help="receiver range in m (default 100)")
    p.add_argument("--species", help="species name (default: first mammal)")
    p = sub.add_parser("synth-flow", help="write a synthetic semi-diurnal flow CSV")
    common(p, config=False)
    p.add_argument("--u-mean", type=float, required=True)
    p.add_argument("--u-amp", type=float, required=True)
    p.add_argument("--ti", type=float, default=0.10)
    p.add_argument("--dt", type=float, default=1.0)
    p.add_argument("--duration", type=float, required=True)
    return parser


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "assess": cmd_assess,
            "correlate": cmd_correlate, "onset": cmd_onset}


def _fail(code: int, message: str) -> int:
    print(f"error_code: {code}: {message}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        return _fail(EXIT_USAGE, str(exc))

    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "synth-flow":
            cmd_synth_flow(args, out)
        else:
            cfg, resolved = load_config(args.config, args.set)
            COMMANDS[args.command](args, cfg, resolved, out)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        return _fail(EXIT_USAGE, str(exc))
    except (SimulationError, ArithmeticError) as exc:
        return _fail(EXIT_NUMERIC, f"numerical failure: {exc}")
    except (ConfigError, FlowDataError, SpeciesDataError, ScenarioError, OSError, ValueError) as exc:
        return _fail(EXIT_CONFIG, str(exc))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
