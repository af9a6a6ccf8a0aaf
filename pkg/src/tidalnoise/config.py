"""Scenario configuration: JSON loading, defaults, overrides and validation."""

from __future__ import annotations

import copy
import json
from importlib import resources
from pathlib import Path
from typing import Any, Iterable

from .acoustics import AcousticsConfig, TurbulenceNoiseParams
from .bioimpact import ExposureCriteria
from .scenario import FS_RANGE, KOPT_RANGE, FlowSource, ScenarioConfig, SynthSpec
from .turbine import ControlConfig, DrivetrainConfig, Plant, RotorConfig

FLOW_KEYS = {"path", "synth"}
SYNTH_KEYS = ("u_mean", "u_amp", "ti", "dt", "duration")
TURBULENCE_KEYS = ("c", "blades", "chord", "lambda1", "mu", "f_corr", "a_s", "f_lo", "f_hi")


class ConfigError(ValueError):
    pass


def default_config() -> dict:
    text = resources.files("tidalnoise").joinpath("data/default_config.json").read_text(encoding="utf-8")
    return json.loads(text)


def bundled_species_path() -> Path:
    return Path(str(resources.files("tidalnoise").joinpath("data/species.csv")))


def parse_override(item: str) -> tuple[list[str], Any]:
    """``"control.f_s=2000"`` -> (["control", "f_s"], 2000). Values are JSON when they parse."""
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not of the form key=value")
    key, raw = item.split("=", 1)
    keys = [k for k in key.strip().split(".") if k]
    if not keys:
        raise ConfigError(f"override {item!r} has an empty key")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return keys, value


def apply_overrides(raw: dict, overrides: Iterable[str]) -> dict:
    raw = copy.deepcopy(raw)
    for item in overrides:
        keys, value = parse_override(item)
        node = raw
        for k in keys[:-1]:
            node = node.setdefault(k, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {item!r}: {k!r} is not a section")
        node[keys[-1]] = value
    return raw


def _merge(defaults: dict, given: dict, prefix: str, applied: list[str]) -> dict:
    unknown = sorted(set(given) - set(defaults))
    if unknown:
        where = f" in '{prefix[:-1]}'" if prefix else ""
        raise ConfigError(f"unknown config key(s){where}: {', '.join(prefix + k for k in unknown)}")
    out = {}
    for key, dval in defaults.items():
        if key not in given:
            out[key] = copy.deepcopy(dval)
            applied.append(prefix + key)
        elif isinstance(dval, dict):
            if not isinstance(given[key], dict):
                raise ConfigError(f"{prefix + key} must be an object")
            out[key] = _merge(dval, given[key], prefix + key + ".", applied)
        else:
            out[key] = given[key]
    return out


def resolve(raw: dict, base_dir: Path | None = None) -> tuple[dict, list[str]]:
    """Merge ``raw`` onto the packaged defaults; returns (resolved dict, defaulted keys)."""
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    raw = dict(raw)
    if "flow" not in raw:
        raise ConfigError("flow: required (give 'path' or 'synth')")
    flow = raw.pop("flow")
    if not isinstance(flow, dict) or set(flow) - FLOW_KEYS or len(flow) != 1:
        raise ConfigError("flow must be an object with exactly one of 'path' or 'synth'")
    if "synth" in flow:
        synth = flow["synth"]
        if not isinstance(synth, dict) or set(synth) != set(SYNTH_KEYS):
            raise ConfigError(f"flow.synth needs exactly the keys {', '.join(SYNTH_KEYS)}")
    elif base_dir is not None:
        p = Path(flow["path"])
        flow = {"path": str(p if p.is_absolute() else (base_dir / p))}

    applied: list[str] = []
    resolved = _merge(default_config(), raw, "", applied)
    resolved["flow"] = flow
    if resolved["species"] is None:
        resolved["species"] = str(bundled_species_path())
    elif base_dir is not None and not Path(resolved["species"]).is_absolute():
        resolved["species"] = str(base_dir / resolved["species"])
    return resolved, applied


def _number(d: dict, key: str, where: str) -> float:
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}.{key} must be a number, got {v!r}")
    return float(v)


def build(resolved: dict, applied: Iterable[str] = ()) -> ScenarioConfig:
    """Turn a resolved config dict into a validated :class:`ScenarioConfig`."""
    def guard(section, fn):
        try:
            return fn()
        except ConfigError:
            raise
        except (ValueError, TypeError, KeyError) as exc:
            raise ConfigError(f"{section}: {exc}") from None

    ctl = resolved["control"]
    kopt = _number(ctl, "kopt_factor", "control")
    if not KOPT_RANGE[0] <= kopt <= KOPT_RANGE[1]:
        raise ConfigError(
            f"control.kopt_factor={kopt} outside the MPPT coefficient range "
            f"[{KOPT_RANGE[0]}, {KOPT_RANGE[1]}]"
        )
    fs = _number(ctl, "f_s", "control")
    if not FS_RANGE[0] <= fs <= FS_RANGE[1]:
        raise ConfigError(
            f"control.f_s={fs} outside the switching-frequency range [{FS_RANGE[0]:g}, {FS_RANGE[1]:g}] Hz"
        )
    control = guard("control", lambda: ControlConfig(kopt, fs, _number(ctl, "ripple_gain", "control")))

    rot = resolved["rotor"]
    rotor = guard("rotor", lambda: RotorConfig(
        D=_number(rot, "D", "rotor"),
        rho=_number(rot, "rho", "rotor"),
        cp_curve=tuple(tuple(p) for p in rot["cp_curve"]),
        lambda_eps=_number(rot, "lambda_eps", "rotor"),
        allow_super_betz=bool(rot["allow_super_betz"]),
    ))

    dtr = resolved["drivetrain"]
    kind = dtr["kind"]
    drivetrain = guard("drivetrain", lambda: DrivetrainConfig(
        kind=kind,
        gear_ratio=1.0 if kind == "direct" else _number(dtr, "gear_ratio", "drivetrain"),
        gear_stages=int(_number(dtr, "gear_stages", "drivetrain")),
        inertia=_number(dtr, "inertia", "drivetrain"),
        rated_power=_number(dtr, "rated_power", "drivetrain"),
    ))

    aco = resolved["acoustics"]
    acoustics = guard("acoustics", lambda: AcousticsConfig(
        turbulence=TurbulenceNoiseParams(**{k: _number(aco, k, "acoustics") for k in TURBULENCE_KEYS}),
        air_basis=aco["air_basis"],
        gear_rpm=aco["gear_rpm"],
    ))

    flow = resolved["flow"]
    if "synth" in flow:
        source = guard("flow.synth", lambda: FlowSource(
            synth=SynthSpec(**{k: _number(flow["synth"], k, "flow.synth") for k in SYNTH_KEYS})))
    else:
        source = FlowSource(path=Path(flow["path"]))

    win = resolved["window"]
    if win is not None:
        if not isinstance(win, (list, tuple)) or len(win) != 2:
            raise ConfigError("window must be [t0, t1] or null")
        win = (float(win[0]), float(win[1]))

    omega0 = resolved["initial_omega"]
    return guard("scenario", lambda: ScenarioConfig(
        flow=source,
        plant=Plant(rotor, drivetrain, control),
        acoustics=acoustics,
        species=Path(resolved["species"]),
        window=win,
        distances=tuple(float(r) for r in resolved["distances"]),
        exposure=ExposureCriteria(_number(resolved["exposure"], "t_exposure", "exposure")),
        dt=_number(resolved, "dt", "config"),
        seed=int(resolved["seed"]),
        settle_time=_number(resolved, "settle_time", "config"),
        initial_omega=None if omega0 is None else float(omega0),
        applied_defaults=tuple(applied),
    ))


def load_config(path, overrides: Iterable[str] = ()) -> tuple[ScenarioConfig, dict]:
    """Read, default, override and validate a scenario config file.

    Returns the config and the fully resolved dict (for echoing into outputs).
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    raw = apply_overrides(raw, overrides)
    resolved, applied = resolve(raw, path.parent)
    return build(resolved, applied), resolved
