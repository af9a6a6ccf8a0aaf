"""End-to-end scenario runs, control-strategy sweeps and post-processing."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import acoustics as ac
from .acoustics import AcousticsConfig, ReceivedSpl, SourceLevels
from .bioimpact import (ExposureCriteria, ImpactResult, SpeciesProfile, assess,
                        load_species_csv, tts_threshold)
from .flowdata import FlowSeries, load_flow_csv, synthesize_semidiurnal, window
from .turbine import OperatingState, Plant, equilibrium_state, simulate

KOPT_RANGE = (0.8, 1.2)
FS_RANGE = (1000.0, 3000.0)
SWEEP_PARAMETERS = ("f_s", "kopt_factor", "drivetrain_kind")
REFERENCE_RANGE_M = 50.0
ONSET_BRACKET = (0.5, 4.0)


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class SynthSpec:
    u_mean: float
    u_amp: float
    ti: float
    dt: float
    duration: float


@dataclass(frozen=True)
class FlowSource:
    """Either a CSV path or a semi-diurnal synthesis recipe."""

    path: Path | None = None
    synth: SynthSpec | None = None

    def __post_init__(self):
        if (self.path is None) == (self.synth is None):
            raise ScenarioError("flow needs exactly one of 'path' or 'synth'")

    def load(self) -> FlowSeries:
        if self.path is not None:
            return load_flow_csv(self.path)
        s = self.synth
        return synthesize_semidiurnal(s.u_mean, s.u_amp, s.ti, s.dt, s.duration)


@dataclass(frozen=True)
class ScenarioConfig:
    flow: FlowSource
    plant: Plant
    acoustics: AcousticsConfig
    species: Path | tuple[SpeciesProfile, ...]
    window: tuple[float, float] | None = None
    distances: tuple[float, ...] = (10.0, 50.0, 100.0, 200.0)
    exposure: ExposureCriteria = ExposureCriteria()
    dt: float = 0.01
    seed: int = 0  # reserved; every model path is deterministic
    settle_time: float = 25.0
    initial_omega: float | None = None
    applied_defaults: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if not self.distances:
            raise ScenarioError("at least one receiver distance is required")
        if any(not r >= 1 for r in self.distances):
            raise ScenarioError(f"receiver distances must be >= 1 m, got {list(self.distances)}")
        if self.window is not None and not self.window[0] < self.window[1]:
            raise ScenarioError(f"window must satisfy t0 < t1, got {self.window}")
        if not self.dt > 0:
            raise ScenarioError("dt must be positive")
        if self.settle_time < 0:
            raise ScenarioError("settle_time must be non-negative")

    def load_flow(self) -> FlowSeries:
        flow = self.flow.load()
        if self.window is not None:
            flow = window(flow, *self.window)
        return flow

    def load_species(self) -> list[SpeciesProfile]:
        if isinstance(self.species, (str, Path)):
            return load_species_csv(self.species)
        return list(self.species)


@dataclass
class RunResult:
    states: list[OperatingState]
    levels: list[SourceLevels]
    distances: tuple[float, ...]
    received: list[list[ReceivedSpl]]
    energy: float  # J, trapezoid of mechanical power
    spl_max_50m: float
    max_index: int
    impacts: list[ImpactResult]

    @property
    def t(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    def total_at(self, r: float) -> np.ndarray:
        """Total received SPL time series at range ``r``."""
        return np.array([ac.propagate(lv.total, r) for lv in self.levels])

    def spl_max(self, r: float) -> float:
        return ac.propagate(self.levels[self.max_index].total, r)


def _trapezoid(y: np.ndarray, x: np.ndarray) -> float:
    if y.size < 2:
        return 0.0
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(x)))


def run_scenario(cfg: ScenarioConfig, flow: FlowSeries | None = None) -> RunResult:
    """Simulate the drivetrain, evaluate every noise source and assess impacts.

    Impacts are evaluated at the timestep with the loudest combined source level.
    """
    flow = cfg.load_flow() if flow is None else flow
    species = cfg.load_species()
    states = simulate(flow, cfg.plant, cfg.dt, cfg.initial_omega)
    levels = [ac.source_levels(s, cfg.plant, cfg.acoustics) for s in states]
    received = [[ac.received_from_levels(lv, r) for r in cfg.distances] for lv in levels]

    totals = [lv.total for lv in levels]
    # first occurrence of the maximum keeps the choice deterministic
    max_index = max(range(len(totals)), key=lambda i: (totals[i], -i))
    spl_max_50m = ac.propagate(totals[max_index], REFERENCE_RANGE_M)

    p = np.array([s.p_mech for s in states])
    t = np.array([s.t for s in states])
    energy = max(_trapezoid(p, t), 0.0)
    impacts = assess(totals[max_index], species, cfg.exposure)
    return RunResult(states, levels, tuple(cfg.distances), received, energy, spl_max_50m, max_index, impacts)


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    values: tuple[Any, ...]

    def __post_init__(self):
        if self.parameter not in SWEEP_PARAMETERS:
            raise ScenarioError(f"unknown sweep parameter {self.parameter!r}; choose from {SWEEP_PARAMETERS}")
        if not self.values:
            raise ScenarioError("sweep needs at least one value")
        if len(set(self.values)) != len(self.values):
            raise ScenarioError("sweep values must be distinct")
        for v in self.values:
            _check_sweep_value(self.parameter, v)


def _check_sweep_value(parameter: str, value) -> None:
    if parameter == "drivetrain_kind":
        if value not in ("geared", "direct"):
            raise ScenarioError(f"drivetrain_kind must be 'geared' or 'direct', got {value!r}")
        return
    lo, hi = KOPT_RANGE if parameter == "kopt_factor" else FS_RANGE
    if not isinstance(value, (int, float)) or not lo <= value <= hi:
        raise ScenarioError(f"{parameter}={value!r} outside the supported range [{lo}, {hi}]")


@dataclass
class SweepRow:
    value: Any
    spl_max_50m: float
    energy: float
    impacts: list[ImpactResult]
    result: RunResult = field(repr=False)


def variant(base: ScenarioConfig, parameter: str, value) -> ScenarioConfig:
    """Copy of ``base`` with one control-strategy parameter changed."""
    _check_sweep_value(parameter, value)
    plant = base.plant
    if parameter == "f_s":
        plant = replace(plant, control=replace(plant.control, f_s=float(value)))
    elif parameter == "kopt_factor":
        plant = replace(plant, control=replace(plant.control, kopt_factor=float(value)))
    elif value == "direct":
        plant = replace(plant, drivetrain=plant.drivetrain.as_direct())
    elif not plant.drivetrain.geared:
        raise ScenarioError("cannot derive a geared variant from a direct-drive base configuration")
    return replace(base, plant=plant)


def worker_count(n_jobs: int) -> int:
    env = os.environ.get("TCCS_THREADS")
    cap = int(env) if env and env.strip().isdigit() and int(env) > 0 else (os.cpu_count() or 1)
    return max(1, min(cap, n_jobs))


def sweep(base: ScenarioConfig, spec: SweepSpec, workers: int | None = None) -> list[SweepRow]:
    """Run one scenario per sweep value; rows come back sorted by value."""
    values = sorted(spec.values)
    configs = [variant(base, spec.parameter, v) for v in values]
    flow = base.load_flow()
    n = workers or worker_count(len(configs))
    if n == 1:
        results = [run_scenario(c, flow) for c in configs]
    else:
        with ThreadPoolExecutor(max_workers=n) as pool:
            results = list(pool.map(lambda c: run_scenario(c, flow), configs))
    return [SweepRow(v, r.spl_max_50m, r.energy, r.impacts, r) for v, r in zip(values, results)]


def pearson_correlation(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson product-moment correlation of two equal-length series."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("correlation needs two 1-D series of equal length")
    if x.size < 3:
        raise ValueError("correlation needs at least 3 points")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise ValueError("correlation is undefined for a constant series")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def settled_correlations(result: RunResult, settle_time: float = 25.0,
                         r: float = REFERENCE_RANGE_M) -> dict[str, float]:
    """Correlation of total SPL at ``r`` with rotor speed and with flow speed.

    Only timesteps at least ``settle_time`` seconds after the start are used.
    """
    t = result.t
    spl = result.total_at(r)
    keep = (t >= t[0] + settle_time - 1e-9) & np.isfinite(spl)
    omega = np.array([s.omega for s in result.states])[keep]
    u = np.array([s.u for s in result.states])[keep]
    return {
        "omega": pearson_correlation(spl[keep], omega),
        "u": pearson_correlation(spl[keep], u),
        "n": int(keep.sum()),
    }


def equilibrium_spl(cfg: ScenarioConfig, u: float, r: float, ti: float) -> float:
    """Total received SPL at ``r`` with the rotor settled in a constant flow ``u``."""
    state = equilibrium_state(u, cfg.plant, ti)
    return ac.received_spl(state, r, cfg.plant, cfg.acoustics).total


def tts_onset_speed(cfg: ScenarioConfig, species: SpeciesProfile, r: float = 100.0,
                    bracket: tuple[float, float] = ONSET_BRACKET, tol: float = 0.01,
                    ti: float | None = None) -> float | None:
    """Lowest constant flow speed at which SPL at ``r`` reaches the species TTS level.

    Bisection to ``tol`` m/s over ``bracket``; returns the upper end of the
    final bracket, so SPL(U - tol) < TTS <= SPL(U). Returns None when the
    threshold is not crossed inside the bracket.
    """
    if ti is None:
        ti = float(np.mean(cfg.load_flow().ti))
    threshold = tts_threshold(species.gtv, cfg.exposure.t_exposure)

    def reached(u):
        return equilibrium_spl(cfg, u, r, ti) >= threshold

    lo, hi = bracket
    if reached(lo):
        return lo
    if not reached(hi):
        return None
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if reached(mid):
            hi = mid
        else:
            lo = mid
    return hi


@dataclass
class Comparison:
    d_spl_max: dict[float, float]  # b - a, dB, per receiver distance
    d_energy_pct: float  # (b - a) / a * 100
    d_radii: dict[str, dict[str, float]]  # species -> radius kind -> b - a, m


def _delta(a: float, b: float) -> float:
    # two silent levels compare equal; a single silent side yields +/- inf
    return 0.0 if a == b else b - a


def compare(a: RunResult, b: RunResult) -> Comparison:
    """Element-wise differences of ``b`` relative to ``a``."""
    if a.distances != b.distances:
        raise ScenarioError("cannot compare runs with different receiver distances")
    names_a = [i.species for i in a.impacts]
    names_b = [i.species for i in b.impacts]
    if names_a != names_b:
        raise ScenarioError("cannot compare runs with different species lists")
    d_spl = {r: _delta(a.spl_max(r), b.spl_max(r)) for r in a.distances}
    if a.energy > 0:
        d_energy = (b.energy - a.energy) / a.energy * 100.0
    elif b.energy == a.energy:
        d_energy = 0.0
    else:
        raise ScenarioError("relative energy change undefined: reference run produced no energy")
    d_radii = {
        ia.species: {
            k: getattr(ib, k) - getattr(ia, k)
            for k in ("audible_radius", "tts_radius", "pts_radius")
        }
        for ia, ib in zip(a.impacts, b.impacts)
    }
    return Comparison(d_spl, d_energy, d_radii)
