"""Source levels, spreading loss and incoherent summation for the turbine noise sources.

All underwater levels are dB re 1 uPa; source levels are referred to 1 m.
A silent source is represented by :data:`SILENT` and is skipped, never
added, by :func:`combine_incoherent`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Literal

import numpy as np

from .turbine import OperatingState, Plant, RotorConfig, switching_ripple_rms

SILENT = -math.inf

RHO_C_WATER = 1.5e6  # rayl
RHO_C_AIR = 415.0  # rayl
P_REF_AIR_UPA = 20.0
P_REF_WATER_UPA = 1.0

#: Reference shift 20 uPa -> 1 uPa.
AIR_REF_SHIFT_DB = 20.0 * math.log10(P_REF_AIR_UPA / P_REF_WATER_UPA)
#: Equal-intensity impedance shift from air to water.
IMPEDANCE_SHIFT_DB = 10.0 * math.log10(RHO_C_WATER / RHO_C_AIR)
#: Sound power level re 1 pW radiated spherically in water -> SPL re 1 uPa at 1 m.
POWER_TO_WATER_SL_DB = 10.0 * math.log10(RHO_C_WATER / (4.0 * math.pi))

SOURCES = ("turb", "gear", "gen")


def is_silent(level: float) -> bool:
    return level == SILENT


@dataclass(frozen=True)
class TurbulenceNoiseParams:
    c: float = 1500.0  # sound speed, m/s
    blades: int = 3
    chord: float = 1.0  # m
    lambda1: float = 2.0  # axial turbulence length scale, m
    mu: float = 1.0
    f_corr: float = 1.0
    a_s: float = 1.0  # empirical calibration factor
    f_lo: float = 10.0
    f_hi: float = 10_000.0

    def __post_init__(self):
        for name in ("c", "blades", "chord", "lambda1", "mu", "f_corr", "a_s", "f_lo", "f_hi"):
            if not getattr(self, name) > 0:
                raise ValueError(f"turbulence parameter {name} must be positive")
        if not self.f_lo < self.f_hi:
            raise ValueError("f_lo must be below f_hi")


@dataclass(frozen=True)
class AcousticsConfig:
    """Noise model settings.

    ``air_basis`` selects how the in-air machinery levels are moved into
    water: ``"power"`` reads them as sound power re 1 pW radiating
    spherically, ``"pressure"`` as pressure levels re 20 uPa at equal
    intensity. ``gear_rpm`` picks the shaft whose speed feeds the gearbox
    formula.
    """

    turbulence: TurbulenceNoiseParams = field(default_factory=TurbulenceNoiseParams)
    air_basis: Literal["power", "pressure"] = "power"
    gear_rpm: Literal["hss", "rotor"] = "hss"

    def __post_init__(self):
        if self.air_basis not in ("power", "pressure"):
            raise ValueError(f"air_basis must be 'power' or 'pressure', got {self.air_basis!r}")
        if self.gear_rpm not in ("hss", "rotor"):
            raise ValueError(f"gear_rpm must be 'hss' or 'rotor', got {self.gear_rpm!r}")


@dataclass(frozen=True)
class SourceLevels:
    """Underwater source levels at 1 m; ``gear`` is None for direct drive."""

    turb: float
    gen: float
    gear: float | None = None

    def as_dict(self) -> dict[str, float]:
        out = {"turb": self.turb, "gen": self.gen}
        if self.gear is not None:
            out["gear"] = self.gear
        return out

    @property
    def total(self) -> float:
        return combine_incoherent(self.as_dict().values())


@dataclass(frozen=True)
class ReceivedSpl:
    r: float
    per_source: dict[str, float]
    total: float


def sears_sq(sigma):
    """High-frequency approximation of the squared Sears function, 1/(1 + 2 pi sigma)."""
    return 1.0 / (1.0 + 2.0 * np.pi * np.asarray(sigma, dtype=float))


def third_octave_centers(f_lo: float, f_hi: float) -> np.ndarray:
    """Base-ten one-third-octave centre frequencies 10**(n/10) within [f_lo, f_hi]."""
    n_lo = math.ceil(10.0 * math.log10(f_lo) - 1e-9)
    n_hi = math.floor(10.0 * math.log10(f_hi) + 1e-9)
    return 10.0 ** (np.arange(n_lo, n_hi + 1) / 10.0)


def sound_pressure_level(msp: float, p_ref: float = P_REF_WATER_UPA) -> float:
    """10 log10(msp / p_ref^2); ``msp`` and ``p_ref`` in consistent units (uPa^2, uPa)."""
    if msp <= 0:
        return SILENT
    return 10.0 * math.log10(msp / p_ref**2)


def turbulence_msp(r: float, omega_rot: float, u2: float, params: TurbulenceNoiseParams,
                   rotor: RotorConfig) -> float:
    """Broadband mean-square pressure from inflow turbulence at range ``r``, in uPa^2.

    Each third-octave band contributes 0.5 * phi_p * omega at its centre
    frequency, with

        phi_p = A_s F_L B rho^2 U_T^3 C_T L_1 u2 / (8 pi r^2 c (1 + mu^2))
                * sears_sq(pi f C_T / U_T)

    and tip speed U_T = omega_rot D / 2.
    """
    if r < 1:
        raise ValueError(f"receiver range must be >= 1 m, got {r}")
    u_tip = omega_rot * rotor.D / 2.0
    if u_tip <= 0 or u2 <= 0:
        return 0.0
    p = params
    scale = (p.a_s * p.f_corr * p.blades * rotor.rho**2 * u_tip**3 * p.chord * p.lambda1 * u2
             / (8.0 * math.pi * r**2 * p.c * (1.0 + p.mu**2)))
    f = third_octave_centers(p.f_lo, p.f_hi)
    phi = scale * sears_sq(np.pi * f * p.chord / u_tip)
    msp_pa2 = float(np.sum(0.5 * phi * 2.0 * np.pi * f))
    return msp_pa2 * 1e12


def turbulence_source_level(state: OperatingState, params: TurbulenceNoiseParams,
                            rotor: RotorConfig) -> float:
    u2 = (state.ti * state.u) ** 2
    return sound_pressure_level(turbulence_msp(1.0, state.omega, u2, params, rotor))


def gearbox_source_level(rpm_s: float, p_kw: float, stages: int) -> float:
    """In-air gearbox level 86 + 3 log rpm + 4 log kW + 10 log S."""
    if rpm_s <= 0 or p_kw <= 0 or stages < 1:
        raise ValueError(f"gearbox level needs rpm_s>0, p_kw>0, stages>=1 (got {rpm_s}, {p_kw}, {stages})")
    return 86.0 + 3.0 * math.log10(rpm_s) + 4.0 * math.log10(p_kw) + 10.0 * math.log10(stages)


def generator_source_level(p_mw: float, rpm: float) -> float:
    """In-air generator level 80 + 10 log MW + 6.6 log rpm."""
    if p_mw <= 0 or rpm <= 0:
        raise ValueError(f"generator level needs p_mw>0 and rpm>0 (got {p_mw}, {rpm})")
    return 80.0 + 10.0 * math.log10(p_mw) + 6.6 * math.log10(rpm)


def air_to_water(sl_air: float, basis: str = "power") -> float:
    """Move an in-air machinery level to dB re 1 uPa at 1 m in water.

    ``"pressure"`` adds the 20 -> 1 uPa reference shift plus the
    characteristic-impedance ratio (+61.60 dB in total). ``"power"`` treats
    the level as sound power re 1 pW and adds 10 log10(rho c / 4 pi)
    (+50.77 dB).
    """
    if basis == "pressure":
        return sl_air + AIR_REF_SHIFT_DB + IMPEDANCE_SHIFT_DB
    if basis == "power":
        return sl_air + POWER_TO_WATER_SL_DB
    raise ValueError(f"unknown air level basis {basis!r}")


def propagate(sl: float, r: float) -> float:
    """Spherical spreading from the 1 m reference: sl - 20 log10 r."""
    if r < 1:
        raise ValueError(f"receiver range must be >= 1 m, got {r}")
    if is_silent(sl):
        return SILENT
    return sl - 20.0 * math.log10(r)


def combine_incoherent(levels: Iterable[float]) -> float:
    """Power sum 10 log10(sum 10^(L/10)) over the non-silent levels."""
    levels = list(levels)
    if not levels:
        raise ValueError("combine_incoherent needs at least one level")
    live = [lv for lv in levels if not is_silent(lv)]
    if not live:
        return SILENT
    top = max(live)
    # factor out the loudest level to keep 10**(L/10) in range
    return top + 10.0 * math.log10(sum(10.0 ** ((lv - top) / 10.0) for lv in live))


def source_levels(state: OperatingState, plant: Plant, cfg: AcousticsConfig) -> SourceLevels:
    """Underwater source levels of every active source for one operating state."""
    turb = turbulence_source_level(state, cfg.turbulence, plant.rotor)
    drivetrain = plant.drivetrain
    gen_rpm = state.rpm_hss if drivetrain.geared else state.rpm_rotor
    gen_rpm *= 1.0 + switching_ripple_rms(plant.control)

    running = state.p_mech > 0 and state.rpm_rotor > 0
    gen = air_to_water(generator_source_level(state.p_mech / 1e6, gen_rpm), cfg.air_basis) if running else SILENT

    gear = None
    if drivetrain.geared:
        if running:
            rpm_s = state.rpm_hss if cfg.gear_rpm == "hss" else state.rpm_rotor
            gear = air_to_water(
                gearbox_source_level(rpm_s, state.p_mech / 1e3, drivetrain.gear_stages), cfg.air_basis
            )
        else:
            gear = SILENT
    return SourceLevels(turb=turb, gen=gen, gear=gear)


def received_from_levels(levels: SourceLevels, r: float) -> ReceivedSpl:
    per_source = {name: propagate(sl, r) for name, sl in levels.as_dict().items()}
    return ReceivedSpl(r=r, per_source=per_source, total=combine_incoherent(per_source.values()))


def received_spl(state: OperatingState, r: float, plant: Plant, cfg: AcousticsConfig) -> ReceivedSpl:
    """Per-source and total SPL at range ``r``; no nacelle attenuation is applied."""
    return received_from_levels(source_levels(state, plant, cfg), r)


def calibrate_a_s(state: OperatingState, target_db: float, params: TurbulenceNoiseParams,
                  rotor: RotorConfig) -> float:
    """A_s that puts the turbulence source level of ``state`` at ``target_db``.

    The mean-square pressure is linear in A_s, so one evaluation at the
    current value suffices.
    """
    level = turbulence_source_level(state, params, rotor)
    if is_silent(level):
        raise ValueError("cannot calibrate A_s on a silent operating state")
    return params.a_s * 10.0 ** ((target_db - level) / 10.0)
