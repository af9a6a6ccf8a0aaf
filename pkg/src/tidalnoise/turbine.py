"""Rotor power capture, one-mass drivetrain and optimal-torque MPPT loop."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Literal, Sequence

import numpy as np

from .flowdata import DEFAULT_TI, FlowSeries

BETZ_LIMIT = 16.0 / 27.0

#: Below this rotor speed the P/omega torque is replaced by a startup floor.
OMEGA_EPS = 1e-3

RAD_S_TO_RPM = 60.0 / (2.0 * math.pi)


class SimulationError(RuntimeError):
    """Numerical failure inside the time integration."""


@dataclass(frozen=True)
class RotorConfig:
    """Rotor geometry and tabulated Cp(lambda) curve.

    ``cp_curve`` is a sequence of ``(lambda, cp)`` nodes with strictly
    increasing ``lambda``; ``lambda_opt`` and ``cp_max`` are read off its peak.
    """

    D: float
    rho: float
    cp_curve: tuple[tuple[float, float], ...]
    lambda_eps: float = 0.1
    allow_super_betz: bool = False

    def __post_init__(self):
        object.__setattr__(self, "cp_curve", tuple((float(l), float(c)) for l, c in self.cp_curve))
        if not self.D > 0:
            raise ValueError(f"rotor diameter must be positive, got {self.D}")
        if not self.rho > 0:
            raise ValueError(f"fluid density must be positive, got {self.rho}")
        if len(self.cp_curve) < 2:
            raise ValueError("cp_curve needs at least two nodes")
        lam = np.array([p[0] for p in self.cp_curve])
        cp = np.array([p[1] for p in self.cp_curve])
        if np.any(np.diff(lam) <= 0):
            raise ValueError("cp_curve lambda values must be strictly increasing")
        if lam[0] < 0 or np.any(cp < 0):
            raise ValueError("cp_curve must have non-negative lambda and Cp")
        if np.any(cp >= BETZ_LIMIT) and not self.allow_super_betz:
            warnings.warn(
                f"cp_curve reaches Cp={cp.max():.3f} >= Betz limit {BETZ_LIMIT:.3f}",
                stacklevel=2,
            )
        if not self.lambda_eps > 0:
            raise ValueError("lambda_eps must be positive")
        object.__setattr__(self, "_lam", lam)
        object.__setattr__(self, "_cp", cp)

    @property
    def radius(self) -> float:
        return self.D / 2.0

    @property
    def area(self) -> float:
        return math.pi * self.D**2 / 4.0

    @property
    def lambda_opt(self) -> float:
        return float(self._lam[np.argmax(self._cp)])

    @property
    def cp_max(self) -> float:
        return float(self._cp.max())

    @property
    def lambda_max(self) -> float:
        return float(self._lam[-1])


@dataclass(frozen=True)
class DrivetrainConfig:
    kind: Literal["geared", "direct"]
    gear_ratio: float
    gear_stages: int
    inertia: float  # kg m^2, referred to the rotor shaft
    rated_power: float  # W

    def __post_init__(self):
        if self.kind not in ("geared", "direct"):
            raise ValueError(f"drivetrain kind must be 'geared' or 'direct', got {self.kind!r}")
        if self.kind == "direct" and self.gear_ratio != 1:
            raise ValueError("direct drive requires gear_ratio = 1")
        if self.gear_ratio < 1:
            raise ValueError(f"gear_ratio must be >= 1, got {self.gear_ratio}")
        if int(self.gear_stages) != self.gear_stages or self.gear_stages < 1:
            raise ValueError(f"gear_stages must be an integer >= 1, got {self.gear_stages}")
        if not self.inertia > 0:
            raise ValueError(f"inertia must be positive, got {self.inertia}")
        if not self.rated_power > 0:
            raise ValueError(f"rated_power must be positive, got {self.rated_power}")

    @property
    def geared(self) -> bool:
        return self.kind == "geared"

    def as_direct(self) -> DrivetrainConfig:
        return replace(self, kind="direct", gear_ratio=1.0)


@dataclass(frozen=True)
class ControlConfig:
    kopt_factor: float = 1.0
    f_s: float = 2000.0  # converter switching frequency, Hz
    ripple_gain: float = 2.0

    def __post_init__(self):
        if not self.kopt_factor > 0:
            raise ValueError(f"kopt_factor must be positive, got {self.kopt_factor}")
        if not self.f_s > 0:
            raise ValueError(f"f_s must be positive, got {self.f_s}")
        if self.ripple_gain < 0:
            raise ValueError(f"ripple_gain must be non-negative, got {self.ripple_gain}")


@dataclass(frozen=True)
class Plant:
    """Everything the drivetrain integrator needs."""

    rotor: RotorConfig
    drivetrain: DrivetrainConfig
    control: ControlConfig


@dataclass(frozen=True)
class OperatingState:
    t: float
    u: float
    omega: float
    lam: float
    cp: float
    torque_rotor: float
    torque_gen: float  # rotor-side
    p_mech: float
    rpm_rotor: float
    rpm_hss: float
    ti: float = DEFAULT_TI


def kinetic_power(rho: float, area: float, u: float) -> float:
    """Power carried by the flow through ``area``: 0.5 rho A U^3."""
    return 0.5 * rho * area * u**3


def tip_speed_ratio(omega: float, D: float, u: float) -> float:
    if u <= 0:
        raise ValueError("tip speed ratio is undefined for zero flow speed")
    return omega * D / (2.0 * u)


def power_coefficient(lam: float, cp_curve) -> float:
    """Piecewise-linear Cp(lambda); zero outside the tabulated range."""
    if isinstance(cp_curve, RotorConfig):
        xs, ys = cp_curve._lam, cp_curve._cp
    else:
        xs = np.array([p[0] for p in cp_curve])
        ys = np.array([p[1] for p in cp_curve])
    return float(np.interp(lam, xs, ys, left=0.0, right=0.0))


def rotor_torque(u: float, omega: float, rotor: RotorConfig) -> float:
    """Hydrodynamic torque Cp(lambda) * P_kin / omega.

    Below :data:`OMEGA_EPS` the torque is frozen at its value for
    ``lambda = rotor.lambda_eps`` so a rotor can start from rest.
    """
    if u <= 0:
        return 0.0
    p_kin = kinetic_power(rotor.rho, rotor.area, u)
    if omega < OMEGA_EPS:
        omega_start = 2.0 * rotor.lambda_eps * u / rotor.D
        return power_coefficient(rotor.lambda_eps, rotor) * p_kin / omega_start
    lam = tip_speed_ratio(omega, rotor.D, u)
    return power_coefficient(lam, rotor) * p_kin / omega


def mppt_gain(rotor: RotorConfig) -> float:
    """Nominal optimal-torque gain 0.5 rho A R^3 cp_max / lambda_opt^3 (N m s^2)."""
    return 0.5 * rotor.rho * rotor.area * rotor.radius**3 * rotor.cp_max / rotor.lambda_opt**3


def mppt_reference_torque(omega: float, rotor: RotorConfig, control: ControlConfig) -> float:
    return control.kopt_factor * mppt_gain(rotor) * omega**2


def switching_ripple_rms(control: ControlConfig) -> float:
    """Relative generator-speed ripple ``ripple_gain / f_s``."""
    if math.isinf(control.f_s):
        return 0.0
    return control.ripple_gain / control.f_s


def make_state(t: float, u: float, omega: float, plant: Plant, ti: float = DEFAULT_TI) -> OperatingState:
    """Derive every dependent field from ``(t, u, omega)``."""
    rotor = plant.rotor
    t_rot = rotor_torque(u, omega, rotor)
    t_gen = mppt_reference_torque(omega, rotor, plant.control)
    if u > 0:
        lam = tip_speed_ratio(omega, rotor.D, u)
        cp = power_coefficient(lam, rotor)
    else:
        lam, cp = 0.0, 0.0
    rpm = omega * RAD_S_TO_RPM
    return OperatingState(
        t=t,
        u=u,
        omega=omega,
        lam=lam,
        cp=cp,
        torque_rotor=t_rot,
        torque_gen=t_gen,
        p_mech=t_rot * omega,
        rpm_rotor=rpm,
        rpm_hss=rpm * plant.drivetrain.gear_ratio,
        ti=ti,
    )


def step_dynamics(state: OperatingState, u_next: float, dt: float, plant: Plant,
                  ti_next: float | None = None) -> OperatingState:
    """One explicit-Euler step of J domega/dt = T_rotor - T_gen."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    accel = (state.torque_rotor - state.torque_gen) / plant.drivetrain.inertia
    omega = state.omega + dt * accel
    if not math.isfinite(omega):
        raise SimulationError(
            f"non-finite rotor speed at t={state.t + dt:.6g} s "
            f"(omega={state.omega!r}, T_rotor={state.torque_rotor!r}, T_gen={state.torque_gen!r})"
        )
    omega = max(omega, 0.0)
    ti = state.ti if ti_next is None else ti_next
    return make_state(state.t + dt, u_next, omega, plant, ti)


def equilibrium_lambda(rotor: RotorConfig, control: ControlConfig, tol: float = 1e-13) -> float:
    """Tip speed ratio where rotor torque balances the MPPT torque.

    At the balance Cp(lambda)/lambda^3 = kopt_factor * cp_max / lambda_opt^3,
    which is independent of flow speed. Solved by bisection.
    """
    target = control.kopt_factor * rotor.cp_max / rotor.lambda_opt**3

    def excess(lam):
        return power_coefficient(lam, rotor) / lam**3 - target

    lo, hi = 1e-9, rotor.lambda_max
    if excess(hi) >= 0:
        return hi
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if excess(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def equilibrium_omega(u: float, plant: Plant) -> float:
    if u <= 0:
        return 0.0
    lam = equilibrium_lambda(plant.rotor, plant.control)
    return 2.0 * lam * u / plant.rotor.D


def equilibrium_state(u: float, plant: Plant, ti: float = DEFAULT_TI, t: float = 0.0) -> OperatingState:
    return make_state(t, u, equilibrium_omega(u, plant), plant, ti)


def euler_stability_ratio(u: float, plant: Plant, dt: float) -> float:
    """``dt * |d(T_gen - T_rotor)/d omega| / J`` at the equilibrium for flow ``u``.

    Explicit Euler is stable around the operating point only while this stays below 2.
    """
    omega = equilibrium_omega(u, plant)
    if omega <= 0:
        return 0.0
    h = 1e-6 * omega

    def net(w):
        return mppt_reference_torque(w, plant.rotor, plant.control) - rotor_torque(u, w, plant.rotor)

    slope = (net(omega + h) - net(omega - h)) / (2.0 * h)
    return dt * abs(slope) / plant.drivetrain.inertia


def simulate(flow: FlowSeries, plant: Plant, dt: float = 0.01,
             omega0: float | None = None) -> list[OperatingState]:
    """Integrate the drivetrain over the span of ``flow``.

    Flow samples are held constant over each flow interval. The rotor starts
    at ``omega0`` or, by default, at equilibrium for the first flow sample.
    Returns ``round(span / dt) + 1`` states on the grid ``t_start + k dt``.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    per_sample = flow.dt / dt
    hold = int(round(per_sample))
    if len(flow) > 1 and (hold < 1 or abs(per_sample - hold) > 1e-9 * per_sample):
        raise ValueError(f"integration step {dt} does not divide flow interval {flow.dt}")

    samples = flow.samples
    ratio = euler_stability_ratio(max(s.u for s in samples), plant, dt)
    if ratio >= 2.0:
        raise SimulationError(
            f"dt={dt} s is beyond the explicit-Euler stability limit for inertia "
            f"{plant.drivetrain.inertia} kg m^2 (ratio {ratio:.3g} >= 2); reduce dt or raise the inertia"
        )
    t0 = flow.t_start
    n_steps = (len(samples) - 1) * hold if len(samples) > 1 else 0

    first = samples[0]
    omega = equilibrium_omega(first.u, plant) if omega0 is None else float(omega0)
    if omega < 0:
        raise ValueError("initial rotor speed must be non-negative")
    state = make_state(t0, first.u, omega, plant, first.ti)
    states = [state]
    for k in range(1, n_steps + 1):
        sample = samples[min(k // hold, len(samples) - 1)]
        state = step_dynamics(state, sample.u, dt, plant, sample.ti)
        # re-anchor time on the grid so round-off does not accumulate
        state = replace(state, t=t0 + k * dt)
        states.append(state)
    return states


def states_array(states: Sequence[OperatingState], field: str) -> np.ndarray:
    return np.array([getattr(s, field) for s in states])
