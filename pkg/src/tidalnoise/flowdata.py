"""Tidal inflow time series: CSV ingestion, semi-diurnal synthesis, windowing."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

#: Principal lunar semi-diurnal (M2) period in seconds (12.42 h).
M2_PERIOD_S = 44_712.0

#: Turbulence intensity applied when a flow file has no ``ti`` column.
DEFAULT_TI = 0.10

#: Allowed deviation from uniform sample spacing, seconds.
SPACING_TOL_S = 1e-6

CSV_HEADER = ("t_s", "u_mps", "ti")


class FlowDataError(ValueError):
    """Raised for malformed or physically invalid flow data."""


@dataclass(frozen=True)
class FlowSample:
    t: float
    u: float
    ti: float = DEFAULT_TI

    def __post_init__(self):
        if not math.isfinite(self.t):
            raise FlowDataError(f"non-finite time {self.t!r}")
        if not math.isfinite(self.u) or self.u < 0:
            raise FlowDataError(f"negative or non-finite speed {self.u!r} at t={self.t}")
        if not (0.0 <= self.ti <= 1.0):
            raise FlowDataError(f"turbulence intensity {self.ti!r} outside [0, 1] at t={self.t}")


@dataclass(frozen=True)
class FlowSeries:
    """Uniformly sampled flow record."""

    samples: tuple[FlowSample, ...]
    dt: float

    def __post_init__(self):
        if not self.samples:
            raise FlowDataError("flow series is empty")
        if not (self.dt > 0):
            raise FlowDataError(f"sampling interval must be positive, got {self.dt!r}")
        t = np.array([s.t for s in self.samples])
        if t.size > 1:
            steps = np.diff(t)
            if np.any(steps <= 0):
                raise FlowDataError("flow times must be strictly increasing")
            if np.max(np.abs(steps - self.dt)) > SPACING_TOL_S:
                raise FlowDataError(f"non-uniform spacing: expected dt={self.dt}")

    def __len__(self):
        return len(self.samples)

    @property
    def t(self) -> np.ndarray:
        return np.array([s.t for s in self.samples])

    @property
    def u(self) -> np.ndarray:
        return np.array([s.u for s in self.samples])

    @property
    def ti(self) -> np.ndarray:
        return np.array([s.ti for s in self.samples])

    @property
    def t_start(self) -> float:
        return self.samples[0].t

    @property
    def t_end(self) -> float:
        return self.samples[-1].t

    @classmethod
    def from_arrays(cls, t, u, ti=None) -> FlowSeries:
        """Build a series from parallel arrays, inferring ``dt`` from the overall span."""
        t = np.asarray(t, dtype=float)
        u = np.asarray(u, dtype=float)
        ti = np.full_like(u, DEFAULT_TI) if ti is None else np.broadcast_to(np.asarray(ti, float), u.shape)
        if t.shape != u.shape:
            raise FlowDataError("t and u must have the same length")
        if t.size == 0:
            raise FlowDataError("flow series is empty")
        dt = float((t[-1] - t[0]) / (t.size - 1)) if t.size > 1 else 1.0
        samples = tuple(FlowSample(float(a), float(b), float(c)) for a, b, c in zip(t, u, ti))
        return cls(samples, dt)


def load_flow_csv(path) -> FlowSeries:
    """Read a ``t_s,u_mps[,ti]`` flow file.

    A missing ``ti`` column falls back to :data:`DEFAULT_TI`. Errors name the
    offending line number.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"flow file not found: {path}")

    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise FlowDataError(f"{path}: empty file") from None
        if header[:2] != list(CSV_HEADER[:2]) or header[2:] not in ([], ["ti"]):
            raise FlowDataError(f"{path}:1: expected header 't_s,u_mps[,ti]', got {','.join(header)!r}")
        has_ti = len(header) == 3

        samples = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise FlowDataError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                values = [float(cell) for cell in row]
            except ValueError:
                raise FlowDataError(f"{path}:{lineno}: non-numeric field in {row!r}") from None
            ti = values[2] if has_ti else DEFAULT_TI
            try:
                samples.append(FlowSample(values[0], values[1], ti))
            except FlowDataError as exc:
                raise FlowDataError(f"{path}:{lineno}: {exc}") from None

    if not samples:
        raise FlowDataError(f"{path}: no data rows")
    dt = (samples[-1].t - samples[0].t) / (len(samples) - 1) if len(samples) > 1 else 1.0
    return FlowSeries(tuple(samples), dt)


def write_flow_csv(series: FlowSeries, path) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for s in series.samples:
            writer.writerow((repr(s.t), repr(s.u), repr(s.ti)))


def synthesize_semidiurnal(u_mean: float, u_amp: float, ti: float, dt: float, duration: float) -> FlowSeries:
    """Sinusoidal M2 tide ``u_mean + u_amp * sin(2 pi t / T_M2)`` sampled from t = 0.

    The series holds ``round(duration / dt)`` samples, so ``duration=10, dt=1``
    gives t = 0..9.
    """
    if u_amp < 0 or u_mean < 0:
        raise FlowDataError("u_mean and u_amp must be non-negative")
    if u_amp > u_mean:
        raise FlowDataError(f"u_amp={u_amp} exceeds u_mean={u_mean}; flow would reverse")
    if not (dt > 0):
        raise FlowDataError("dt must be positive")
    if duration < dt:
        raise FlowDataError("duration must be at least one sampling interval")

    n = int(round(duration / dt))
    t = np.arange(n) * dt
    u = u_mean + u_amp * np.sin(2.0 * np.pi * t / M2_PERIOD_S)
    # guard against -1e-17 style round-off at the trough
    u = np.maximum(u, 0.0)
    samples = tuple(FlowSample(float(a), float(b), ti) for a, b in zip(t, u))
    return FlowSeries(samples, float(dt))


def window(series: FlowSeries, t0: float, t1: float) -> FlowSeries:
    """Samples with ``t0 <= t <= t1`` (closed interval, spacing preserved)."""
    if not t0 < t1:
        raise FlowDataError(f"window requires t0 < t1, got ({t0}, {t1})")
    tol = SPACING_TOL_S
    if t0 < series.t_start - tol or t1 > series.t_end + tol:
        raise FlowDataError(
            f"window ({t0}, {t1}) outside series span ({series.t_start}, {series.t_end})"
        )
    picked = tuple(s for s in series.samples if t0 - tol <= s.t <= t1 + tol)
    if not picked:
        raise FlowDataError(f"window ({t0}, {t1}) contains no samples")
    return FlowSeries(picked, series.dt)


def turbulence_msv(sample: FlowSample) -> float:
    """Mean-square turbulent velocity fluctuation (ti * u)**2 in m^2/s^2."""
    return (sample.ti * sample.u) ** 2
