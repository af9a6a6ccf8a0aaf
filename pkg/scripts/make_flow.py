"""Regenerate configs/flow_tidal.csv, the bundled example flow record.

Semi-diurnal tide plus a few fixed sinusoidal fluctuations so short windows
are not flat. Fully deterministic.
"""

from pathlib import Path

import numpy as np

from tidalnoise.flowdata import M2_PERIOD_S, FlowSeries, write_flow_csv

# (amplitude m/s, period s, phase rad)
FLUCTUATIONS = [(0.05, 37.0, 0.3), (0.04, 13.0, 1.9), (0.03, 23.0, 4.1), (0.015, 7.0, 2.6)]


def make(duration=10_000, dt=1.0, u_mean=1.49, u_amp=0.6, ti=0.10):
    t = np.arange(int(duration / dt) + 1) * dt
    u = u_mean + u_amp * np.sin(2 * np.pi * t / M2_PERIOD_S)
    for a, period, phase in FLUCTUATIONS:
        u += a * np.sin(2 * np.pi * t / period + phase)
    return FlowSeries.from_arrays(t, np.round(u, 4), ti)


if __name__ == "__main__":
    out = Path(__file__).resolve().parent.parent / "configs" / "flow_tidal.csv"
    write_flow_csv(make(), out)
    print(f"wrote {out}")
