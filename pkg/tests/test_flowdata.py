import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tidalnoise.flowdata import (DEFAULT_TI, M2_PERIOD_S, FlowDataError, FlowSample, FlowSeries,
                                 load_flow_csv, synthesize_semidiurnal, turbulence_msv, window,
                                 write_flow_csv)


def write(tmp_path, text, name="flow.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestLoadCsv:
    def test_two_rows(self, tmp_path):
        s = load_flow_csv(write(tmp_path, "t_s,u_mps,ti\n0,1.5,0.1\n1,1.6,0.1\n"))
        assert len(s) == 2
        assert s.dt == 1.0
        assert s.u.tolist() == [1.5, 1.6]

    def test_missing_ti_column_uses_default(self, tmp_path):
        s = load_flow_csv(write(tmp_path, "t_s,u_mps\n0,1.5\n1,1.6\n"))
        assert np.all(s.ti == DEFAULT_TI)

    def test_non_uniform_spacing(self, tmp_path):
        with pytest.raises(FlowDataError, match="non-uniform"):
            load_flow_csv(write(tmp_path, "t_s,u_mps\n0,1.5\n2,1.6\n3,1.7\n"))

    def test_negative_speed(self, tmp_path):
        with pytest.raises(FlowDataError, match="negative"):
            load_flow_csv(write(tmp_path, "t_s,u_mps,ti\n0,-1.0,0.1\n"))

    def test_malformed_row_reports_line(self, tmp_path):
        with pytest.raises(FlowDataError, match=r":3:"):
            load_flow_csv(write(tmp_path, "t_s,u_mps,ti\n0,1.0,0.1\n1,abc,0.1\n"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_flow_csv(tmp_path / "nope.csv")

    def test_bad_header(self, tmp_path):
        with pytest.raises(FlowDataError, match="header"):
            load_flow_csv(write(tmp_path, "time,speed\n0,1\n"))

    def test_spacing_tolerance(self, tmp_path):
        s = load_flow_csv(write(tmp_path, "t_s,u_mps\n0,1\n1.0000005,1\n2,1\n"))
        assert len(s) == 3


class TestSynthesis:
    def test_zero_amplitude(self):
        s = synthesize_semidiurnal(2.0, 0.0, 0.1, 1, 10)
        assert len(s) == 10
        assert np.all(s.u == 2.0)

    def test_quarter_period_peak(self):
        s = synthesize_semidiurnal(2.0, 0.5, 0.1, 1, 44712)
        i = int(np.flatnonzero(s.t == 11178.0)[0])
        assert s.u[i] == pytest.approx(2.5, abs=1e-6)
        assert M2_PERIOD_S / 4 == 11178.0

    def test_reversing_flow_rejected(self):
        with pytest.raises(FlowDataError):
            synthesize_semidiurnal(1.0, 1.5, 0.1, 1, 10)

    @given(st.floats(0.0, 4.0), st.floats(0.0, 1.0), st.floats(0.5, 600.0))
    @settings(max_examples=50, deadline=None)
    def test_bounded_by_mean_and_amplitude(self, u_mean, frac, dt):
        u_amp = u_mean * frac
        s = synthesize_semidiurnal(u_mean, u_amp, 0.1, dt, 200 * dt)
        assert s.u.min() >= u_mean - u_amp - 1e-12
        assert s.u.max() <= u_mean + u_amp + 1e-12


@pytest.fixture(scope="module")
def long():
    return synthesize_semidiurnal(2.0, 0.5, 0.1, 1, 10001)


class TestWindow:
    def test_forty_second_window(self, long):
        w = window(long, 7300, 7340)
        assert len(w) == 41
        assert w.dt == 1
        assert w.t_start == 7300 and w.t_end == 7340

    def test_degenerate_window(self, long):
        with pytest.raises(FlowDataError):
            window(long, 7300, 7300)

    def test_out_of_range(self, long):
        with pytest.raises(FlowDataError, match="outside"):
            window(long, -5, 10)

    def test_window_between_samples_is_empty(self):
        s = FlowSeries.from_arrays([0, 10, 20], [1, 1, 1])
        with pytest.raises(FlowDataError, match="no samples"):
            window(s, 2, 8)

    @given(st.integers(0, 900), st.integers(1, 99), st.integers(0, 99), st.integers(1, 99))
    @settings(max_examples=60, deadline=None)
    def test_nested_windows_compose(self, a, span, c_off, d_span):
        s = FlowSeries.from_arrays(np.arange(1001.0), np.linspace(1, 2, 1001))
        b = a + span
        c = a + min(c_off, span - 1)
        d = min(c + d_span, b)
        assert window(window(s, a, b), c, d) == window(s, c, d)


class TestTurbulenceMsv:
    @pytest.mark.parametrize("u, ti, expected", [(2.0, 0.1, 0.04), (2.0, 0.0, 0.0), (1.93, 0.1, 0.037249)])
    def test_examples(self, u, ti, expected):
        assert turbulence_msv(FlowSample(0.0, u, ti)) == pytest.approx(expected, rel=1e-12, abs=1e-15)


@given(st.lists(st.tuples(st.floats(0, 5, allow_nan=False), st.floats(0, 1)), min_size=1, max_size=40),
       st.floats(0.01, 100.0))
@settings(max_examples=40, deadline=None)
def test_csv_round_trip(tmp_path_factory, rows, dt):
    t = np.arange(len(rows)) * dt
    series = FlowSeries.from_arrays(t, [r[0] for r in rows], [r[1] for r in rows])
    p = tmp_path_factory.mktemp("rt") / "flow.csv"
    write_flow_csv(series, p)
    back = load_flow_csv(p)
    assert np.allclose(back.t, series.t, atol=1e-9, rtol=0)
    assert np.allclose(back.u, series.u, atol=1e-9, rtol=0)
    assert np.allclose(back.ti, series.ti, atol=1e-9, rtol=0)


def test_sample_invariants():
    with pytest.raises(FlowDataError):
        FlowSample(math.nan, 1.0)
    with pytest.raises(FlowDataError):
        FlowSample(0.0, 1.0, 1.5)
