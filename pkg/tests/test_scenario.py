import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import constant_flow, make_config
from tidalnoise.acoustics import SILENT
from tidalnoise.bioimpact import SpeciesProfile, tts_threshold
from tidalnoise.scenario import (ScenarioError, SweepSpec, compare, equilibrium_spl, pearson_correlation,
                                 run_scenario, settled_correlations, sweep, tts_onset_speed, variant,
                                 worker_count)

ZERO_FLOW = {"synth": {"u_mean": 0.0, "u_amp": 0.0, "ti": 0.0, "dt": 1.0, "duration": 11.0}}


@pytest.fixture(scope="module")
def base_run(base_cfg):
    return run_scenario(base_cfg)


class TestRun:
    def test_zero_flow_is_silent(self):
        res = run_scenario(make_config(flow=ZERO_FLOW))
        assert res.energy == 0.0
        assert all(lv.turb == lv.gen == lv.gear == SILENT for lv in res.levels)
        assert res.spl_max_50m == SILENT
        assert all(i.tts_radius == 0.0 for i in res.impacts)

    def test_shapes(self, base_run, base_cfg):
        n = len(base_run.states)
        assert n == 4001  # 40 s at 0.01 s, both ends included
        assert len(base_run.levels) == len(base_run.received) == n
        assert all(len(row) == len(base_cfg.distances) for row in base_run.received)
        assert base_run.energy > 0

    def test_energy_is_trapezoid(self, base_run):
        p = np.array([s.p_mech for s in base_run.states])
        t = base_run.t
        assert base_run.energy == pytest.approx(np.trapezoid(p, t) if hasattr(np, "trapezoid") else np.trapz(p, t),
                                                rel=1e-12)

    def test_max_index_is_loudest(self, base_run):
        totals = base_run.total_at(50)
        assert base_run.spl_max_50m == pytest.approx(totals.max(), abs=1e-12)
        assert totals[base_run.max_index] == totals.max()

    def test_deterministic(self, base_cfg, base_run):
        again = run_scenario(base_cfg)
        assert [s.omega for s in again.states] == [s.omega for s in base_run.states]
        assert again.spl_max_50m == base_run.spl_max_50m and again.energy == base_run.energy

    def test_distance_validation(self, base_cfg):
        with pytest.raises(ScenarioError):
            replace(base_cfg, distances=(0.5, 10.0))

    def test_baseline_window(self, baseline_cfg):
        res = run_scenario(baseline_cfg)
        assert res.t[0] == 7300 and res.t[-1] == pytest.approx(7340)
        assert res.spl_max_50m == pytest.approx(125, abs=3)


class TestSweep:
    def test_rows_sorted_and_independent(self, base_cfg):
        rows = sweep(base_cfg, SweepSpec("kopt_factor", (1.2, 0.8, 1.0)), workers=2)
        assert [r.value for r in rows] == [0.8, 1.0, 1.2]
        for r in rows:
            single = run_scenario(variant(base_cfg, "kopt_factor", r.value))
            assert r.spl_max_50m == single.spl_max_50m and r.energy == single.energy

    def test_energy_peaks_at_nominal_gain(self, base_cfg):
        rows = sweep(base_cfg, SweepSpec("kopt_factor", (0.8, 0.9, 1.0, 1.1, 1.2)))
        energies = [r.energy for r in rows]
        assert max(energies) == rows[2].energy

    def test_spl_non_increasing_above_nominal(self, base_cfg):
        rows = sweep(base_cfg, SweepSpec("kopt_factor", (1.0, 1.05, 1.1, 1.15, 1.2)))
        spl = [r.spl_max_50m for r in rows]
        assert all(b <= a for a, b in zip(spl, spl[1:]))

    def test_drivetrain_kind(self, base_cfg):
        rows = sweep(base_cfg, SweepSpec("drivetrain_kind", ("geared", "direct")))
        by = {r.value: r for r in rows}
        assert by["geared"].spl_max_50m - by["direct"].spl_max_50m == pytest.approx(10, abs=3)

    @pytest.mark.parametrize("param, value", [("kopt_factor", 1.5), ("kopt_factor", 0.7),
                                              ("f_s", 500.0), ("f_s", 3500.0),
                                              ("drivetrain_kind", "hydraulic")])
    def test_out_of_range(self, param, value):
        with pytest.raises(ScenarioError):
            SweepSpec(param, (value,))

    def test_unknown_parameter(self):
        with pytest.raises(ScenarioError):
            SweepSpec("rho", (1000.0,))

    def test_worker_cap(self, monkeypatch):
        monkeypatch.setenv("TCCS_THREADS", "2")
        assert worker_count(5) == 2
        assert worker_count(1) == 1
        monkeypatch.setenv("TCCS_THREADS", "junk")
        assert worker_count(3) >= 1


class TestPearson:
    def test_examples(self):
        x = np.arange(10.0)
        assert pearson_correlation(x, 2 * x + 1) == pytest.approx(1.0, abs=1e-15)
        assert pearson_correlation(x, -x) == pytest.approx(-1.0, abs=1e-15)
        assert pearson_correlation([1, 2, 3], [1, 2, 2]) == pytest.approx(0.8660, abs=5e-5)
        assert pearson_correlation([1, 2, 3], [1, 2, 2]) == pytest.approx(math.sqrt(3) / 2, rel=1e-12)

    @given(st.lists(st.tuples(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3)), min_size=3, max_size=40))
    def test_matches_numpy(self, pairs):
        x, y = map(np.array, zip(*pairs))
        if np.ptp(x) < 1e-6 or np.ptp(y) < 1e-6:
            return
        r = pearson_correlation(x, y)
        assert -1 <= r <= 1
        assert r == pytest.approx(np.corrcoef(x, y)[0, 1], abs=1e-9)
        assert pearson_correlation(y, x) == pytest.approx(r, abs=1e-12)

    @pytest.mark.parametrize("x, y", [([1, 1, 1], [1, 2, 3]), ([1, 2], [1, 2]), ([1, 2, 3], [1, 2])])
    def test_undefined(self, x, y):
        with pytest.raises(ValueError):
            pearson_correlation(x, y)


class TestCorrelation:
    def test_variable_flow(self, baseline_cfg):
        corr = settled_correlations(run_scenario(baseline_cfg), baseline_cfg.settle_time)
        assert corr["omega"] > 0.9 and corr["u"] > 0.9
        assert corr["n"] == 1501


class TestOnset:
    def test_bracketing_property(self, base_cfg):
        sp = base_cfg.load_species()[0]
        u = tts_onset_speed(base_cfg, sp, 100)
        thr = tts_threshold(sp.gtv, base_cfg.exposure.t_exposure)
        assert equilibrium_spl(base_cfg, u - 0.02, 100, 0.1) < thr <= equilibrium_spl(base_cfg, u + 0.02, 100, 0.1)
        assert equilibrium_spl(base_cfg, u, 100, 0.1) >= thr

    def test_unreachable_threshold(self, base_cfg):
        deaf = SpeciesProfile("deaf", "mammal", 150.0)
        assert tts_onset_speed(base_cfg, deaf, 100) is None

    def test_already_exceeded_at_bracket_floor(self, base_cfg):
        keen = SpeciesProfile("keen", "mammal", -50.0)
        assert tts_onset_speed(base_cfg, keen, 100) == 0.5

    @given(st.floats(0.6, 3.9))
    @settings(max_examples=15, deadline=None)
    def test_equilibrium_spl_monotone_in_speed(self, base_cfg, u):
        assert equilibrium_spl(base_cfg, u + 0.05, 100, 0.1) > equilibrium_spl(base_cfg, u, 100, 0.1)


class TestCompare:
    def test_identity(self, base_run):
        c = compare(base_run, base_run)
        assert all(v == 0 for v in c.d_spl_max.values())
        assert c.d_energy_pct == 0
        assert all(v == 0 for radii in c.d_radii.values() for v in radii.values())

    def test_direct_vs_geared(self, base_cfg, base_run):
        dd = run_scenario(variant(base_cfg, "drivetrain_kind", "direct"))
        c = compare(base_run, dd)
        assert c.d_spl_max[50.0] == pytest.approx(-10, abs=3)
        assert c.d_energy_pct == pytest.approx(0, abs=1e-9)

    def test_higher_gain(self, base_cfg, base_run):
        c = compare(base_run, run_scenario(variant(base_cfg, "kopt_factor", 1.2)))
        assert c.d_energy_pct == pytest.approx(-3.58, abs=2.5)

    def test_mismatched_distances(self, base_cfg, base_run):
        other = run_scenario(replace(base_cfg, distances=(10.0,)))
        with pytest.raises(ScenarioError):
            compare(base_run, other)

    def test_silent_reference(self):
        z = run_scenario(make_config(flow=ZERO_FLOW))
        assert compare(z, z).d_energy_pct == 0.0


class TestExplicitFlow:
    def test_flow_argument_overrides_config(self, base_cfg):
        res = run_scenario(base_cfg, constant_flow(2.0, seconds=10))
        assert res.t[-1] == pytest.approx(10.0)
