"""Tests of the figure-level experiments.

Monte Carlo expectations are frozen from fixed-seed runs of the package's
own estimators; tolerances cover reduction-order jitter only, since the
runs are deterministic.
"""

import numpy as np
import pytest

from shotqsd import (
    InvalidParameterError,
    RngStream,
    ShotTrain,
    SystemParams,
    fidelity_curves,
    free_log_fidelity_exact,
    markov_scan,
    sample_shot_train,
    shot_params_for,
    sweep_jw,
    washout_diagnostic,
)

SYS = SystemParams(omega=1.0, g=0.4, gamma=0.2, T=5.0)
T = SYS.T
DT = 1e-3


class TestKickScaleMapping:
    def test_mean_rate_scale(self):
        p = shot_params_for(15.0, 200.0, SYS, kick_scale="mean-rate")
        assert p.J == pytest.approx(0.075)
        assert p.W == 200.0

    def test_direct_scale(self):
        p = shot_params_for(15.0, 200.0, SYS, kick_scale="direct")
        assert p.J == 15.0

    def test_zero_strength(self):
        p = shot_params_for(0.0, 200.0, SYS)
        assert p.J == 0.0

    def test_unknown_scale_rejected(self):
        with pytest.raises(InvalidParameterError):
            shot_params_for(1.0, 10.0, SYS, kick_scale="other")


class TestFidelityCurves:
    def test_zero_strength_variant_equals_free_exactly(self):
        cs = fidelity_curves(
            SYS, [(0.0, 200.0 / T)], n_trains=4, dt=DT, horizon=10.0,
            stream=RngStream(101), out_stride=1000,
        )
        np.testing.assert_array_equal(cs.curves[0].values, cs.free.values)

    def test_controlled_curve_stays_above_free(self):
        cs = fidelity_curves(
            SYS, [(15.0, 1000.0 / T)], n_trains=12, dt=DT, horizon=100 * T,
            stream=RngStream(103), out_stride=2500, n_workers=2,
        )
        gap = cs.curves[0].values[1:] - cs.free.values[1:]
        assert np.min(gap) > 0

    def test_strength_ordering_at_probe(self):
        # Larger figure-strength J gives higher fidelity at 50T.
        cs = fidelity_curves(
            SYS, [(3.0, 1000.0 / T), (8.0, 1000.0 / T), (15.0, 1000.0 / T)],
            n_trains=12, dt=DT, horizon=50 * T, stream=RngStream(107),
            out_stride=25000, n_workers=2,
        )
        f3, f8, f15 = (c.values[-1] for c in cs.curves)
        assert f15 > f8 > f3

    def test_saturation_gap_between_large_rates(self):
        # Frozen from this estimator at this seed: the pointwise gap between
        # the W = 1000/T and W = 1500/T curves peaks near 0.0245 at 100T.
        cs = fidelity_curves(
            SYS, [(15.0, 1000.0 / T), (15.0, 1500.0 / T)], n_trains=24,
            dt=DT, horizon=100 * T, stream=RngStream(2024), out_stride=2500,
            n_workers=2,
        )
        d = np.max(np.abs(cs.curves[0].values - cs.curves[1].values))
        assert d == pytest.approx(0.02454, abs=0.005)

    def test_free_curve_matches_closed_form(self):
        cs = fidelity_curves(
            SYS, [], n_trains=1, dt=DT, horizon=10.0, stream=RngStream(1),
            out_stride=1000,
        )
        exact = np.exp(-free_log_fidelity_exact(SYS, cs.free.times))
        np.testing.assert_allclose(cs.free.values, exact, atol=1e-9)

    def test_provenance_recorded(self):
        cs = fidelity_curves(
            SYS, [(3.0, 40.0)], n_trains=2, dt=DT, horizon=5.0,
            stream=RngStream(2), out_stride=500,
        )
        prov = cs.curves[0].provenance
        assert prov["J"] == 3.0 and prov["W"] == 40.0
        assert prov["n_trains"] == 2 and prov["excluded"] == 0
        assert prov["mean_kick"] == pytest.approx(3.0 / 40.0)


class TestSweep:
    def test_small_grid_contents(self):
        grid = sweep_jw(
            SYS, [0.0, 10.0], [40.0, 200.0], [10.0, 20.0], n_traj=6, dt=DT,
            stream=RngStream(201), n_workers=2,
        )
        assert grid.fidelity.shape == (2, 2, 2)
        assert np.all(grid.fidelity > 0) and np.all(grid.fidelity <= 1)
        assert np.all(grid.n_used == 6)
        # zero-strength row reproduces free dynamics exactly
        free = np.exp(-free_log_fidelity_exact(SYS, np.array([10.0, 20.0])))
        for w in range(2):
            np.testing.assert_allclose(grid.fidelity[0, w], free, atol=1e-9)
        # fidelity improves with strength at the same rate
        assert np.all(grid.fidelity[1] > grid.fidelity[0])

    def test_axes_must_increase(self):
        with pytest.raises(InvalidParameterError):
            sweep_jw(SYS, [1.0, 1.0], [40.0], [10.0], 2, DT, RngStream(1))
        with pytest.raises(InvalidParameterError):
            sweep_jw(SYS, [1.0], [200.0, 40.0], [10.0], 2, DT, RngStream(1))

    def test_above_mask_and_plateau(self):
        grid = sweep_jw(
            SYS, [15.0], [120.0, 240.0], [10.0], n_traj=4, dt=DT,
            stream=RngStream(203),
        )
        mask = grid.above(0.5)
        assert mask.shape == grid.fidelity.shape
        onset = grid.plateau_onset(0, tol=1.0)  # everything within tol=1
        assert onset[0] == 120.0


class TestMarkovScan:
    def test_uncoupled_system_has_zero_gain(self):
        sys0 = SystemParams(omega=1.0, g=0.0, gamma=0.2, T=5.0)
        scan = markov_scan(
            sys0, [0.2, 2.5], 15.0, 200.0, t_probe=10.0, n_traj=3, dt=DT,
            stream=RngStream(301),
        )
        np.testing.assert_allclose(scan.gains, 0.0, atol=1e-12)

    def test_gain_degrades_from_deep_memory_to_markovian(self):
        scan = markov_scan(
            SYS, [0.2, 5.0], 15.0, 1000.0 / T, t_probe=50 * T, n_traj=8,
            dt=DT, stream=RngStream(303), n_workers=2,
        )
        assert scan.gains[0] > scan.gains[-1]
        assert np.all(np.abs(scan.gains) < 1.0)
        assert scan.trend_summary() == "monotone degradation with increasing gamma"

    def test_decade_span_required(self):
        with pytest.raises(InvalidParameterError):
            markov_scan(SYS, [0.2, 0.5], 15.0, 200.0, 10.0, 2, DT, RngStream(1))


class TestWashoutDiagnostic:
    def test_empty_train_gives_deterministic_phase(self):
        train = ShotTrain(20.0, np.empty(0), np.empty(0))
        w = washout_diagnostic(SYS, train, DT, 20.0, out_stride=500)
        np.testing.assert_allclose(w.N, np.exp(-1j * SYS.omega * w.times), atol=1e-9)

    def test_pure_phase_and_zero_start(self):
        shot = shot_params_for(15.0, 1000.0 / T, SYS)
        train = sample_shot_train(shot, 20.0, RngStream(401))
        w = washout_diagnostic(SYS, train, DT, 20.0, out_stride=500)
        assert w.partial_integral[0] == 0
        np.testing.assert_allclose(np.abs(w.N), 1.0, atol=1e-12)

    def test_running_mean_of_phase_factor_decays(self):
        # h frozen constant: the running average of N alone decays with t.
        shot = shot_params_for(15.0, 1000.0 / T, SYS)
        probes = np.array([T, 10 * T, 100 * T])
        sums = np.zeros(3)
        for i in range(6):
            train = sample_shot_train(shot, 100 * T, RngStream(606, i))
            w = washout_diagnostic(SYS, train, DT, 100 * T, out_stride=250)
            idx = np.rint(probes / (DT * 250)).astype(int)
            sums += np.abs(w.integral_N[idx]) / probes
        means = sums / 6
        assert means[0] > means[1] > means[2]

    def test_summary_fields(self):
        train = ShotTrain(10.0, np.empty(0), np.empty(0))
        w = washout_diagnostic(SYS, train, DT, 10.0, out_stride=1000)
        s = w.summary()
        assert s["horizon"] == 10.0
        assert s["abs_partial_integral"] >= 0

    def test_stride_must_divide(self):
        train = ShotTrain(10.0, np.empty(0), np.empty(0))
        with pytest.raises(InvalidParameterError):
            washout_diagnostic(SYS, train, DT, 10.0, out_stride=333)
