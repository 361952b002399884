"""Estimator layer: duality z-tests, fixation routes, stationary law, decay."""

import math

import numpy as np
import pytest

from lwf import ParameterError, WrongRegime
from lwf.batch import BLOCK, paths_at_times
from lwf.estimators import (
    check_duality,
    check_two_trajectory_duality,
    decay_rate_experiment,
    estimate_fixation_direct,
    estimate_fixation_renewal,
    estimate_stationary_y,
    fit_loglinear,
    merge_decay_curve,
)


class TestCheckDuality:
    def test_boundary_cells_are_exact(self, theta2_rich):
        cells, summary = check_duality(theta2_rich, [0.4, 1.0], [0.0, 0.6], [1.0],
                                       2000, seed=1)
        by_key = {(c.x, c.y): c for c in cells}
        # y=0: both sides are identically 1
        for x in (0.4, 1.0):
            c = by_key[(x, 0.0)]
            assert c.p_forward.point == 1.0 and c.p_dual.point == 1.0
            assert c.z_score == 0.0
        # x=1: dual side is identically 1, forward side too
        c = by_key[(1.0, 0.6)]
        assert c.p_dual.point == 1.0

    def test_interior_grid_z_scores_standard(self, theta2_rich):
        cells, summary = check_duality(theta2_rich, [0.25, 0.75], [0.5], [0.5, 2.0],
                                       20_000, seed=2)
        assert summary["n_cells"] == 4
        assert summary["max_abs_z"] < 4.0

    def test_deterministic_and_worker_independent(self, theta2_rich):
        _, s1 = check_duality(theta2_rich, [0.5], [0.5], [1.0], BLOCK + 500, seed=3)
        _, s2 = check_duality(theta2_rich, [0.5], [0.5], [1.0], BLOCK + 500, seed=3,
                              workers=3)
        assert s1 == s2


class TestTwoTrajectory:
    def test_degenerate_pair_both_sides_zero(self, theta2_rich):
        out = check_two_trajectory_duality(theta2_rich, 0.5, 0.5, 0.5, 1.0, 2000,
                                           seed=4)
        assert out["left"].point == 0.0 and out["right"].point == 0.0
        assert out["z"] == 0.0

    def test_full_interval_pair(self, theta2_rich):
        out = check_two_trajectory_duality(theta2_rich, 0.0, 1.0, 0.5, 2.0, 4000,
                                           seed=5)
        assert out["left"].point == 1.0
        assert out["right"].point >= 0.99

    def test_generic_cell(self, theta2_rich):
        out = check_two_trajectory_duality(theta2_rich, 0.25, 0.75, 0.5, 2.0,
                                           20_000, seed=6)
        assert abs(out["z"]) <= 4.0
        assert out["max_order_gap"] <= 0.0


class TestFixation:
    def test_renewal_requires_theta2(self, theta3_balancing):
        with pytest.raises(WrongRegime):
            estimate_fixation_renewal(theta3_balancing, [0.5], 0.2, 0.2, 100, seed=7)

    def test_direct_requires_positive_band(self, theta2_rich):
        with pytest.raises(ParameterError):
            estimate_fixation_direct(theta2_rich, 0.5, 10.0, 0.0, 100, seed=8)

    def test_neutral_symmetry_at_half(self, neutral_half):
        res = estimate_fixation_direct(neutral_half, 0.5, 60.0, 1e-3, 20_000, seed=9)
        assert abs(res.estimate.point - 0.5) <= 3 * res.estimate.std_error
        assert res.undecided_fraction < 0.02

    def test_renewal_vs_direct_cross_validation(self, theta2_rich):
        ren = estimate_fixation_renewal(theta2_rich, [0.25, 0.5, 0.75], 0.2, 0.2,
                                        8000, seed=10)
        for x, est in zip(ren.x_grid, ren.estimates):
            direct = estimate_fixation_direct(theta2_rich, float(x), 60.0, 1e-3,
                                              8000, seed=11)
            comb = math.hypot(est.std_error, direct.estimate.std_error)
            assert abs(est.point - direct.estimate.point) <= 3 * comb

    def test_renewal_curve_monotone_in_unit_range(self, theta2_rich):
        grid = np.linspace(0.0, 1.0, 9)
        ren = estimate_fixation_renewal(theta2_rich, grid, 0.2, 0.2, 4000, seed=12)
        pts = [e.point for e in ren.estimates]
        assert pts[0] == 0.0 and pts[-1] == pytest.approx(1.0, abs=1e-9)
        assert all(a <= b + 1e-12 for a, b in zip(pts, pts[1:]))
        assert all(0.0 <= p <= 1.0 for p in pts)

    def test_symmetric_model_h_plus_reflected_is_one(self, theta2_rich):
        # this model maps to itself under the type swap, so h(x)+h(1-x)=1
        ren = estimate_fixation_renewal(theta2_rich, [0.3, 0.7], 0.2, 0.2, 10_000,
                                        seed=13)
        tot = ren.estimates[0].point + ren.estimates[1].point
        comb = math.hypot(ren.estimates[0].std_error, ren.estimates[1].std_error)
        assert abs(tot - 1.0) <= 3 * comb

    def test_jackknife_agrees_with_delta_method(self, theta2_rich):
        ren = estimate_fixation_renewal(theta2_rich, [0.5], 0.2, 0.2, 6000, seed=14)
        assert ren.jackknife_se[0] == pytest.approx(ren.estimates[0].std_error,
                                                    rel=0.25)


class TestStationary:
    def test_renewal_vs_ergodic_agreement(self, theta2_rich):
        grid = [0.5]
        ren = estimate_stationary_y(theta2_rich, grid, "renewal", 6000, seed=15)
        erg = estimate_stationary_y(theta2_rich, grid, "ergodic", 64, seed=16,
                                    t_total=320.0)
        comb = math.hypot(ren[0].std_error, erg[0].std_error)
        assert abs(ren[0].point - erg[0].point) <= 3 * comb

    def test_total_mass_is_one(self, theta2_rich):
        ren = estimate_stationary_y(theta2_rich, [1.0], "renewal", 2000, seed=17)
        assert ren[0].point == pytest.approx(1.0, abs=1e-12)
        erg = estimate_stationary_y(theta2_rich, [1.0], "ergodic", 16, seed=18)
        assert erg[0].point == pytest.approx(1.0, abs=1e-12)

    def test_ergodic_insensitive_to_start(self, theta2_rich):
        a = estimate_stationary_y(theta2_rich, [0.5], "ergodic", 48, seed=19,
                                  y0=0.1, t_total=320.0)
        b = estimate_stationary_y(theta2_rich, [0.5], "ergodic", 48, seed=20,
                                  y0=0.9, t_total=320.0)
        comb = math.hypot(a[0].std_error, b[0].std_error)
        assert abs(a[0].point - b[0].point) <= 3 * comb

    def test_unknown_method_rejected(self, theta2_rich):
        with pytest.raises(ParameterError):
            estimate_stationary_y(theta2_rich, [0.5], "bootstrap", 10, seed=21)


class TestCoexistence:
    def test_interior_occupation_dominates(self, theta3_balancing):
        # in the coexistence regime the forward process has the interior
        # stationary law: its time-average mass on (0.1, 0.9) exceeds one
        # half whatever the start (the dual, by contrast, absorbs)
        from lwf.batch import occupation_window

        for x0, seed in ((0.1, 22), (0.9, 23)):
            occ = occupation_window(theta3_balancing, x0, [0.1, 0.9], 20.0, 320.0,
                                    48, seed=seed, tag="coexist_x", process="x")
            interior = occ[:, 1] - occ[:, 0]
            assert interior.mean() > 0.5
        # the forward law at a large fixed time concentrates off the boundary
        states = paths_at_times(theta3_balancing, "x", 0.5, [50.0], 4000, seed=24,
                                tag="test_coexist")[:, 0]
        assert ((states > 0.1) & (states < 0.9)).mean() > 0.5


class TestDecay:
    def test_band_guard(self, neutral_half):
        with pytest.raises(ParameterError):
            decay_rate_experiment(neutral_half, 0.5, 0.05, [5, 10], 100, seed=25)

    def test_theta3_needs_small_rho(self, theta3_balancing):
        with pytest.raises(ParameterError):
            decay_rate_experiment(theta3_balancing, 0.5, 5.0, [5, 10], 100, seed=26,
                                  mode="theta3")

    def test_theta01_mode_regime_guard(self, neutral_half):
        with pytest.raises(WrongRegime):
            decay_rate_experiment(neutral_half, 0.5, 0.5, [2, 4], 100, seed=27,
                                  mode="theta01")

    def test_theta0_band_probability_decays(self, theta0_model):
        rep = decay_rate_experiment(theta0_model, 0.5, 0.5, [2, 5, 10, 20, 30],
                                    4000, seed=28, mode="theta01", band="poly")
        assert (np.diff(rep.probs) <= 0.02).all()
        assert rep.probs[-1] < rep.probs[0]

    def test_theta2_band_curve_loglinear(self, neutral_slow):
        # rho sits between "band already wide at t=5" and the intrinsic
        # boundary-approach rate (the coalescence impact, about 0.55 here)
        rep = decay_rate_experiment(neutral_slow, 0.5, 0.3,
                                    [5, 10, 15, 20, 25, 30, 35, 40],
                                    6000, seed=29, mode="theta2")
        assert rep.exp_fit is not None
        assert rep.exp_fit["slope"] < 0
        assert rep.exp_fit["r2"] > 0.9

    def test_theta3_dual_band_decay(self, theta3_balancing):
        # in the coexistence regime the dual is the one pinned to the
        # boundary bands; its outside-the-bands probability dies out once the
        # window clears the early band-widening phase
        rep = decay_rate_experiment(theta3_balancing, 0.5, rho=0.1,
                                    t_grid=[10, 20, 40, 60, 80], reps=4000,
                                    seed=31, mode="theta3")
        assert rep.probs[-1] < rep.probs[0]
        assert rep.exp_fit["slope"] < 0
        assert rep.exp_fit["r2"] > 0.9

    def test_merge_curve(self, neutral_slow):
        rep = merge_decay_curve(neutral_slow, 0.2, 0.8, [5, 10, 20, 30, 40], 6000,
                                seed=30)
        assert rep.max_order_gap <= 0.0
        assert rep.exp_fit["slope"] < 0
        assert (np.diff(rep.probs) <= 0).all()


class TestFitHelper:
    def test_recovers_exact_exponential(self):
        t = np.array([1.0, 2.0, 3.0, 4.0])
        p = 0.5 * np.exp(-0.7 * t)
        fit = fit_loglinear(t, p)
        assert fit["slope"] == pytest.approx(-0.7, abs=1e-12)
        assert fit["intercept"] == pytest.approx(math.log(0.5), abs=1e-12)
        assert fit["r2"] == pytest.approx(1.0, abs=1e-12)

    def test_too_few_points(self):
        assert fit_loglinear([1, 2, 3], [0.5, 0.0, 0.0]) is None
