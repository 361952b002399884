"""Forward process: jump maps, the selection flow, and path properties."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lwf import (
    BackgroundConfig,
    ParameterError,
    SelectionFn,
    build_background,
    default_drift_step,
    drift_flow_x,
    simulate_x,
    step_x_env,
    step_x_neutral,
)
from lwf.background import NEUTRAL
from lwf.batch import coupled_paths, paths_at_times

unit = st.floats(0.0, 1.0)
interior = st.floats(0.01, 0.99)


class TestNeutralStep:
    def test_formula(self):
        assert step_x_neutral(0.4, 0.5, 0.3) == pytest.approx(0.7, abs=1e-15)

    @pytest.mark.parametrize("r,u", [(0.3, 0.2), (0.9, 0.99), (0.01, 0.5)])
    def test_boundaries_fixed(self, r, u):
        assert step_x_neutral(0.0, r, u) == 0.0
        assert step_x_neutral(1.0, r, u) == 1.0

    @given(r=interior, u=interior)
    @settings(max_examples=50, deadline=None)
    def test_nondecreasing_right_continuous_in_x(self, r, u):
        xs = np.linspace(0, 1, 401)
        vals = step_x_neutral(xs, r, u)
        assert (np.diff(vals) >= -1e-15).all()
        # right-continuity at the jump point x=u: value just right of u
        # matches the value at u
        at_u = step_x_neutral(u, r, u)
        right = step_x_neutral(min(u * (1 + 1e-12) + 1e-300, 1.0), r, u)
        assert right >= at_u - 1e-12

    @given(x=unit, r=interior, u=interior)
    @settings(max_examples=100, deadline=None)
    def test_stays_in_unit_interval(self, x, r, u):
        v = step_x_neutral(x, r, u)
        assert -1e-15 <= v <= 1 + 1e-15


class TestEnvStep:
    def test_formula(self):
        assert step_x_env(0.5, 0.5) == pytest.approx(0.625, abs=1e-15)
        assert step_x_env(0.5, -0.5) == pytest.approx(0.375, abs=1e-15)

    @pytest.mark.parametrize("r", [-0.9, -0.1, 0.1, 0.9])
    def test_boundaries_fixed(self, r):
        assert step_x_env(0.0, r) == 0.0
        assert step_x_env(1.0, r) == 1.0


class TestDriftFlow:
    def test_zero_sigma_identity(self):
        s = SelectionFn([0.0])
        assert drift_flow_x(0.37, s, 10.0) == 0.37

    def test_boundaries_fixed(self):
        s = SelectionFn([2.0, 1.0])
        assert drift_flow_x(0.0, s, 3.0) == 0.0
        assert drift_flow_x(1.0, s, 3.0) == 1.0

    def test_logistic_closed_form(self):
        # constant selection integrates to the logistic curve
        s = SelectionFn([1.0])
        got = drift_flow_x(0.5, s, 1.0, h=1e-3)
        assert got == pytest.approx(1.0 / (1.0 + math.exp(-1.0)), abs=1e-8)
        assert got == pytest.approx(0.731059, abs=1e-6)

    def test_logistic_longer_horizon(self):
        s = SelectionFn([-2.0])
        x0, t = 0.7, 3.0
        exact = 1.0 / (1.0 + (1 - x0) / x0 * math.exp(2.0 * t))
        assert drift_flow_x(x0, s, t, h=1e-3) == pytest.approx(exact, abs=1e-8)

    def test_default_step(self):
        assert default_drift_step(SelectionFn([0.0])) == pytest.approx(1e-2)
        assert default_drift_step(SelectionFn([100.0])) == pytest.approx(0.1 / 101.0)

    def test_negative_dt_rejected(self):
        with pytest.raises(ParameterError):
            drift_flow_x(0.5, SelectionFn([1.0]), -1.0)

    def test_flow_monotone_in_x0(self):
        s = SelectionFn([1.0, -2.0])
        xs = np.linspace(0.01, 0.99, 45)
        ys = np.array([drift_flow_x(x, s, 2.5) for x in xs])
        assert (np.diff(ys) > 0).all()


class TestSimulateX:
    def test_absorbing_at_zero(self, neutral_half):
        bg = build_background(neutral_half, BackgroundConfig(seed=31))
        traj = simulate_x(neutral_half, bg, 0.0, [1.0, 5.0])
        assert (traj.obs_states == 0.0).all()
        assert (traj.states == 0.0).all()

    def test_observation_on_event_time_takes_post_jump_value(self, neutral_half):
        bg = build_background(neutral_half, BackgroundConfig(seed=32))
        first = next(iter(bg.events(10.0)))
        assert first.kind == NEUTRAL
        traj = simulate_x(neutral_half, bg, 0.4, [first.time])
        expected = step_x_neutral(0.4, first.r, first.u)
        assert traj.obs_states[0] == pytest.approx(expected, abs=0.0)

    def test_martingale_under_neutral_dynamics(self, neutral_half):
        # no drift, no shocks: the mean is conserved
        states = paths_at_times(neutral_half, "x", 0.3, [5.0], 100_000, seed=33,
                                tag="test_mart")[:, 0]
        se = states.std(ddof=1) / math.sqrt(states.size)
        assert abs(states.mean() - 0.3) <= 4 * se

    def test_pathwise_monotone_coupling_shared_background(self, theta2_rich):
        for i in range(40):
            bg = build_background(theta2_rich, BackgroundConfig(seed=34, stream_id=i))
            lo = simulate_x(theta2_rich, bg, 0.3, [1.0, 2.0, 5.0])
            hi = simulate_x(theta2_rich, bg, 0.6, [1.0, 2.0, 5.0])
            assert (lo.obs_states <= hi.obs_states + 1e-15).all()

    def test_batch_monotone_coupling(self, theta2_rich):
        out = coupled_paths(theta2_rich, "x", 0.3, 0.6, [1.0, 5.0], 2000, seed=35,
                            tag="test_mono_x")
        assert out["max_order_gap"] <= 0.0
        assert (out["lo"] <= out["hi"] + 1e-15).all()

    def test_trajectory_record_is_time_ordered(self, theta2_rich):
        bg = build_background(theta2_rich, BackgroundConfig(seed=36))
        traj = simulate_x(theta2_rich, bg, 0.5, [0.5, 1.5, 3.0])
        assert (np.diff(traj.times) >= 0).all()
        assert ((traj.states >= 0) & (traj.states <= 1)).all()
        assert traj.meta["seed"] == 36

    def test_batch_matches_per_path_law(self, theta2_rich):
        # same law from the vectorized engine and the per-event engine
        from scipy import stats

        n = 2500
        batch = paths_at_times(theta2_rich, "x", 0.5, [2.0], n, seed=37,
                               tag="test_law")[:, 0]
        per_path = np.array([
            simulate_x(theta2_rich,
                       build_background(theta2_rich,
                                        BackgroundConfig(seed=38, stream_id=i)),
                       0.5, [2.0]).obs_states[0]
            for i in range(n)
        ])
        ks = stats.ks_2samp(batch, per_path)
        assert ks.pvalue > 1e-3


class TestDecayToBoundary:
    def test_theta0_pushes_every_path_down(self, theta0_model):
        states = paths_at_times(theta0_model, "x", 0.5, [10.0, 20.0, 40.0], 2000,
                                seed=39, tag="test_theta0")
        fracs = (states > 0.1).mean(axis=0)
        assert fracs[0] >= fracs[1] >= fracs[2]
        assert fracs[2] < 0.01
