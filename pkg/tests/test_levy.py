"""Comparison processes: increments, exponents, means, squeeze, passage."""

import math

import numpy as np
import pytest

from lwf import (
    BackgroundConfig,
    DomainError,
    JumpEvent,
    LevySpec,
    MeasureSpec,
    ModelParams,
    ParameterError,
    SelectionFn,
    build_background,
    laplace_exponent,
    levy_drift,
    levy_increment,
    mean_increment,
    mirror_view,
    sandwich_check,
    simulate_levy,
)
from lwf.estimators import sandwich_mc
from lwf.levy import levy_unit_samples, passage_tail
from conftest import atom_lambda, atom_mu

B4 = math.log(4.0)
LOG2 = math.log(2.0)


def neutral(t, r, u):
    return JumpEvent(t, "neutral", r, u)


def env(t, r):
    return JumpEvent(t, "env", r, None)


class TestIncrements:
    def test_lower_neutral(self):
        spec = LevySpec(b=B4)
        assert levy_increment(spec, neutral(0.1, 0.5, 0.3)) == pytest.approx(
            math.log(0.5), abs=1e-15)

    def test_lower_env_positive(self):
        spec = LevySpec(b=B4)
        got = levy_increment(spec, env(0.1, 0.5))
        assert got == pytest.approx(0.5 * math.log(1.75), abs=1e-15)
        assert got == pytest.approx(0.279807, abs=1e-6)

    def test_lower_env_negative_has_no_correction(self):
        spec = LevySpec(b=B4)
        assert levy_increment(spec, env(0.1, -0.5)) == pytest.approx(
            math.log(0.5), abs=1e-15)

    def test_upper_neutral_moderate(self):
        spec = LevySpec(b=B4, which="upper")
        assert levy_increment(spec, neutral(0.1, 0.5, 0.9)) == pytest.approx(
            math.log(0.5), abs=1e-15)
        # small 1/(u e^b) branch wins for small u
        assert levy_increment(spec, neutral(0.1, 0.5, 0.1)) == pytest.approx(
            -math.log(0.1) - B4, abs=1e-14)

    def test_upper_neutral_huge_size(self):
        spec = LevySpec(b=B4, which="upper")
        assert levy_increment(spec, neutral(0.1, 0.8, 0.5)) == 0.0
        assert levy_increment(spec, neutral(0.1, 0.8, 0.2)) == pytest.approx(
            -math.log(0.2) - B4, abs=1e-14)

    def test_upper_small_sizes_belong_to_the_remainder(self):
        spec = LevySpec(b=B4, delta=0.25, which="upper")
        assert levy_increment(spec, neutral(0.1, 0.2, 0.5)) == 0.0
        assert levy_increment(spec, neutral(0.1, 0.25, 0.9)) != 0.0

    def test_upper_env_corrects_negative_sizes(self):
        spec = LevySpec(b=B4, which="upper")
        assert levy_increment(spec, env(0.1, -0.5)) == pytest.approx(
            0.5 * math.log(0.25 + 0.5), abs=1e-15)
        assert levy_increment(spec, env(0.1, 0.5)) == pytest.approx(
            math.log(1.5), abs=1e-15)

    def test_mirrored_flips_env_sign(self):
        spec = LevySpec(b=B4, mirrored=True)
        plain = LevySpec(b=B4)
        assert levy_increment(spec, env(0.1, -0.5)) == levy_increment(plain, env(0.1, 0.5))

    def test_b_validation(self):
        with pytest.raises(ParameterError):
            LevySpec(b=0.5)
        with pytest.raises(ParameterError):
            LevySpec(b=B4, delta=1.5)


class TestDrift:
    def test_zero_sigma(self, neutral_half):
        assert levy_drift(LevySpec(b=B4), neutral_half) == 0.0
        assert levy_drift(LevySpec(b=B4, which="upper"), neutral_half) == 0.0

    def test_constant_sigma(self):
        p = ModelParams(atom_lambda((0.5, 1.0)), None, SelectionFn([2.0]))
        assert levy_drift(LevySpec(b=B4), p) == pytest.approx(1.5)
        assert levy_drift(LevySpec(b=B4, which="upper"), p) == pytest.approx(2.5)

    def test_mirrored_uses_reflected_sigma(self):
        p = ModelParams(atom_lambda((0.5, 1.0)), None, SelectionFn([4.0, -8.0]))
        spec = LevySpec(b=B4, mirrored=True)
        # reflected sigma at 0 equals -sigma(1) = 4; the C1 bound is shared
        assert levy_drift(spec, p) == pytest.approx(4.0 - 0.25 * p.sigma.c1_bound)


class TestLaplaceExponent:
    def test_closed_form_single_atom(self, neutral_half):
        spec = LevySpec(b=B4)
        for lam in (0.0, 0.25, 0.5, 1.0, 2.0, 5.0):
            expect = 4.0 * (2.0**-lam - 1.0)
            assert laplace_exponent(spec, neutral_half, lam) == pytest.approx(
                expect, abs=1e-10)
        assert laplace_exponent(spec, neutral_half, 1.0) == pytest.approx(-2.0)

    def test_zero_at_zero_both(self, theta2_rich):
        for which in ("lower", "upper"):
            spec = LevySpec(b=B4, which=which)
            assert laplace_exponent(spec, theta2_rich, 0.0) == 0.0

    def test_derivative_at_zero_is_mean(self, neutral_half, theta2_rich):
        h = 1e-5
        for params in (neutral_half, theta2_rich):
            for which in ("lower", "upper"):
                spec = LevySpec(b=B4, which=which)
                psi = lambda v: laplace_exponent(spec, params, v)  # noqa: E731
                if which == "lower":
                    deriv = (psi(h) - psi(-h)) / (2 * h)
                else:
                    # domain is one-sided; use the second-order forward stencil
                    deriv = (-3 * psi(0.0) + 4 * psi(h) - psi(2 * h)) / (2 * h)
                assert deriv == pytest.approx(mean_increment(spec, params), abs=1e-6)

    def test_convexity_on_grid(self, theta2_rich):
        for which, grid in (("lower", np.linspace(-0.5, 3, 22)),
                            ("upper", np.linspace(0, 0.9, 19))):
            spec = LevySpec(b=B4, which=which)
            vals = [laplace_exponent(spec, theta2_rich, v) for v in grid]
            second = np.diff(vals, 2)
            assert (second >= -1e-9).all()

    def test_upper_domain_error(self, neutral_half):
        spec = LevySpec(b=B4, which="upper")
        for lam in (-0.1, 1.0, 1.5):
            with pytest.raises(DomainError):
                laplace_exponent(spec, neutral_half, lam)

    def test_lower_negative_lambda_atoms_are_fine(self, neutral_half):
        spec = LevySpec(b=B4)
        got = laplace_exponent(spec, neutral_half, -1.0)
        assert got == pytest.approx(4.0 * (2.0 - 1.0), abs=1e-10)

    def test_lower_negative_lambda_thin_density_tail_is_finite(self):
        # (1-r)^1.5 tail keeps the strong functional finite up to order 2.5,
        # so the exponent extends to lambda = -2
        lam = MeasureSpec(atoms=[(0.3, 0.2)],
                          density=lambda r: (1 - r) ** 1.5,
                          support_interval=(0.0, 1.0), density_support=(0.5, 1.0))
        p = ModelParams(lam, None, SelectionFn([0.0]))
        got = laplace_exponent(LevySpec(b=B4), p, -2.0)
        assert math.isfinite(got) and got > 0

    def test_lower_negative_lambda_fat_tail_rejected(self):
        lam = MeasureSpec(atoms=[(0.3, 0.2)],
                          density=lambda r: (1 - r) ** 1.2,
                          support_interval=(0.0, 1.0), density_support=(0.5, 1.0))
        p = ModelParams(lam, None, SelectionFn([0.0]))
        spec = LevySpec(b=B4)
        assert math.isfinite(laplace_exponent(spec, p, 1.0))
        with pytest.raises(DomainError):
            laplace_exponent(spec, p, -4.0)


class TestMeanIncrement:
    def test_equals_c0_for_null_env(self, neutral_half):
        from lwf import compute_c0

        for b in (B4, math.log(8), math.log(32)):
            got = mean_increment(LevySpec(b=b), neutral_half)
            assert got == pytest.approx(compute_c0(neutral_half), abs=1e-10)
            assert got == pytest.approx(-4 * LOG2, abs=1e-10)

    def test_gap_to_c0_shrinks_in_b(self):
        from lwf import compute_c0

        p = ModelParams(atom_lambda((0.5, 1.0)), atom_mu((0.4, 0.3)),
                        SelectionFn([0.5]))
        c0 = compute_c0(p)
        gaps = [abs(mean_increment(LevySpec(b=b), p) - c0)
                for b in (math.log(4), math.log(8), math.log(16), math.log(32))]
        assert all(g1 > g2 for g1, g2 in zip(gaps, gaps[1:]))

    def test_mirrored_mean_approaches_c1(self):
        from lwf import compute_c1

        p = ModelParams(atom_lambda((0.5, 1.0)), atom_mu((0.4, 0.3)),
                        SelectionFn([0.5]))
        gap = abs(mean_increment(LevySpec(b=math.log(1024), mirrored=True), p)
                  - compute_c1(p))
        assert gap < 1e-3


class TestSimulateLevy:
    def test_deterministic_given_background(self, theta2_rich):
        bg = build_background(theta2_rich, BackgroundConfig(seed=91))
        spec = LevySpec(b=B4)
        a = simulate_levy(spec, theta2_rich, bg, [1.0, 3.0])
        b = simulate_levy(spec, theta2_rich, bg, [1.0, 3.0])
        np.testing.assert_array_equal(a.obs_states, b.obs_states)

    def test_value_before_first_event_is_drift_only(self, neutral_half):
        bg = build_background(neutral_half, BackgroundConfig(seed=92))
        first = next(iter(bg.events(10.0)))
        t0 = first.time / 2
        traj = simulate_levy(LevySpec(b=B4), neutral_half, bg, [t0])
        assert traj.obs_states[0] == 0.0  # sigma = 0 means zero drift

    def test_empirical_laplace_transform(self, neutral_half):
        spec = LevySpec(b=B4)
        samples = levy_unit_samples(spec, neutral_half, 30_000, seed=93)
        for lam in (0.25, 0.5):
            emp = np.exp(lam * samples)
            se = emp.std(ddof=1) / math.sqrt(emp.size)
            expect = math.exp(laplace_exponent(spec, neutral_half, lam))
            assert abs(emp.mean() - expect) <= 5 * se

    def test_lln_matches_mean_increment(self, theta2_rich):
        spec = LevySpec(b=B4)
        horizon = 200.0
        samples = levy_unit_samples(spec, theta2_rich, 4000, seed=94,
                                    horizon=horizon) / horizon
        se = samples.std(ddof=1) / math.sqrt(samples.size)
        assert abs(samples.mean() - mean_increment(spec, theta2_rich)) <= 4 * se

    def test_upper_process_transform_and_mean_by_mc(self):
        # the upper exponent's neutral integrand comes from integrating the
        # event increment over u analytically; direct event sampling is the
        # independent route that must agree with it
        p = ModelParams(atom_lambda((0.1, 0.5), (0.5, 0.5), (0.8, 0.2)),
                        atom_mu((0.3, 0.2), (-0.3, 0.2)), SelectionFn([1.0, -2.0]))
        spec = LevySpec(b=B4, delta=0.25, which="upper")
        samples = levy_unit_samples(spec, p, 60_000, seed=130)
        se_mean = samples.std(ddof=1) / math.sqrt(samples.size)
        assert abs(samples.mean() - mean_increment(spec, p)) <= 4 * se_mean
        for lam in (0.25, 0.5):
            emp = np.exp(lam * samples)
            se = emp.std(ddof=1) / math.sqrt(emp.size)
            expect = math.exp(laplace_exponent(spec, p, lam))
            assert abs(emp.mean() - expect) <= 5 * se

    def test_mirrored_lower_process_mc(self, theta2_rich):
        spec = LevySpec(b=B4, mirrored=True)
        samples = levy_unit_samples(spec, theta2_rich, 40_000, seed=131)
        for lam in (0.25, 0.5):
            emp = np.exp(lam * samples)
            se = emp.std(ddof=1) / math.sqrt(emp.size)
            expect = math.exp(laplace_exponent(spec, theta2_rich, lam))
            assert abs(emp.mean() - expect) <= 5 * se

    def test_variance_matches_second_derivative(self, neutral_half):
        spec = LevySpec(b=B4)
        samples = levy_unit_samples(spec, neutral_half, 50_000, seed=95)
        h = 1e-4
        psi2 = (laplace_exponent(spec, neutral_half, h)
                - 2 * laplace_exponent(spec, neutral_half, 0.0)
                + laplace_exponent(spec, neutral_half, -h)) / h**2
        var = samples.var(ddof=1)
        se = var * math.sqrt(2.0 / samples.size)  # normal-ish approximation
        assert abs(var - psi2) <= 6 * se


class TestSandwich:
    def test_zero_violations_rich_model(self, theta2_rich):
        out = sandwich_mc(theta2_rich, B4, 0.25, 0.2, 50.0, 200, seed=96)
        assert out["max_lower_violation"] <= 1e-9
        assert out["max_upper_violation"] <= 1e-9
        assert out["n_events_checked"] > 0

    def test_zero_violations_with_small_jump_remainder(self):
        # an atom below delta exercises the path-dependent remainder term
        p = ModelParams(atom_lambda((0.1, 0.5), (0.5, 0.5)),
                        atom_mu((0.3, 0.2), (-0.3, 0.2)), SelectionFn([1.0, -2.0]))
        out = sandwich_mc(p, B4, 0.25, 0.2, 50.0, 300, seed=97)
        assert out["max_lower_violation"] <= 1e-9
        assert out["max_upper_violation"] <= 1e-9

    def test_start_exactly_at_window_edge(self, theta2_rich):
        bg = build_background(theta2_rich, BackgroundConfig(seed=98))
        rep = sandwich_check(theta2_rich, bg, B4, 0.25, 0.25, 50.0)
        assert rep.max_lower_violation <= 1e-9
        assert rep.max_upper_violation <= 1e-9

    def test_mirrored_squeeze_near_one(self, theta2_rich):
        mirrored = theta2_rich.mirrored()
        worst_lo = worst_up = -math.inf
        for i in range(200):
            bg = build_background(theta2_rich, BackgroundConfig(seed=99, stream_id=i))
            rep = sandwich_check(mirrored, mirror_view(bg), B4, 0.25, 0.2, 50.0)
            worst_lo = max(worst_lo, rep.max_lower_violation)
            worst_up = max(worst_up, rep.max_upper_violation)
        assert worst_lo <= 1e-9 and worst_up <= 1e-9

    def test_drift_exit_stops_the_check(self):
        # negative selection makes the dual drift upward near 0, so paths can
        # leave the window between events; the check must stop cleanly there
        p = ModelParams(atom_lambda((0.5, 0.3)), None, SelectionFn([-2.0]))
        exited = 0
        for i in range(100):
            bg = build_background(p, BackgroundConfig(seed=132, stream_id=i))
            rep = sandwich_check(p, bg, B4, 0.25, 0.2, 50.0)
            exited += int(rep.exited)
            assert rep.max_lower_violation <= 1e-9
            assert rep.max_upper_violation <= 1e-9
        assert exited == 100

    def test_y0_outside_window_rejected(self, theta2_rich):
        bg = build_background(theta2_rich, BackgroundConfig(seed=100))
        with pytest.raises(ParameterError):
            sandwich_check(theta2_rich, bg, B4, 0.25, 0.3, 10.0)


class TestPassageTail:
    def test_negative_mean_violates_precondition(self, neutral_half):
        with pytest.raises(ParameterError):
            passage_tail(LevySpec(b=B4), neutral_half, 0.0, 1.0, 100, [1, 2], seed=1)

    @pytest.fixture
    def upward_model(self):
        # positive balance at 0: selection beats the weak neutral noise, but
        # slowly enough that passages spread over the time grid
        return ModelParams(atom_lambda((0.5, 0.1)), None, SelectionFn([0.5]))

    def test_huge_level_is_never_hit(self, upward_model):
        rep = passage_tail(LevySpec(b=B4), upward_model, 0.0, 200.0, 2000,
                           [1.0, 5.0], seed=2, horizon=50.0)
        assert (rep.tail == 0.0).all()
        assert rep.censored_fraction == 1.0

    def test_tail_slope_negative_and_stable(self, upward_model):
        spec = LevySpec(b=B4)
        grid = [1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 10.0]
        rep1 = passage_tail(spec, upward_model, 0.0, 0.5, 4000, grid, seed=3,
                            horizon=60.0)
        rep2 = passage_tail(spec, upward_model, 0.0, 0.5, 8000, grid, seed=4,
                            horizon=60.0)
        assert rep1.exp_fit is not None and rep2.exp_fit is not None
        assert rep1.exp_fit["slope"] < 0 and rep2.exp_fit["slope"] < 0
        assert rep2.exp_fit["slope"] == pytest.approx(rep1.exp_fit["slope"],
                                                      rel=0.5)
        assert rep1.last_min_times.max() <= 60.0

    def test_upper_spec_rejected(self, upward_model):
        with pytest.raises(ParameterError):
            passage_tail(LevySpec(b=B4, which="upper"), upward_model, 0.0, 1.0,
                         100, [1.0], seed=5)
