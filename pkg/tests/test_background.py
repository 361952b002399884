"""Event-stream generation: rates, determinism, views."""

import math

import numpy as np
import pytest

from lwf import (
    ENV,
    NEUTRAL,
    BackgroundConfig,
    InfiniteRate,
    MeasureSpec,
    ModelParams,
    ParameterError,
    SelectionFn,
    build_background,
    filtered_view,
    mirror_view,
)
from conftest import atom_lambda


@pytest.fixture
def rich_bg(theta2_rich):
    return build_background(theta2_rich, BackgroundConfig(seed=101))


class TestRates:
    def test_atom_rate_formula(self, neutral_half):
        bg = build_background(neutral_half, BackgroundConfig(seed=1))
        assert bg.rate_neutral == pytest.approx(4.0, abs=1e-12)
        assert bg.rate_env == 0.0

    def test_every_neutral_event_has_the_atom_size(self, neutral_half):
        bg = build_background(neutral_half, BackgroundConfig(seed=1))
        evs = list(bg.events(20.0))
        assert evs and all(ev.r == 0.5 and ev.kind == NEUTRAL for ev in evs)
        assert all(0.0 < ev.u < 1.0 for ev in evs)

    def test_null_env_measure_gives_no_env_events(self, neutral_half):
        bg = build_background(neutral_half, BackgroundConfig(seed=2))
        assert all(ev.kind == NEUTRAL for ev in bg.events(50.0))

    def test_empirical_rate_concentration(self, theta2_rich):
        bg = build_background(theta2_rich, BackgroundConfig(seed=3))
        horizon = 500.0
        counts = {NEUTRAL: 0, ENV: 0}
        for ev in bg.events(horizon):
            counts[ev.kind] += 1
        for kind, rate in ((NEUTRAL, bg.rate_neutral), (ENV, bg.rate_env)):
            slack = 4.0 * math.sqrt(rate * horizon) / horizon
            assert abs(counts[kind] / horizon - rate) <= slack

    def test_infinite_truncated_rate_raises(self):
        lam = MeasureSpec(
            atoms=[(0.2, 0.05)],
            density=lambda r: (1.0 - r) ** -2,
            support_interval=(0.0, 1.0),
            density_support=(0.5, 1.0),
        )
        # admissible measure overall is required first, so bypass ModelParams
        # admissibility by keeping the density integrable against log/r^2 but
        # not against r^-2 alone near 1: 1/(1-r)^2 fails both, so construction
        # of the model itself must reject it
        with pytest.raises(ParameterError):
            ModelParams(lam, None, SelectionFn([0.0]))

    def test_infinite_small_jump_rate_raises(self):
        # admissible density ~ 1/sqrt(r): log(1/(1-r))/r^2 integrable near 0?
        # r^-2*r^-0.5 is not integrable at 0, so coalescence impact is infinite
        # and the model is rejected; a admissible density with eps too small is
        # still finite, so InfiniteRate needs a density non-integrable against
        # r^-2 on [eps,1) -- impossible for admissible models; check the
        # sampler-level guard directly instead.
        from lwf.background import _ComponentSampler

        dens = MeasureSpec(density=lambda r: (1.0 - r) ** -2.5,
                           support_interval=(0.0, 1.0), density_support=(0.5, 1.0))
        with pytest.raises(InfiniteRate):
            _ComponentSampler(dens, 0.01, lambda r: 1.0)


class TestDeterminism:
    def test_identical_seed_replays_identically(self, rich_bg, theta2_rich):
        evs1 = list(rich_bg.events(10.0))
        evs2 = list(rich_bg.events(10.0))
        assert evs1 == evs2
        other = build_background(theta2_rich, BackgroundConfig(seed=101))
        assert list(other.events(10.0)) == evs1

    def test_different_stream_ids_differ(self, theta2_rich):
        a = build_background(theta2_rich, BackgroundConfig(seed=101, stream_id=1))
        b = build_background(theta2_rich, BackgroundConfig(seed=101, stream_id=2))
        assert list(a.events(5.0)) != list(b.events(5.0))

    def test_strictly_increasing_times(self, rich_bg):
        times = [ev.time for ev in rich_bg.events(50.0)]
        assert all(t1 < t2 for t1, t2 in zip(times, times[1:]))


class TestFilteredViews:
    def test_keep_above_empty_when_no_atoms_qualify(self, neutral_half):
        bg = build_background(neutral_half, BackgroundConfig(seed=5))
        view = filtered_view(bg, 0.6, keep_above=True)
        assert [ev for ev in view.events(50.0) if ev.kind == NEUTRAL] == []

    def test_min_r_zero_is_identity(self, rich_bg):
        view = filtered_view(rich_bg, 0.0, keep_above=True)
        assert list(view.events(10.0)) == list(rich_bg.events(10.0))

    def test_filtered_atom_rate(self):
        lam = atom_lambda((0.3, 0.5), (0.7, 0.5))
        params = ModelParams(lam, None, SelectionFn([0.0]))
        bg = build_background(params, BackgroundConfig(seed=6))
        view = filtered_view(bg, 0.5, keep_above=True)
        horizon = 2000.0
        count = sum(1 for ev in view.events(horizon) if ev.kind == NEUTRAL)
        rate = 0.5 / 0.49
        assert count / horizon == pytest.approx(rate, abs=4 * math.sqrt(rate / horizon))

    def test_complementary_views_recover_neutral_stream(self, rich_bg):
        full = [ev for ev in rich_bg.events(20.0)]
        below = [ev for ev in filtered_view(rich_bg, 0.4, False).events(20.0)]
        above = [ev for ev in filtered_view(rich_bg, 0.4, True).events(20.0)]
        merged_neutral = sorted(
            [ev for ev in below + above if ev.kind == NEUTRAL], key=lambda e: e.time
        )
        assert merged_neutral == [ev for ev in full if ev.kind == NEUTRAL]
        # env events pass through both views untouched
        assert [ev for ev in below if ev.kind == ENV] == [ev for ev in full if ev.kind == ENV]

    def test_views_nest(self, rich_bg):
        view = filtered_view(filtered_view(rich_bg, 0.2, True), 0.4, True)
        assert all(ev.r > 0.4 for ev in view.events(10.0) if ev.kind == NEUTRAL)


class TestMirrorView:
    def test_involution(self, rich_bg):
        twice = mirror_view(mirror_view(rich_bg))
        assert list(twice.events(10.0)) == list(rich_bg.events(10.0))

    def test_transform(self, rich_bg):
        for ev, mev in zip(rich_bg.events(5.0), mirror_view(rich_bg).events(5.0)):
            assert mev.time == ev.time
            if ev.kind == NEUTRAL:
                assert mev.r == ev.r and mev.u == 1.0 - ev.u
            else:
                assert mev.r == -ev.r


class TestMisc:
    def test_event_log_csv(self, rich_bg, tmp_path):
        path = tmp_path / "events.csv"
        n = rich_bg.dump_csv(path, horizon=5.0)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "time,kind,r,u"
        assert len(lines) == n + 1

    def test_horizon_cannot_exceed_config(self, theta2_rich):
        bg = build_background(theta2_rich, BackgroundConfig(seed=1, horizon=5.0))
        with pytest.raises(ParameterError):
            list(bg.events(10.0))

    def test_truncation_bias_bound_recorded(self):
        lam = MeasureSpec(atoms=[(0.5, 1.0)], density=lambda r: r,
                          support_interval=(0.0, 1.0), density_support=(0.0, 0.5))
        params = ModelParams(lam, None, SelectionFn([0.0]))
        bg = build_background(params, BackgroundConfig(seed=1, eps_neutral=1e-2))
        # dropped mean displacement per unit time: int_0^eps r * (1/r) dr = eps
        assert bg.neutral_bias_bound == pytest.approx(1e-2, rel=1e-6)

    def test_env_two_sided_density_sampling(self):
        mu = MeasureSpec(density=lambda r: 1.0 - abs(r), support_interval=(-1.0, 1.0))
        params = ModelParams(atom_lambda((0.5, 1.0)), mu, SelectionFn([0.0]))
        bg = build_background(params, BackgroundConfig(seed=9))
        rs = np.array([ev.r for ev in bg.events(200.0) if ev.kind == ENV])
        assert rs.size > 100
        assert (np.abs(rs) >= 1e-3).all() and (np.abs(rs) < 1).all()
        assert (rs > 0).any() and (rs < 0).any()
