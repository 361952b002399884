"""Seeded, reproducible streams of jump events.

A :class:`RandomBackground` realizes the two driving Poisson measures as one
merged, time-ordered event stream:

* neutral reproduction events at rate ``integral of r^-2 lambda(dr)`` with a
  size ``r`` in (0,1) and an independent uniform ``u``,
* environmental shocks at rate ``mu(|r| >= eps)`` with a signed size ``r``.

The stream is a pure function of ``(params, config.seed, config.stream_id)``:
iterating it twice replays the identical events, which is what makes coupled
trajectories, capped variants and horizon back-off by replay exact.  Density
components of the measures are truncated below ``eps`` (atoms are never
truncated) and the resulting per-unit-time mean-displacement bias bound is
recorded on the background.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import InfiniteRate, ParameterError
from .measures import MeasureSpec, ModelParams, integrate_against

__all__ = [
    "NEUTRAL",
    "ENV",
    "JumpEvent",
    "BackgroundConfig",
    "RandomBackground",
    "build_background",
    "filtered_view",
    "mirror_view",
]

NEUTRAL = "neutral"
ENV = "env"

_CHUNK = 1024
_CDF_GRID = 4096


@dataclass(frozen=True)
class JumpEvent:
    """One point of the merged event stream (``u`` only for neutral events)."""

    time: float
    kind: str
    r: float
    u: float | None = None


@dataclass(frozen=True)
class BackgroundConfig:
    seed: int = 0
    horizon: float | None = None
    eps_neutral: float = 1e-3
    eps_env: float = 1e-3
    stream_id: int = 0

    def __post_init__(self):
        if self.horizon is not None and not self.horizon > 0:
            raise ParameterError("horizon must be positive or None")
        if not 0 < self.eps_neutral < 1 or not 0 < self.eps_env < 1:
            raise ParameterError("truncation thresholds must lie in (0,1)")

    def with_stream(self, stream_id: int) -> "BackgroundConfig":
        return BackgroundConfig(self.seed, self.horizon, self.eps_neutral,
                                self.eps_env, stream_id)


class _ComponentSampler:
    """Size sampler for one measure: exact atoms + tabulated density inverse CDF.

    ``rate_weight`` maps a size r to its jump-rate weight: ``r**-2`` for the
    reproduction measure, 1 for the environmental measure.  Density pieces
    (one for (0,1) supports, up to two signed pieces for (-1,1) supports) are
    truncated at ``eps`` and tabulated on a fixed grid.
    """

    def __init__(self, measure: MeasureSpec, eps: float, rate_weight):
        self.atom_locs = np.array([loc for loc, _ in measure.atoms])
        atom_rates = np.array([w * rate_weight(loc) for loc, w in measure.atoms])
        self.atom_rate = float(atom_rates.sum()) if measure.atoms else 0.0
        if self.atom_rate > 0:
            self.atom_cum = np.cumsum(atom_rates) / self.atom_rate
        self.pieces: list[tuple[np.ndarray, np.ndarray]] = []
        piece_rates: list[float] = []
        if measure.density is not None:
            dlo, dhi = measure.density_support
            if measure.support_interval == (0.0, 1.0):
                bounds = [(max(dlo, eps), dhi)]
            else:
                bounds = [(dlo, min(dhi, -eps)), (max(dlo, eps), dhi)]
            for a, b in bounds:
                if a >= b:
                    continue
                dens_only = MeasureSpec(
                    atoms=(), support_interval=measure.support_interval,
                    density=measure.density, density_support=measure.density_support,
                    quad_tol=measure.quad_tol,
                )
                rate = integrate_against(dens_only, rate_weight, (a, b),
                                         include_lo=True, include_hi=False)
                if not math.isfinite(rate):
                    raise InfiniteRate(
                        f"truncated jump rate on [{a:g},{b:g}) is infinite; "
                        "raise the truncation threshold"
                    )
                if rate <= 0:
                    continue
                grid = np.linspace(a, b, _CDF_GRID)
                vals = np.clip([measure.density(r) * rate_weight(r) for r in grid], 0.0, None)
                cdf = np.concatenate(
                    [[0.0], np.cumsum((vals[1:] + vals[:-1]) * 0.5 * np.diff(grid))]
                )
                if cdf[-1] <= 0:
                    continue
                cdf /= cdf[-1]
                self.pieces.append((grid, cdf))
                piece_rates.append(rate)
        self.dens_rate = float(sum(piece_rates))
        self.rate = self.atom_rate + self.dens_rate
        if piece_rates:
            self.piece_cum = np.cumsum(piece_rates) / self.dens_rate

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw event sizes; components chosen proportionally to their rates."""
        if self.rate <= 0:
            raise InfiniteRate("cannot sample sizes from a measure with zero rate")
        out = np.empty(size)
        pick_atom = rng.random(size) * self.rate < self.atom_rate
        n_atom = int(pick_atom.sum())
        if n_atom:
            idx = np.searchsorted(self.atom_cum, rng.random(n_atom))
            out[pick_atom] = self.atom_locs[idx]
        n_dens = size - n_atom
        if n_dens:
            dens_out = np.empty(n_dens)
            if len(self.pieces) == 1:
                grid, cdf = self.pieces[0]
                dens_out = np.interp(rng.random(n_dens), cdf, grid)
            else:
                which = np.searchsorted(self.piece_cum, rng.random(n_dens))
                us = rng.random(n_dens)
                for k, (grid, cdf) in enumerate(self.pieces):
                    sel = which == k
                    if sel.any():
                        dens_out[sel] = np.interp(us[sel], cdf, grid)
            out[~pick_atom] = dens_out
        return out


def _make_sampler(measure: MeasureSpec, eps: float, rate_weight) -> _ComponentSampler:
    return _ComponentSampler(measure, eps, rate_weight)


class RandomBackground:
    """Deterministic merged stream of neutral and environmental jump events.

    Iteration is lazy and restartable: every call to :meth:`events` rebuilds
    the generator from ``(seed, stream_id)`` and yields the same events.
    """

    def __init__(self, params: ModelParams, config: BackgroundConfig):
        self.params = params
        self.config = config
        self._neutral = _make_sampler(params.lambda_measure, config.eps_neutral,
                                      lambda r: 1.0 / (r * r))
        self._env = _make_sampler(params.mu_measure, config.eps_env, lambda r: 1.0)
        self.rate_neutral = self._neutral.rate
        self.rate_env = self._env.rate
        self.total_rate = self.rate_neutral + self.rate_env
        if not math.isfinite(self.total_rate):
            raise InfiniteRate("total event rate is infinite after truncation")
        self.neutral_bias_bound = _truncation_bias(params.lambda_measure,
                                                   config.eps_neutral)

    # -- stream ------------------------------------------------------------

    def _rng(self) -> np.random.Generator:
        ss = np.random.SeedSequence((self.config.seed, self.config.stream_id))
        return np.random.Generator(np.random.Philox(ss))

    def events(self, horizon: float | None = None) -> Iterator[JumpEvent]:
        """Yield time-ordered events up to ``horizon`` (or the config horizon)."""
        horizon = self._resolve_horizon(horizon)
        if self.total_rate <= 0:
            return
        rng = self._rng()
        p_neutral = self.rate_neutral / self.total_rate
        t = 0.0
        while True:
            gaps = rng.exponential(1.0 / self.total_rate, _CHUNK)
            kinds = rng.random(_CHUNK) < p_neutral
            n_neu = int(kinds.sum())
            r_neu = self._neutral.sample(rng, n_neu) if n_neu else np.empty(0)
            u_neu = rng.random(n_neu)
            r_env = self._env.sample(rng, _CHUNK - n_neu) if _CHUNK - n_neu else np.empty(0)
            i_neu = 0
            i_env = 0
            for i in range(_CHUNK):
                t += gaps[i]
                if horizon is not None and t > horizon:
                    return
                if kinds[i]:
                    yield JumpEvent(t, NEUTRAL, float(r_neu[i_neu]), float(u_neu[i_neu]))
                    i_neu += 1
                else:
                    yield JumpEvent(t, ENV, float(r_env[i_env]), None)
                    i_env += 1

    def _resolve_horizon(self, horizon: float | None) -> float | None:
        if horizon is None:
            return self.config.horizon
        if self.config.horizon is not None and horizon > self.config.horizon * (1 + 1e-12):
            raise ParameterError(
                f"requested horizon {horizon:g} exceeds background horizon "
                f"{self.config.horizon:g}"
            )
        return horizon

    # -- views ------------------------------------------------------------

    def filtered(self, min_r: float, keep_above: bool = True) -> "_FilteredBackground":
        return _FilteredBackground(self, min_r, keep_above)

    def mirrored(self) -> "_MirroredBackground":
        return _MirroredBackground(self)

    # -- debugging ----------------------------------------------------------

    def dump_csv(self, path, horizon: float | None = None) -> int:
        """Write the event log (time, kind, r, u); returns the event count."""
        if self._resolve_horizon(horizon) is None:
            raise ParameterError("dump_csv needs a finite horizon")
        n = 0
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["time", "kind", "r", "u"])
            for ev in self.events(horizon):
                writer.writerow([repr(ev.time), ev.kind, repr(ev.r),
                                 "" if ev.u is None else repr(ev.u)])
                n += 1
        return n


class _FilteredBackground:
    """View keeping neutral events on one side of ``min_r``; passes env events.

    Shares the parent's realization: no re-randomization.
    """

    def __init__(self, parent, min_r: float, keep_above: bool):
        if not 0.0 <= min_r < 1.0:
            raise ParameterError(f"min_r must be in [0,1), got {min_r}")
        self.parent = parent
        self.params = parent.params
        self.config = parent.config
        self.min_r = min_r
        self.keep_above = keep_above

    def events(self, horizon: float | None = None) -> Iterator[JumpEvent]:
        for ev in self.parent.events(horizon):
            if ev.kind == NEUTRAL:
                above = ev.r > self.min_r
                if above != self.keep_above:
                    continue
            yield ev

    def filtered(self, min_r: float, keep_above: bool = True):
        return _FilteredBackground(self, min_r, keep_above)

    def mirrored(self):
        return _MirroredBackground(self)


class _MirroredBackground:
    """View under the type swap: env sizes negate, neutral u -> 1-u.

    Driving a trajectory from 1-y0 with the mirrored parameters through this
    view reproduces exactly 1 - (trajectory of the original model from y0).
    """

    def __init__(self, parent):
        self.parent = parent
        self.params = parent.params
        self.config = parent.config

    def events(self, horizon: float | None = None) -> Iterator[JumpEvent]:
        for ev in self.parent.events(horizon):
            if ev.kind == NEUTRAL:
                yield JumpEvent(ev.time, NEUTRAL, ev.r, 1.0 - ev.u)
            else:
                yield JumpEvent(ev.time, ENV, -ev.r, None)

    def filtered(self, min_r: float, keep_above: bool = True):
        return _FilteredBackground(self, min_r, keep_above)

    def mirrored(self):
        return _MirroredBackground(self)


def build_background(params: ModelParams, config: BackgroundConfig) -> RandomBackground:
    """Construct the deterministic event stream for (params, config)."""
    return RandomBackground(params, config)


def filtered_view(background, min_r: float, keep_above: bool = True):
    """Neutral events with r > min_r (default) or r <= min_r; env passes through."""
    return background.filtered(min_r, keep_above)


def mirror_view(background):
    """The event stream of the swapped-type model on the same realization."""
    return background.mirrored()


def _truncation_bias(measure: MeasureSpec, eps: float) -> float:
    """Per-unit-time mean-displacement bound for dropped density jumps below eps."""
    if measure.density is None:
        return 0.0
    return integrate_against(measure, lambda r: 1.0 / r, (0.0, eps), include_hi=False)
