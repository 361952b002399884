"""The jump Wright-Fisher process itself.

The process is piecewise deterministic: between events the state follows the
selection flow ``dx/dt = x(1-x) sigma(x)``, at a neutral event ``(t,r,u)`` it
jumps to ``(1-r)x + r*1{u<=x}`` and at an environmental shock of size r to
``x + r x (1-x)``.  Both jump maps and the flow fix 0 and 1, so the state
never leaves the unit interval; any float excursion beyond ``1e-12`` is
treated as an internal error rather than silently clamped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .background import NEUTRAL
from .errors import InternalConsistencyError, ParameterError
from .measures import ModelParams, SelectionFn

__all__ = [
    "Trajectory",
    "step_x_neutral",
    "step_x_env",
    "drift_flow_x",
    "default_drift_step",
    "simulate_x",
]

_UNIT_SLACK = 1e-12


def step_x_neutral(x, r, u):
    """Post-jump state after a neutral reproduction event: ``(1-r)x + r*1{u<=x}``.

    Non-decreasing and right-continuous in x for fixed (r,u); accepts scalars
    or arrays.
    """
    return (1.0 - r) * x + r * (u <= x)


def step_x_env(x, r):
    """Post-jump state after an environmental shock: ``x + r x (1-x)``."""
    return x + r * x * (1.0 - x)


def default_drift_step(sigma: SelectionFn) -> float:
    """Default RK4 sub-step: ``min(1e-2, 0.1/(1 + C1 bound))``."""
    return min(1e-2, 0.1 / (1.0 + sigma.c1_bound))


def _clamp_unit(x: float) -> float:
    if x < 0.0:
        if x < -_UNIT_SLACK:
            raise InternalConsistencyError(f"state left [0,1]: {x!r}")
        return 0.0
    if x > 1.0:
        if x > 1.0 + _UNIT_SLACK:
            raise InternalConsistencyError(f"state left [0,1]: {x!r}")
        return 1.0
    return x


def drift_flow_x(x: float, sigma: SelectionFn, dt: float, h: float | None = None,
                 sign: float = 1.0) -> float:
    """Integrate the selection flow over dt with classical RK4 at sub-step h.

    ``sign=-1`` integrates the reversed-selection flow used by the dual
    process.  The result is clamped against float overshoot of at most 1e-12;
    larger excursions raise.
    """
    if dt < 0:
        raise ParameterError("dt must be nonnegative")
    if dt == 0.0 or sigma.is_zero or x == 0.0 or x == 1.0:
        return x
    if h is None:
        h = default_drift_step(sigma)
    coeffs = sigma.coefficients

    def g(y):
        return sign * y * (1.0 - y) * _horner(y, coeffs)

    m = max(1, math.ceil(dt / h))
    hh = dt / m
    for _ in range(m):
        k1 = g(x)
        k2 = g(x + 0.5 * hh * k1)
        k3 = g(x + 0.5 * hh * k2)
        k4 = g(x + hh * k3)
        x = x + (hh / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return _clamp_unit(x)


def _horner(y, coeffs):
    acc = 0.0
    for a in reversed(coeffs):
        acc = acc * y + a
    return acc


@dataclass
class Trajectory:
    """Piecewise-deterministic path record.

    ``times``/``states`` hold the state at every applied event (post-jump,
    the cadlag convention) and at every requested observation time, in time
    order.  ``obs_times``/``obs_states`` repeat just the requested
    observations for convenience.
    """

    times: np.ndarray
    states: np.ndarray
    obs_times: np.ndarray
    obs_states: np.ndarray
    final_state: float
    meta: dict = field(default_factory=dict)


def _validate_x0(x0: float) -> float:
    if not 0.0 <= x0 <= 1.0:
        raise ParameterError(f"initial state must lie in [0,1], got {x0}")
    return float(x0)


def simulate_x(params: ModelParams, background, x0: float, obs_times,
               drift_step: float | None = None, horizon: float | None = None) -> Trajectory:
    """Simulate one forward path through the given event stream.

    Observation times must be sorted and lie within the background horizon.
    If an observation time coincides with an event time the post-jump value
    is recorded.
    """
    return _simulate_pdmp(params, background, x0, obs_times, drift_step, horizon,
                          drift_sign=1.0, neutral=step_x_neutral, env=step_x_env,
                          label="x")


def _simulate_pdmp(params, background, x0, obs_times, drift_step, horizon,
                   drift_sign, neutral, env, label) -> Trajectory:
    x = _validate_x0(x0)
    obs = np.asarray(obs_times, dtype=float)
    if obs.size and np.any(np.diff(obs) < 0):
        raise ParameterError("obs_times must be sorted")
    if obs.size and obs[0] < 0:
        raise ParameterError("obs_times must be nonnegative")
    if horizon is None:
        horizon = float(obs[-1]) if obs.size else background.config.horizon
    if horizon is None:
        raise ParameterError("either obs_times or a horizon is required")
    h = drift_step if drift_step is not None else default_drift_step(params.sigma)
    sigma = params.sigma

    rec_t: list[float] = [0.0]
    rec_x: list[float] = [x]
    obs_states = np.empty(obs.size)
    j = 0
    t = 0.0
    for ev in background.events(horizon):
        # observations strictly before this event get the drifted value
        while j < obs.size and obs[j] < ev.time:
            x = drift_flow_x(x, sigma, obs[j] - t, h, drift_sign)
            t = obs[j]
            obs_states[j] = x
            rec_t.append(t)
            rec_x.append(x)
            j += 1
        x = drift_flow_x(x, sigma, ev.time - t, h, drift_sign)
        t = ev.time
        if ev.kind == NEUTRAL:
            x = float(neutral(x, ev.r, ev.u))
        else:
            x = float(env(x, ev.r))
        x = _clamp_unit(x)
        rec_t.append(t)
        rec_x.append(x)
        # observation exactly at the event time records the post-jump value
        while j < obs.size and obs[j] == ev.time:
            obs_states[j] = x
            j += 1
    while j < obs.size:
        x = drift_flow_x(x, sigma, obs[j] - t, h, drift_sign)
        t = obs[j]
        obs_states[j] = x
        rec_t.append(t)
        rec_x.append(x)
        j += 1
    if t < horizon:
        x = drift_flow_x(x, sigma, horizon - t, h, drift_sign)
        t = horizon

    meta = {
        "process": label,
        "seed": background.config.seed,
        "stream_id": background.config.stream_id,
        "eps_neutral": background.config.eps_neutral,
        "eps_env": background.config.eps_env,
        "drift_step": h,
    }
    return Trajectory(
        times=np.asarray(rec_t), states=np.asarray(rec_x),
        obs_times=obs, obs_states=obs_states, final_state=x, meta=meta,
    )
