"""The order-dual process and its renewal structure.

The dual runs the selection flow backwards (``-y(1-y)sigma(y)``) and inverts
the forward jump maps: a neutral event applies the generalized inverse

    m(y; r, u) = median((y-r)/(1-r), y/(1-r), u),

an environmental shock applies ``s_r``, the inverse of ``x -> x + r x (1-x)``
on [0,1].  Because both maps are non-decreasing, two trajectories driven by
one event stream stay ordered, and once they meet they coincide forever;
coupled pairs and the renewal stopping time below exploit exactly that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .background import NEUTRAL
from .errors import InternalConsistencyError, NegativeDiscriminant, ParameterError
from .forward import Trajectory, _simulate_pdmp, _validate_x0, default_drift_step, drift_flow_x
from .measures import ModelParams

__all__ = [
    "m_map",
    "s_map",
    "CoupledPair",
    "simulate_y",
    "simulate_y_capped",
    "simulate_coupled_pair",
    "renewal_thresholds",
    "detect_renewal",
    "detect_renewal_general",
]

MERGE_TOL = 1e-12


def m_map(y, r, u):
    """Dual update at a neutral event: median of ((y-r)/(1-r), y/(1-r), u).

    Equals ``u`` clipped to the interval between the two outer values (which
    are ordered for r in (0,1)); non-decreasing in y.  Accepts arrays.
    """
    lo = (y - r) / (1.0 - r)
    hi = y / (1.0 - r)
    return np.minimum(np.maximum(u, lo), hi)


def s_map(y, r):
    """Dual update at an environmental shock: the inverse of x + r x (1-x).

    Evaluated in the cancellation-free form ``2y / (1+r+sqrt((1+r)^2-4ry))``,
    which tends to y as r -> 0; below |r|=1e-12 the limit y is returned
    outright.  Accepts arrays.
    """
    y_arr = np.asarray(y, dtype=float)
    r_arr = np.asarray(r, dtype=float)
    disc = (1.0 + r_arr) ** 2 - 4.0 * r_arr * y_arr
    if np.any(disc < -1e-9 * (1.0 + np.abs(r_arr)) ** 2):
        raise NegativeDiscriminant(
            "discriminant (1+r)^2 - 4ry went negative; inputs outside [0,1]x(-1,1)?"
        )
    denom = 1.0 + r_arr + np.sqrt(np.maximum(disc, 0.0))
    out = np.where(np.abs(r_arr) <= 1e-12, y_arr, 2.0 * y_arr / denom)
    if out.ndim == 0:
        return float(out)
    return out


def simulate_y(params: ModelParams, background, y0: float, obs_times,
               drift_step: float | None = None, horizon: float | None = None) -> Trajectory:
    """Simulate one dual path through the given event stream."""
    return _simulate_pdmp(params, background, y0, obs_times, drift_step, horizon,
                          drift_sign=-1.0, neutral=m_map, env=s_map, label="y")


def simulate_y_capped(params: ModelParams, background, c: float, y0: float, obs_times,
                      drift_step: float | None = None,
                      horizon: float | None = None) -> Trajectory:
    """Dual path with neutral events of size r > c removed (shocks kept)."""
    if not 0.0 < c < 1.0:
        raise ParameterError(f"cap must lie in (0,1), got {c}")
    capped = background.filtered(c, keep_above=False)
    traj = _simulate_pdmp(params, capped, y0, obs_times, drift_step, horizon,
                          drift_sign=-1.0, neutral=m_map, env=s_map, label="y_capped")
    traj.meta["cap"] = c
    return traj


@dataclass
class CoupledPair:
    """Two dual states driven by one event stream, kept ordered."""

    y_hat: float
    y_check: float
    merged: bool


def simulate_coupled_pair(params: ModelParams, background, y_hat0: float, y_check0: float,
                          horizon: float, obs_times=(), drift_step: float | None = None,
                          merge_tol: float = MERGE_TOL):
    """Evolve an ordered pair through a shared stream until the horizon.

    Returns ``(merge_time_or_None, pair, obs_records)`` where ``obs_records``
    is an array of (time, y_hat, y_check) rows at the requested times.  Merge
    is declared the first instant the states agree within ``merge_tol``
    (equal starts merge at time 0); afterwards a single state is evolved.
    """
    a = _validate_x0(y_hat0)
    b = _validate_x0(y_check0)
    if a > b:
        raise ParameterError("y_hat0 must not exceed y_check0")
    obs = np.asarray(obs_times, dtype=float)
    if obs.size and (np.any(np.diff(obs) < 0) or obs[-1] > horizon):
        raise ParameterError("obs_times must be sorted and within the horizon")
    h = drift_step if drift_step is not None else default_drift_step(params.sigma)
    sigma = params.sigma

    merge_time = 0.0 if b - a <= merge_tol else None
    if merge_time is not None:
        a = b
    records = []
    t = 0.0
    j = 0

    def advance(a, b, upto, inclusive):
        nonlocal t, j
        while j < obs.size and (obs[j] < upto or (inclusive and obs[j] == upto)):
            da = obs[j] - t
            a = drift_flow_x(a, sigma, da, h, -1.0)
            b = a if merge_time is not None else drift_flow_x(b, sigma, da, h, -1.0)
            t = obs[j]
            records.append((t, a, b))
            j += 1
        a = drift_flow_x(a, sigma, upto - t, h, -1.0)
        b = a if merge_time is not None else drift_flow_x(b, sigma, upto - t, h, -1.0)
        t = upto
        return a, b

    for ev in background.events(horizon):
        a, b = advance(a, b, ev.time, inclusive=False)
        if ev.kind == NEUTRAL:
            a = float(m_map(a, ev.r, ev.u))
            b = a if merge_time is not None else float(m_map(b, ev.r, ev.u))
        else:
            a = float(s_map(a, ev.r))
            b = a if merge_time is not None else float(s_map(b, ev.r))
        if merge_time is None and b - a <= merge_tol:
            merge_time = ev.time
            a = b
        # observation exactly at the event time records the post-jump pair
        while j < obs.size and obs[j] == ev.time:
            records.append((ev.time, a, b))
            j += 1
    a, b = advance(a, b, horizon, inclusive=True)
    pair = CoupledPair(y_hat=a, y_check=b, merged=merge_time is not None)
    return merge_time, pair, np.asarray(records)


def renewal_thresholds(max_supp: float, kappa: float, eta: float, a: float = 0.5) -> float:
    """Validate renewal window parameters and return the size threshold theta.

    The window of pre-event states is [a-kappa/2, a+kappa/2], the uniform
    reset window is [a-eta/2, a+eta/2].  theta is chosen so that any neutral
    event with size above it maps the whole state window strictly around the
    reset window, which forces the post-event state to equal u; for centers
    above 1/2 the threshold from the off-center construction is tightened to
    its mirror-symmetric value, since the constraint at the lower median
    branch is the binding one there.
    """
    if not 0.0 < a < 1.0:
        raise ParameterError(f"window center must lie in (0,1), got {a}")
    if not (kappa > 0 and eta > 0):
        raise ParameterError("kappa and eta must be positive")
    if a - kappa / 2 <= 0 or a + kappa / 2 >= 1 or a - eta / 2 <= 0 or a + eta / 2 >= 1:
        raise ParameterError("state and reset windows must lie strictly inside (0,1)")
    kappa_bound = min(2.0 * a * max_supp, 4.0 * a * (1.0 - a))
    if not kappa < kappa_bound:
        raise ParameterError(
            f"kappa={kappa:g} must be below {kappa_bound:g} for center a={a:g}"
        )
    theta = (eta + kappa) / (2.0 * min(a, 1.0 - a) + eta)
    if not theta < max_supp:
        raise ParameterError(
            f"size threshold theta={theta:g} is not below max support {max_supp:g}; "
            "no qualifying event can occur"
        )
    return theta


def detect_renewal(params: ModelParams, background, y0: float, kappa: float, eta: float,
                   horizon: float, drift_step: float | None = None):
    """First neutral event that resets the dual to a uniform value.

    Scans for the first event time T with pre-event state in
    [(1-kappa)/2, (1+kappa)/2], size in (theta, 1) and u in
    [(1-eta)/2, (1+eta)/2]; at such an event the post-jump state equals u
    exactly.  Returns ``(time, state)`` or ``(None, state_at_horizon)``.
    """
    return detect_renewal_general(params, background, y0, kappa, eta, a=0.5,
                                  horizon=horizon, drift_step=drift_step)


def detect_renewal_general(params: ModelParams, background, y0: float, kappa: float,
                           eta: float, a: float = 0.5, horizon: float | None = None,
                           drift_step: float | None = None):
    """Renewal detection with the state/reset windows centered at ``a``."""
    y = _validate_x0(y0)
    max_supp = params.lambda_measure.max_supp
    theta = renewal_thresholds(max_supp, kappa, eta, a)
    if horizon is None:
        horizon = background.config.horizon
    if horizon is None:
        raise ParameterError("detect_renewal needs a horizon")
    h = drift_step if drift_step is not None else default_drift_step(params.sigma)
    sigma = params.sigma
    y_lo, y_hi = a - kappa / 2, a + kappa / 2
    u_lo, u_hi = a - eta / 2, a + eta / 2

    t = 0.0
    for ev in background.events(horizon):
        y = drift_flow_x(y, sigma, ev.time - t, h, -1.0)
        t = ev.time
        if ev.kind == NEUTRAL:
            if (y_lo <= y <= y_hi) and (theta < ev.r < 1.0) and (u_lo <= ev.u <= u_hi):
                state = float(m_map(y, ev.r, ev.u))
                if not math.isclose(state, ev.u, rel_tol=0.0, abs_tol=1e-9):
                    raise InternalConsistencyError(
                        "qualifying event did not collapse to u; thresholds inconsistent"
                    )
                return ev.time, state
            y = float(m_map(y, ev.r, ev.u))
        else:
            y = float(s_map(y, ev.r))
    y = drift_flow_x(y, sigma, horizon - t, h, -1.0)
    return None, y
