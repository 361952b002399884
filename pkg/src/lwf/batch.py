"""Vectorized replica engine.

Estimation-scale Monte Carlo (1e4..1e5 replicas) cannot afford a Python loop
per event, so this module advances whole replica populations at once: one
inner iteration applies one event per currently-due replica, and drift
segments are integrated with RK4 in sorted-suffix order so the total work is
``sum_i ceil(dt_i/h)`` contiguous vector steps instead of
``n * max_i ceil(dt_i/h)``.

The jump maps are the very same functions used by the per-path simulators
(they are numpy-ufunc compatible), so both engines realize the same law; the
test suite cross-validates them distributionally.

Replicas are split into fixed-size blocks of :data:`BLOCK`; block ``k`` of a
run tagged ``tag`` draws from ``Philox(SeedSequence((seed, crc32(tag), k)))``.
Results are therefore bit-identical for any worker count.
"""

from __future__ import annotations

import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .background import _ComponentSampler
from .dual import m_map, renewal_thresholds, s_map
from .errors import HorizonExceeded, InternalConsistencyError, ParameterError
from .forward import step_x_env, step_x_neutral
from .measures import ModelParams

__all__ = [
    "BLOCK",
    "CompiledModel",
    "compile_model",
    "paths_at_times",
    "coupled_paths",
    "renewal_cycles",
    "occupation_window",
]

BLOCK = 25_000

_UNIT_SLACK = 1e-12


def _rng(seed: int, tag: str, block: int) -> np.random.Generator:
    key = np.random.SeedSequence((int(seed) & (2**63 - 1), zlib.crc32(tag.encode()), int(block)))
    return np.random.Generator(np.random.Philox(key))


def blocked_map(fn, reps: int, seed: int, tag: str, workers: int = 1):
    """Run fn(rng, block_size, block_index) over fixed-size replica blocks.

    Returns the list of per-block results in block order regardless of the
    worker count (threads; numpy releases the GIL in the hot loops).
    """
    sizes = [BLOCK] * (reps // BLOCK)
    if reps % BLOCK:
        sizes.append(reps % BLOCK)
    jobs = [(k, n) for k, n in enumerate(sizes)]
    if workers <= 1 or len(jobs) == 1:
        return [fn(_rng(seed, tag, k), n, k) for k, n in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futs = [pool.submit(fn, _rng(seed, tag, k), n, k) for k, n in jobs]
        return [f.result() for f in futs]


@dataclass
class CompiledModel:
    """Flattened sampler tables and drift data for vectorized simulation."""

    params: ModelParams
    rate_neutral: float
    rate_env: float
    total_rate: float
    neutral: _ComponentSampler
    env: _ComponentSampler
    sigma_coeffs: tuple[float, ...]
    sigma_zero: bool
    h: float
    eps_neutral: float
    eps_env: float


def compile_model(params: ModelParams, eps_neutral: float = 1e-3, eps_env: float = 1e-3,
                  drift_step: float | None = None) -> CompiledModel:
    neutral = _ComponentSampler(params.lambda_measure, eps_neutral, lambda r: 1.0 / (r * r))
    env = _ComponentSampler(params.mu_measure, eps_env, lambda r: 1.0)
    if drift_step is None:
        drift_step = min(1e-2, 0.1 / (1.0 + params.sigma.c1_bound))
    return CompiledModel(
        params=params,
        rate_neutral=neutral.rate,
        rate_env=env.rate,
        total_rate=neutral.rate + env.rate,
        neutral=neutral,
        env=env,
        sigma_coeffs=params.sigma.coefficients,
        sigma_zero=params.sigma.is_zero,
        h=drift_step,
        eps_neutral=eps_neutral,
        eps_env=eps_env,
    )


def _draw_events(cm: CompiledModel, rng: np.random.Generator, size: int):
    is_neutral = rng.random(size) * cm.total_rate < cm.rate_neutral
    r = np.empty(size)
    n_neu = int(is_neutral.sum())
    if n_neu:
        r[is_neutral] = cm.neutral.sample(rng, n_neu)
    if size - n_neu:
        r[~is_neutral] = cm.env.sample(rng, size - n_neu)
    u = rng.random(size)
    return is_neutral, r, u


def _polyval(y, coeffs):
    acc = np.full_like(y, float(coeffs[-1]))
    for a in reversed(coeffs[:-1]):
        acc = acc * y + a
    return acc


def _rk4_step(y, hh, coeffs, sign):
    def g(v):
        return sign * v * (1.0 - v) * _polyval(v, coeffs)

    k1 = g(y)
    k2 = g(y + 0.5 * hh * k1)
    k3 = g(y + 0.5 * hh * k2)
    k4 = g(y + hh * k3)
    return y + (hh / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _clamp_unit_arr(x: np.ndarray) -> np.ndarray:
    if np.any(x < -_UNIT_SLACK) or np.any(x > 1.0 + _UNIT_SLACK):
        worst = float(np.min(x)) if np.any(x < -_UNIT_SLACK) else float(np.max(x))
        raise InternalConsistencyError(f"state left [0,1]: {worst!r}")
    np.clip(x, 0.0, 1.0, out=x)
    return x


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def _cross_time(y0, hh, level, coeffs, sign):
    """Time within one sub-step at which the flow crosses ``level``.

    The drift is a 1-d autonomous flow, so the crossing time is the separable
    integral ``int_{y0}^{level} dy / g(y)``, evaluated here by fixed
    Gauss-Legendre quadrature (g keeps one sign on a bracketed crossing
    segment).  Clipped to the sub-step in case the discretized endpoint
    disagrees with the exact flow by a rounding margin.
    """
    half = 0.5 * (level - y0)
    mid = 0.5 * (level + y0)
    nodes = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    g = sign * nodes * (1.0 - nodes) * _polyval(nodes, coeffs)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = (half[:, None] * _GL_WEIGHTS[None, :] / g).sum(axis=1)
    return np.clip(np.nan_to_num(s, nan=0.0, posinf=np.inf), 0.0, hh)


def _occ_add(occ_view, y0, y1, hh, x_grid, coeffs, sign):
    for j, xg in enumerate(x_grid):
        b0 = y0 <= xg
        b1 = y1 <= xg
        both = b0 & b1
        if both.any():
            occ_view[both, j] += hh[both]
        cross = b0 ^ b1
        if cross.any():
            idx = np.flatnonzero(cross)
            s = _cross_time(y0[idx], hh[idx], xg, coeffs, sign)
            occ_view[idx, j] += np.where(b0[idx], s, hh[idx] - s)


def advance_drift(cm: CompiledModel, x: np.ndarray, dt: np.ndarray, sign: float,
                  occ: np.ndarray | None = None, x_grid=()) -> None:
    """Advance every replica by its own dt along the selection flow, in place.

    With ``occ`` given, accumulates per-replica time spent at or below each
    grid level, splitting sub-steps at level crossings via the separable-flow
    crossing time (see :func:`_cross_time`).
    """
    if cm.sigma_zero:
        if occ is not None:
            for j, xg in enumerate(x_grid):
                occ[:, j] += dt * (x <= xg)
        return
    moving = (x > 0.0) & (x < 1.0) & (dt > 0.0)
    if occ is not None and not moving.all():
        still = ~moving
        for j, xg in enumerate(x_grid):
            sel = still & (x <= xg)
            occ[sel, j] += dt[sel]
    m = np.zeros(x.size, dtype=np.int64)
    m[moving] = np.ceil(dt[moving] / cm.h).astype(np.int64)
    mmax = int(m.max()) if m.size else 0
    if mmax == 0:
        return
    order = np.argsort(m, kind="stable")
    ms = m[order]
    xs = x[order]
    hs = np.zeros_like(dt)
    hs[moving] = dt[moving] / m[moving]
    hs = hs[order]
    occ_s = occ[order] if occ is not None else None
    for k in range(1, mmax + 1):
        i0 = int(np.searchsorted(ms, k))
        ys = xs[i0:]
        hh = hs[i0:]
        y_new = _rk4_step(ys, hh, cm.sigma_coeffs, sign)
        if occ is not None:
            _occ_add(occ_s[i0:], ys, y_new, hh, x_grid, cm.sigma_coeffs, sign)
        xs[i0:] = y_new
    x[order] = xs
    if occ is not None:
        occ[order] = occ_s
    _clamp_unit_arr(x)


def _apply_jumps(process: str, x, is_neutral, r, u):
    if process == "x":
        return np.where(is_neutral, step_x_neutral(x, r, u), step_x_env(x, r))
    return np.where(is_neutral, m_map(x, r, u), s_map(x, r))


# ---------------------------------------------------------------------------
# Drivers
# ---------------------------------------------------------------------------

def paths_at_times(params: ModelParams, process: str, x0: float, obs_times, reps: int,
                   seed: int, tag: str, eps_neutral: float = 1e-3, eps_env: float = 1e-3,
                   drift_step: float | None = None, workers: int = 1) -> np.ndarray:
    """States of ``reps`` independent replicas at each observation time.

    ``process`` is ``"x"`` (forward) or ``"y"`` (dual).  Returns an array of
    shape (reps, len(obs_times)).
    """
    if process not in ("x", "y"):
        raise ParameterError("process must be 'x' or 'y'")
    obs = np.asarray(obs_times, dtype=float)
    if obs.size == 0 or np.any(np.diff(obs) < 0) or obs[0] < 0:
        raise ParameterError("obs_times must be nonempty, sorted, nonnegative")
    if not 0.0 <= x0 <= 1.0:
        raise ParameterError("initial state must lie in [0,1]")
    cm = compile_model(params, eps_neutral, eps_env, drift_step)

    def run(rng, n, _k):
        return _paths_block(cm, process, x0, obs, n, rng)

    return np.concatenate(blocked_map(run, reps, seed, tag, workers), axis=0)


def _paths_block(cm: CompiledModel, process: str, x0: float, obs: np.ndarray, n: int,
                 rng: np.random.Generator) -> np.ndarray:
    sign = 1.0 if process == "x" else -1.0
    freeze_boundary = process == "x"
    x = np.full(n, float(x0))
    t = np.zeros(n)
    if cm.total_rate > 0:
        nxt = rng.exponential(1.0 / cm.total_rate, n)
    else:
        nxt = np.full(n, np.inf)
    out = np.empty((n, obs.size))
    for j, horizon in enumerate(obs):
        while True:
            due = nxt <= horizon
            target = np.where(due, nxt, horizon)
            advance_drift(cm, x, target - t, sign)
            t = target
            if not due.any():
                break
            idx = np.flatnonzero(due)
            is_neu, r, u = _draw_events(cm, rng, idx.size)
            xi = _apply_jumps(process, x[idx], is_neu, r, u)
            x[idx] = xi
            _clamp_unit_arr(x)
            nxt[idx] = t[idx] + rng.exponential(1.0 / cm.total_rate, idx.size)
            if freeze_boundary:
                done = (xi == 0.0) | (xi == 1.0)
                if done.any():
                    nxt[idx[done]] = np.inf
        out[:, j] = x
    return out


def coupled_paths(params: ModelParams, process: str, lo0: float, hi0: float, obs_times,
                  reps: int, seed: int, tag: str, eps_neutral: float = 1e-3,
                  eps_env: float = 1e-3, drift_step: float | None = None,
                  merge_tol: float = 1e-12, workers: int = 1) -> dict:
    """Ordered pairs driven by shared event streams.

    Returns states of both components at the observation times, the first
    merge time per replica (inf if never within the last obs time), and the
    largest ordering gap ``lo - hi`` ever seen after an event (a positive
    value would violate monotonicity of the coupling).
    """
    if not (0.0 <= lo0 <= hi0 <= 1.0):
        raise ParameterError("need 0 <= lo0 <= hi0 <= 1")
    obs = np.asarray(obs_times, dtype=float)
    if obs.size == 0 or np.any(np.diff(obs) < 0):
        raise ParameterError("obs_times must be nonempty and sorted")
    cm = compile_model(params, eps_neutral, eps_env, drift_step)

    def run(rng, n, _k):
        return _coupled_block(cm, process, lo0, hi0, obs, n, rng, merge_tol)

    parts = blocked_map(run, reps, seed, tag, workers)
    return {
        "lo": np.concatenate([p["lo"] for p in parts], axis=0),
        "hi": np.concatenate([p["hi"] for p in parts], axis=0),
        "merge_time": np.concatenate([p["merge_time"] for p in parts]),
        "max_order_gap": max(p["max_order_gap"] for p in parts),
    }


def _coupled_block(cm, process, lo0, hi0, obs, n, rng, merge_tol):
    sign = 1.0 if process == "x" else -1.0
    a = np.full(n, float(lo0))
    b = np.full(n, float(hi0))
    merge_time = np.full(n, np.inf)
    if hi0 - lo0 <= merge_tol:
        merge_time[:] = 0.0
        a[:] = b
    t = np.zeros(n)
    nxt = (rng.exponential(1.0 / cm.total_rate, n) if cm.total_rate > 0
           else np.full(n, np.inf))
    out_a = np.empty((n, obs.size))
    out_b = np.empty((n, obs.size))
    max_gap = -np.inf
    for j, horizon in enumerate(obs):
        while True:
            due = nxt <= horizon
            target = np.where(due, nxt, horizon)
            dt = target - t
            advance_drift(cm, a, dt, sign)
            advance_drift(cm, b, dt, sign)
            t = target
            if not due.any():
                break
            idx = np.flatnonzero(due)
            is_neu, r, u = _draw_events(cm, rng, idx.size)
            ai = _apply_jumps(process, a[idx], is_neu, r, u)
            bi = _apply_jumps(process, b[idx], is_neu, r, u)
            gap = float(np.max(ai - bi))
            max_gap = max(max_gap, gap)
            newly = (bi - ai <= merge_tol) & ~np.isfinite(merge_time[idx])
            if newly.any():
                merge_time[idx[newly]] = t[idx[newly]]
            ai = np.where(np.isfinite(merge_time[idx]), bi, ai)
            a[idx] = ai
            b[idx] = bi
            _clamp_unit_arr(a)
            _clamp_unit_arr(b)
            nxt[idx] = t[idx] + rng.exponential(1.0 / cm.total_rate, idx.size)
        out_a[:, j] = a
        out_b[:, j] = b
    return {"lo": out_a, "hi": out_b, "merge_time": merge_time, "max_order_gap": max_gap}


def renewal_cycles(params: ModelParams, kappa: float, eta: float, reps: int, seed: int,
                   tag: str = "renewal", x_grid=(), a_center: float = 0.5,
                   eps_neutral: float = 1e-3, eps_env: float = 1e-3,
                   drift_step: float | None = None, max_time: float = 1e5,
                   workers: int = 1) -> dict:
    """Independent renewal cycles started from the uniform reset law.

    Each replica starts uniform on [a-eta/2, a+eta/2] and runs until its
    first qualifying neutral event, accumulating the exact time spent at or
    below every level of ``x_grid`` on the way.  Returns renewal times,
    post-renewal states, and the occupation matrix (reps, len(x_grid)).
    """
    theta = renewal_thresholds(params.lambda_measure.max_supp, kappa, eta, a_center)
    cm = compile_model(params, eps_neutral, eps_env, drift_step)
    grid = np.asarray(x_grid, dtype=float)

    def run(rng, n, _k):
        return _renewal_block(cm, kappa, eta, a_center, theta, grid, n, rng, max_time)

    parts = blocked_map(run, reps, seed, tag, workers)
    return {
        "renewal_time": np.concatenate([p["renewal_time"] for p in parts]),
        "state": np.concatenate([p["state"] for p in parts]),
        "occupation": np.concatenate([p["occupation"] for p in parts], axis=0),
        "theta": theta,
    }


def _renewal_block(cm, kappa, eta, a_center, theta, x_grid, n, rng, max_time):
    if cm.rate_neutral <= 0:
        raise ParameterError("renewal needs a positive neutral event rate")
    y_lo, y_hi = a_center - kappa / 2, a_center + kappa / 2
    u_lo, u_hi = a_center - eta / 2, a_center + eta / 2
    y = rng.uniform(u_lo, u_hi, n)
    t = np.zeros(n)
    nxt = rng.exponential(1.0 / cm.total_rate, n)
    occ = np.zeros((n, x_grid.size))
    renewal_time = np.full(n, np.nan)
    state = np.full(n, np.nan)
    active = np.ones(n, dtype=bool)
    while active.any():
        idx = np.flatnonzero(active)
        y_sub = y[idx]
        occ_sub = occ[idx]
        advance_drift(cm, y_sub, nxt[idx] - t[idx], -1.0, occ_sub, x_grid)
        occ[idx] = occ_sub
        t[idx] = nxt[idx]
        is_neu, r, u = _draw_events(cm, rng, idx.size)
        qualify = (is_neu & (y_sub >= y_lo) & (y_sub <= y_hi)
                   & (r > theta) & (r < 1.0) & (u >= u_lo) & (u <= u_hi))
        y_new = _apply_jumps("y", y_sub, is_neu, r, u)
        y[idx] = y_new
        _clamp_unit_arr(y)
        done = idx[qualify]
        renewal_time[done] = t[done]
        state[done] = y[done]
        active[done] = False
        nxt[idx] = t[idx] + rng.exponential(1.0 / cm.total_rate, idx.size)
        if float(t[idx].min()) > max_time:
            raise HorizonExceeded(
                f"renewal not reached by t={max_time:g} for some replicas"
            )
    return {"renewal_time": renewal_time, "state": state, "occupation": occ}


def occupation_window(params: ModelParams, y0: float, x_grid, burn_in: float,
                      t_total: float, reps: int, seed: int, tag: str = "ergodic",
                      process: str = "y", eps_neutral: float = 1e-3, eps_env: float = 1e-3,
                      drift_step: float | None = None, workers: int = 1) -> np.ndarray:
    """Fraction of [burn_in, t_total] spent at or below each grid level.

    Returns an array (reps, len(x_grid)) of occupation fractions over the
    window, one long path per replica.
    """
    if not 0.0 <= burn_in < t_total:
        raise ParameterError("need 0 <= burn_in < t_total")
    cm = compile_model(params, eps_neutral, eps_env, drift_step)
    grid = np.asarray(x_grid, dtype=float)
    sign = 1.0 if process == "x" else -1.0

    def run(rng, n, _k):
        return _occupation_block(cm, sign, process, y0, grid, burn_in, t_total, n, rng)

    return np.concatenate(blocked_map(run, reps, seed, tag, workers), axis=0)


def _occupation_block(cm, sign, process, y0, x_grid, burn_in, t_total, n, rng):
    y = np.full(n, float(y0))
    t = np.zeros(n)
    nxt = (rng.exponential(1.0 / cm.total_rate, n) if cm.total_rate > 0
           else np.full(n, np.inf))
    occ = np.zeros((n, x_grid.size))
    for horizon, tracking in ((burn_in, False), (t_total, True)):
        while True:
            due = nxt <= horizon
            target = np.where(due, nxt, horizon)
            advance_drift(cm, y, target - t, sign,
                          occ if tracking else None, x_grid)
            t = target
            if not due.any():
                break
            idx = np.flatnonzero(due)
            is_neu, r, u = _draw_events(cm, rng, idx.size)
            y[idx] = _apply_jumps(process, y[idx], is_neu, r, u)
            _clamp_unit_arr(y)
            nxt[idx] = t[idx] + rng.exponential(1.0 / cm.total_rate, idx.size)
    return occ / (t_total - burn_in)
