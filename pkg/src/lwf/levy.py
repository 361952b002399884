"""Boundary comparison processes and their transforms.

Near 0 the log-transformed dual ``log(1/Y)`` is squeezed between two spectrally
explicit processes built from the same event stream: a lower one whose jumps
are ``log(1-r)`` (neutral) and ``log((1+r)^2 - 4 r e^-b 1{r>0})/2``
(environmental), and an upper one that keeps only neutral sizes above a cut
``delta`` (the small-size remainder is the path-dependent sum ``H``).  Both
carry the linear drift ``sigma(0) -/+ e^-b * C1-bound``.  This module
evaluates their per-event increments, exponents of ``E[exp(lambda L_1)]``,
means, path simulation on a shared background, the pathwise squeeze check,
and first-passage tail statistics.

``b`` parametrizes the boundary window ``(0, e^-b]`` in which the squeeze is
valid; ``mirrored=True`` swaps types (same lambda, mirrored mu, reflected
sigma) to bound ``log(1/(1-Y))`` near 1 instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .background import ENV, NEUTRAL, JumpEvent
from .dual import m_map, s_map
from .errors import DomainError, ParameterError
from .forward import Trajectory, _validate_x0, default_drift_step, drift_flow_x
from .measures import ModelParams, compute_c0, integrate_against

__all__ = [
    "LevySpec",
    "levy_increment",
    "levy_drift",
    "laplace_exponent",
    "mean_increment",
    "simulate_levy",
    "SandwichReport",
    "sandwich_check",
    "PassageTailReport",
    "passage_tail",
    "levy_unit_samples",
]

LOWER = "lower"
UPPER = "upper"


@dataclass(frozen=True)
class LevySpec:
    """Which comparison process, at which boundary scale.

    ``b >= log 2`` fixes the boundary window (0, e^-b]; ``delta`` splits off
    small neutral jumps (upper process only); ``mirrored`` selects the bound
    near 1 instead of 0.
    """

    b: float
    delta: float = 0.25
    which: str = LOWER
    mirrored: bool = False
    exp_mb: float = field(init=False)

    def __post_init__(self):
        if not self.b >= math.log(2.0):
            raise ParameterError(f"b must be at least log 2, got {self.b}")
        if not 0.0 < self.delta < 1.0:
            raise ParameterError(f"delta must lie in (0,1), got {self.delta}")
        if self.which not in (LOWER, UPPER):
            raise ParameterError(f"which must be '{LOWER}' or '{UPPER}'")
        object.__setattr__(self, "exp_mb", math.exp(-self.b))


def _model_for(spec: LevySpec, params: ModelParams) -> ModelParams:
    return params.mirrored() if spec.mirrored else params


def _neutral_increment(spec: LevySpec, r, u):
    """Per-event contribution of a neutral jump (array compatible)."""
    r = np.asarray(r, dtype=float)
    u = np.asarray(u, dtype=float)
    if spec.which == LOWER:
        return np.log1p(-r)
    eb = spec.exp_mb
    small_size = r < spec.delta
    huge = r >= 1.0 - eb
    # moderate sizes: log((1-r) v 1/(u e^b)); huge sizes contribute only on u <= e^-b
    moderate_val = np.maximum(np.log1p(-r), -np.log(u) - spec.b)
    huge_val = np.where(u <= eb, -np.log(u) - spec.b, 0.0)
    out = np.where(huge, huge_val, moderate_val)
    return np.where(small_size, 0.0, out)


def _env_increment(spec: LevySpec, r):
    """Per-event contribution of an environmental shock (array compatible)."""
    r = np.asarray(r, dtype=float)
    eb = spec.exp_mb
    if spec.which == LOWER:
        adj = np.where(r > 0, 4.0 * r * eb, 0.0)
    else:
        adj = np.where(r < 0, 4.0 * r * eb, 0.0)
    return 0.5 * np.log((1.0 + r) ** 2 - adj)


def _mirror_event(ev: JumpEvent) -> JumpEvent:
    if ev.kind == NEUTRAL:
        return JumpEvent(ev.time, NEUTRAL, ev.r, 1.0 - ev.u)
    return JumpEvent(ev.time, ENV, -ev.r, None)


def levy_increment(spec: LevySpec, event: JumpEvent) -> float:
    """Jump of the comparison process caused by one background event."""
    if spec.mirrored:
        event = _mirror_event(event)
    if event.kind == NEUTRAL:
        return float(_neutral_increment(spec, event.r, event.u))
    return float(_env_increment(spec, event.r))


def levy_drift(spec: LevySpec, params: ModelParams) -> float:
    """Linear drift rate: sigma(0) - e^-b*C1bound (lower) or + (upper)."""
    p = _model_for(spec, params)
    margin = spec.exp_mb * p.sigma.c1_bound
    return p.sigma.at_zero - margin if spec.which == LOWER else p.sigma.at_zero + margin


def laplace_exponent(spec: LevySpec, params: ModelParams, lam: float) -> float:
    """Exponent psi(lambda) with E[exp(lambda L_1)] = exp(psi(lambda)).

    Finite for all lambda >= 0 on the lower process (negative lambda needs the
    strong tail functionals of ``r^-2 lambda(dr)`` and the mirrored mu to be
    finite) and for lambda in [0,1) on the upper process; outside the
    finiteness region a :class:`DomainError` is raised.
    """
    p = _model_for(spec, params)
    lam = float(lam)
    eb = spec.exp_mb
    if spec.which == LOWER:
        def f_neutral(r):
            return ((1.0 - r) ** lam - 1.0) / (r * r)

        def f_env(r):
            adj = 4.0 * r * eb if r > 0 else 0.0
            return ((1.0 + r) ** 2 - adj) ** (lam / 2.0) - 1.0

        i_n = integrate_against(p.lambda_measure, f_neutral, (0.0, 1.0))
        i_e = integrate_against(p.mu_measure, f_env, (-1.0, 1.0))
        if math.isinf(i_n) or math.isinf(i_e):
            raise DomainError(
                f"exponent diverges at lambda={lam:g}; strong tail functionals "
                "are infinite for this model"
            )
        return i_n + i_e + lam * levy_drift(spec, params)

    if not 0.0 <= lam < 1.0:
        raise DomainError(f"upper exponent requires lambda in [0,1), got {lam:g}")

    def f_neutral_up(r):
        if r < 1.0 - eb:
            val = (1.0 - r) ** lam - 1.0 + lam * eb / ((1.0 - lam) * (1.0 - r) ** (1.0 - lam))
        else:
            val = lam * eb / (1.0 - lam)
        return val / (r * r)

    def f_env_up(r):
        adj = 4.0 * r * eb if r < 0 else 0.0
        return ((1.0 + r) ** 2 - adj) ** (lam / 2.0) - 1.0

    i_n = integrate_against(p.lambda_measure, f_neutral_up, (spec.delta, 1.0),
                            include_lo=True)
    i_e = integrate_against(p.mu_measure, f_env_up, (-1.0, 1.0))
    if math.isinf(i_n) or math.isinf(i_e):
        raise DomainError(f"upper exponent diverges at lambda={lam:g}")
    return i_n + i_e + lam * levy_drift(spec, params)


def mean_increment(spec: LevySpec, params: ModelParams) -> float:
    """E[L_1], evaluated by direct quadrature (equals psi'(0)).

    For the lower process this is the boundary balance value C_0 of the
    (possibly mirrored) model plus an environmental correction that vanishes
    as b grows, minus the e^-b drift margin.
    """
    p = _model_for(spec, params)
    eb = spec.exp_mb
    if spec.which == LOWER:
        def env_corr(r):
            return 0.5 * math.log1p(-4.0 * r * eb / (1.0 + r) ** 2) if r > 0 else 0.0

        corr = integrate_against(p.mu_measure, env_corr, (-1.0, 1.0))
        return compute_c0(p) + corr - eb * p.sigma.c1_bound

    def f_neutral_mean(r):
        if r < 1.0 - eb:
            val = math.log1p(-r) + eb / (1.0 - r)
        else:
            val = eb
        return val / (r * r)

    def f_env_mean(r):
        adj = 4.0 * r * eb if r < 0 else 0.0
        return 0.5 * math.log((1.0 + r) ** 2 - adj)

    i_n = integrate_against(p.lambda_measure, f_neutral_mean, (spec.delta, 1.0),
                            include_lo=True)
    i_e = integrate_against(p.mu_measure, f_env_mean, (-1.0, 1.0))
    return i_n + i_e + p.sigma.at_zero + eb * p.sigma.c1_bound


def simulate_levy(spec: LevySpec, params: ModelParams, background, obs_times,
                  horizon: float | None = None) -> Trajectory:
    """Cumulative jump sum plus drift along the given event stream.

    Deterministic given the background; the path lives on the same events as
    the forward/dual trajectories built from it.
    """
    obs = np.asarray(obs_times, dtype=float)
    if obs.size and np.any(np.diff(obs) < 0):
        raise ParameterError("obs_times must be sorted")
    if horizon is None:
        horizon = float(obs[-1]) if obs.size else background.config.horizon
    if horizon is None:
        raise ParameterError("either obs_times or a horizon is required")
    drift = levy_drift(spec, params)

    rec_t = [0.0]
    rec_v = [0.0]
    obs_states = np.empty(obs.size)
    jumps = 0.0
    j = 0
    t = 0.0
    for ev in background.events(horizon):
        while j < obs.size and obs[j] < ev.time:
            obs_states[j] = jumps + drift * obs[j]
            rec_t.append(obs[j])
            rec_v.append(obs_states[j])
            j += 1
        jumps += levy_increment(spec, ev)
        t = ev.time
        rec_t.append(t)
        rec_v.append(jumps + drift * t)
        while j < obs.size and obs[j] == ev.time:
            obs_states[j] = jumps + drift * t
            j += 1
    while j < obs.size:
        obs_states[j] = jumps + drift * obs[j]
        rec_t.append(obs[j])
        rec_v.append(obs_states[j])
        j += 1
    final = jumps + drift * horizon
    meta = {
        "process": f"levy_{spec.which}" + ("_mirrored" if spec.mirrored else ""),
        "b": spec.b,
        "delta": spec.delta,
        "seed": background.config.seed,
        "stream_id": background.config.stream_id,
    }
    return Trajectory(times=np.asarray(rec_t), states=np.asarray(rec_v),
                      obs_times=obs, obs_states=obs_states, final_state=final, meta=meta)


@dataclass
class SandwichReport:
    """Outcome of one pathwise squeeze check (positive violations = failures)."""

    n_events_checked: int
    max_lower_violation: float
    max_upper_violation: float
    exit_time: float | None
    exited: bool
    horizon: float


def sandwich_check(params: ModelParams, background, b: float, delta: float, y0: float,
                   horizon: float, drift_step: float | None = None) -> SandwichReport:
    """Joint evolution of (Y, lower, upper, H) on one event stream.

    Verifies, at every event time up to the first exit of Y from (0, e^-b],
    that  lower_t <= log(1/Y_t) - log(1/Y_0) <= upper_t + H_t.  Violations are
    reported as data (signed maxima), never raised.
    """
    y = _validate_x0(y0)
    spec_lo = LevySpec(b=b, delta=delta, which=LOWER)
    spec_up = LevySpec(b=b, delta=delta, which=UPPER)
    eb = spec_lo.exp_mb
    if not 0.0 < y <= eb:
        raise ParameterError(f"y0 must lie in (0, e^-b] = (0, {eb:g}], got {y0}")
    h = drift_step if drift_step is not None else default_drift_step(params.sigma)
    sigma = params.sigma
    drift_lo = levy_drift(spec_lo, params)
    drift_up = levy_drift(spec_up, params)

    jumps_lo = 0.0
    jumps_up = 0.0
    h_sum = 0.0
    max_lo = -math.inf
    max_up = -math.inf
    n_checked = 0
    t = 0.0
    log_y0 = math.log(y)
    for ev in background.events(horizon):
        y_pre = drift_flow_x(y, sigma, ev.time - t, h, -1.0)
        t = ev.time
        if y_pre > eb:
            return SandwichReport(n_checked, max_lo, max_up, t, True, horizon)
        jumps_lo += levy_increment(spec_lo, ev)
        if ev.kind == NEUTRAL:
            y_post = float(m_map(y_pre, ev.r, ev.u))
            if ev.r < delta:
                h_sum += math.log(y_pre / y_post)
            else:
                jumps_up += levy_increment(spec_up, ev)
        else:
            y_post = float(s_map(y_pre, ev.r))
            jumps_up += levy_increment(spec_up, ev)
        y = y_post
        z = log_y0 - math.log(y)  # log(1/Y_t) - log(1/Y_0)
        max_lo = max(max_lo, (jumps_lo + drift_lo * t) - z)
        max_up = max(max_up, z - (jumps_up + drift_up * t + h_sum))
        n_checked += 1
        if y > eb:
            return SandwichReport(n_checked, max_lo, max_up, t, True, horizon)
    return SandwichReport(n_checked, max_lo, max_up, None, False, horizon)


# ---------------------------------------------------------------------------
# Monte-Carlo layer: unit-time samples and first-passage tails
# ---------------------------------------------------------------------------

def _plain(spec: LevySpec) -> LevySpec:
    # mirroring is consumed by transforming the model, so the sampling spec
    # is always un-mirrored
    return LevySpec(b=spec.b, delta=spec.delta, which=spec.which, mirrored=False)


def levy_unit_samples(spec: LevySpec, params: ModelParams, reps: int, seed: int,
                      horizon: float = 1.0, eps_neutral: float = 1e-3,
                      eps_env: float = 1e-3) -> np.ndarray:
    """Independent samples of L_horizon by direct compound-Poisson draws."""
    from .batch import _rng, compile_model

    p = _model_for(spec, params)
    sp = _plain(spec)
    cm = compile_model(p, eps_neutral, eps_env)
    rng = _rng(seed, "levy_unit", 0)
    out = np.full(reps, levy_drift(spec, params) * horizon)
    for sampler, is_neutral in ((cm.neutral, True), (cm.env, False)):
        if sampler.rate <= 0:
            continue
        counts = rng.poisson(sampler.rate * horizon, reps)
        total = int(counts.sum())
        if total == 0:
            continue
        r = sampler.sample(rng, total)
        if is_neutral:
            u = rng.random(total)
            inc = _neutral_increment(sp, r, u)
        else:
            inc = _env_increment(sp, r)
        out += np.bincount(np.repeat(np.arange(reps), counts), weights=inc,
                           minlength=reps)
    return out


@dataclass
class PassageTailReport:
    """First-passage tail of the drift-shifted lower process below -level."""

    t_grid: np.ndarray
    tail: np.ndarray
    censored_fraction: float
    exp_fit: dict | None
    poly_fit: dict | None
    last_min_times: np.ndarray
    passage_times: np.ndarray
    horizon: float
    reps: int


def passage_tail(spec: LevySpec, params: ModelParams, drift_shift: float, level: float,
                 reps: int, t_grid, seed: int, horizon: float | None = None,
                 eps_neutral: float = 1e-3, eps_env: float = 1e-3) -> PassageTailReport:
    """Tail curve of P(t < first passage below -level < infinity), Monte Carlo.

    Requires ``mean_increment > drift_shift`` so the shifted process drifts
    upward and the passage event is a tail event.  "Never hits" is decided by
    censoring at the horizon; the censored fraction is reported, not hidden.
    Also records the last time each path attains its running minimum, whose
    tail carries the polynomial/exponential decay signature.
    """
    from .batch import _rng, compile_model
    from .estimators import fit_loglinear

    if spec.which != LOWER:
        raise ParameterError("passage_tail is defined for the lower process")
    if not level > 0:
        raise ParameterError("level must be positive")
    mean = mean_increment(spec, params)
    if not mean > drift_shift:
        raise ParameterError(
            f"need mean increment ({mean:.4g}) above the drift shift "
            f"({drift_shift:g}); the shifted process must drift upward"
        )
    ts = np.asarray(sorted(float(v) for v in t_grid))
    if horizon is None:
        horizon = 2.0 * float(ts[-1])
    p = _model_for(spec, params)
    sp = _plain(spec)
    cm = compile_model(p, eps_neutral, eps_env)
    rng = _rng(seed, "passage", 0)
    slope = levy_drift(spec, params) - drift_shift

    n = int(reps)
    v = np.zeros(n)
    t = np.zeros(n)
    nxt = (rng.exponential(1.0 / cm.total_rate, n) if cm.total_rate > 0
           else np.full(n, np.inf))
    t_pass = np.full(n, np.inf)
    min_val = np.zeros(n)
    min_time = np.zeros(n)

    def segment(idx, end_times):
        # linear piece from t[idx] to end_times; catches mid-segment passages
        gap = end_times - t[idx]
        v_end = v[idx] + slope * gap
        if slope < 0:
            crossing = (~np.isfinite(t_pass[idx]) & (v[idx] > -level)
                        & (v_end <= -level))
            if crossing.any():
                s = (-level - v[idx][crossing]) / slope
                t_pass[idx[crossing]] = t[idx][crossing] + s
        upd = v_end <= min_val[idx]
        if upd.any():
            min_val[idx[upd]] = v_end[upd]
            min_time[idx[upd]] = end_times[upd]
        return v_end

    while True:
        due = nxt <= horizon
        if not due.any():
            break
        idx = np.flatnonzero(due)
        v_end = segment(idx, nxt[idx])
        is_neu, r, u = _draw(cm, rng, idx.size)
        inc = np.where(is_neu, _neutral_increment(sp, r, u), _env_increment(sp, r))
        v_new = v_end + inc
        newly = ~np.isfinite(t_pass[idx]) & (v_new < -level)
        if newly.any():
            t_pass[idx[newly]] = nxt[idx[newly]]
        upd = v_new <= min_val[idx]
        if upd.any():
            min_val[idx[upd]] = v_new[upd]
            min_time[idx[upd]] = nxt[idx[upd]]
        v[idx] = v_new
        t[idx] = nxt[idx]
        nxt[idx] = t[idx] + rng.exponential(1.0 / cm.total_rate, idx.size)
    segment(np.arange(n), np.full(n, float(horizon)))

    finite = np.isfinite(t_pass)
    tail = np.array([float(np.mean((t_pass > tg) & finite)) for tg in ts])
    return PassageTailReport(
        t_grid=ts,
        tail=tail,
        censored_fraction=float(1.0 - finite.mean()),
        exp_fit=fit_loglinear(ts, tail),
        poly_fit=fit_loglinear(np.log(ts), tail),
        last_min_times=min_time,
        passage_times=t_pass,
        horizon=float(horizon),
        reps=n,
    )


def _draw(cm, rng, size):
    from .batch import _draw_events

    return _draw_events(cm, rng, size)
