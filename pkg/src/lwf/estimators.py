"""Monte-Carlo verification and estimation layer.

Everything here reduces to the batch engine: distributional equality checks
between the forward process and its dual, the renewal-cycle representation of
the fixation probability, direct absorption estimates, stationary-law
estimation by two routes, and decay-rate experiments.  All estimators are
deterministic functions of their seed (fixed replica blocks, ordered
reduction), so a re-run reproduces every result bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .batch import coupled_paths, occupation_window, paths_at_times, renewal_cycles
from .errors import ParameterError, WrongRegime
from .levy import sandwich_check
from .measures import ModelParams, compute_c0, compute_c1, integrability_report
from .background import BackgroundConfig, build_background

__all__ = [
    "EstimateWithCI",
    "DualityCell",
    "check_duality",
    "check_two_trajectory_duality",
    "estimate_fixation_renewal",
    "estimate_fixation_direct",
    "estimate_stationary_y",
    "decay_rate_experiment",
    "merge_decay_curve",
    "sandwich_mc",
    "fit_loglinear",
]


@dataclass(frozen=True)
class EstimateWithCI:
    """A Monte-Carlo point estimate with its standard error."""

    point: float
    std_error: float
    reps: int
    method: str = ""

    def __str__(self):
        return f"{self.point:.6g} +- {self.std_error:.2g} ({self.method}, n={self.reps})"


def _bernoulli(hits: np.ndarray, method: str) -> EstimateWithCI:
    n = hits.size
    p = float(np.mean(hits))
    se = math.sqrt(p * (1.0 - p) / n)
    return EstimateWithCI(p, se, n, method)


def fit_loglinear(x, p):
    """Least-squares fit of log(p) against x; returns (slope, intercept, r2).

    Entries with p <= 0 are dropped; returns None with fewer than 3 usable
    points.
    """
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    keep = p > 0
    if int(keep.sum()) < 3:
        return None
    xs = x[keep]
    ys = np.log(p[keep])
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = ys - (slope * xs + intercept)
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 0.0
    return {"slope": float(slope), "intercept": float(intercept), "r2": r2,
            "n_points": int(keep.sum())}


# ---------------------------------------------------------------------------
# Duality checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DualityCell:
    """One grid cell of the distributional identity P_x(X_t >= y) = P_y(Y_t <= x)."""

    x: float
    y: float
    t: float
    p_forward: EstimateWithCI
    p_dual: EstimateWithCI
    z_score: float


def _z(p1: EstimateWithCI, p2: EstimateWithCI) -> float:
    denom = math.hypot(p1.std_error, p2.std_error)
    if denom == 0.0:
        return 0.0 if p1.point == p2.point else math.inf
    return (p1.point - p2.point) / denom


def check_duality(params: ModelParams, xs, ys, ts, reps: int, seed: int,
                  eps_neutral: float = 1e-3, eps_env: float = 1e-3,
                  workers: int = 1):
    """Monte-Carlo test of the distributional duality on a grid.

    The two sides use independent replicas (the identity is in distribution,
    not pathwise).  Returns (cells, summary); the summary counts cells with
    |z| above 3 and 5.
    """
    xs = [float(v) for v in xs]
    ys = [float(v) for v in ys]
    ts = sorted(float(v) for v in ts)
    fwd = {}
    for i, x in enumerate(xs):
        fwd[x] = paths_at_times(params, "x", x, ts, reps, seed, tag=f"duality_x{i}",
                                eps_neutral=eps_neutral, eps_env=eps_env, workers=workers)
    dua = {}
    for j, y in enumerate(ys):
        dua[y] = paths_at_times(params, "y", y, ts, reps, seed, tag=f"duality_y{j}",
                                eps_neutral=eps_neutral, eps_env=eps_env, workers=workers)
    cells = []
    for x in xs:
        for y in ys:
            for k, t in enumerate(ts):
                pf = _bernoulli(fwd[x][:, k] >= y, "forward")
                pd = _bernoulli(dua[y][:, k] <= x, "dual")
                cells.append(DualityCell(x, y, t, pf, pd, _z(pf, pd)))
    zs = np.array([abs(c.z_score) for c in cells])
    summary = {
        "n_cells": len(cells),
        "max_abs_z": float(zs.max()),
        "n_above_3": int((zs > 3).sum()),
        "n_above_5": int((zs > 5).sum()),
    }
    return cells, summary


def check_two_trajectory_duality(params: ModelParams, x_hat: float, x_check: float,
                                 y: float, t: float, reps: int, seed: int,
                                 eps_neutral: float = 1e-3, eps_env: float = 1e-3,
                                 workers: int = 1) -> dict:
    """Two coupled forward paths against one dual path.

    Left side: P(X^_t < y <= Xv_t) with the pair sharing one event stream per
    replica.  Right side: P_y(x_hat < Y_t <= x_check) from independent dual
    replicas.
    """
    if not x_hat <= x_check:
        raise ParameterError("need x_hat <= x_check")
    pair = coupled_paths(params, "x", x_hat, x_check, [t], reps, seed,
                         tag="twotraj_x", eps_neutral=eps_neutral, eps_env=eps_env,
                         workers=workers)
    left = _bernoulli((pair["lo"][:, 0] < y) & (y <= pair["hi"][:, 0]), "coupled forward")
    ystates = paths_at_times(params, "y", y, [t], reps, seed, tag="twotraj_y",
                             eps_neutral=eps_neutral, eps_env=eps_env, workers=workers)
    right = _bernoulli((x_hat < ystates[:, 0]) & (ystates[:, 0] <= x_check), "dual")
    return {"left": left, "right": right, "z": _z(left, right),
            "max_order_gap": pair["max_order_gap"]}


# ---------------------------------------------------------------------------
# Fixation probability
# ---------------------------------------------------------------------------

@dataclass
class RenewalFixationResult:
    x_grid: np.ndarray
    estimates: list[EstimateWithCI]
    jackknife_se: np.ndarray
    mean_cycle_length: float
    n_cycles: int
    theta: float
    states: np.ndarray = field(repr=False)


def estimate_fixation_renewal(params: ModelParams, x_grid, kappa: float, eta: float,
                              reps: int, seed: int, gamma: float = 1.0,
                              a_center: float = 0.5, eps_neutral: float = 1e-3,
                              eps_env: float = 1e-3, workers: int = 1,
                              max_time: float = 1e5) -> RenewalFixationResult:
    """Fixation probability curve via the renewal occupation representation.

    One renewal cycle starts uniform on the reset window and runs to the next
    reset event; the probability of ending at the all-a state from level x is
    the expected cycle time spent at or below x over the expected cycle
    length.  Standard errors use the delta method for the ratio of means,
    cross-checked by a leave-one-out (jackknife) estimate.
    """
    report = integrability_report(params, gamma)
    if report.regime != "Theta2":
        raise WrongRegime(
            f"renewal representation needs both boundaries reachable (Theta2); "
            f"classified {report.regime} (C0={report.c0:.4g}, C1={report.c1:.4g})"
        )
    grid = np.asarray(x_grid, dtype=float)
    rc = renewal_cycles(params, kappa, eta, reps, seed, tag="fixation_renewal",
                        x_grid=grid, a_center=a_center, eps_neutral=eps_neutral,
                        eps_env=eps_env, max_time=max_time, workers=workers)
    lengths = rc["renewal_time"]
    occ = rc["occupation"]
    n = lengths.size
    mean_len = float(lengths.mean())
    ratios = occ.mean(axis=0) / mean_len
    # delta method for a ratio of means
    resid = occ - ratios[None, :] * lengths[:, None]
    se = resid.std(axis=0, ddof=1) / math.sqrt(n) / mean_len
    # jackknife cross-check
    tot_occ = occ.sum(axis=0)
    tot_len = lengths.sum()
    loo = (tot_occ[None, :] - occ) / (tot_len - lengths)[:, None]
    jk_se = np.sqrt((n - 1) / n * ((loo - loo.mean(axis=0)) ** 2).sum(axis=0))
    estimates = [EstimateWithCI(float(rat), float(s), n, "renewal")
                 for rat, s in zip(ratios, se)]
    return RenewalFixationResult(grid, estimates, jk_se, mean_len, n, rc["theta"],
                                 rc["state"])


@dataclass(frozen=True)
class DirectFixationResult:
    estimate: EstimateWithCI
    fixed_low_fraction: float
    undecided_fraction: float
    t_final: float
    eps_fix: float


def estimate_fixation_direct(params: ModelParams, x0: float, t_final: float,
                             eps_fix: float, reps: int, seed: int,
                             eps_neutral: float = 1e-3, eps_env: float = 1e-3,
                             workers: int = 1) -> DirectFixationResult:
    """Fraction of forward replicas within eps_fix of 1 at t_final.

    The undecided fraction (neither within eps_fix of 0 nor of 1) bounds the
    finite-horizon bias and is reported alongside.
    """
    if not eps_fix > 0:
        raise ParameterError("eps_fix must be positive; exact absorption never "
                             "happens in finite time")
    states = paths_at_times(params, "x", x0, [t_final], reps, seed,
                            tag="fixation_direct", eps_neutral=eps_neutral,
                            eps_env=eps_env, workers=workers)[:, 0]
    hi = states >= 1.0 - eps_fix
    lo = states <= eps_fix
    return DirectFixationResult(
        estimate=_bernoulli(hi, "direct"),
        fixed_low_fraction=float(lo.mean()),
        undecided_fraction=float((~hi & ~lo).mean()),
        t_final=t_final,
        eps_fix=eps_fix,
    )


# ---------------------------------------------------------------------------
# Stationary law of the dual
# ---------------------------------------------------------------------------

def estimate_stationary_y(params: ModelParams, x_grid, method: str, reps: int,
                          seed: int, kappa: float = 0.2, eta: float = 0.2,
                          y0: float = 0.5, burn_in: float = 20.0,
                          t_total: float = 220.0, eps_neutral: float = 1e-3,
                          eps_env: float = 1e-3, workers: int = 1):
    """Distribution function of the dual's stationary law on a level grid.

    ``method="renewal"`` uses cycle occupation over expected cycle length;
    ``method="ergodic"`` time-averages one long path per replica after a
    burn-in.  The two must agree within combined confidence intervals.
    """
    grid = np.asarray(x_grid, dtype=float)
    if method == "renewal":
        res = estimate_fixation_renewal(params, grid, kappa, eta, reps, seed,
                                        eps_neutral=eps_neutral, eps_env=eps_env,
                                        workers=workers)
        return res.estimates
    if method == "ergodic":
        occ = occupation_window(params, y0, grid, burn_in, t_total, reps, seed,
                                tag="stationary_ergodic", process="y",
                                eps_neutral=eps_neutral, eps_env=eps_env,
                                workers=workers)
        n = occ.shape[0]
        return [EstimateWithCI(float(occ[:, j].mean()),
                               float(occ[:, j].std(ddof=1) / math.sqrt(n)),
                               n, "ergodic")
                for j in range(grid.size)]
    raise ParameterError("method must be 'renewal' or 'ergodic'")


# ---------------------------------------------------------------------------
# Decay-rate experiments
# ---------------------------------------------------------------------------

@dataclass
class DecayReport:
    mode: str
    t_grid: np.ndarray
    probs: np.ndarray
    exp_fit: dict | None
    poly_fit: dict | None
    reps: int


def decay_rate_experiment(params: ModelParams, x0: float, rho: float, t_grid,
                          reps: int, seed: int, mode: str = "theta2",
                          band: str = "exp", eps_neutral: float = 1e-3,
                          eps_env: float = 1e-3, workers: int = 1) -> DecayReport:
    """Estimate how fast the relevant 'not yet settled' probability decays.

    theta2 mode: probability that the forward state is outside both
    exponentially shrinking boundary bands.  theta3 mode: the same band
    probability for the dual (its rho must stay below both balance values).
    theta01 mode: probability of being farther than the shrinking band from
    the almost-sure target boundary; ``band`` picks ``t**-rho`` or
    ``exp(-rho t)``.  Both log-linear (exponential) and log-log (polynomial)
    fits of the curve are reported with their r-squared.
    """
    ts = np.asarray(sorted(float(v) for v in t_grid))
    if ts.size == 0 or ts[0] <= 0:
        raise ParameterError("t_grid must be positive")
    if not rho > 0:
        raise ParameterError("rho must be positive")
    if mode in ("theta2", "theta3"):
        if math.exp(-rho * ts[0]) >= 0.5:
            raise ParameterError(
                f"band exp(-rho t) must stay below 1/2 on the grid; need "
                f"t > ln2/rho = {math.log(2)/rho:.3g}, got t_min={ts[0]:g}"
            )
    if mode == "theta2":
        states = paths_at_times(params, "x", x0, ts, reps, seed, tag="decay_theta2",
                                eps_neutral=eps_neutral, eps_env=eps_env,
                                workers=workers)
        bands = np.exp(-rho * ts)[None, :]
        hits = (states >= bands) & (states <= 1.0 - bands)
    elif mode == "theta3":
        c0, c1 = compute_c0(params), compute_c1(params)
        if not rho < min(c0, c1):
            raise ParameterError(
                f"theta3 mode needs rho below both balance values "
                f"(C0={c0:.4g}, C1={c1:.4g}); got rho={rho:g}"
            )
        states = paths_at_times(params, "y", x0, ts, reps, seed, tag="decay_theta3",
                                eps_neutral=eps_neutral, eps_env=eps_env,
                                workers=workers)
        bands = np.exp(-rho * ts)[None, :]
        hits = (states >= bands) & (states <= 1.0 - bands)
    elif mode == "theta01":
        report = integrability_report(params, gamma=1.0)
        if report.regime not in ("Theta0", "Theta1"):
            raise WrongRegime(f"theta01 mode needs a one-sided regime, got {report.regime}")
        target = 0.0 if report.regime == "Theta0" else 1.0
        states = paths_at_times(params, "x", x0, ts, reps, seed, tag="decay_theta01",
                                eps_neutral=eps_neutral, eps_env=eps_env,
                                workers=workers)
        if band == "poly":
            bands = ts**-rho
        elif band == "exp":
            bands = np.exp(-rho * ts)
        else:
            raise ParameterError("band must be 'poly' or 'exp'")
        hits = np.abs(states - target) > bands[None, :]
    else:
        raise ParameterError("mode must be theta2, theta3, or theta01")
    probs = hits.mean(axis=0)
    return DecayReport(mode, ts, probs, fit_loglinear(ts, probs),
                       fit_loglinear(np.log(ts), probs), reps)


def merge_decay_curve(params: ModelParams, y_lo0: float, y_hi0: float, t_grid,
                      reps: int, seed: int, eps_neutral: float = 1e-3,
                      eps_env: float = 1e-3, workers: int = 1) -> DecayReport:
    """Fraction of coupled dual pairs not yet merged by each grid time."""
    ts = np.asarray(sorted(float(v) for v in t_grid))
    out = coupled_paths(params, "y", y_lo0, y_hi0, ts, reps, seed, tag="merge_decay",
                        eps_neutral=eps_neutral, eps_env=eps_env, workers=workers)
    probs = np.array([(out["merge_time"] > t).mean() for t in ts])
    rep = DecayReport("merge", ts, probs, fit_loglinear(ts, probs),
                      fit_loglinear(np.log(ts), probs), reps)
    rep.max_order_gap = out["max_order_gap"]
    return rep


# ---------------------------------------------------------------------------
# Pathwise squeeze, replicated
# ---------------------------------------------------------------------------

def sandwich_mc(params: ModelParams, b: float, delta: float, y0: float, horizon: float,
                paths: int, seed: int, eps_neutral: float = 1e-3,
                eps_env: float = 1e-3) -> dict:
    """Run the pathwise squeeze check over many independent event streams.

    Returns the worst signed violations over all paths (positive = failure)
    and counts of paths stopped by boundary exit versus horizon.
    """
    max_lo = -math.inf
    max_up = -math.inf
    n_exit = 0
    n_events = 0
    for i in range(paths):
        cfg = BackgroundConfig(seed=seed, horizon=horizon, eps_neutral=eps_neutral,
                               eps_env=eps_env, stream_id=i)
        bg = build_background(params, cfg)
        rep = sandwich_check(params, bg, b, delta, y0, horizon)
        max_lo = max(max_lo, rep.max_lower_violation)
        max_up = max(max_up, rep.max_upper_violation)
        n_exit += int(rep.exited)
        n_events += rep.n_events_checked
    return {
        "paths": paths,
        "max_lower_violation": max_lo,
        "max_upper_violation": max_up,
        "n_exited": n_exit,
        "n_events_checked": n_events,
    }
