"""Command line front end.

Every command reads one TOML config (the model and defaults), accepts flag
overrides, writes plot-ready CSV/JSON results, and records a manifest with
the config snapshot, seed, and output checksums so results can be reproduced
bit for bit.  Exit codes map error classes: 2 config, 3 parameters, 4
non-integrable, 5 infinite rate, 6 wrong regime, 7 horizon, 8 domain, 9
internal.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

from scipy import stats as _st

from . import __version__
from .background import BackgroundConfig, build_background
from .batch import coupled_paths, paths_at_times, renewal_cycles
from .config import RunConfig, load_config
from .errors import LwfError, ParameterError
from .estimators import (
    check_duality,
    decay_rate_experiment,
    estimate_fixation_direct,
    estimate_fixation_renewal,
    estimate_stationary_y,
    sandwich_mc,
)
from .levy import LevySpec, laplace_exponent, mean_increment, passage_tail
from .manifest import RunManifest, Stopwatch
from .measures import integrability_report

__all__ = ["main"]


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError as exc:
        raise ParameterError(f"expected a comma-separated list of numbers, got {text!r}") from exc


def _manifest_name(out) -> str:
    return Path(str(out)).with_suffix(".manifest.json").name


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# manifest: {_manifest_name(path)}\n")
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])


def _finish(args, cfg: RunConfig, seed: int, watch, outputs, summary: dict) -> int:
    print(json.dumps(summary, indent=2, default=float))
    if args.out:
        options = {k: v for k, v in vars(args).items() if k not in ("func", "cmd")}
        options["resolved"] = {
            "seed": seed,
            "eps_neutral": float(cfg.get("background", "eps_neutral")),
            "eps_env": float(cfg.get("background", "eps_env")),
        }
        man = RunManifest(
            command=args.cmd,
            options=options,
            config_snapshot=cfg.raw,
            seed=seed,
            wall_clock_s=watch.elapsed,
        )
        for path in outputs:
            man.add_output(path)
        man_path = Path(str(args.out)).with_suffix(".manifest.json")
        assert man_path.name == _manifest_name(args.out)
        man.write(man_path)
        print(f"manifest: {man_path}", file=sys.stderr)
    return 0


def _setup(args):
    cfg = load_config(args.config)
    seed = args.seed if args.seed is not None else int(cfg.get("background", "seed"))
    reps = args.reps if args.reps is not None else int(cfg.get("run", "reps"))
    if reps is not None and reps <= 0:
        raise ParameterError(f"reps must be positive, got {reps}")
    workers = args.workers if args.workers is not None else int(cfg.get("run", "workers"))
    eps_n = float(cfg.get("background", "eps_neutral"))
    eps_e = float(cfg.get("background", "eps_env"))
    return cfg, seed, reps, workers, {"eps_neutral": eps_n, "eps_env": eps_e}


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_classify(args) -> int:
    cfg = load_config(args.config)
    gamma = args.gamma if args.gamma is not None else float(cfg.get("classify", "gamma"))
    tol = float(cfg.get("classify", "critical_tol"))
    with Stopwatch() as watch:
        report = integrability_report(cfg.params, gamma, tol)
    print(report.to_text())
    outputs = []
    if args.out:
        doc = report.to_dict()
        doc["manifest"] = _manifest_name(args.out)
        with open(args.out, "w") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
        outputs.append(args.out)
    return _finish(args, cfg, int(cfg.get("background", "seed")), watch, outputs,
                   {"regime": report.regime, "c0": report.c0, "c1": report.c1})


def _cmd_paths(args, process: str) -> int:
    cfg, seed, reps, workers, eps = _setup(args)
    ts = _floats(args.t)
    x0 = args.x0 if process == "x" else args.y0
    with Stopwatch() as watch:
        if process == "y" and args.cap is not None:
            # capped runs keep the per-path engine (shared filtered stream)
            from .dual import simulate_y_capped
            rows = []
            for i in range(reps):
                bg = build_background(cfg.params, BackgroundConfig(
                    seed=seed, horizon=max(ts), stream_id=i, **eps))
                traj = simulate_y_capped(cfg.params, bg, args.cap, x0, ts)
                rows.extend((i, t, s) for t, s in zip(ts, traj.obs_states))
            states = None
        else:
            states = paths_at_times(cfg.params, process, x0, ts, reps, seed,
                                    tag=f"cli_{process}", workers=workers, **eps)
            rows = [(i, t, float(states[i, j])) for i in range(reps)
                    for j, t in enumerate(ts)]
    outputs = []
    if args.out:
        _write_csv(args.out, ["rep", "time", "state"], rows)
        outputs.append(args.out)
    if states is None:
        means = {}
    else:
        means = {f"mean@{t:g}": float(states[:, j].mean()) for j, t in enumerate(ts)}
    return _finish(args, cfg, seed, watch, outputs,
                   {"reps": reps, "times": ts, **means})


def cmd_simulate_x(args) -> int:
    return _cmd_paths(args, "x")


def cmd_simulate_y(args) -> int:
    return _cmd_paths(args, "y")


def cmd_coupled_pair(args) -> int:
    cfg, seed, reps, workers, eps = _setup(args)
    ts = _floats(args.t)
    with Stopwatch() as watch:
        out = coupled_paths(cfg.params, "y", args.y_hat, args.y_check, ts, reps,
                            seed, tag="cli_coupled", workers=workers, **eps)
    rows = [(i, t, float(out["lo"][i, j]), float(out["hi"][i, j]),
             int(out["merge_time"][i] <= t))
            for i in range(reps) for j, t in enumerate(ts)]
    outputs = []
    if args.out:
        _write_csv(args.out, ["rep", "time", "y_hat", "y_check", "merged"], rows)
        outputs.append(args.out)
    summary = {
        "reps": reps,
        "max_order_gap": float(out["max_order_gap"]),
        "not_merged": {f"{t:g}": float((out["merge_time"] > t).mean()) for t in ts},
    }
    return _finish(args, cfg, seed, watch, outputs, summary)


def cmd_renewal_scan(args) -> int:
    cfg, seed, reps, workers, eps = _setup(args)
    kappa = args.kappa if args.kappa is not None else float(cfg.get("renewal", "kappa"))
    eta = args.eta if args.eta is not None else float(cfg.get("renewal", "eta"))
    center = args.center if args.center is not None else float(cfg.get("renewal", "center"))
    with Stopwatch() as watch:
        rc = renewal_cycles(cfg.params, kappa, eta, reps, seed, tag="cli_renewal",
                            a_center=center, workers=workers, **eps)
    ks = _st.kstest(rc["state"], _st.uniform(loc=center - eta / 2, scale=eta).cdf)
    rows = [(i, float(rc["renewal_time"][i]), float(rc["state"][i]))
            for i in range(reps)]
    outputs = []
    if args.out:
        _write_csv(args.out, ["rep", "renewal_time", "state"], rows)
        outputs.append(args.out)
    summary = {
        "reps": reps, "kappa": kappa, "eta": eta, "center": center,
        "theta": float(rc["theta"]),
        "mean_cycle_length": float(rc["renewal_time"].mean()),
        "ks_statistic": float(ks.statistic), "ks_pvalue": float(ks.pvalue),
    }
    return _finish(args, cfg, seed, watch, outputs, summary)


def cmd_check_duality(args) -> int:
    cfg, seed, reps, workers, eps = _setup(args)
    xs, ys, ts = _floats(args.x), _floats(args.y), _floats(args.t)
    with Stopwatch() as watch:
        cells, summary = check_duality(cfg.params, xs, ys, ts, reps, seed,
                                       workers=workers, **eps)
    rows = [(c.x, c.y, c.t, c.p_forward.point, c.p_forward.std_error,
             c.p_dual.point, c.p_dual.std_error, c.z_score) for c in cells]
    outputs = []
    if args.out:
        _write_csv(args.out, ["x", "y", "t", "p_forward", "se_forward",
                              "p_dual", "se_dual", "z"], rows)
        outputs.append(args.out)
    summary["pass"] = bool(summary["n_above_3"] <= 1 and summary["n_above_5"] == 0)
    summary["reps_per_side"] = reps
    return _finish(args, cfg, seed, watch, outputs, summary)


def cmd_fixation(args) -> int:
    cfg, seed, reps, workers, eps = _setup(args)
    xs = _floats(args.x)
    kappa = float(cfg.get("renewal", "kappa"))
    eta = float(cfg.get("renewal", "eta"))
    ren = dir_ = None
    with Stopwatch() as watch:
        if args.method in ("renewal", "both"):
            ren = estimate_fixation_renewal(cfg.params, xs, kappa, eta, reps, seed,
                                            workers=workers, **eps)
        if args.method in ("direct", "both"):
            dir_ = [estimate_fixation_direct(cfg.params, x, args.t_final,
                                             args.eps_fix, reps, seed + 1000 + i,
                                             workers=workers, **eps)
                    for i, x in enumerate(xs)]
    rows = []
    summary = {"x": xs, "method": args.method, "reps": reps}
    zs = []
    for i, x in enumerate(xs):
        hr = ren.estimates[i] if ren else None
        hd = dir_[i].estimate if dir_ else None
        z = ""
        if hr and hd:
            denom = math.hypot(hr.std_error, hd.std_error)
            z = (hr.point - hd.point) / denom if denom > 0 else 0.0
            zs.append(abs(z))
        rows.append((x,
                     hr.point if hr else "", hr.std_error if hr else "",
                     hd.point if hd else "", hd.std_error if hd else "", z))
    if dir_:
        summary["max_undecided_fraction"] = max(d.undecided_fraction for d in dir_)
    if ren:
        summary["mean_cycle_length"] = ren.mean_cycle_length
    if zs:
        summary["max_abs_z"] = max(zs)
        summary["pass"] = bool(max(zs) <= 3.0
                               and summary.get("max_undecided_fraction", 0.0) < 0.02)
    outputs = []
    if args.out:
        _write_csv(args.out, ["x", "h_renewal", "se_renewal", "h_direct",
                              "se_direct", "z"], rows)
        outputs.append(args.out)
    return _finish(args, cfg, seed, watch, outputs, summary)


def cmd_stationary(args) -> int:
    cfg, seed, reps, workers, eps = _setup(args)
    xs = _floats(args.x)
    with Stopwatch() as watch:
        results = {}
        for method in (("renewal", "ergodic") if args.method == "both" else (args.method,)):
            results[method] = estimate_stationary_y(
                cfg.params, xs, method, reps, seed, workers=workers, **eps)
    rows = []
    for i, x in enumerate(xs):
        row = [x]
        for method in ("renewal", "ergodic"):
            if method in results:
                row += [results[method][i].point, results[method][i].std_error]
            else:
                row += ["", ""]
        rows.append(tuple(row))
    outputs = []
    if args.out:
        _write_csv(args.out, ["x", "F_renewal", "se_renewal", "F_ergodic",
                              "se_ergodic"], rows)
        outputs.append(args.out)
    summary = {m: [e.point for e in v] for m, v in results.items()}
    summary["x"] = xs
    if len(results) == 2:
        zs = [abs(a.point - b.point) / math.hypot(a.std_error, b.std_error)
              if (a.std_error or b.std_error) else 0.0
              for a, b in zip(results["renewal"], results["ergodic"])]
        summary["max_abs_z"] = max(zs)
        summary["pass"] = bool(max(zs) <= 3.0)
    return _finish(args, cfg, seed, watch, outputs, summary)


def cmd_decay(args) -> int:
    cfg, seed, reps, workers, eps = _setup(args)
    ts = _floats(args.t)
    with Stopwatch() as watch:
        rep = decay_rate_experiment(cfg.params, args.x0, args.rho, ts, reps, seed,
                                    mode=args.mode, band=args.band,
                                    workers=workers, **eps)
    outputs = []
    if args.out:
        _write_csv(args.out, ["t", "prob"],
                   [(float(t), float(p)) for t, p in zip(rep.t_grid, rep.probs)])
        outputs.append(args.out)
    summary = {"mode": rep.mode, "rho": args.rho, "exp_fit": rep.exp_fit,
               "poly_fit": rep.poly_fit, "reps": reps}
    return _finish(args, cfg, seed, watch, outputs, summary)


def cmd_sandwich_test(args) -> int:
    cfg, seed, _reps, _workers, eps = _setup(args)
    b = args.b if args.b is not None else float(cfg.get("levy", "b"))
    delta = args.delta if args.delta is not None else float(cfg.get("levy", "delta"))
    horizon = args.horizon if args.horizon is not None else 50.0
    with Stopwatch() as watch:
        out = sandwich_mc(cfg.params, b, delta, args.y0, horizon, args.paths, seed,
                          **eps)
    out["pass"] = bool(out["max_lower_violation"] <= 1e-9
                       and out["max_upper_violation"] <= 1e-9)
    outputs = []
    if args.out:
        doc = dict(out)
        doc["manifest"] = _manifest_name(args.out)
        with open(args.out, "w") as fh:
            json.dump(doc, fh, indent=2, default=float)
            fh.write("\n")
        outputs.append(args.out)
    return _finish(args, cfg, seed, watch, outputs, out)


def cmd_levy_exponent(args) -> int:
    cfg, seed, _reps, _workers, _eps = _setup(args)
    b = args.b if args.b is not None else float(cfg.get("levy", "b"))
    delta = args.delta if args.delta is not None else float(cfg.get("levy", "delta"))
    spec = LevySpec(b=b, delta=delta, which=args.which, mirrored=args.mirrored)
    lams = _floats(args.lambda_grid)
    with Stopwatch() as watch:
        vals = [(lam, laplace_exponent(spec, cfg.params, lam)) for lam in lams]
        mean = mean_increment(spec, cfg.params)
    outputs = []
    if args.out:
        _write_csv(args.out, ["lambda", "psi"], vals)
        outputs.append(args.out)
    return _finish(args, cfg, seed, watch, outputs,
                   {"which": args.which, "b": b, "delta": delta,
                    "mean_increment": mean,
                    "psi": {f"{l:g}": v for l, v in vals}})


def cmd_passage_tail(args) -> int:
    cfg, seed, reps, _workers, eps = _setup(args)
    b = args.b if args.b is not None else float(cfg.get("levy", "b"))
    delta = args.delta if args.delta is not None else float(cfg.get("levy", "delta"))
    spec = LevySpec(b=b, delta=delta, which="lower")
    ts = _floats(args.t)
    with Stopwatch() as watch:
        rep = passage_tail(spec, cfg.params, args.m, args.level, reps, ts, seed,
                           horizon=args.horizon, **eps)
    outputs = []
    if args.out:
        _write_csv(args.out, ["t", "tail"],
                   [(float(t), float(p)) for t, p in zip(rep.t_grid, rep.tail)])
        outputs.append(args.out)
    summary = {"censored_fraction": rep.censored_fraction, "exp_fit": rep.exp_fit,
               "poly_fit": rep.poly_fit, "reps": reps}
    return _finish(args, cfg, seed, watch, outputs, summary)


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lwf",
        description="simulate and verify jump Wright-Fisher models and their duals",
    )
    parser.add_argument("--version", action="version", version=f"lwf {__version__}")
    sub = parser.add_subparsers(dest="cmd", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="TOML model/config file")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--reps", type=int, default=None)
    common.add_argument("--out", default=None, help="output CSV/JSON path")
    common.add_argument("--workers", type=int, default=None)
    common.add_argument("--horizon", type=float, default=None)

    p = sub.add_parser("classify", parents=[common], help="regime classification report")
    p.add_argument("--gamma", type=float, default=None)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("simulate-x", parents=[common], help="forward replicas at a time grid")
    p.add_argument("--x0", type=float, required=True)
    p.add_argument("--t", required=True, help="comma list of observation times")
    p.set_defaults(func=cmd_simulate_x)

    p = sub.add_parser("simulate-y", parents=[common], help="dual replicas at a time grid")
    p.add_argument("--y0", type=float, required=True)
    p.add_argument("--t", required=True)
    p.add_argument("--cap", type=float, default=None,
                   help="drop neutral events with size above this cap")
    p.set_defaults(func=cmd_simulate_y)

    p = sub.add_parser("coupled-pair", parents=[common], help="ordered dual pairs, shared stream")
    p.add_argument("--y-hat", type=float, required=True)
    p.add_argument("--y-check", type=float, required=True)
    p.add_argument("--t", required=True)
    p.set_defaults(func=cmd_coupled_pair)

    p = sub.add_parser("renewal-scan", parents=[common], help="renewal times and reset states")
    p.add_argument("--kappa", type=float, default=None)
    p.add_argument("--eta", type=float, default=None)
    p.add_argument("--center", type=float, default=None)
    p.set_defaults(func=cmd_renewal_scan)

    p = sub.add_parser("check-duality", parents=[common], help="grid z-test of the duality")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--t", required=True)
    p.set_defaults(func=cmd_check_duality)

    p = sub.add_parser("fixation", parents=[common], help="fixation probability curve")
    p.add_argument("--method", choices=["renewal", "direct", "both"], default="both")
    p.add_argument("--x", required=True)
    p.add_argument("--t-final", type=float, default=60.0)
    p.add_argument("--eps-fix", type=float, default=1e-3)
    p.set_defaults(func=cmd_fixation)

    p = sub.add_parser("stationary", parents=[common], help="stationary law of the dual")
    p.add_argument("--method", choices=["renewal", "ergodic", "both"], default="both")
    p.add_argument("--x", required=True)
    p.set_defaults(func=cmd_stationary)

    p = sub.add_parser("decay", parents=[common], help="decay-rate experiment")
    p.add_argument("--mode", choices=["theta2", "theta3", "theta01"], default="theta2")
    p.add_argument("--band", choices=["exp", "poly"], default="exp")
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--x0", type=float, default=0.5)
    p.add_argument("--t", required=True)
    p.set_defaults(func=cmd_decay)

    p = sub.add_parser("sandwich-test", parents=[common], help="pathwise squeeze check")
    p.add_argument("--b", type=float, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--y0", type=float, default=0.2)
    p.add_argument("--paths", type=int, default=1000)
    p.set_defaults(func=cmd_sandwich_test)

    p = sub.add_parser("levy-exponent", parents=[common], help="exponent of E[exp(l L_1)]")
    p.add_argument("--lambda-grid", required=True)
    p.add_argument("--which", choices=["lower", "upper"], default="lower")
    p.add_argument("--b", type=float, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--mirrored", action="store_true")
    p.set_defaults(func=cmd_levy_exponent)

    p = sub.add_parser("passage-tail", parents=[common], help="first-passage tail curve")
    p.add_argument("--m", type=float, default=0.0, help="linear drift shift")
    p.add_argument("--level", type=float, required=True)
    p.add_argument("--t", required=True)
    p.add_argument("--b", type=float, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.set_defaults(func=cmd_passage_tail)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except LwfError as exc:
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
