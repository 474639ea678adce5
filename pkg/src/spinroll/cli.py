"""Command-line interface: ``spinroll {plan,distance,simulate,batch}``.

Exit codes: 0 on success (a converged plan), 2 on a typed failure (the
planner did not converge, the goal is infeasible, the distance chain left its
domain, ...), 1 on any other error, including unreadable or invalid
configuration files.
"""
from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, load_config
from .errors import ConfigError, NumericalDomain, SpinrollError
from .io import (PlanReport, batch_summary_csv, dumps, iteration_log_jsonl, table_csv, write_plot_data,
                 write_text, write_trajectory_csv)
from .kinematics import VARIANTS, KinematicsContext, integrate, no_sliding_ratio, straightness
from .planner import TuningState, extract_diagnostics, plan
from .reachability import distance_surface, min_distance
from .timescale import MODES, path_distance

log = logging.getLogger("spinroll")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_TYPED = 2


# --------------------------------------------------------------------------- helpers

def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    if getattr(args, "variant", None):
        cfg = replace(cfg, variant=args.variant)
    if getattr(args, "v_shift", False):
        cfg = replace(cfg, v_shift=True)
    if getattr(args, "max_iters", None):
        cfg = replace(cfg, tolerances=replace(cfg.tolerances, max_iters=args.max_iters))
    return cfg.with_timescale(mode=getattr(args, "mode", None), T=getattr(args, "T", None),
                              a=getattr(args, "a", None), T_s=getattr(args, "T_s", None),
                              t_f=getattr(args, "t_f", None))


def run_plan(cfg: RunConfig, out_dir) -> tuple[int, PlanReport]:
    """Plan one configuration and write all exports into ``out_dir``."""
    out = Path(out_dir)
    goal = cfg.goal
    try:
        result = plan(goal, cfg.planner_params())
    except SpinrollError as exc:
        report = PlanReport.failure(exc)
        write_text(out / "report.json", report.to_json())
        return EXIT_TYPED, report
    report = PlanReport.from_result(result, goal, cfg.tolerances)
    if not result.converged:
        report.error = "MaxIterations"
    write_trajectory_csv(result.trajectory, out / "trajectory.csv")
    write_text(out / "iterations.jsonl", iteration_log_jsonl(result.log))
    write_text(out / "report.json", report.to_json())
    write_plot_data(result.trajectory, result.log, out)
    return (EXIT_OK if result.converged else EXIT_TYPED), report


def simulate(cfg: RunConfig, tuning: TuningState) -> tuple:
    """One forward solve with fixed tunables; returns the trajectory and its diagnostics."""
    ctx = KinematicsContext(goal=cfg.goal, R_o=cfg.R_o, mu_r=cfg.mu_r, zeta_prime=tuning.zeta_prime,
                            R_a=tuning.R_a, psi_u=tuning.psi_u, timescale=cfg.timescale,
                            variant=cfg.variant, v_shift=cfg.v_shift)
    traj = integrate(None, ctx, cfg.t_f, **cfg.integrator())
    diag = extract_diagnostics(traj, cfg.goal, cfg.R_o)
    tol = cfg.tolerances
    info = {"status": traj.status, "n_steps": traj.n_steps, "n_rejected": traj.n_rejected,
            "fallback_count": traj.fallback_count, "tuning": asdict(tuning),
            "e_n": diag.e_n, "e_r": diag.e_r, "e_p": diag.e_p, "e_s": diag.e_s,
            "within_tolerances": bool(diag.e_n <= tol.eps_n and diag.e_r <= tol.eps_r
                                      and diag.e_p <= tol.eps_p and diag.e_s <= tol.eps_s),
            "final": list(map(float, traj.x[-1])), "L_o": float(traj.s_sphere[-1]),
            "L_s": float(traj.s_plane[-1]), "straightness": straightness(traj, cfg.goal),
            "no_sliding": no_sliding_ratio(traj),
            "max_angular_speed_start": float(traj.angular_speed()[0]),
            "max_angular_speed_end": float(traj.angular_speed()[-1])}
    return traj, info


# --------------------------------------------------------------------------- subcommands

def cmd_plan(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    code, report = run_plan(cfg, args.out)
    print(report.to_json(), end="")
    return code


def cmd_distance(args) -> int:
    cfg = load_config(args.config)
    if args.grid:
        u = np.linspace(0.0, np.pi, args.u_count)
        psi = [float(x) for x in args.psi.split(",")]
        surf = distance_surface(u, args.v, psi, cfg.R_o, cfg.alpha_form)
        rows = [[float(ui)] + [float(surf[i, j]) for i in range(len(psi))] for j, ui in enumerate(u)]
        text = table_csv(["u"] + [f"psi={p!r}" for p in psi], rows)
        if args.out:
            write_text(args.out, text)
        else:
            print(text, end="")
        return EXIT_OK
    try:
        rep = min_distance(cfg.goal, cfg.R_o, cfg.alpha_form)
    except NumericalDomain as exc:
        print(dumps({"error": "NumericalDomain", "message": str(exc), "partial": exc.partial,
                     "alpha_form": cfg.alpha_form}))
        return EXIT_TYPED
    print(dumps(rep.to_dict()))
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    base = cfg.tuning or TuningState(R_q=cfg.R_q_init)
    tuning = TuningState(zeta_q=base.zeta_q if args.zeta_q is None else args.zeta_q,
                         zeta_u=base.zeta_u if args.zeta_u is None else args.zeta_u,
                         R_q=base.R_q if args.R_q is None else args.R_q,
                         R_u=base.R_u if args.R_u is None else args.R_u,
                         psi_u=base.psi_u if args.psi_u is None else args.psi_u)
    ref_cfg = _apply_overrides(cfg, argparse.Namespace(variant=args.variant, v_shift=args.v_shift))
    run_cfg = _apply_overrides(cfg, args)
    traj, info = simulate(run_cfg, tuning)
    code = EXIT_OK if traj.status == 0 else EXIT_TYPED
    if run_cfg != ref_cfg:
        # time scale overridden: the paths must match those of the configured time scale
        ref, _ = simulate(ref_cfg, tuning)
        check = path_distance(ref, traj)
        check["tol"] = args.path_tol
        info["path_check"] = check
        if max(check["plane"], check["sphere"]) > args.path_tol:
            info["error"] = "PathDrift"
            code = EXIT_TYPED
    out = Path(args.out)
    write_trajectory_csv(traj, out / "trajectory.csv")
    write_plot_data(traj, None, out)
    text = dumps(info) + "\n"
    write_text(out / "diagnostics.json", text)
    print(text, end="")
    return code


def read_scenarios(path) -> list[Path]:
    """Config paths listed one per line; ``#`` starts a comment, paths are relative to the list."""
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc.strerror})") from None
    out = []
    for line in lines:
        line = line.split("#", 1)[0].strip()
        if line:
            p = Path(line)
            out.append(p if p.is_absolute() else path.parent / p)
    return out


def _batch_one(job):
    idx, cfg_path, out_dir, overrides = job
    name = Path(cfg_path).stem
    try:
        cfg = _apply_overrides(load_config(cfg_path), overrides)
        _, report = run_plan(cfg, Path(out_dir) / f"{idx:03d}_{name}")
    except Exception as exc:  # recorded per scenario; the batch continues
        report = PlanReport.failure(exc)
    return idx, name, report


def cmd_batch(args) -> int:
    scenarios = read_scenarios(args.config)
    overrides = argparse.Namespace(variant=args.variant, v_shift=False, max_iters=args.max_iters, mode=args.mode,
                                   T=args.T, a=args.a, T_s=args.T_s, t_f=args.t_f)
    jobs = [(i, str(p), args.out, overrides) for i, p in enumerate(scenarios)]
    if args.parallel > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.parallel) as pool:
            rows = list(pool.map(_batch_one, jobs))
    else:
        rows = [_batch_one(j) for j in jobs]
    rows.sort(key=lambda r: r[0])
    text = batch_summary_csv(rows)
    write_text(Path(args.out) / "batch.csv", text)
    print(text, end="")
    return EXIT_OK


# --------------------------------------------------------------------------- parser

def _timescale_flags(p):
    g = p.add_argument_group("time-scale overrides")
    g.add_argument("--mode", choices=MODES, help="rolling-rate scaling mode")
    g.add_argument("--T", type=float, help="constant time scale")
    g.add_argument("--a", type=float, help="smooth-profile amplitude (rad/s)")
    g.add_argument("--T-s", dest="T_s", type=float, help="smooth-profile duration (s)")
    g.add_argument("--t-f", dest="t_f", type=float, help="simulation horizon (s)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spinroll", description="Spin-rolling sphere motion planner.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--seedless", action="store_true",
                        help="no-op: every computation is deterministic and uses no random seed")
    parser.add_argument("-v", "--verbose", action="store_true", help="log planner progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="tune the controller for a configuration")
    p.add_argument("--config", required=True, help="run configuration (INI)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--variant", choices=VARIANTS)
    p.add_argument("--v-shift", dest="v_shift", action="store_true", help="shift the goal v-angle in alpha_s")
    p.add_argument("--max-iters", dest="max_iters", type=int)
    _timescale_flags(p)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("distance", help="minimum plane distance for a configuration")
    p.add_argument("--config", required=True)
    p.add_argument("--grid", action="store_true", help="emit the d/R_o surface table instead")
    p.add_argument("--u-count", dest="u_count", type=int, default=181)
    p.add_argument("--v", type=float, default=0.01, help="fixed goal v-angle of the grid")
    p.add_argument("--psi", default="0.5,1.5,2.5", help="comma-separated goal spins of the grid")
    p.add_argument("--out", help="write the grid CSV here instead of stdout")
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("simulate", help="one forward solve with fixed tunables")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--variant", choices=VARIANTS)
    p.add_argument("--v-shift", dest="v_shift", action="store_true")
    for name in ("zeta_q", "zeta_u", "R_q", "R_u", "psi_u"):
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=float)
    p.add_argument("--path-tol", dest="path_tol", type=float, default=1e-4,
                   help="allowed path deviation when the time scale is overridden")
    _timescale_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("batch", help="plan every configuration of a scenario list")
    p.add_argument("--config", required=True, help="scenario list: one config path per line")
    p.add_argument("--out", required=True)
    p.add_argument("--parallel", type=int, default=1, help="number of worker processes")
    p.add_argument("--variant", choices=VARIANTS)
    p.add_argument("--max-iters", dest="max_iters", type=int, help="iteration budget of every scenario")
    _timescale_flags(p)
    p.set_defaults(func=cmd_batch)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "parallel", 1) < 1:
        parser.error("--parallel must be at least 1")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except SpinrollError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_TYPED
    except Exception as exc:  # pragma: no cover - last-resort reporting
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
