"""Command-line entry point: solve / verify / sweep.

Run configurations are single YAML files with a strict schema (unknown keys
are rejected); every shipped figure-reproduction config lives in configs/.
Results are written as a JSON run summary plus CSV files: the converged
trajectory in both the s- and t-parameterizations (with the adjoint emitted
twice at s = 1, flagged left/right), the iteration history, and, for the
Burgers model, per-snapshot space profiles.  Floats are serialized with 17
significant digits so files round-trip exactly.
"""

import argparse
import concurrent.futures
import json
import sys
import time
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .errors import ConfigError, SolverError
from .models import available_models, default_config, default_horizon, get_model
from .optimizer import SolverConfig, solve
from .timegrid import physical_time, physical_times
from .verification import run_all_checks

_SOLVER_KEYS = {
    "n_steps", "tau0", "grad_switch_tol", "newton_tol", "max_bb_iters",
    "max_newton_iters", "gmres_rel_tol", "gmres_max_iters", "bb_variant",
    "bb_step_policy", "tau_min_fraction", "first_step_tau_cap",
    "bb_fallback_scale", "power_iters",
}
_OUTPUT_KEYS = {"directory", "snapshot_times"}
_TOP_KEYS = {"model", "horizon", "params", "solver", "output", "seed"}

# snapshot defaults: the eight report times of the Burgers study
BURGERS_SNAPSHOT_TIMES = [0.0777, 4.7111, 4.7839, 4.8325, 4.8519, 4.8568, 5.0111, 10.0]


def fmt(x):
    """17-significant-digit decimal form, exact on round-trip."""
    return format(float(x), ".17g")


def load_config(path):
    with open(path) as fh:
        raw = yaml.safe_load(fh) or {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    _reject_unknown(raw, _TOP_KEYS, "top level")
    if "model" not in raw:
        raise ConfigError(f"{path}: missing required key 'model'")
    solver = raw.get("solver") or {}
    _reject_unknown(solver, _SOLVER_KEYS, "solver")
    output = raw.get("output") or {}
    _reject_unknown(output, _OUTPUT_KEYS, "output")
    params = raw.get("params") or {}
    if not isinstance(params, dict):
        raise ConfigError("params must be a mapping")
    return {
        "model": str(raw["model"]),
        "horizon": raw.get("horizon"),
        "params": params,
        "solver": solver,
        "output": output,
        "seed": int(raw.get("seed", 0)),
    }


def _reject_unknown(section, allowed, label):
    if not isinstance(section, dict):
        raise ConfigError(f"{label} section must be a mapping")
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown {label} keys: {sorted(unknown)}")


def build_run(cfg):
    """Resolve a validated config dict into (problem, SolverConfig)."""
    model_id = cfg["model"]
    problem = get_model(model_id, params=cfg["params"], horizon=cfg.get("horizon"))
    solver_kwargs = dict(cfg.get("solver") or {})
    solver_kwargs.setdefault("seed", cfg.get("seed", 0))
    config = default_config(model_id, **solver_kwargs)
    return problem, config


def _merge_cli_overrides(cfg, args):
    if getattr(args, "model", None):
        cfg["model"] = args.model
    if getattr(args, "tau0", None) is not None:
        cfg.setdefault("solver", {})["tau0"] = args.tau0
    if getattr(args, "n_steps", None) is not None:
        cfg.setdefault("solver", {})["n_steps"] = args.n_steps
    if getattr(args, "seed", None) is not None:
        cfg["seed"] = args.seed
    if getattr(args, "out", None):
        cfg.setdefault("output", {})["directory"] = args.out
    return cfg


def write_summary(path, report, cfg, config):
    summary = {
        "version": __version__,
        "model": cfg["model"],
        "converged": report.converged,
        "tau_star": float(report.tau_star),
        "J_star": float(report.objective),
        "final_grad_norm_sq": float(report.final_grad_norm_sq),
        "bb_iterations": report.bb_iterations,
        "newton_iterations": report.newton_iterations,
        "second_order": None,
        "wall_time_seconds": report.wall_time,
        "warnings": report.warnings,
        "config": {
            "model": cfg["model"],
            "params": cfg["params"],
            "seed": cfg["seed"],
            "solver": {k: getattr(config, k) for k in sorted(_SOLVER_KEYS | {"seed"})},
        },
    }
    if report.second_order is not None:
        summary["second_order"] = {
            "lambda_max_estimate": float(report.second_order.lambda_max),
            "consistent_with_local_max": report.second_order.consistent_with_max,
            "power_iterations": report.second_order.iterations,
        }
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    return summary


def write_trajectory_csv(path, problem, report, tp):
    """s, t, y_*, u_*, p_* rows; the s = 1 node appears twice (left/right)."""
    grid = report.u_star.grid
    mid = grid.mid
    n_dim, m_dim = problem.state_dim, problem.control_dim
    t_nodes = physical_times(grid, tp)
    header = (
        ["s", "t"]
        + [f"y_{j + 1}" for j in range(n_dim)]
        + [f"u_{j + 1}" for j in range(m_dim)]
        + [f"p_{j + 1}" for j in range(n_dim)]
        + ["side"]
    )
    y = report.y_star.values
    u = report.u_star.values
    p_lo, p_up = report.p_star.lower, report.p_star.upper

    def row(i, p_vec, side):
        vals = (
            [fmt(grid.nodes[i]), fmt(t_nodes[i])]
            + [fmt(v) for v in y[i]]
            + [fmt(v) for v in u[i]]
            + [fmt(v) for v in p_vec]
            + [side]
        )
        return ",".join(vals)

    lines = [",".join(header)]
    for i in range(mid):
        lines.append(row(i, p_lo[i], ""))
    lines.append(row(mid, p_lo[mid], "left"))
    lines.append(row(mid, p_up[0], "right"))
    for i in range(mid + 1, grid.n_steps + 1):
        lines.append(row(i, p_up[i - mid], ""))
    Path(path).write_text("\n".join(lines) + "\n")


def write_history_csv(path, history):
    lines = ["phase,iteration,grad_norm_sq,objective,tau,step_size,gmres_iters,note"]
    for h in history:
        lines.append(
            ",".join(
                [
                    h.phase,
                    str(h.iteration),
                    fmt(h.grad_norm_sq),
                    fmt(h.objective),
                    fmt(h.tau),
                    fmt(h.step_size) if h.step_size is not None else "",
                    str(h.gmres_iters) if h.gmres_iters is not None else "",
                    f'"{h.note}"' if h.note else "",
                ]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n")


def write_snapshots(outdir, problem, report, tp, times):
    """Per-time (x, y, u) profiles for mesh-based models; nearest grid node."""
    mesh = problem.metadata.get("mesh")
    if mesh is None:
        return []
    grid = report.u_star.grid
    ctrl_nodes = problem.metadata["control_nodes"]
    snapdir = Path(outdir) / "snapshots"
    snapdir.mkdir(parents=True, exist_ok=True)
    t_nodes = physical_times(grid, tp)
    written = []
    for k, t_req in enumerate(times):
        idx = int(np.argmin(np.abs(t_nodes - t_req)))
        u_full = np.zeros(problem.state_dim)
        u_full[ctrl_nodes] = report.u_star.values[idx]
        lines = [f"# t = {fmt(t_nodes[idx])} (requested {fmt(t_req)}), s = {fmt(grid.nodes[idx])}"]
        lines.append("x,y,u")
        for j in range(problem.state_dim):
            lines.append(
                ",".join([fmt(mesh[j]), fmt(report.y_star.values[idx, j]), fmt(u_full[j])])
            )
        path = snapdir / f"snapshot_{k:02d}_t{t_req:.4f}.csv"
        path.write_text("\n".join(lines) + "\n")
        written.append(path)
    return written


def run_solve(cfg, progress=None):
    problem, config = build_run(cfg)
    outdir = Path(cfg.get("output", {}).get("directory") or "runs/latest")
    outdir.mkdir(parents=True, exist_ok=True)

    try:
        report = solve(problem, config, callback=progress)
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 1

    tp_star = report_tau(report, problem, config)
    write_trajectory_csv(outdir / "trajectory.csv", problem, report, tp_star)
    write_history_csv(outdir / "history.csv", report.history)
    if problem.name == "burgers":
        times = cfg.get("output", {}).get("snapshot_times") or BURGERS_SNAPSHOT_TIMES
        write_snapshots(outdir, problem, report, tp_star, times)
    summary = write_summary(outdir / "run_summary.json", report, cfg, config)

    status = "converged" if report.converged else "NOT CONVERGED"
    print(
        f"{cfg['model']}: {status}  tau* = {report.tau_star:.6f}  "
        f"J* = {report.objective:.10g}  grad_norm_sq = {report.final_grad_norm_sq:.3e}"
    )
    if report.second_order is not None:
        verdict = "consistent with local max" if report.second_order.consistent_with_max else "NOT a certified max"
        print(f"second-order check: lambda_max ~= {report.second_order.lambda_max:.3e} ({verdict})")
    print(f"outputs in {outdir}")
    if not report.converged:
        return 1
    return 0


def report_tau(report, problem, config):
    from .timegrid import TauParameter

    return TauParameter(report.tau_star, problem.horizon, config.tau_min_fraction)


def run_verify(cfg):
    problem, config = build_run(cfg)
    outdir = Path(cfg.get("output", {}).get("directory") or "runs/latest")
    outdir.mkdir(parents=True, exist_ok=True)
    # verification battery runs on a reduced grid: derivative identities are
    # grid-size independent, only their tolerances scale
    n_steps = min(config.n_steps, 2000)
    tau = config.tau0 if config.tau0 is not None else 0.5 * problem.horizon
    include_duality = problem.state_dim <= 16  # refinement study; FEM handled in tests
    reports = run_all_checks(
        problem, n_steps, tau, seed=cfg.get("seed", 0),
        include_duality=include_duality,
    )
    payload = [r.as_dict() for r in reports]
    with open(outdir / "checks.json", "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    all_pass = all(r.passed for r in reports)
    for r in reports:
        mark = "PASS" if r.passed else "FAIL"
        print(f"[{mark}] {r.check_id}: measured {r.measured:.3e} (tolerance {r.tolerance:.3e})")
    print(f"check reports in {outdir / 'checks.json'}")
    return 0 if all_pass else 1


def _sweep_worker(args):
    cfg, value, base_dir = args
    import copy

    cfg = copy.deepcopy(cfg)
    cfg.setdefault("solver", {})["tau0"] = float(value)
    cfg.setdefault("output", {})["directory"] = str(Path(base_dir) / f"tau0_{value:g}")
    return value, run_solve(cfg)


def run_sweep(cfg, values, jobs):
    base_dir = Path(cfg.get("output", {}).get("directory") or "runs/sweep")
    worklist = [(cfg, v, base_dir) for v in values]
    results = []
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_worker, worklist))
    else:
        results = [_sweep_worker(w) for w in worklist]
    failures = [v for v, rc in results if rc != 0]
    if failures:
        print(f"sweep failures at tau0 = {failures}", file=sys.stderr)
        return 1
    return 0


def make_parser():
    parser = argparse.ArgumentParser(
        prog="peakopt",
        description="Optimal control with a free interior peak time",
    )
    parser.add_argument("--version", action="version", version=f"peakopt {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", type=str, help="run configuration YAML")
        p.add_argument("--model", type=str, choices=available_models())
        p.add_argument("--tau0", type=float, help="initial free time")
        p.add_argument("--n-steps", dest="n_steps", type=int, help="time steps on [0, 2]")
        p.add_argument("--out", type=str, help="output directory")
        p.add_argument("--seed", type=int, help="seed for randomized pieces")

    p_solve = sub.add_parser("solve", help="run the optimizer and write result files")
    add_common(p_solve)
    p_solve.add_argument("--progress", action="store_true", help="print per-iteration lines")

    p_verify = sub.add_parser("verify", help="run the verification battery")
    add_common(p_verify)

    p_sweep = sub.add_parser("sweep", help="independent solves over a list of tau0 values")
    add_common(p_sweep)
    p_sweep.add_argument("--values", type=str, required=True,
                         help="comma-separated tau0 values")
    p_sweep.add_argument("--jobs", type=int, default=1)
    return parser


def _config_from_args(args):
    if args.config:
        cfg = load_config(args.config)
    else:
        if not args.model:
            raise ConfigError("either --config or --model is required")
        cfg = {"model": args.model, "params": {}, "solver": {}, "output": {}, "seed": 0,
               "horizon": None}
    return _merge_cli_overrides(cfg, args)


def main(argv=None):
    args = make_parser().parse_args(argv)
    try:
        cfg = _config_from_args(args)
        if args.command == "solve":
            progress = None
            if args.progress:
                t0 = time.perf_counter()

                def progress(h):
                    print(
                        f"[{time.perf_counter() - t0:8.1f}s] {h.phase} {h.iteration}: "
                        f"grad_norm_sq={h.grad_norm_sq:.4e} J={h.objective:.8f} tau={h.tau:.5f} {h.note}",
                        flush=True,
                    )

            return run_solve(cfg, progress=progress)
        if args.command == "verify":
            return run_verify(cfg)
        if args.command == "sweep":
            values = [float(v) for v in args.values.split(",") if v.strip()]
            if not values:
                raise ConfigError("--values must list at least one tau0")
            return run_sweep(cfg, values, args.jobs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
