"""Command-line front end.

    infeig <solve|eigen|evolve|mpcheck|verify> --config <path>
           [--out <dir>] [--set key=value ...]

Exit status: 0 all good, 2 config parse error, 3 solver non-convergence or
divergence, 4 verification failure.  Data files are byte-stable across
reruns; ``run_meta.json`` carries the timestamp.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .config import ConfigError, RunConfig, load_config, parse_config_text
from .eigen import check_maximum_principle, estimate_principal_eigenvalue
from .errors import InfeigError
from .evolution import check_decay_bound, run_evolution
from .expr import ExprError
from .geometry import GeometryError, grid_metadata, node_rows
from .operators import ScalarField, SteadyProblem, apply_operator
from .output import field_rows, write_csv, write_json, write_run_meta
from .steady import solve_general_rhs
from .verify import run_verification


def _emit_grid(out_dir: str, grid) -> None:
    write_json(os.path.join(out_dir, "grid.json"), grid_metadata(grid))
    write_csv(os.path.join(out_dir, "nodes.csv"), ("index", "x", "y", "class"), node_rows(grid))


def _cmd_solve(cfg: RunConfig, out_dir: str) -> int:
    grid = cfg.build_grid()
    problem = SteadyProblem(
        grid, cfg.drift_field(grid), cfg.scalar_field(grid, cfg.c), cfg.scalar_field(grid, cfg.g), cfg.lam
    )
    u = solve_general_rhs(problem, cfg.solver)
    residual = apply_operator(problem, u)
    _emit_grid(out_dir, grid)
    write_csv(os.path.join(out_dir, "solution.csv"), ("index", "x", "y", "u"),
              field_rows(grid, u.values, "u"))
    write_json(os.path.join(out_dir, "residual.json"), {
        "residual_sup": float(np.max(np.abs(residual.values))),
        "lambda": cfg.lam,
        "sup_norm": u.sup_norm,
        "n_active": grid.n_active,
    })
    return 0


def _cmd_eigen(cfg: RunConfig, out_dir: str) -> int:
    grid = cfg.build_grid()
    est = estimate_principal_eigenvalue(
        grid, cfg.drift_field(grid), cfg.scalar_field(grid, cfg.c), cfg.solver, cfg.bisect_tol
    )
    _emit_grid(out_dir, grid)
    write_json(os.path.join(out_dir, "eigen.json"), est.to_dict())
    write_csv(os.path.join(out_dir, "eigenfunction.csv"), ("index", "x", "y", "phi"),
              field_rows(grid, est.eigenfunction.values, "phi"))
    return 0


def _cmd_evolve(cfg: RunConfig, out_dir: str) -> int:
    """Source-free evolution h_t = lap(h) + b.Dh + (c + lambda) h from h0,
    with the weighted decay check against the (shifted) eigenvalue."""
    grid = cfg.build_grid()
    b = cfg.drift_field(grid)
    c = cfg.scalar_field(grid, cfg.c)
    problem = SteadyProblem(grid, b, c, ScalarField.constant(grid, 0.0), cfg.lam)
    h0 = cfg.scalar_field(grid, cfg.h0)
    est = estimate_principal_eigenvalue(grid, b, c, cfg.solver, cfg.bisect_tol)
    rate = est.lambda_bar - cfg.lam  # eigenvalue of the shifted operator
    trace = run_evolution(
        h0, problem, cfg.evolve_T, output_interval=cfg.output_interval,
        weight=est.eigenfunction, rate=rate,
    )
    decay = check_decay_bound(trace, est.eigenfunction, rate, h0, tol=1e-2)
    _emit_grid(out_dir, grid)
    write_csv(
        os.path.join(out_dir, "trace.csv"),
        ("t", "sup_norm", "weighted_ratio"),
        zip(trace.times, trace.sup_norm, trace.weighted_ratio),
    )
    write_json(os.path.join(out_dir, "summary.json"), {
        "fitted_rate": trace.fitted_rate,
        "dt": trace.dt,
        "T": trace.T,
        "cfl_margin": trace.cfl_margin,
        "lambda": cfg.lam,
        "lambda_bar": est.lambda_bar,
        "pass": decay.passed,
        "slack": decay.slack,
    })
    return 0 if decay.passed else 4


def _cmd_mpcheck(cfg: RunConfig, out_dir: str) -> int:
    grid = cfg.build_grid()
    b = cfg.drift_field(grid)
    c = cfg.scalar_field(grid, cfg.c)
    seeds = cfg.seed_fields(grid)
    if not seeds:
        raise ConfigError("mpcheck needs at least one seed in mpcheck.seeds")
    lam = cfg.mp_lambda if cfg.mp_lambda is not None else cfg.lam
    report = check_maximum_principle(
        grid, b, c, lam, seeds, cfg.solver,
        t_max=cfg.mp_t_max,
        decay_threshold=cfg.mp_decay_threshold,
        blowup_threshold=cfg.mp_blowup,
    )
    _emit_grid(out_dir, grid)
    write_json(os.path.join(out_dir, "mpcheck.json"), report.to_dict())
    return 0


def _cmd_verify(out_dir: str) -> int:
    results = run_verification()
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}  slack={r.slack:.3e}  ({r.seconds:.2f}s)")
    write_json(os.path.join(out_dir, "verify.json"), {
        "passed": all(r.passed for r in results),
        "checks": [
            {"name": r.name, "passed": r.passed, "slack": r.slack, "seconds": r.seconds}
            for r in results
        ],
    })
    return 0 if all(r.passed for r in results) else 4


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="infeig",
        description="Principal Neumann eigenvalue and steady/evolution solvers "
        "for the normalized infinity-Laplacian with drift and zero-order terms.",
    )
    parser.add_argument("subcommand", choices=["solve", "eigen", "evolve", "mpcheck", "verify"])
    parser.add_argument("--config", help="path to a key=value config file")
    parser.add_argument("--out", default=None, help="output directory (default: config output.dir)")
    parser.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="override a config key")
    args = parser.parse_args(argv)

    try:
        if args.subcommand == "verify":
            out_dir = args.out or "."
            os.makedirs(out_dir, exist_ok=True)
            return _cmd_verify(out_dir)

        if not args.config:
            print("error: --config is required for this subcommand", file=sys.stderr)
            return 2
        with open(args.config) as f:
            text = f.read()
        cfg = load_config(parse_config_text(text, args.overrides))
        out_dir = args.out or cfg.out_dir
        os.makedirs(out_dir, exist_ok=True)
        write_run_meta(out_dir, args.subcommand, cfg.raw)
        if args.subcommand == "solve":
            return _cmd_solve(cfg, out_dir)
        if args.subcommand == "eigen":
            return _cmd_eigen(cfg, out_dir)
        if args.subcommand == "evolve":
            return _cmd_evolve(cfg, out_dir)
        return _cmd_mpcheck(cfg, out_dir)
    except (ConfigError, ExprError, GeometryError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except InfeigError as e:
        # solver non-convergence, divergence, bracket/probe failures, CFL
        print(f"error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
