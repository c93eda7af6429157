#!/usr/bin/env python3
"""Refinement diagnostics: manufactured-solution error, Lipschitz constants,
and operator consistency on cones and radial profiles.

The manufactured Neumann-compatible profile x^2 (3 - 2x) is solved on a
sequence of 1D grids; the cone and radial checks report the wide-stencil
consistency error together with the model h/rho + rho^2 |phi'''| + rho.
"""

import argparse

import numpy as np

from infeig.geometry import Annulus, Disk, Interval, build_grid
from infeig.operators import ScalarField, SteadyProblem, VectorField, inf_laplacian_values
from infeig.oracles import lipschitz_constant
from infeig.steady import SolverConfig, solve_coercive


def manufactured(ns):
    print("manufactured 1D Neumann solve, u = x^2 (3 - 2x):")
    print(f"{'h':>8} {'sup error':>12} {'err/h':>8} {'Lipschitz':>10}")
    cfg = SolverConfig()
    for n in ns:
        grid = build_grid(Interval(0.0, 1.0), 1.0 / n, 1)
        x = grid.nodes[:, 0]
        exact = x**2 * (3.0 - 2.0 * x)
        g = (6.0 - 12.0 * x) - exact
        prob = SteadyProblem(
            grid, VectorField.zero(grid), ScalarField.constant(grid, -1.0),
            ScalarField(grid, g), 0.0,
        )
        u = solve_coercive(prob, cfg)
        err = float(np.abs(u.values - exact).max())
        print(f"{'1/%d' % n:>8} {err:>12.3e} {err * n:>8.4f} {lipschitz_constant(u, grid):>10.4f}")


def cone(ns, s):
    vertex = np.array([0.137, -0.082])
    print(f"\ncone consistency on the disk (s = {s}, nodes with r >= 4 rho, ghost-free):")
    print(f"{'h':>8} {'max |lap|':>12}")
    for n in ns:
        grid = build_grid(Disk((0.0, 0.0), 1.0), 1.0 / n, s)
        r = np.linalg.norm(grid.nodes - vertex, axis=1)
        lap = inf_laplacian_values(grid, r)
        mask = (r >= 4 * grid.rho) & (grid.ring_index < grid.n_active).all(axis=1)
        if not np.any(mask):
            print(f"{'1/%d' % n:>8} {'(no qualifying nodes)':>22}")
            continue
        print(f"{'1/%d' % n:>8} {np.abs(lap[mask]).max():>12.5f}")


def radial(ns, s):
    print(f"\nradial profile r^3 on the annulus (s = {s}, away from walls):")
    print(f"{'h':>8} {'max error':>12} {'model':>8} {'C':>6}")
    for n in ns:
        grid = build_grid(Annulus((0.0, 0.0), 0.25, 1.0), 1.0 / n, s)
        r = np.linalg.norm(grid.nodes, axis=1)
        lap = inf_laplacian_values(grid, r**3)
        mask = (
            (r >= 0.25 + 2 * grid.rho)
            & (r <= 1.0 - 2 * grid.rho)
            & (grid.ring_index < grid.n_active).all(axis=1)
        )
        err = float(np.abs(lap[mask] - 6.0 * r[mask]).max())
        model = (1.0 / n) / grid.rho + grid.rho**2 * 6.0 + grid.rho
        print(f"{'1/%d' % n:>8} {err:>12.4f} {model:>8.4f} {err / model:>6.3f}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--resolutions", default="16,32,64")
    ap.add_argument("--s", type=int, default=4, help="ring factor for the cone study")
    args = ap.parse_args()
    ns = [int(v) for v in args.resolutions.split(",")]
    manufactured(ns)
    cone(ns, args.s)
    radial(ns, 2)


if __name__ == "__main__":
    main()
