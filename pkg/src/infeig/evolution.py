"""Explicit monotone time stepping for the Neumann evolution problem.

Forward Euler on the semidiscrete equation

    h_t = lap(h) + b . Dh + (c + lam) h - g,

with the ring scheme in space (g is zero for the plain evolution runs).
Under the CFL restriction

    dt * (ring row sum + sum_i |b_i|_inf / h + |c + lam|_inf) <= 1

the update is nondecreasing in every input nodal value, which gives discrete
comparison, sign preservation against the zero solution, and the weighted
decay estimate checked by ``check_decay_bound``: with a positive weight v and
rate lam_bar,

    max over nodes and recorded times of h(t, x) e^(lam_bar t) / v(x)
        <= max over nodes of max(h0, 0) / v.

The ring row sum is 2/rho^2 for s = 1, 2 and slightly larger when the ring
holds arms shorter than rho (s >= 3).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InfeigError
from .operators import ScalarField, SteadyProblem, residual_values


class EvolutionError(InfeigError):
    pass


class CflViolation(EvolutionError):
    pass


class NonpositiveWeight(EvolutionError):
    pass


def cfl_bound(problem: SteadyProblem) -> float:
    """Largest monotonicity-preserving time step."""
    grid = problem.grid
    rate = grid.lap_row_sum_bound + float(np.sum(problem.b_sup)) / grid.h + problem.zero_order_sup
    return 1.0 / rate


def step_explicit(state: ScalarField, problem: SteadyProblem, dt: float) -> ScalarField:
    """One forward Euler step; raises CflViolation for too-large dt."""
    if dt <= 0:
        raise CflViolation(f"dt must be positive, got {dt}")
    if dt > cfl_bound(problem) * (1.0 + 1e-12):
        raise CflViolation(f"dt = {dt} exceeds the CFL bound {cfl_bound(problem)}")
    rhs = residual_values(
        problem.grid,
        problem.b.values,
        problem.c.values,
        problem.g.values,
        problem.lam,
        state.values,
    )
    return ScalarField(problem.grid, state.values + dt * rhs)


@dataclass
class EvolutionTrace:
    times: np.ndarray
    sup_norm: np.ndarray
    weighted_ratio: np.ndarray | None  # None when no weight was supplied
    fitted_rate: float
    dt: float
    T: float
    cfl_margin: float                  # dt / cfl bound, <= 1
    final_state: ScalarField = field(repr=False, default=None)


def _fit_trailing_rate(times: np.ndarray, sup: np.ndarray) -> float:
    """Least-squares slope of log sup over the trailing half of the run."""
    n = len(times)
    start = n // 2
    t = times[start:]
    s = sup[start:]
    keep = s > 1e-12
    if np.sum(keep) < 2:
        return float("nan")
    t, s = t[keep], np.log(s[keep])
    A = np.column_stack([t, np.ones_like(t)])
    slope, _ = np.linalg.lstsq(A, s, rcond=None)[0]
    return float(slope)


def run_evolution(
    h0: ScalarField,
    problem: SteadyProblem,
    T: float,
    output_interval: float | None = None,
    dt: float | None = None,
    weight: ScalarField | None = None,
    rate: float | None = None,
) -> EvolutionTrace:
    """Advance h0 to time T, recording sup norms at the output interval.

    When ``weight`` (a positive field v) and ``rate`` are given, the weighted
    ratio max_x h(t, x) e^(rate t) / v(x) is recorded alongside, feeding
    ``check_decay_bound``.
    """
    if T <= 0:
        raise ValueError("T must be positive")
    bound = cfl_bound(problem)
    if dt is None:
        dt = 0.9 * bound
    elif dt > bound * (1.0 + 1e-12):
        raise CflViolation(f"dt = {dt} exceeds the CFL bound {bound}")
    if output_interval is None:
        output_interval = T / 200.0
    if weight is not None and float(np.min(weight.values)) <= 0.0:
        raise NonpositiveWeight("weight field must be strictly positive")

    grid = problem.grid
    b_values = problem.b.values
    c_values = problem.c.values
    g_values = problem.g.values
    lam = problem.lam
    n_steps = int(np.ceil(T / dt - 1e-12))
    every = max(1, int(round(output_interval / dt)))

    u = h0.values.copy()
    times = [0.0]
    sups = [float(np.max(np.abs(u)))]
    ratios = None
    if weight is not None and rate is not None:
        ratios = [float(np.max(u / weight.values))]

    t = 0.0
    for k in range(1, n_steps + 1):
        step = min(dt, T - t)
        u = u + step * residual_values(grid, b_values, c_values, g_values, lam, u)
        t += step
        if k % every == 0 or k == n_steps:
            times.append(t)
            sups.append(float(np.max(np.abs(u))))
            if ratios is not None:
                ratios.append(float(np.max(u * np.exp(rate * t) / weight.values)))

    times = np.array(times)
    sups = np.array(sups)
    return EvolutionTrace(
        times=times,
        sup_norm=sups,
        weighted_ratio=None if ratios is None else np.array(ratios),
        fitted_rate=_fit_trailing_rate(times, sups),
        dt=dt,
        T=T,
        cfl_margin=dt / bound,
        final_state=ScalarField(grid, u),
    )


def evolve_until(
    h0: ScalarField,
    problem: SteadyProblem,
    t_max: float,
    stop_below: float,
    stop_above: float,
):
    """March until sup |h| crosses a threshold; returns (t, sup, outcome)
    with outcome in {"decayed", "blew-up", "timeout"}."""
    dt = 0.9 * cfl_bound(problem)
    grid = problem.grid
    b_values = problem.b.values
    c_values = problem.c.values
    g_values = problem.g.values
    lam = problem.lam
    u = h0.values.copy()
    t = 0.0
    check_every = 16
    k = 0
    while t < t_max:
        u = u + dt * residual_values(grid, b_values, c_values, g_values, lam, u)
        t += dt
        k += 1
        if k % check_every == 0 or t >= t_max:
            sup = float(np.max(np.abs(u)))
            if sup <= stop_below:
                return t, sup, "decayed"
            if sup >= stop_above:
                return t, sup, "blew-up"
    return t, float(np.max(np.abs(u))), "timeout"


@dataclass
class DecayCheckResult:
    passed: bool
    slack: float        # max(0, max recorded ratio - initial bound)
    ratio_bound: float  # max over nodes of h0^+ / v


def check_decay_bound(
    trace: EvolutionTrace,
    v: ScalarField,
    lambda_bar: float,
    h0: ScalarField,
    tol: float = 1e-2,
) -> DecayCheckResult:
    """Verify the weighted decay estimate on a recorded trace.

    The trace must have been recorded with weight v and rate lambda_bar.
    """
    if float(np.min(v.values)) <= 0.0:
        raise NonpositiveWeight("weight field must be strictly positive")
    if trace.weighted_ratio is None:
        raise ValueError("trace carries no weighted ratio; rerun with weight and rate")
    bound = float(np.max(np.maximum(h0.values, 0.0) / v.values))
    worst = float(np.max(trace.weighted_ratio))
    slack = max(0.0, worst - bound)
    return DecayCheckResult(passed=slack <= tol, slack=slack, ratio_bound=bound)
