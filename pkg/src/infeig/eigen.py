"""Principal eigenvalue estimation and the maximum-principle check.

The discrete principal eigenvalue lam_bar_h is located by bisection on the
monotone iteration's convergence/blowup dichotomy with right-hand side
g = -1: a probe that converges certifies lam < lam_bar_h, a probe that blows
up certifies lam >= lam_bar_h.  The initial bracket [-|c|_inf - 1,
|c|_inf + 1] always classifies correctly: the constant 1 is a positive
supersolution at the lower end, and no positive supersolution exists above
|c|_inf.  Probes that exhaust the step budget without resolving are counted
as diverged but flagged, keeping the bracket honest.

The eigenfunction is the normalized converged probe solution at the lower
bracket endpoint; its residual for the midpoint problem is reported.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InfeigError
from .geometry import Grid
from .operators import ScalarField, SteadyProblem, VectorField, residual_values
from .steady import IterationOutcome, SolverConfig, monotone_iteration


class EigenError(InfeigError):
    pass


class BracketFailure(EigenError):
    pass


class ProbeDiverged(EigenError):
    pass


class MaxPrincipleInconclusive(EigenError):
    def __init__(self, t_max: float, seed_index: int):
        self.t_max = t_max
        self.seed_index = seed_index
        super().__init__(
            f"seed {seed_index} neither decayed nor blew up within t_max = {t_max}"
        )


@dataclass
class ProbeRecord:
    lam: float
    converged: bool
    flags: list = field(default_factory=list)

    @property
    def outcome(self) -> str:
        tag = "converged" if self.converged else "diverged"
        if "inconclusive" in self.flags:
            tag += "*"
        return tag


@dataclass
class EigenEstimate:
    lambda_lo: float           # certified convergent probe
    lambda_hi: float           # certified divergent probe
    lambda_bar: float          # bracket midpoint
    eigenfunction: ScalarField
    eigen_residual: float      # sup residual of the midpoint problem at phi
    bisection_steps: int
    history: list = field(default_factory=list)
    flags: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "lambda_lo": self.lambda_lo,
            "lambda_hi": self.lambda_hi,
            "lambda_bar": self.lambda_bar,
            "residual": self.eigen_residual,
            "steps": self.bisection_steps,
            "history": [
                {"lambda": p.lam, "outcome": p.outcome, "flags": list(p.flags)}
                for p in self.history
            ],
            "flags": list(self.flags),
        }


def estimate_principal_eigenvalue(
    grid: Grid,
    b: VectorField,
    c: ScalarField,
    cfg: SolverConfig,
    bisect_tol: float = 1e-4,
) -> EigenEstimate:
    """Bisect the dichotomy down to a bracket of width <= bisect_tol."""
    if bisect_tol <= 0:
        raise ValueError("bisect_tol must be positive")
    g = ScalarField.constant(grid, -1.0)
    c_sup = float(np.max(np.abs(c.values)))
    lo, hi = -c_sup - 1.0, c_sup + 1.0

    history: list = []
    flags: list = []
    converged_fields: dict = {}

    def probe(lam: float) -> IterationOutcome:
        out = monotone_iteration(grid, b, c, lam, g, cfg)
        rec = ProbeRecord(lam, out.converged, list(out.flags))
        history.append(rec)
        if "inconclusive" in out.flags:
            flags.append(f"inconclusive-probe at {lam!r}")
        if out.converged:
            converged_fields[lam] = out.u
        return out

    if not probe(lo).converged:
        raise BracketFailure(f"lower bracket endpoint {lo} did not converge")
    if probe(hi).converged:
        raise BracketFailure(f"upper bracket endpoint {hi} converged")

    steps = 0
    while hi - lo > bisect_tol:
        mid = 0.5 * (lo + hi)
        if probe(mid).converged:
            lo = mid
        else:
            hi = mid
        steps += 1

    u_lo = converged_fields[lo]
    phi_values = u_lo.values / float(np.max(np.abs(u_lo.values)))
    phi = ScalarField(grid, phi_values)
    if float(np.min(phi_values)) <= 0.0:
        flags.append("eigenfunction-not-strictly-positive")

    lam_bar = 0.5 * (lo + hi)
    zero = np.zeros(grid.n_active)
    eigen_residual = float(
        np.max(np.abs(residual_values(grid, b.values, c.values, zero, 0.0, phi_values)
                      + lam_bar * phi_values))
    )
    return EigenEstimate(
        lambda_lo=lo,
        lambda_hi=hi,
        lambda_bar=lam_bar,
        eigenfunction=phi,
        eigen_residual=eigen_residual,
        bisection_steps=steps,
        history=history,
        flags=flags,
    )


def extract_eigenfunction(
    grid: Grid,
    b: VectorField,
    c: ScalarField,
    lam_probe: float,
    cfg: SolverConfig,
) -> ScalarField:
    """Normalized solution of the g = -1 problem at lam_probe < lam_bar_h."""
    out = monotone_iteration(grid, b, c, lam_probe, ScalarField.constant(grid, -1.0), cfg)
    if not out.converged:
        raise ProbeDiverged(
            f"monotone iteration diverged at lam = {lam_probe}; probe below lam_bar_h"
        )
    values = out.u.values
    return ScalarField(grid, values / float(np.max(np.abs(values))))


@dataclass
class SeedVerdict:
    seed_index: int
    holds: bool            # True: decayed below the decay threshold
    t_reached: float
    sup_final: float


@dataclass
class MaxPrincipleReport:
    lam: float
    lambda_bar: float
    verdicts: list
    holds: bool            # every seed decayed

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "lambda_bar": self.lambda_bar,
            "holds": self.holds,
            "seeds": [
                {
                    "seed": v.seed_index,
                    "verdict": "MP-holds" if v.holds else "MP-fails",
                    "t": v.t_reached,
                    "sup": v.sup_final,
                }
                for v in self.verdicts
            ],
        }


def check_maximum_principle(
    grid: Grid,
    b: VectorField,
    c: ScalarField,
    lam: float,
    seeds: list,
    cfg: SolverConfig,
    t_max: float = 500.0,
    decay_threshold: float = 1e-6,
    blowup_threshold: float | None = None,
    lambda_bar: float | None = None,
) -> MaxPrincipleReport:
    """Evolve each seed under h_t = lap(h) + b.Dh + (c + lam) h.

    A seed that decays below decay_threshold supports the maximum principle
    at this lam; a seed that grows past the blowup threshold refutes it.
    Seeds must be nonzero with a positive part.
    """
    from .evolution import evolve_until  # local import to avoid a cycle

    for i, seed in enumerate(seeds):
        if not np.any(seed.values):
            raise ValueError(f"seed {i} is identically zero")
        if float(np.max(seed.values)) <= 0.0:
            raise ValueError(f"seed {i} has no positive part")

    if lambda_bar is None:
        lambda_bar = estimate_principal_eigenvalue(grid, b, c, cfg).lambda_bar
    blowup = blowup_threshold if blowup_threshold is not None else 1e6

    problem = SteadyProblem(grid, b, c, ScalarField.constant(grid, 0.0), lam)
    verdicts = []
    for i, seed in enumerate(seeds):
        t, sup, outcome = evolve_until(
            seed, problem, t_max, stop_below=decay_threshold, stop_above=blowup
        )
        if outcome == "decayed":
            verdicts.append(SeedVerdict(i, True, t, sup))
        elif outcome == "blew-up":
            verdicts.append(SeedVerdict(i, False, t, sup))
        else:
            raise MaxPrincipleInconclusive(t_max, i)
    return MaxPrincipleReport(
        lam=lam,
        lambda_bar=lambda_bar,
        verdicts=verdicts,
        holds=all(v.holds for v in verdicts),
    )
