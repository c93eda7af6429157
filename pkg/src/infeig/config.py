"""Flat key=value run configuration.

One config file drives one CLI run.  Keys use dotted section names
(``domain.type = disk``, ``coeff.c = -3``); ``#`` starts a comment; later
assignments win, and ``--set key=value`` overrides from the command line are
applied on top.  Coefficient values are expression strings evaluated on the
grid nodes with variables x, y and r (distance to the domain center).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import expr
from .errors import InfeigError
from .geometry import Annulus, Disk, Domain, Grid, Interval, Rectangle, build_grid
from .operators import ScalarField, VectorField
from .steady import SolverConfig


class ConfigError(InfeigError):
    pass


_DEFAULTS = {
    "domain.type": "interval",
    "domain.a": "0",
    "domain.b": "1",
    "domain.center": "0,0",
    "domain.radius": "1",
    "domain.inner_radius": "0.25",
    "domain.lo": "0,0",
    "domain.hi": "1,1",
    "grid.h": "0.0625",
    "grid.s": "1",
    "coeff.bx": "0",
    "coeff.by": "0",
    "coeff.c": "0",
    "coeff.g": "0",
    "coeff.h0": "0",
    "lambda": "0",
    "solver.tol": "1e-8",
    "solver.rel_tol": "1e-10",
    "solver.max_sweeps": "400",
    "solver.max_outer": "120",
    "solver.blowup": "",
    "eigen.bisect_tol": "1e-4",
    "evolve.T": "5",
    "evolve.output_interval": "",
    "mpcheck.lambda": "",
    "mpcheck.seeds": "",
    "mpcheck.t_max": "500",
    "mpcheck.blowup": "1e6",
    "mpcheck.decay_threshold": "1e-6",
    "output.dir": ".",
}


def parse_config_text(text: str, overrides: list | None = None) -> dict:
    """Parse config text into a raw key -> string map (defaults filled in)."""
    values = dict(_DEFAULTS)
    offset = 0
    for raw_line in text.splitlines(keepends=True):
        line = raw_line.split("#", 1)[0].strip()
        if line:
            if "=" not in line:
                raise ConfigError(f"expected key=value at byte {offset}: {line!r}")
            key, val = line.split("=", 1)
            key = key.strip()
            if key not in _DEFAULTS:
                raise ConfigError(f"unknown config key {key!r} at byte {offset}")
            values[key] = val.strip()
        offset += len(raw_line)
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"--set needs key=value, got {item!r}")
        key, val = item.split("=", 1)
        key = key.strip()
        if key not in _DEFAULTS:
            raise ConfigError(f"unknown config key {key!r} in --set")
        values[key] = val.strip()
    return values


def _number(values: dict, key: str) -> float:
    try:
        return float(values[key])
    except ValueError:
        raise ConfigError(f"config key {key} is not a number: {values[key]!r}") from None


def _integer(values: dict, key: str) -> int:
    try:
        return int(values[key])
    except ValueError:
        raise ConfigError(f"config key {key} is not an integer: {values[key]!r}") from None


def _point(values: dict, key: str) -> tuple:
    parts = values[key].split(",")
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"config key {key} is not a point: {values[key]!r}") from None


def _domain(values: dict) -> Domain:
    kind = values["domain.type"].lower()
    if kind == "interval":
        return Interval(_number(values, "domain.a"), _number(values, "domain.b"))
    if kind == "disk":
        return Disk(_point(values, "domain.center"), _number(values, "domain.radius"))
    if kind == "annulus":
        return Annulus(
            _point(values, "domain.center"),
            _number(values, "domain.inner_radius"),
            _number(values, "domain.radius"),
        )
    if kind == "rectangle":
        return Rectangle(_point(values, "domain.lo"), _point(values, "domain.hi"))
    raise ConfigError(f"unknown domain.type {kind!r}")


@dataclass
class RunConfig:
    """Validated run configuration with parsed coefficient expressions."""

    domain: Domain
    h: float
    s: int
    bx: expr.ExprAst
    by: expr.ExprAst
    c: expr.ExprAst
    g: expr.ExprAst
    h0: expr.ExprAst
    lam: float
    solver: SolverConfig
    bisect_tol: float
    evolve_T: float
    output_interval: float | None
    mp_lambda: float | None
    mp_seeds: list = field(default_factory=list)
    mp_t_max: float = 500.0
    mp_blowup: float = 1e6
    mp_decay_threshold: float = 1e-6
    out_dir: str = "."
    raw: dict = field(default_factory=dict, repr=False)

    def build_grid(self) -> Grid:
        return build_grid(self.domain, self.h, self.s)

    def _node_env(self, grid: Grid):
        x = grid.nodes[:, 0]
        y = grid.nodes[:, 1] if grid.dim == 2 else np.zeros_like(x)
        r = np.linalg.norm(grid.nodes - grid.domain.center(), axis=1)
        return x, y, r

    def scalar_field(self, grid: Grid, ast: expr.ExprAst) -> ScalarField:
        x, y, r = self._node_env(grid)
        return ScalarField(grid, expr.evaluate_on_points(ast, x, y, r))

    def drift_field(self, grid: Grid) -> VectorField:
        x, y, r = self._node_env(grid)
        cols = [expr.evaluate_on_points(self.bx, x, y, r)]
        if grid.dim == 2:
            cols.append(expr.evaluate_on_points(self.by, x, y, r))
        return VectorField(grid, np.column_stack(cols))

    def seed_fields(self, grid: Grid) -> list:
        return [self.scalar_field(grid, ast) for ast in self.mp_seeds]


def load_config(values: dict) -> RunConfig:
    """Validate a raw key map into a RunConfig; expressions are parsed here
    so syntax errors surface with their byte offsets."""
    solver = SolverConfig(
        tol=_number(values, "solver.tol"),
        rel_tol=_number(values, "solver.rel_tol"),
        max_sweeps=_integer(values, "solver.max_sweeps"),
        max_outer=_integer(values, "solver.max_outer"),
        blowup_threshold=_number(values, "solver.blowup") if values["solver.blowup"] else None,
    )
    seeds = []
    if values["mpcheck.seeds"]:
        seeds = [expr.parse(s.strip()) for s in values["mpcheck.seeds"].split(";") if s.strip()]
    return RunConfig(
        domain=_domain(values),
        h=_number(values, "grid.h"),
        s=_integer(values, "grid.s"),
        bx=expr.parse(values["coeff.bx"]),
        by=expr.parse(values["coeff.by"]),
        c=expr.parse(values["coeff.c"]),
        g=expr.parse(values["coeff.g"]),
        h0=expr.parse(values["coeff.h0"]),
        lam=_number(values, "lambda"),
        solver=solver,
        bisect_tol=_number(values, "eigen.bisect_tol"),
        evolve_T=_number(values, "evolve.T"),
        output_interval=(
            _number(values, "evolve.output_interval") if values["evolve.output_interval"] else None
        ),
        mp_lambda=_number(values, "mpcheck.lambda") if values["mpcheck.lambda"] else None,
        mp_seeds=seeds,
        mp_t_max=_number(values, "mpcheck.t_max"),
        mp_blowup=_number(values, "mpcheck.blowup"),
        mp_decay_threshold=_number(values, "mpcheck.decay_threshold"),
        out_dir=values["output.dir"],
        raw=dict(values),
    )
