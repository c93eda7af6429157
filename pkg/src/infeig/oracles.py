"""Independent reference computations used to cross-check the solvers.

* ``radial_second_difference``: for radial profiles the normalized
  infinity-Laplacian reduces to the plain second derivative of the profile,
  so centered second differences of 1D samples serve as the reference for 2D
  radial fields.
* ``positive_bump_bound`` and ``sign_changing_coefficient``: the radial
  piecewise coefficient that is negative in an outer shell yet positive on an
  inner ball small enough that the principal eigenvalue stays positive.  The
  bound gives the admissible height of the positive bump.
* ``lipschitz_constant``: discrete Lipschitz diagnostic over stencil pairs.
* ``dense_residual_reference``: a from-scratch nodal re-implementation of the
  full operator used for differential testing against ``apply_operator``;
  it shares no code with the vectorized path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InfeigError
from .geometry import Disk, Grid
from .operators import ScalarField, SteadyProblem


class OracleError(InfeigError):
    pass


class InvalidParams(OracleError):
    pass


def radial_second_difference(phi_samples: np.ndarray, spacing: float) -> np.ndarray:
    """Centered second differences of uniformly spaced radial profile samples.

    Returns values at the interior samples (length n - 2).
    """
    phi = np.asarray(phi_samples, dtype=float)
    if phi.ndim != 1 or phi.size < 3:
        raise InvalidParams("need a 1D profile with at least 3 samples")
    if spacing <= 0:
        raise InvalidParams("spacing must be positive")
    return (phi[2:] + phi[:-2] - 2.0 * phi[1:-1]) / spacing**2


@dataclass(frozen=True)
class SignChangingParams:
    """Radial piecewise coefficient on a disk of radius ``outer_radius``:
    ``+bump_height`` on the inner ball of radius ``bump_radius``,
    ``-well_depth`` beyond it (the outer band of width ``band_width`` only
    needs a negative value; it defaults to the same well depth).
    ``rate`` is the exponential rate of the supersolution construction behind
    ``positive_bump_bound``."""

    outer_radius: float
    bump_radius: float
    band_width: float
    well_depth: float
    bump_height: float
    rate: float
    outer_value: float | None = None  # defaults to -well_depth

    def __post_init__(self):
        if not (
            self.outer_radius > 0
            and self.band_width > 0
            and 0 < self.bump_radius < self.outer_radius - self.band_width
        ):
            raise InvalidParams("need 0 < bump_radius < outer_radius - band_width")
        if self.well_depth <= 0 or self.bump_height <= 0 or self.rate <= 0:
            raise InvalidParams("well_depth, bump_height and rate must be positive")
        if self.outer_value is not None and self.outer_value >= 0:
            raise InvalidParams("outer band value must be negative")


def positive_bump_bound(
    outer_radius: float, bump_radius: float, well_depth: float, rate: float
) -> float:
    """Admissible ceiling for the positive bump height.

    With k = rate, rho = bump_radius, R = outer_radius, b1 = well_depth:

        k^2 e^(-k rho) / (k (R - rho)/4 + 2 k / (b1 (R - rho)) + 1 - e^(-k rho))

    Grows without bound as rho -> 0 with k = 1/rho; vanishes as rho -> R or
    as b1 -> 0.
    """
    k, rho, R, b1 = rate, bump_radius, outer_radius, well_depth
    if not (0 < rho < R and k > 0 and b1 > 0):
        raise InvalidParams("need 0 < bump_radius < outer_radius and positive rate/depth")
    num = k**2 * math.exp(-k * rho)
    den = k * (R - rho) / 4.0 + 2.0 * k / (b1 * (R - rho)) + 1.0 - math.exp(-k * rho)
    return num / den


def sign_changing_coefficient(params: SignChangingParams, grid: Grid) -> ScalarField:
    """Nodal field for the piecewise radial coefficient on a disk grid."""
    if not isinstance(grid.domain, Disk):
        raise InvalidParams("the sign-changing coefficient lives on a disk grid")
    if abs(grid.domain.radius - params.outer_radius) > 1e-12:
        raise InvalidParams("grid disk radius does not match params.outer_radius")
    center = grid.domain.center()
    r = np.linalg.norm(grid.nodes - center, axis=1)
    outer_value = -params.well_depth if params.outer_value is None else params.outer_value
    values = np.where(
        r <= params.bump_radius,
        params.bump_height,
        np.where(r <= params.outer_radius - params.band_width, -params.well_depth, outer_value),
    )
    return ScalarField(grid, values)


def lipschitz_constant(u: ScalarField, grid: Grid) -> float:
    """Max of |u(x) - u(y)| / |x - y| over active stencil-neighbor pairs."""
    best = 0.0
    n = grid.n_active
    ui = u.values
    for k in range(grid.ring_index.shape[1]):
        nb = grid.ring_index[:, k]
        mask = nb < n
        if not np.any(mask):
            continue
        d = np.abs(ui[mask] - ui[nb[mask]]) / grid.ring_lengths[k]
        best = max(best, float(d.max()))
    return best


def dense_residual_reference(problem: SteadyProblem, u: ScalarField) -> ScalarField:
    """Straight-line nodal evaluation of lap(u) + b.Du + (c+lam)u - g.

    Re-derives ring membership, arm rescaling, ghost reflection and bilinear
    closure from the grid geometry with plain Python loops; used only for
    differential testing on small grids.
    """
    grid = problem.grid
    domain = grid.domain
    h, s, dim = grid.h, grid.s, grid.dim
    rho = s * h
    n = grid.n_active

    lattice = {}
    for i in range(n):
        key = tuple(int(round(grid.nodes[i, d] / h)) for d in range(dim))
        lattice[key] = i

    def ghost_value(key) -> float:
        point = np.array(key, dtype=float) * h
        m = domain.reflect(point)
        base = [math.floor(m[d] / h) for d in range(dim)]
        frac = [m[d] / h - base[d] for d in range(dim)]
        corners = [(0,), (1,)] if dim == 1 else [(0, 0), (1, 0), (0, 1), (1, 1)]
        idxs, wts = [], []
        for corner in corners:
            w = 1.0
            for d in range(dim):
                w *= frac[d] if corner[d] else 1.0 - frac[d]
            if w <= 0.0:
                continue
            j = lattice.get(tuple(base[d] + corner[d] for d in range(dim)))
            if j is not None:
                idxs.append(j)
                wts.append(w)
        total = sum(wts)
        if total <= 0.0:
            j = int(np.argmin(np.linalg.norm(grid.nodes - m, axis=1)))
            return float(u.values[j])
        return sum(w * u.values[j] for j, w in zip(idxs, wts)) / total

    def value_at(key) -> float:
        j = lattice.get(key)
        if j is not None:
            return float(u.values[j])
        return ghost_value(key)

    lim = s + 1
    if dim == 1:
        offsets = [(v,) for v in range(-lim, lim + 1) if v != 0]
    else:
        offsets = [
            (a, bb)
            for a in range(-lim, lim + 1)
            for bb in range(-lim, lim + 1)
            if (a, bb) != (0, 0)
        ]
    ring = [v for v in offsets if abs(math.hypot(*v) - s) <= 0.5 + 1e-12]

    out = np.zeros(n)
    for i in range(n):
        key = tuple(int(round(grid.nodes[i, d] / h)) for d in range(dim))
        ui = float(u.values[i])
        arms = []
        for v in ring:
            t = math.hypot(*v) * h
            uv = value_at(tuple(k + dv for k, dv in zip(key, v)))
            arms.append(ui + (uv - ui) * rho / t)
        lap = (max(arms) + min(arms) - 2.0 * ui) / rho**2

        drift = 0.0
        for d in range(dim):
            bi = float(problem.b.values[i, d])
            if bi > 0:
                e = tuple(k + (1 if dd == d else 0) for dd, k in enumerate(key))
                drift += bi * (value_at(e) - ui) / h
            elif bi < 0:
                e = tuple(k - (1 if dd == d else 0) for dd, k in enumerate(key))
                drift += bi * (ui - value_at(e)) / h

        out[i] = lap + drift + (problem.c.values[i] + problem.lam) * ui - problem.g.values[i]
    return ScalarField(grid, out)
