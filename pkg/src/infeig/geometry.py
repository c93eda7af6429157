"""Computational domains and uniform lattice grids.

Domains are restricted to shapes with closed-form signed distance and outward
normals (interval, disk, annulus, axis-aligned rectangle).  ``build_grid``
classifies lattice nodes into interior / boundary / exterior, assembles the
ring stencil used by the wide-stencil operator, and closes every exterior arm
with a reflection-based ghost rule that imposes the homogeneous Neumann
condition to first order.

Lattice nodes sit at integer multiples of the spacing ``h`` so that grids at
``h`` and ``h/2`` are nested.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import InfeigError

INTERIOR = 0
BOUNDARY = 1

_CLASS_NAMES = {INTERIOR: "interior", BOUNDARY: "boundary"}


class GeometryError(InfeigError):
    pass


class InvalidParams(GeometryError):
    pass


class DomainTooCoarse(GeometryError):
    pass


class NotBoundaryNode(GeometryError):
    pass


@dataclass(frozen=True)
class Interval:
    """1D domain (a, b)."""

    a: float
    b: float

    def __post_init__(self):
        if not self.a < self.b:
            raise InvalidParams(f"interval needs a < b, got ({self.a}, {self.b})")

    dim = 1

    def signed_distance(self, pts):
        x = np.asarray(pts, dtype=float)[..., 0]
        return np.maximum(self.a - x, x - self.b)

    def boundary_normal(self, p):
        x = float(p[0])
        mid = 0.5 * (self.a + self.b)
        return np.array([-1.0]) if x < mid else np.array([1.0])

    def reflect(self, p):
        x = float(p[0])
        if x < self.a:
            return np.array([2.0 * self.a - x])
        if x > self.b:
            return np.array([2.0 * self.b - x])
        return np.array([x])

    def exterior_sphere_radius(self, p) -> float:
        return math.inf

    def center(self):
        return np.array([0.5 * (self.a + self.b)])

    def bounding_box(self):
        return np.array([self.a]), np.array([self.b])

    def diameter(self) -> float:
        return self.b - self.a

    def describe(self) -> dict:
        return {"type": "interval", "a": self.a, "b": self.b}


@dataclass(frozen=True)
class Disk:
    """2D disk of given center and radius."""

    center_point: tuple
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise InvalidParams("disk radius must be positive")
        object.__setattr__(self, "center_point", tuple(float(c) for c in self.center_point))

    dim = 2

    def signed_distance(self, pts):
        p = np.asarray(pts, dtype=float)
        rho = np.linalg.norm(p - np.asarray(self.center_point), axis=-1)
        return rho - self.radius

    def boundary_normal(self, p):
        v = np.asarray(p, dtype=float) - np.asarray(self.center_point)
        n = np.linalg.norm(v)
        if n == 0.0:
            return np.array([1.0, 0.0])
        return v / n

    def reflect(self, p):
        c = np.asarray(self.center_point)
        v = np.asarray(p, dtype=float) - c
        rho = np.linalg.norm(v)
        if rho <= self.radius or rho == 0.0:
            return np.asarray(p, dtype=float)
        return c + (2.0 * self.radius - rho) * v / rho

    def exterior_sphere_radius(self, p) -> float:
        return self.radius

    def center(self):
        return np.asarray(self.center_point, dtype=float)

    def bounding_box(self):
        c = np.asarray(self.center_point)
        return c - self.radius, c + self.radius

    def diameter(self) -> float:
        return 2.0 * self.radius

    def describe(self) -> dict:
        return {"type": "disk", "center": list(self.center_point), "radius": self.radius}


@dataclass(frozen=True)
class Annulus:
    """2D annulus: inner_radius < |x - center| < outer_radius."""

    center_point: tuple
    inner_radius: float
    outer_radius: float

    def __post_init__(self):
        if not 0 < self.inner_radius < self.outer_radius:
            raise InvalidParams("annulus needs 0 < inner_radius < outer_radius")
        object.__setattr__(self, "center_point", tuple(float(c) for c in self.center_point))

    dim = 2

    def signed_distance(self, pts):
        p = np.asarray(pts, dtype=float)
        rho = np.linalg.norm(p - np.asarray(self.center_point), axis=-1)
        return np.maximum(self.inner_radius - rho, rho - self.outer_radius)

    def _radial(self, p):
        v = np.asarray(p, dtype=float) - np.asarray(self.center_point)
        rho = np.linalg.norm(v)
        if rho == 0.0:
            return 0.0, np.array([1.0, 0.0])
        return rho, v / rho

    def boundary_normal(self, p):
        rho, u = self._radial(p)
        if rho - self.inner_radius < self.outer_radius - rho:
            return -u  # inner wall: outward points into the hole
        return u

    def reflect(self, p):
        c = np.asarray(self.center_point)
        rho, u = self._radial(p)
        if rho < self.inner_radius:
            return c + (2.0 * self.inner_radius - rho) * u
        if rho > self.outer_radius:
            return c + (2.0 * self.outer_radius - rho) * u
        return np.asarray(p, dtype=float)

    def exterior_sphere_radius(self, p) -> float:
        rho, _ = self._radial(p)
        if rho - self.inner_radius < self.outer_radius - rho:
            return self.inner_radius
        return self.outer_radius

    def center(self):
        return np.asarray(self.center_point, dtype=float)

    def bounding_box(self):
        c = np.asarray(self.center_point)
        return c - self.outer_radius, c + self.outer_radius

    def diameter(self) -> float:
        return 2.0 * self.outer_radius

    def gap(self) -> float:
        return self.outer_radius - self.inner_radius

    def describe(self) -> dict:
        return {
            "type": "annulus",
            "center": list(self.center_point),
            "inner_radius": self.inner_radius,
            "outer_radius": self.outer_radius,
        }


@dataclass(frozen=True)
class Rectangle:
    """Axis-aligned 2D rectangle.

    Corners break the smooth-boundary hypothesis the rest of the package
    leans on; corner nodes get the averaged normal and grids built on a
    rectangle carry a metadata flag.
    """

    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != 2 or len(hi) != 2:
            raise InvalidParams("rectangle lo/hi must be 2D points")
        if not all(a < b for a, b in zip(lo, hi)):
            raise InvalidParams("rectangle needs lo < hi componentwise")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    dim = 2

    def signed_distance(self, pts):
        p = np.asarray(pts, dtype=float)
        lo = np.asarray(self.lo)
        hi = np.asarray(self.hi)
        q = np.maximum(lo - p, p - hi)  # per-axis signed excess
        inside = np.max(q, axis=-1)
        outside = np.linalg.norm(np.maximum(q, 0.0), axis=-1)
        return np.where(inside <= 0.0, inside, outside)

    def boundary_normal(self, p):
        p = np.asarray(p, dtype=float)
        lo = np.asarray(self.lo)
        hi = np.asarray(self.hi)
        gap = np.minimum(p - lo, hi - p)  # distance to each pair of walls
        n = np.zeros(2)
        # walls within half the smallest gap of the nearest one all contribute;
        # at a corner this averages the two face normals
        near = gap <= gap.min() + 1e-12
        for i in range(2):
            if near[i]:
                n[i] = -1.0 if (p[i] - lo[i]) <= (hi[i] - p[i]) else 1.0
        norm = np.linalg.norm(n)
        return n / norm

    def reflect(self, p):
        q = np.array(p, dtype=float)
        for i in range(2):
            if q[i] < self.lo[i]:
                q[i] = 2.0 * self.lo[i] - q[i]
            elif q[i] > self.hi[i]:
                q[i] = 2.0 * self.hi[i] - q[i]
        return q

    def exterior_sphere_radius(self, p) -> float:
        return math.inf

    def center(self):
        return 0.5 * (np.asarray(self.lo) + np.asarray(self.hi))

    def bounding_box(self):
        return np.asarray(self.lo, dtype=float), np.asarray(self.hi, dtype=float)

    def diameter(self) -> float:
        return float(np.linalg.norm(np.asarray(self.hi) - np.asarray(self.lo)))

    def describe(self) -> dict:
        return {"type": "rectangle", "lo": list(self.lo), "hi": list(self.hi)}


Domain = Interval | Disk | Annulus | Rectangle


def _ring_offsets(dim: int, s: int) -> np.ndarray:
    """Integer lattice offsets whose length is within half a cell of s."""
    lim = s + 1
    if dim == 1:
        cand = np.array([[v] for v in range(-lim, lim + 1) if v != 0])
    else:
        cand = np.array(
            [[i, j] for i in range(-lim, lim + 1) for j in range(-lim, lim + 1) if (i, j) != (0, 0)]
        )
    lengths = np.linalg.norm(cand, axis=1)
    keep = np.abs(lengths - s) <= 0.5 + 1e-12
    return cand[keep]


def _pair_table(offsets: np.ndarray) -> np.ndarray:
    """Group ring offsets into antipodal (forward, backward) pairs."""
    index = {tuple(v): k for k, v in enumerate(offsets.tolist())}
    pairs = []
    seen = set()
    for k, v in enumerate(offsets.tolist()):
        if k in seen:
            continue
        kk = index[tuple(-c for c in v)]
        pairs.append((k, kk))
        seen.add(k)
        seen.add(kk)
    return np.array(pairs, dtype=np.int64)


@dataclass
class Grid:
    """Immutable lattice discretization of a domain.

    ``ring_index`` / ``axis_plus`` / ``axis_minus`` address an extended value
    vector: entries < n_active are active nodes, the rest are ghost closures
    (convex combinations of active nodal values given by ``ghost_nodes`` /
    ``ghost_weights``).
    """

    domain: Domain
    h: float
    s: int
    nodes: np.ndarray          # (N, dim)
    node_class: np.ndarray     # (N,) INTERIOR/BOUNDARY
    normals: np.ndarray        # (N, dim), zero rows off the boundary
    ring_offsets: np.ndarray   # (K, dim) physical offsets
    ring_pairs: np.ndarray     # (K//2, 2) indices into ring_offsets
    ring_index: np.ndarray     # (N, K) extended indices
    axis_plus: np.ndarray      # (N, dim) extended indices
    axis_minus: np.ndarray     # (N, dim) extended indices
    ghost_points: np.ndarray   # (G, dim)
    ghost_nodes: np.ndarray    # (G, 2**dim) node indices (padded)
    ghost_weights: np.ndarray  # (G, 2**dim) nonnegative, rows sum to 1
    lattice_index: dict = field(repr=False)

    @property
    def dim(self) -> int:
        return self.domain.dim

    @property
    def rho(self) -> float:
        """Stencil ring radius s*h."""
        return self.s * self.h

    @cached_property
    def ring_lengths(self) -> np.ndarray:
        """Physical arm lengths |v_k|, within h/2 of rho."""
        return np.linalg.norm(self.ring_offsets, axis=1)

    @cached_property
    def ring_scale(self) -> np.ndarray:
        """Per-arm factor rho/|v_k| that brings arm values to the ring radius."""
        return self.rho / self.ring_lengths

    @cached_property
    def lap_row_sum_bound(self) -> float:
        """Upper bound on the ring scheme's total neighbor coefficient
        (max over admissible arm selections of (scale_1 + scale_2) / rho^2).
        Equals 2/rho^2 when every arm has length >= rho (true for s = 1, 2)."""
        return float(2.0 * self.ring_scale.max() / self.rho**2)

    @property
    def n_active(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_ghost(self) -> int:
        return self.ghost_points.shape[0]

    @cached_property
    def interior_mask(self) -> np.ndarray:
        return self.node_class == INTERIOR

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        return self.node_class == BOUNDARY

    def ghost_values(self, values: np.ndarray) -> np.ndarray:
        if self.n_ghost == 0:
            return np.zeros(0)
        return np.einsum("gk,gk->g", self.ghost_weights, values[self.ghost_nodes])

    def extended_values(self, values: np.ndarray) -> np.ndarray:
        """Active nodal values followed by ghost-closed values."""
        return np.concatenate([values, self.ghost_values(values)])


def build_grid(domain: Domain, h: float, s: int = 1) -> Grid:
    """Build the lattice grid with classification, stencils and ghost closure."""
    if not (isinstance(h, (int, float)) and h > 0) or not math.isfinite(h):
        raise InvalidParams(f"spacing h must be positive, got {h!r}")
    if not (isinstance(s, (int, np.integer)) and s >= 1):
        raise InvalidParams(f"stencil ring factor s must be an integer >= 1, got {s!r}")
    if domain.diameter() < 4 * s * h:
        raise InvalidParams("domain diameter must be at least 4*s*h")
    if isinstance(domain, Annulus) and domain.gap() < 4 * s * h:
        raise InvalidParams("annulus gap must be at least 4*s*h for the ghost closure")

    dim = domain.dim
    lo, hi = domain.bounding_box()
    pad = s + 2
    imin = np.floor(lo / h).astype(int) - pad
    imax = np.ceil(hi / h).astype(int) + pad

    axes = [np.arange(imin[d], imax[d] + 1) for d in range(dim)]
    if dim == 1:
        lattice = axes[0][:, None]
    else:
        gx, gy = np.meshgrid(axes[0], axes[1], indexing="ij")
        lattice = np.column_stack([gx.ravel(), gy.ravel()])

    coords = lattice * h
    sdf = domain.signed_distance(coords)
    is_boundary = np.abs(sdf) < 0.5 * h
    is_interior = (sdf <= -0.5 * h) & ~is_boundary
    active = is_boundary | is_interior

    act_lattice = lattice[active]
    act_class = np.where(is_boundary[active], BOUNDARY, INTERIOR).astype(np.uint8)

    # deterministic lexicographic node order
    order = np.lexsort(tuple(act_lattice[:, d] for d in range(dim - 1, -1, -1)))
    act_lattice = act_lattice[order]
    act_class = act_class[order]
    nodes = act_lattice * h

    n_interior = int(np.sum(act_class == INTERIOR))
    min_interior = 3 if dim == 1 else 8
    if n_interior < min_interior:
        raise DomainTooCoarse(
            f"grid has {n_interior} interior nodes; need at least {min_interior}"
        )

    index_of = {tuple(q): i for i, q in enumerate(act_lattice.tolist())}

    normals = np.zeros_like(nodes, dtype=float)
    for i in np.flatnonzero(act_class == BOUNDARY):
        normals[i] = domain.boundary_normal(nodes[i])

    offsets = _ring_offsets(dim, s)
    pairs = _pair_table(offsets)

    ghost_keys: dict = {}
    ghost_entries: list = []

    def resolve(q_tuple) -> int:
        idx = index_of.get(q_tuple)
        if idx is not None:
            return idx
        gi = ghost_keys.get(q_tuple)
        if gi is None:
            gi = len(ghost_entries)
            ghost_keys[q_tuple] = gi
            ghost_entries.append(q_tuple)
        return len(index_of) + gi

    n = nodes.shape[0]
    K = offsets.shape[0]
    ring_index = np.empty((n, K), dtype=np.int64)
    axis_plus = np.empty((n, dim), dtype=np.int64)
    axis_minus = np.empty((n, dim), dtype=np.int64)
    off_list = offsets.tolist()
    for i, q in enumerate(act_lattice.tolist()):
        for k, v in enumerate(off_list):
            ring_index[i, k] = resolve(tuple(a + b for a, b in zip(q, v)))
        for d in range(dim):
            e = [0] * dim
            e[d] = 1
            axis_plus[i, d] = resolve(tuple(a + b for a, b in zip(q, e)))
            axis_minus[i, d] = resolve(tuple(a - b for a, b in zip(q, e)))

    n_ghost = len(ghost_entries)
    w_cols = 2 ** dim
    ghost_points = np.array(ghost_entries, dtype=float).reshape(n_ghost, dim) * h
    ghost_nodes = np.zeros((n_ghost, w_cols), dtype=np.int64)
    ghost_weights = np.zeros((n_ghost, w_cols), dtype=float)
    for g in range(n_ghost):
        idxs, wts = _ghost_closure(domain, h, ghost_points[g], index_of, nodes)
        ghost_nodes[g, : len(idxs)] = idxs
        ghost_weights[g, : len(wts)] = wts

    return Grid(
        domain=domain,
        h=float(h),
        s=int(s),
        nodes=nodes,
        node_class=act_class,
        normals=normals,
        ring_offsets=offsets * h,
        ring_pairs=pairs,
        ring_index=ring_index,
        axis_plus=axis_plus,
        axis_minus=axis_minus,
        ghost_points=ghost_points,
        ghost_nodes=ghost_nodes,
        ghost_weights=ghost_weights,
        lattice_index=index_of,
    )


def _ghost_closure(domain, h, point, index_of, nodes):
    """Reflect an exterior lattice point across the boundary and interpolate.

    Returns (node indices, nonnegative weights summing to 1).  Interpolation
    is bilinear on the cell containing the reflected point; weights on
    inactive corners are dropped and the rest renormalized, falling back to
    the nearest active node if the whole cell is inactive.
    """
    m = domain.reflect(point)
    dim = len(m)
    base = np.floor(m / h).astype(int)
    frac = m / h - base
    idxs = []
    wts = []
    if dim == 1:
        corners = [(0,), (1,)]
    else:
        corners = [(0, 0), (1, 0), (0, 1), (1, 1)]
    for c in corners:
        w = 1.0
        for d in range(dim):
            w *= frac[d] if c[d] else 1.0 - frac[d]
        if w <= 0.0:
            continue
        key = tuple(int(base[d] + c[d]) for d in range(dim))
        j = index_of.get(key)
        if j is not None:
            idxs.append(j)
            wts.append(w)
    total = sum(wts)
    if total <= 0.0:
        j = int(np.argmin(np.linalg.norm(nodes - m, axis=1)))
        return [j], [1.0]
    return idxs, [w / total for w in wts]


def distance_field(grid: Grid):
    """Distance to the boundary as a ScalarField, zero on the boundary band."""
    from .fields import ScalarField

    sdf = grid.domain.signed_distance(grid.nodes)
    return ScalarField(grid, np.maximum(0.0, -sdf))


def outward_normal(grid: Grid, node: int) -> np.ndarray:
    """Unit outward normal of a boundary node."""
    if grid.node_class[node] != BOUNDARY:
        raise NotBoundaryNode(f"node {node} is not a boundary node")
    return grid.normals[node].copy()


def grid_metadata(grid: Grid) -> dict:
    """JSON-ready description: domain, spacing, per-class node counts."""
    flags = []
    if isinstance(grid.domain, Rectangle):
        flags.append("rectangle-corners-violate-smoothness")
    return {
        "domain": grid.domain.describe(),
        "h": grid.h,
        "s": grid.s,
        "counts": {
            "interior": int(np.sum(grid.node_class == INTERIOR)),
            "boundary": int(np.sum(grid.node_class == BOUNDARY)),
            "ghost": grid.n_ghost,
        },
        "flags": flags,
    }


def node_rows(grid: Grid):
    """CSV rows (index, x, y, class); y is 0 for 1D grids."""
    for i in range(grid.n_active):
        x = grid.nodes[i, 0]
        y = grid.nodes[i, 1] if grid.dim == 2 else 0.0
        yield i, x, y, _CLASS_NAMES[int(grid.node_class[i])]
