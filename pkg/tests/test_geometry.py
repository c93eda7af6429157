import math

import numpy as np
import pytest

from infeig.geometry import (
    BOUNDARY,
    INTERIOR,
    Annulus,
    Disk,
    DomainTooCoarse,
    Interval,
    InvalidParams,
    NotBoundaryNode,
    Rectangle,
    build_grid,
    distance_field,
    grid_metadata,
    node_rows,
    outward_normal,
)


def test_interval_example():
    grid = build_grid(Interval(0.0, 1.0), 0.25, 1)
    assert grid.n_active == 5
    assert np.allclose(grid.nodes.ravel(), [0.0, 0.25, 0.5, 0.75, 1.0])
    assert grid.node_class[0] == BOUNDARY and grid.node_class[-1] == BOUNDARY
    assert np.all(grid.node_class[1:-1] == INTERIOR)
    assert outward_normal(grid, 0)[0] == -1.0
    assert outward_normal(grid, 4)[0] == 1.0


def test_disk_example_interior_set():
    grid = build_grid(Disk((0.0, 0.0), 1.0), 0.5, 1)
    # interior nodes = lattice points strictly inside minus the boundary band
    for i in range(grid.n_active):
        d = -float(grid.domain.signed_distance(grid.nodes[i]))
        if grid.node_class[i] == INTERIOR:
            assert d >= 0.25
        else:
            assert abs(d) < 0.25
    origin = int(np.argmin(np.linalg.norm(grid.nodes, axis=1)))
    assert grid.node_class[origin] == INTERIOR
    assert grid.ring_pairs.shape[0] >= 2


def test_annulus_ring_against_brute_force():
    grid = build_grid(Annulus((0.0, 0.0), 0.25, 1.0), 0.05, 2)
    # brute-force enumeration of lattice offsets within half a cell of rho
    s = 2
    brute = set()
    for i in range(-4, 5):
        for j in range(-4, 5):
            if (i, j) != (0, 0) and abs(math.hypot(i, j) - s) <= 0.5 + 1e-12:
                brute.add((i, j))
    got = {tuple(int(round(v / grid.h)) for v in off) for off in grid.ring_offsets}
    assert got == brute
    assert grid.ring_pairs.shape[0] >= 4  # every node sees the same >= 4 pairs


def test_distance_field_examples():
    g1 = build_grid(Interval(0.0, 1.0), 0.25, 1)
    d1 = distance_field(g1).values
    assert d1[1] == pytest.approx(0.25)

    gd = build_grid(Disk((0.0, 0.0), 1.0), 0.25, 1)
    dd = distance_field(gd).values
    radii = np.linalg.norm(gd.nodes, axis=1)
    inside = gd.domain.signed_distance(gd.nodes) <= 0
    assert np.allclose(dd[inside], 1.0 - radii[inside])

    ga = build_grid(Annulus((0.0, 0.0), 0.25, 1.0), 0.05, 1)
    ra = np.linalg.norm(ga.nodes, axis=1)
    da = distance_field(ga).values
    ins = ga.domain.signed_distance(ga.nodes) <= 0
    assert np.allclose(da[ins], np.minimum(ra[ins] - 0.25, 1.0 - ra[ins]))


def test_distance_field_contracts():
    grid = build_grid(Disk((0.0, 0.0), 1.0), 0.125, 1)
    d = distance_field(grid).values
    assert np.all(d >= 0.0)
    assert np.all(d[grid.node_class == BOUNDARY] < grid.h / 2)
    # 1-Lipschitz along active ring arms
    n = grid.n_active
    for k in range(grid.ring_index.shape[1]):
        nb = grid.ring_index[:, k]
        mask = nb < n
        gap = np.abs(d[mask] - d[nb[mask]])
        assert np.all(gap <= grid.ring_lengths[k] + 1e-12)


def test_outward_normals():
    gd = build_grid(Disk((0.0, 0.0), 1.0), 0.25, 1)
    for i in np.flatnonzero(gd.node_class == BOUNDARY):
        n = outward_normal(gd, i)
        assert np.linalg.norm(n) == pytest.approx(1.0, abs=1e-12)
        radial = gd.nodes[i] / np.linalg.norm(gd.nodes[i])
        assert np.dot(n, radial) == pytest.approx(1.0, abs=1e-12)

    ga = build_grid(Annulus((0.0, 0.0), 0.25, 1.0), 0.05, 1)
    radii = np.linalg.norm(ga.nodes, axis=1)
    inner = np.flatnonzero((ga.node_class == BOUNDARY) & (radii < 0.5))
    assert inner.size > 0
    for i in inner:
        n = outward_normal(ga, i)
        radial = ga.nodes[i] / radii[i]
        assert np.dot(n, radial) == pytest.approx(-1.0, abs=1e-12)


def test_outward_normal_rejects_interior():
    grid = build_grid(Interval(0.0, 1.0), 0.25, 1)
    with pytest.raises(NotBoundaryNode):
        outward_normal(grid, 2)


def test_classification_stable_under_refinement():
    for domain in (Disk((0.0, 0.0), 1.0), Annulus((0.0, 0.0), 0.25, 1.0)):
        coarse = build_grid(domain, 0.125, 1)
        fine = build_grid(domain, 0.0625, 1)
        fine_lookup = {tuple(q) for q, i in fine.lattice_index.items() if fine.node_class[i] == INTERIOR}
        for key, i in coarse.lattice_index.items():
            if coarse.node_class[i] == INTERIOR:
                assert tuple(2 * k for k in key) in fine_lookup


def test_exterior_sphere_proxy():
    for domain in (Disk((0.0, 0.0), 1.0), Annulus((0.0, 0.0), 0.25, 1.0)):
        grid = build_grid(domain, 0.0625, 1)
        boundary = np.flatnonzero(grid.node_class == BOUNDARY)
        for i in boundary[::3]:
            x = grid.nodes[i]
            n = grid.normals[i]
            r = domain.exterior_sphere_radius(x)
            gaps = grid.nodes - x
            lhs = gaps @ n
            rhs = np.sum(gaps**2, axis=1) / (2.0 * r) + grid.h
            assert np.all(lhs <= rhs + 1e-12)


def test_stencil_symmetry_and_pair_lengths():
    grid = build_grid(Disk((0.0, 0.0), 1.0), 0.125, 2)
    offs = {tuple(np.round(v / grid.h).astype(int)) for v in grid.ring_offsets}
    assert offs == {tuple(-np.array(v)) for v in offs}
    for a, b in grid.ring_pairs:
        la = np.linalg.norm(grid.ring_offsets[a])
        lb = np.linalg.norm(grid.ring_offsets[b])
        assert abs(la - lb) <= 1e-12 * la
        assert np.allclose(grid.ring_offsets[a], -grid.ring_offsets[b])


def test_ghost_weights_are_convex():
    grid = build_grid(Disk((0.0, 0.0), 1.0), 0.125, 2)
    assert grid.n_ghost > 0
    assert np.all(grid.ghost_weights >= 0.0)
    assert np.allclose(grid.ghost_weights.sum(axis=1), 1.0)
    assert np.all(grid.ghost_nodes >= 0)
    assert np.all(grid.ghost_nodes < grid.n_active)


def test_interior_stencils_complete():
    grid = build_grid(Annulus((0.0, 0.0), 0.25, 1.0), 0.05, 2)
    assert np.all(grid.ring_index >= 0)
    assert np.all(grid.ring_index < grid.n_active + grid.n_ghost)


def test_build_errors():
    with pytest.raises(InvalidParams):
        build_grid(Interval(0.0, 1.0), -0.1, 1)
    with pytest.raises(InvalidParams):
        build_grid(Interval(0.0, 1.0), 0.25, 0)
    with pytest.raises(InvalidParams):
        build_grid(Interval(0.0, 1.0), 0.3, 1)  # diameter < 4*s*h
    with pytest.raises(DomainTooCoarse):
        # thin rectangle: one cell across, no interior row survives
        build_grid(Rectangle((0.0, 0.0), (1.04, 0.26)), 0.26, 1)
    with pytest.raises(InvalidParams):
        Interval(1.0, 0.0)
    with pytest.raises(InvalidParams):
        Annulus((0.0, 0.0), 0.5, 0.25)
    with pytest.raises(InvalidParams):
        Rectangle((0.0, 0.0), (0.0, 1.0))


def test_rectangle_corner_normals_averaged():
    grid = build_grid(Rectangle((0.0, 0.0), (1.0, 1.0)), 0.125, 1)
    corner = int(np.argmin(np.linalg.norm(grid.nodes - np.array([0.0, 0.0]), axis=1)))
    n = grid.normals[corner]
    assert np.allclose(n, [-math.sqrt(0.5), -math.sqrt(0.5)])
    meta = grid_metadata(grid)
    assert meta["flags"]  # corner smoothness flag present


def test_metadata_and_rows():
    grid = build_grid(Disk((0.0, 0.0), 1.0), 0.25, 1)
    meta = grid_metadata(grid)
    assert meta["domain"]["type"] == "disk"
    assert meta["h"] == 0.25
    counts = meta["counts"]
    assert counts["interior"] + counts["boundary"] == grid.n_active
    rows = list(node_rows(grid))
    assert len(rows) == grid.n_active
    assert rows[0][3] in ("interior", "boundary")


def test_deterministic_build():
    a = build_grid(Disk((0.0, 0.0), 1.0), 0.125, 2)
    b = build_grid(Disk((0.0, 0.0), 1.0), 0.125, 2)
    assert np.array_equal(a.nodes, b.nodes)
    assert np.array_equal(a.ring_index, b.ring_index)
    assert np.array_equal(a.ghost_weights, b.ghost_weights)


def test_node_order_lexicographic():
    grid = build_grid(Disk((0.0, 0.0), 1.0), 0.25, 1)
    keys = [tuple(q) for q in (grid.nodes / grid.h).round().astype(int)]
    assert keys == sorted(keys)
