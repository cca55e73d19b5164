import itertools
from collections import deque

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sweepca.causal import (INFINITE, CausalError, Cover, RegionTooLargeError, causal_diamond,
                            causal_distance, distance, systole)
from sweepca.lattices import (FAMILIES, LatticeSpec, coordinate_surface,
                              logical_representatives)


def vid(cx, *coords):
    return int(cx.vertex_index(np.array(coords) % cx.period))


@pytest.mark.parametrize("family,L,counts", [
    ("cubic3d", 4, (64, 192, 192, 64)),
    ("bcc3d", 4, (128, 896, 1536, 768)),
    ("square2d", 5, (25, 50, 25)),
])
def test_cell_counts(lat, family, L, counts):
    cx = lat(family, L).complex
    assert cx.counts == counts
    assert cx.euler_characteristic() == 0


def test_bcc_vertex_stars(lat):
    cx = lat("bcc3d", 4).complex
    for v in range(cx.num_cells(0)):
        assert len(cx.star(0, v, 1)) == 14
        assert len(cx.star(0, v, 2)) == 36


def test_spec_validation():
    with pytest.raises(ValueError):
        LatticeSpec("hexagonal", 4)
    with pytest.raises(ValueError):
        LatticeSpec("cubic3d", 1)
    with pytest.raises(ValueError):
        LatticeSpec("cubic3d", 4, k=4)
    with pytest.raises(ValueError):
        LatticeSpec("cubic3d", 4, sweep_direction=(1, 1))


def test_perpendicular_direction_rejected(lat):
    cx = lat("cubic3d", 3).complex
    with pytest.raises(CausalError):
        Cover(cx, (1.0, -1.0, 0.0))


@pytest.mark.parametrize("family,L", [("cubic3d", 4), ("bcc3d", 3)])
def test_logical_masks(lat, family, L):
    lattice = lat(family, L)
    cx = lattice.complex
    masks = logical_representatives(cx, 2)
    assert masks.shape == (3, cx.num_cells(2))
    # dual cycles: even overlap with the boundary of every 3-cell
    for c in range(cx.num_cells(3)):
        faces = cx.facets(3, c)
        assert not (masks[:, faces].sum(axis=1) % 2).any()
    for j in range(3):
        surf = coordinate_surface(cx, j)
        assert not lattice.syndrome_of(surf).any()
        parity = (masks.astype(int) @ surf.astype(int)) % 2
        assert parity.tolist() == [int(i == j) for i in range(3)]


def test_masks_need_codimension_one(lat):
    with pytest.raises(NotImplementedError):
        logical_representatives(lat("cubic3d", 3).complex, 1)


def test_causal_distance_examples(lat):
    b = lat("bcc3d", 8)
    cx = b.complex
    assert causal_distance(b.structure, 0, 0) == 0
    assert causal_distance(b.structure, vid(cx, 0, 0, 0), vid(cx, 1, 1, 1)) == 1
    c = lat("cubic3d", 6)
    u, w = vid(c.complex, 0, 0, 0), vid(c.complex, 1, 1, 0)
    assert causal_distance(c.structure, u, w) == 2
    assert causal_distance(c.structure, w, u) == 2
    assert causal_distance(c.structure, u, vid(c.complex, 1, -1, 0)) == INFINITE


def test_distance_wraps_around(lat):
    cx = lat("cubic3d", 6).complex
    assert distance(cx, 0, 0) == 0
    assert distance(cx, vid(cx, 0, 0, 0), vid(cx, 5, 0, 0)) == 1
    assert systole(cx) == 6


def test_nonlocal_sets_rejected(lat):
    c = lat("cubic3d", 4)
    with pytest.raises(RegionTooLargeError):
        causal_distance(c.structure, vid(c.complex, 0, 0, 0), vid(c.complex, 1, 1, 0))


def test_diamond_examples(lat):
    b = lat("bcc3d", 8)
    cx, s = b.complex, b.structure
    v = vid(cx, 0, 0, 0)
    assert causal_diamond(s, [v]) == {v}
    # an edge whose endpoints have nothing in between
    w = vid(cx, 1, 1, -1)
    assert causal_diamond(s, [v, w]) == {v, w}
    # the edge along t: the corner-lattice path (0,0,0)->(1,1,-1)->(2,0,0)->(1,1,1)
    # and its images under coordinate permutations also run between the endpoints
    d = causal_diamond(s, [v, vid(cx, 1, 1, 1)])
    expected = {(0, 0, 0), (1, 1, 1), (2, 0, 0), (0, 2, 0), (0, 0, 2),
                (1, 1, -1), (1, -1, 1), (-1, 1, 1)}
    assert d == {vid(cx, *p) for p in expected}


# -- brute-force order oracle -----------------------------------------------------------------

class BoxOrder:
    """Reachability on an explicit box of the cover, computed by BFS over the
    directed future edges (no cones, no caching)."""

    def __init__(self, cover, radius):
        d = cover.cx.dimension
        self.cover = cover
        self.points = [p for p in itertools.product(range(-radius, radius + 1), repeat=d)
                       if cover._lookup[tuple(a % q for a, q in zip(p, cover._period))] >= 0]
        inside = set(self.points)
        self.reach = {}
        for p in self.points:
            seen = {p}
            queue = deque([p])
            while queue:
                x = queue.popleft()
                for y in cover.future_neighbors(x):
                    if y in inside and y not in seen:
                        seen.add(y)
                        queue.append(y)
            self.reach[p] = seen

    def inf(self, pts):
        lower = [z for z in self.points if all(q in self.reach[z] for q in pts)]
        top = [z for z in lower if all(z in self.reach[w] for w in lower)]
        assert len(top) == 1
        return top[0]

    def sup(self, pts):
        upper = [z for z in self.points if all(z in self.reach[q] for q in pts)]
        bottom = [z for z in upper if all(w in self.reach[z] for w in upper)]
        assert len(bottom) == 1
        return bottom[0]

    def diamond(self, pts):
        lo, hi = self.inf(pts), self.sup(pts)
        return {z for z in self.reach[lo] if hi in self.reach[z]}


@pytest.fixture(scope="module")
def bcc_box(lat):
    return BoxOrder(lat("bcc3d", 8).structure.cover, 5)


def _local_points(draw_idx, box):
    near = [p for p in box.points if max(abs(a) for a in p) <= 1]
    return sorted({near[i % len(near)] for i in draw_idx})


@given(st.lists(st.integers(0, 1000), min_size=1, max_size=4))
def test_diamond_matches_brute_force(bcc_box, idx):
    pts = _local_points(idx, bcc_box)
    cover = bcc_box.cover
    assert cover.inf(pts) == bcc_box.inf(pts)
    assert cover.sup(pts) == bcc_box.sup(pts)
    assert cover.diamond(pts) == bcc_box.diamond(pts)


@given(st.lists(st.integers(0, 1000), min_size=1, max_size=4), st.lists(st.integers(0, 1000), max_size=2))
def test_diamond_monotone(bcc_box, a, b):
    U = _local_points(a, bcc_box)
    W = sorted(set(U) | set(_local_points(b, bcc_box)))
    cover = bcc_box.cover
    dU, dW = cover.diamond(U), cover.diamond(W)
    assert set(U) <= dU <= dW


@pytest.mark.parametrize("family", FAMILIES)
def test_unique_bounds_sampled(lat, family):
    """Condition (i) on random local pairs."""
    lattice = lat(family, 6)
    cover = lattice.structure.cover
    rng = np.random.default_rng(5)
    d = lattice.complex.dimension
    origin = tuple(int(a) for a in lattice.complex.vertex_coords[0])
    for _ in range(100):
        x = tuple(int(v) for v in np.asarray(origin) + rng.integers(-2, 3, size=d))
        if cover._lookup[tuple(a % q for a, q in zip(x, cover._period))] < 0:
            continue
        lo, hi = cover.meet(origin, x), cover.join(origin, x)
        assert cover.precedes(lo, origin) and cover.precedes(lo, x)
        assert cover.precedes(origin, hi) and cover.precedes(x, hi)


@given(st.integers(0, 10**6), st.integers(0, 10**6))
def test_distance_at_most_causal_distance(lat, a, b):
    c = lat("cubic3d", 8)
    cx = c.complex
    u = a % cx.num_cells(0)
    # keep the pair local: offset of at most 1 per axis
    off = np.array([(b // 3 ** i) % 3 - 1 for i in range(3)])
    w = vid(cx, *(cx.vertex_coords[u] + off))
    assert distance(cx, u, w) <= causal_distance(c.structure, u, w)


def test_single_vertex_class_on_vertex_transitive_lattices(lat):
    assert len(lat("bcc3d", 4).structure.rules) == 1
    assert len(lat("cubic3d", 4).structure.rules) == 1
    assert len(lat("parallelogram2d", 3).structure.rules) == 3


def test_default_tmax(lat):
    b = lat("bcc3d", 8)
    assert b.default_tmax() == 4 * 2 * 3 * 8
