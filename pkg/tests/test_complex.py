import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sweepca.complex import (CellComplex, Chain, ComplexError, add, f2_span,
                             incidence_totals, validate_complex)
from sweepca.lattices import bcc3d, cubic3d, parallelogram2d, square2d

ALL = [(cubic3d, 2), (cubic3d, 3), (bcc3d, 2), (bcc3d, 3), (square2d, 3), (parallelogram2d, 2)]


@pytest.fixture(scope="module")
def cubic4():
    return cubic3d(4)


@pytest.fixture(scope="module")
def bcc3():
    return bcc3d(3)


def test_chain_addition_is_symmetric_difference():
    a = Chain(2, [1, 2])
    b = Chain(2, [2, 3])
    assert a + b == Chain(2, [1, 3])
    assert a + a == Chain(2)
    assert a + Chain(2) == a
    assert add(a, b) == b + a


def test_chain_add_rejects_mixed_dimensions():
    with pytest.raises(ComplexError):
        Chain(1, [0]) + Chain(2, [0])


def test_chain_dense_round_trip():
    c = Chain(1, [0, 5, 7])
    bits = c.to_array(10)
    assert bits.tolist() == [1, 0, 0, 0, 0, 1, 0, 1, 0, 0]
    assert Chain.from_array(1, bits) == c


def test_boundary_of_empty_chain(cubic4):
    assert cubic4.boundary(Chain(2)) == Chain(1)


def test_square_face_has_four_edges(cubic4):
    for f in range(0, cubic4.num_cells(2), 17):
        edges = cubic4.boundary(Chain(2, [f]))
        assert len(edges) == 4
        fverts = set(cubic4.cell_vertices[2][f].tolist())
        for e in edges:
            assert set(cubic4.cell_vertices[1][e].tolist()) <= fverts


def test_boundary_rejects_foreign_cells(cubic4):
    with pytest.raises(ComplexError):
        cubic4.boundary(Chain(2, [cubic4.num_cells(2)]))
    with pytest.raises(ComplexError):
        cubic4.boundary(Chain(0, [0]))


def test_boundary_boundary_random_chains_bcc(bcc3):
    rng = np.random.default_rng(3)
    for _ in range(1000):
        k = int(rng.integers(2, 4))
        bits = (rng.random(bcc3.num_cells(k)) < 0.05).astype(np.uint8)
        once = bcc3.boundary_bits(k, bits)
        assert not bcc3.boundary_bits(k - 1, once).any()


@pytest.mark.parametrize("builder,L", ALL)
def test_structure_is_consistent(builder, L):
    cx = builder(L)
    assert validate_complex(cx) == []
    assert cx.euler_characteristic() == 0
    for k in range(1, cx.dimension + 1):
        down, up = incidence_totals(cx, k)
        assert down == up


def test_star_examples(cubic4, bcc3):
    for v in range(bcc3.num_cells(0)):
        assert len(bcc3.star(0, v, 2)) == 36
    for v in range(cubic4.num_cells(0)):
        assert len(cubic4.star(0, v, 1)) == 6
    assert cubic4.star(2, 5, 2) == [5]
    with pytest.raises(ComplexError):
        cubic4.star(2, 5, 1)


def test_json_round_trip(bcc3):
    cx2 = CellComplex.from_json(bcc3.to_json())
    assert cx2.counts == bcc3.counts
    for k in range(4):
        assert np.array_equal(cx2.boundary_incidence[k], bcc3.boundary_incidence[k])
        assert np.array_equal(cx2.cell_points[k], bcc3.cell_points[k])


def test_from_dict_rejects_corrupted_incidence(cubic4):
    data = json.loads(cubic4.to_json())
    # point a face at an edge it does not contain
    data["boundary"]["2"][0][0] = (data["boundary"]["2"][0][0] + 97) % cubic4.num_cells(1)
    with pytest.raises(ComplexError):
        CellComplex.from_dict(data)
    data = json.loads(cubic4.to_json())
    data["schema"] = "other"
    with pytest.raises(ComplexError):
        CellComplex.from_dict(data)


def test_f2_span_small():
    assert f2_span([0b01, 0b10]) == {0, 1, 2, 3}
    assert f2_span([0b11, 0b11]) == {0, 3}


@given(st.sets(st.integers(0, 191)), st.sets(st.integers(0, 191)))
def test_boundary_is_linear(a, b):
    cx = cubic3d(4)
    ca, cb = Chain(2, a), Chain(2, b)
    assert cx.boundary(ca + cb) == cx.boundary(ca) + cx.boundary(cb)


@given(st.sets(st.integers(0, 47)), st.sets(st.integers(0, 47)), st.sets(st.integers(0, 47)))
def test_chain_addition_group_laws(a, b, c):
    A, B, C = Chain(1, a), Chain(1, b), Chain(1, c)
    assert (A + B) + C == A + (B + C)
    assert A + B == B + A
    assert A + A == Chain(1)
