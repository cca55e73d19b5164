import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sweepca.complex import CellComplex
from sweepca.lattices import LatticeConstants, build, LatticeSpec, cubic3d
from sweepca.verify import (CellMetric, SizeLimitError, check_causal_conditions,
                            check_connected_components, check_sweep_invariants, component_levels,
                            connected_components, decompose_chunks, local_patch_cells, m_star,
                            pth_lower_bound, removal_steps, removal_time_oracle, sample_local_error)

BCC = LatticeConstants(d=3, c_B=24, c_D=2, c_P=3, max_star_k=36)


# -- closed-form bound ---------------------------------------------------------------------------

def test_pth_bound_bcc():
    val = pth_lower_bound(BCC, 36)
    assert val == pytest.approx(1.0 / ((72 ** 3 * 24) ** 2 * 36), rel=1e-15)
    assert val == pytest.approx(3.46e-16, rel=5e-3)
    assert pth_lower_bound(BCC) == val     # default Q = 6 c_D c_P = 36


def test_pth_bound_scaling():
    base = pth_lower_bound(BCC, 36)
    big_cb = LatticeConstants(d=3, c_B=96, c_D=2, c_P=3, max_star_k=36)
    assert base / pth_lower_bound(big_cb, 36) == pytest.approx(16)
    assert base / pth_lower_bound(BCC, 72) == pytest.approx(64)


@given(st.floats(1, 100), st.floats(6, 100), st.integers(1, 100))
def test_pth_bound_monotone(c_B, Q, star):
    a = LatticeConstants(d=3, c_B=c_B, c_D=1, c_P=3, max_star_k=star)
    b = LatticeConstants(d=3, c_B=c_B * 1.5, c_D=1, c_P=3, max_star_k=star + 1)
    assert pth_lower_bound(b, Q) < pth_lower_bound(a, Q)
    assert pth_lower_bound(a, Q * 1.1) < pth_lower_bound(a, Q)


def test_m_star():
    assert m_star(16, 36, 2) == 1
    assert m_star(1000, 6, 1) == math.ceil(math.log(1000) / math.log(6))


# -- components and chunks ----------------------------------------------------------------------

@pytest.fixture(scope="module")
def cubic16():
    return build(LatticeSpec("cubic3d", 16))


def faces_at(cx, lows):
    """Faces with the given lowest corners, normal along z."""
    pts = cx.cell_points[2]
    normal_z = (pts[:, :, 2] == pts[:, :1, 2]).all(axis=1)
    low = pts.min(axis=1) % cx.period
    out = []
    for q in lows:
        hit = np.flatnonzero(normal_z & (low == np.asarray(q) % cx.period).all(axis=1))
        out.append(int(hit[0]))
    return out


def test_components_threshold_boundary(cubic16):
    cx = cubic16.complex
    a, b = faces_at(cx, [(0, 0, 0), (4, 0, 0)])
    m = CellMetric(cx, 2, [a, b])
    # nearest corners (1,*,0) and (4,*,0): three cube-steps apart
    gap = m.dist([a], [b])
    assert gap == 3
    assert connected_components([], 3, m) == []
    assert len(connected_components([a, b], gap, m)) == 1
    assert len(connected_components([a, b], gap - 1, m)) == 2


def test_chunk_examples(cubic16):
    cx = cubic16.complex
    Q = 36
    (a,) = faces_at(cx, [(0, 0, 0)])
    m = CellMetric(cx, 2, [a])
    dec = decompose_chunks([a], Q, m)
    assert dec.m == 0 and dec.parts == [[a]]
    a, b = faces_at(cx, [(0, 0, 0), (5, 5, 0)])
    m = CellMetric(cx, 2, [a, b])
    assert m.diam([a, b]) <= Q / 2 - 1
    dec = decompose_chunks([a, b], Q, m)
    assert dec.parts[0] == [] and dec.levels[1] == sorted([a, b])


def test_chunk_decomposition_partitions(cubic16):
    rng = np.random.default_rng(0)
    for _ in range(20):
        cells = rng.choice(cubic16.num_qubits, 10, replace=False)
        m = CellMetric(cubic16.complex, 2, cells)
        dec = decompose_chunks(cells, 6, m)
        flat = sorted(c for part in dec.parts for c in part)
        assert flat == sorted(cells.tolist())
        for upper, lower in zip(dec.levels, dec.levels[1:]):
            assert set(lower) <= set(upper)
        for n, chunks in enumerate(dec.chunks[1:], start=1):
            for members, d in chunks:
                assert len(members) == 2 ** n
                assert d <= 6 ** n / 2
                assert m.diam(members) == d


def test_connected_component_bounds(cubic16):
    """Random |eps| = 10 on cubic L = 16: every component of every level
    satisfies the diameter and separation bounds for Q = 12 and Q = 36."""
    rng = np.random.default_rng(0)
    for trial in range(40):
        if trial % 2:
            cells = rng.choice(cubic16.num_qubits, 10, replace=False)
        else:
            pool = local_patch_cells(cubic16, int(rng.integers(cubic16.complex.num_cells(0))), 4)
            cells = rng.choice(pool, 10, replace=False)
        m = CellMetric(cubic16.complex, 2, cells)
        for Q in (12, 36):
            assert check_connected_components(decompose_chunks(cells, Q, m), m) == []


def test_level0_bound_needs_q_twelve(cubic16):
    """A single cell already has diameter 1 > Q^0 / 2, so the level-0
    separation bound can fail for 6 <= Q < 12: two faces at distance 2 whose
    union has diameter 4 > 6 / 2 never pair up."""
    cx = cubic16.complex
    a, b = faces_at(cx, [(0, 0, 0), (3, 0, 0)])
    m = CellMetric(cx, 2, [a, b])
    assert m.dist([a], [b]) == 2 and m.diam([a, b]) == 4
    dec = decompose_chunks([a, b], 6, m)
    bad = check_connected_components(dec, m)
    assert {v.kind for v in bad} == {"separation"}
    assert check_connected_components(decompose_chunks([a, b], 12, m), m) == []


def test_chunk_size_limit(cubic16):
    cells = list(range(0, 21 * 50, 50))
    m = CellMetric(cubic16.complex, 2, cells)
    with pytest.raises(SizeLimitError):
        decompose_chunks(cells, 36, m)
    greedy = decompose_chunks(cells, 36, m, exact=False)
    assert not greedy.exact


def test_small_q_warns(cubic16):
    m = CellMetric(cubic16.complex, 2, [0])
    with pytest.warns(UserWarning):
        decompose_chunks([0], 4, m)


def chunks_brute_force(cells, Q, dmax):
    """Level sets by explicit recursion over frozensets (independent of the
    bitmask implementation)."""
    chunks = {frozenset([c]) for c in cells}
    levels = [set(cells)]
    n = 0
    while True:
        n += 1
        lst = list(chunks)
        nxt = set()
        for i in range(len(lst)):
            for j in range(i + 1, len(lst)):
                a, b = lst[i], lst[j]
                if a & b:
                    continue
                u = a | b
                if max(dmax[x][y] for x in u for y in u) <= Q ** n / 2:
                    nxt.add(u)
        if not nxt:
            return levels
        levels.append(set().union(*nxt))
        chunks = nxt


def test_chunks_match_brute_force(cubic16):
    rng = np.random.default_rng(3)
    for _ in range(15):
        centre = int(rng.integers(cubic16.complex.num_cells(0)))
        pool = local_patch_cells(cubic16, centre, 4)
        cells = sorted(rng.choice(pool, 7, replace=False).tolist())
        m = CellMetric(cubic16.complex, 2, cells)
        dmax = {a: {b: int(m.dmax[m.index[a], m.index[b]]) for b in cells} for a in cells}
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            dec = decompose_chunks(cells, 3, m)
        expected = chunks_brute_force(cells, 3, dmax)
        assert [set(lv) for lv in dec.levels] == expected


# -- removal time --------------------------------------------------------------------------------

def test_removal_oracle_examples(lat):
    b = lat("bcc3d", 8)
    assert removal_time_oracle(b, [], 36, 0)
    for f in range(0, b.num_qubits, 173):
        assert removal_steps(b, [f]) <= 6
        assert removal_time_oracle(b, [f], 36, 0)


def test_random_level0_components_bcc(lat):
    b = lat("bcc3d", 8)
    rng = np.random.default_rng(12)
    seen = 0
    while seen < 200:
        cells = sample_local_error(b, 0.01, 2, rng)
        idx = np.flatnonzero(cells)
        m = CellMetric(b.complex, 2, idx)
        dec = decompose_chunks(idx, 36, m)
        for i, comp in component_levels(dec, m):
            if i == 0:
                seen += 1
                assert removal_time_oracle(b, comp, 36, 0)


# -- sweep-rule invariants ------------------------------------------------------------------------

def test_invariants_on_local_errors(lat):
    b = lat("bcc3d", 8)
    rng = np.random.default_rng(21)
    for rule in ("sweep", "greedy"):
        from sweepca.sweep import SweepConfig
        for _ in range(60):
            err = sample_local_error(b, 0.01, 2, rng)
            rep = check_sweep_invariants(b, b.syndrome_of(err), SweepConfig(rule=rule))
            assert rep.ok, rep
            assert rep.steps <= rep.t_star


def test_invariants_empty_syndrome(lat):
    b = lat("bcc3d", 8)
    assert check_sweep_invariants(b, np.zeros(b.num_checks, dtype=np.uint8)).ok


# -- lattice conditions ----------------------------------------------------------------------------

def test_conditions_bcc(lat):
    rep = check_causal_conditions(lat("bcc3d", 4), budget=100, seed=0)
    assert rep.ok
    assert rep.c_D <= 2 and rep.c_P <= 3 and rep.c_B <= 24


def test_corrupted_complex_reported():
    cx = cubic3d(3)
    bad = [b.copy() for b in cx.boundary_incidence]
    bad[2][0, 0] = (bad[2][0, 0] + 13) % cx.num_cells(1)
    broken = CellComplex(cx.dimension, cx.period, cx.embedding, cx.vertex_coords, cx.cell_points, bad,
                         kind=cx.kind)

    class Shim:
        complex = broken
        structure = build(LatticeSpec("cubic3d", 3)).structure
        size = 3
        k = 2

    rep = check_causal_conditions(Shim, budget=10, seed=0)
    assert not rep.ok
    assert any("2-cell 0" in s or "face" in s or "cell 0" in s for s in rep.structural)
