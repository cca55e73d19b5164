"""Executable versions of the threshold-proof machinery.

* chunk decomposition and l-connected components of an error set;
* the removal-time oracle for isolated components;
* the closed-form lower bound on the threshold;
* the sweep-rule invariants (support, propagation, removal, monotone);
* a lattice checker for the causal conditions and the geometric constants.

Distances here use the ``cell`` metric of ``causal.adjacency`` (two vertices
of a common top cell are adjacent), which coincides with the 1-skeleton
metric on simplicial lattices.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .causal import CausalError, diameter, diamond_cells, distances_from, systole
from .complex import validate_complex
from .sweep import SweepConfig, engine_for

EXACT_LIMIT = 20
PAIR_BUDGET = 50_000_000


class SizeLimitError(ValueError):
    """Exact chunk decomposition requested for too large an error set."""


# -- cell metric --------------------------------------------------------------------------

class CellMetric:
    """Distances between the vertex sets of a fixed list of cells."""

    def __init__(self, cx, k: int, cells, metric: str = "cell"):
        self.cells = np.asarray(sorted(set(int(c) for c in cells)), dtype=np.int64)
        verts = cx.cell_vertices[k][self.cells] if len(self.cells) else np.zeros((0, 1), dtype=np.int64)
        uniq, inv = np.unique(verts, return_inverse=True)
        inv = inv.reshape(verts.shape)
        dv = distances_from(cx, uniq, metric)[:, uniq] if len(uniq) else np.zeros((0, 0), dtype=np.int64)
        n = len(self.cells)
        # dmin/dmax[a, b]: min/max vertex distance between cells a and b
        pair = dv[inv[:, None, :, None], inv[None, :, None, :]] if n else np.zeros((0, 0, 1, 1))
        self.dmin = pair.min(axis=(2, 3)) if n else np.zeros((0, 0), dtype=np.int64)
        self.dmax = pair.max(axis=(2, 3)) if n else np.zeros((0, 0), dtype=np.int64)
        self.index = {int(c): i for i, c in enumerate(self.cells)}

    def local(self, cells) -> np.ndarray:
        return np.array([self.index[int(c)] for c in cells], dtype=np.int64)

    def diam(self, cells) -> int:
        idx = self.local(cells)
        return int(self.dmax[np.ix_(idx, idx)].max()) if len(idx) else 0

    def dist(self, a, b) -> float:
        ia, ib = self.local(a), self.local(b)
        if len(ia) == 0 or len(ib) == 0:
            return math.inf
        return int(self.dmin[np.ix_(ia, ib)].min())


# -- connected components -----------------------------------------------------------------

def connected_components(cells, l: float, metric: CellMetric) -> list[list[int]]:
    """Maximal groups that cannot be split into parts more than ``l`` apart
    (single linkage at threshold ``l``)."""
    cells = sorted(set(int(c) for c in cells))
    if not cells:
        return []
    idx = metric.local(cells)
    close = metric.dmin[np.ix_(idx, idx)] <= l
    seen = np.zeros(len(cells), dtype=bool)
    comps = []
    for s in range(len(cells)):
        if seen[s]:
            continue
        stack, comp = [s], []
        seen[s] = True
        while stack:
            a = stack.pop()
            comp.append(cells[a])
            for b in np.flatnonzero(close[a] & ~seen):
                seen[b] = True
                stack.append(int(b))
        comps.append(sorted(comp))
    return comps


# -- chunk decomposition --------------------------------------------------------------------

@dataclass
class ChunkDecomposition:
    """Levels E_0 ⊇ E_1 ⊇ ... ⊇ E_m and the parts F_i = E_i minus E_{i+1}."""

    Q: float
    cells: list
    levels: list                      # E_n as sorted cell lists
    parts: list                       # F_n
    chunks: list = field(default_factory=list)   # per level: list of (cells, diameter)
    exact: bool = True

    @property
    def m(self) -> int:
        return len(self.levels) - 1


def _mask_cells(mask: int, cells) -> list[int]:
    return [cells[i] for i in range(len(cells)) if mask >> i & 1]


def decompose_chunks(error_cells, Q: float, metric: CellMetric, exact: bool = True,
                     keep_chunks: bool = True) -> ChunkDecomposition:
    """Recursive pairing of chunks: a level-n chunk is a disjoint union of two
    level-(n-1) chunks with diameter at most Q^n / 2.

    Exact mode enumerates every chunk (bitmask pairing); it is limited to
    ``EXACT_LIMIT`` cells.  ``exact=False`` keeps only one greedy maximal
    matching per level, so E_n is an under-approximation."""
    cells = sorted(set(int(c) for c in error_cells))
    if Q < 6:
        warnings.warn("Q < 6: the connected-component bounds are not guaranteed", stacklevel=2)
    if exact and len(cells) > EXACT_LIMIT:
        raise SizeLimitError(f"exact decomposition is limited to {EXACT_LIMIT} cells, got {len(cells)}")
    n = len(cells)
    if n == 0:
        return ChunkDecomposition(Q, [], [[]], [[]], [[]], exact)
    idx = metric.local(cells)
    dmax = metric.dmax[np.ix_(idx, idx)].astype(np.int64)
    # level 0: singletons; diameter of a cell = its own vertex diameter
    masks = np.array([1 << i for i in range(n)], dtype=np.int64)
    diams = np.diag(dmax).copy()
    levels = [cells]
    chunk_log = [[([c], int(d)) for c, d in zip(cells, diams)]] if keep_chunks else []
    level = 0
    while True:
        level += 1
        limit = Q ** level / 2
        if len(masks) < 2:
            break
        # farthest member distance from each chunk to each cell, for union diameters
        member = ((masks[:, None] >> np.arange(n)[None, :]) & 1).astype(bool)
        reach = np.where(member[:, :, None], dmax[None, :, :], -1).max(axis=1)   # (m, n)
        new_masks, new_diams = [], []
        m = len(masks)
        if exact and m * (m - 1) // 2 > PAIR_BUDGET:
            raise SizeLimitError(f"level-{level} pairing needs {m * (m - 1) // 2} candidate pairs")
        block = max(1, PAIR_BUDGET // max(m, 1) // 8)
        for start in range(0, m, block):
            a = np.arange(start, min(m, start + block))
            disjoint = (masks[a, None] & masks[None, :]) == 0
            disjoint &= np.arange(m)[None, :] > a[:, None]
            ia, ib = np.nonzero(disjoint)
            if len(ia) == 0:
                continue
            ia = a[ia]
            cross = np.where(member[ib], reach[ia], -1).max(axis=1)
            d = np.maximum(np.maximum(diams[ia], diams[ib]), cross)
            ok = d <= limit
            new_masks.append(masks[ia[ok]] | masks[ib[ok]])
            new_diams.append(d[ok])
        if not new_masks or sum(len(x) for x in new_masks) == 0:
            break
        nm = np.concatenate(new_masks)
        nd = np.concatenate(new_diams)
        nm, first = np.unique(nm, return_index=True)
        nd = nd[first]
        if not exact:
            # greedy: keep a maximal set of pairwise disjoint chunks, smallest diameter first
            order = np.argsort(nd, kind="stable")
            used = 0
            keep = []
            for j in order:
                if nm[j] & used == 0:
                    used |= int(nm[j])
                    keep.append(j)
            nm, nd = nm[keep], nd[keep]
        union = int(np.bitwise_or.reduce(nm))
        levels.append(_mask_cells(union, cells))
        if keep_chunks:
            chunk_log.append([(_mask_cells(int(mk), cells), int(dd)) for mk, dd in zip(nm, nd)])
        masks, diams = nm, nd
    parts = []
    for i in range(len(levels)):
        nxt = set(levels[i + 1]) if i + 1 < len(levels) else set()
        parts.append(sorted(set(levels[i]) - nxt))
    return ChunkDecomposition(Q, cells, levels, parts, chunk_log, exact)


@dataclass
class ComponentBoundViolation:
    level: int
    component: list
    diameter: int
    separation: float
    kind: str


def check_connected_components(dec: ChunkDecomposition, metric: CellMetric) -> list[ComponentBoundViolation]:
    """Every Q^i-connected component M of F_i has diam M <= Q^i and
    d(M, E_i minus M) > Q^(i+1)/3."""
    out = []
    Q = dec.Q
    for i, F in enumerate(dec.parts):
        for comp in connected_components(F, Q ** i, metric):
            dm = metric.diam(comp)
            rest = sorted(set(dec.levels[i]) - set(comp))
            sep = metric.dist(comp, rest)
            if dm > Q ** i:
                out.append(ComponentBoundViolation(i, comp, dm, sep, "diameter"))
            if sep <= Q ** (i + 1) / 3:
                out.append(ComponentBoundViolation(i, comp, dm, sep, "separation"))
    return out


def component_levels(dec: ChunkDecomposition, metric: CellMetric):
    """Yield (level i, Q^i-connected component of F_i)."""
    for i, F in enumerate(dec.parts):
        for comp in connected_components(F, dec.Q ** i, metric):
            yield i, comp


# -- removal time ----------------------------------------------------------------------------

def removal_steps(lattice, cells, cfg: SweepConfig = SweepConfig(rule="sweep"), max_steps: int = 10_000) -> int | None:
    """Number of noiseless rule applications needed to clear the boundary of
    ``cells`` in isolation (None if not cleared within ``max_steps``)."""
    err = np.zeros(lattice.num_qubits, dtype=np.uint8)
    err[list(cells)] = 1
    sigma = lattice.syndrome_of(err)
    if not sigma.any():
        return 0
    corr = np.zeros(lattice.num_qubits, dtype=np.uint8)
    eng = engine_for(lattice.structure, cfg.rule)
    steps, _ = eng.run(sigma, corr, max_steps)
    return None if sigma.any() else steps


def removal_time_oracle(lattice, cells, Q: float, level: int,
                        cfg: SweepConfig = SweepConfig(rule="sweep")) -> bool:
    """True iff the boundary of ``cells`` is cleared within T_i = c_D c_P Q^i steps."""
    if len(cells) == 0:
        return True
    c = lattice.constants
    bound = c.c_D * c.c_P * Q ** level
    steps = removal_steps(lattice, cells, cfg, max_steps=int(math.floor(bound)))
    return steps is not None and steps <= bound


# -- closed-form bound ----------------------------------------------------------------------

def pth_lower_bound(constants, Q: float | None = None) -> float:
    """p*_th = 1 / (((2Q)^d c_B)^2 max_v |star_k v|), default Q = 6 c_D c_P."""
    if Q is None:
        Q = 6 * constants.c_D * constants.c_P
    lam = (2 * Q) ** constants.d * constants.c_B
    return 1.0 / (lam * lam * constants.max_star_k)


def m_star(L: int, Q: float, c_D: float) -> int:
    """Highest chunk level the proof guarantees to be correctable, ceil(log_Q(L / c_D))."""
    return int(math.ceil(math.log(L / c_D) / math.log(Q)))


# -- sweep-rule invariants ------------------------------------------------------------------

@dataclass
class InvariantReport:
    steps: int
    t_star: int
    support: bool
    propagation: bool
    removal: bool
    monotone: bool
    f_values: list

    @property
    def ok(self) -> bool:
        return self.support and self.propagation and self.removal and self.monotone


def check_sweep_invariants(lattice, sigma: np.ndarray, cfg: SweepConfig = SweepConfig(rule="sweep"),
                           anchor_vertex: int | None = None) -> InvariantReport:
    """Iterate the noiseless rule from a local syndrome and test support,
    propagation, removal and the monotone, working in a lifted patch."""
    s = lattice.structure
    cx, k = lattice.complex, lattice.k
    cover = s.cover
    syn = np.flatnonzero(sigma)
    if len(syn) == 0:
        return InvariantReport(0, 0, True, True, True, True, [0])
    if anchor_vertex is None:
        anchor_vertex = int(cx.cell_vertices[k - 1][syn[0], 0])
    anchor = tuple(cx.vertex_coords[anchor_vertex].tolist())

    def lifted_vertices(cells):
        pts = set()
        for c in cells:
            pts.update(cover.cell_points_at(k - 1, int(c), anchor))
        return pts

    start = lifted_vertices(syn)
    lo, hi = cover.inf(start), cover.sup(start)
    region = cover.interval(lo, hi)
    lengths = cover.longest_paths_to(region, hi)
    t_star = lengths[lo]
    torus_region = {cover.vertex(x) for x in region}
    if len(torus_region) != len(region):
        raise CausalError("causal diamond wraps around the torus; syndrome is not local")
    allowed = set(diamond_cells(cx, k - 1, torus_region).tolist())
    cdist = cover.causal_distance_sets(start, t_star + 2, within=region)
    eng = engine_for(s, cfg.rule)
    bits = np.asarray(sigma, dtype=np.uint8).copy()
    corr = np.zeros(lattice.num_qubits, dtype=np.uint8)
    support = propagation = monotone = True
    f_vals = []
    T = 1
    while True:
        cur = np.flatnonzero(bits)
        verts = lifted_vertices(cur)
        if cur.size:
            support &= set(cur.tolist()) <= allowed and verts <= region
            propagation &= all(cdist.get(v, math.inf) <= T for v in verts)
            f = max(lengths.get(v, math.inf) for v in verts)
        else:
            f = 0
        if f_vals and f_vals[-1] > 0 and not f < f_vals[-1]:
            monotone = False
        f_vals.append(f)
        if not cur.size or T > t_star + 1:
            break
        eng.run(bits, corr, 1)
        T += 1
    # sigma^(T) = 0 for all T > T*: the wall is empty by index T* + 1
    removal = not bits.any() and T <= t_star + 1
    return InvariantReport(T - 1, int(t_star), bool(support), bool(propagation), bool(removal),
                           bool(monotone), [float(v) for v in f_vals])


def local_patch_cells(lattice, center: int, radius: int, metric: str = "skeleton") -> np.ndarray:
    """k-cells whose vertices all lie within ``radius`` of ``center``."""
    d = distances_from(lattice.complex, [center], metric)[0]
    inside = d[lattice.complex.cell_vertices[lattice.k]] <= radius
    return np.flatnonzero(inside.all(axis=1))


def sample_local_error(lattice, p: float, radius: int, rng: np.random.Generator,
                       max_diameter: int | None = None, max_tries: int = 10_000) -> np.ndarray:
    """Bernoulli(p) error restricted to a random ball, resampled until it has
    a nonzero syndrome and vertex diameter below L/2 (or ``max_diameter``)."""
    cx = lattice.complex
    if max_diameter is None:
        max_diameter = (lattice.size - 1) // 2
    for _ in range(max_tries):
        center = int(rng.integers(cx.num_cells(0)))
        cells = local_patch_cells(lattice, center, radius)
        hit = cells[rng.random(len(cells)) < p]
        if len(hit) and diameter(cx, cx.cell_vertices[lattice.k][hit].ravel()) <= max_diameter:
            err = np.zeros(lattice.num_qubits, dtype=np.uint8)
            err[hit] = 1
            if lattice.syndrome_of(err).any():
                return err
    raise ValueError(f"no local error accepted in {max_tries} draws; lower p or the radius")


# -- lattice conditions and constants ---------------------------------------------------------

@dataclass
class ConditionReport:
    structural: list
    condition_i: list
    condition_ii: list
    c_B: float
    c_D: float
    c_P: float
    samples: int

    @property
    def ok(self) -> bool:
        return not (self.structural or self.condition_i or self.condition_ii)

    def to_dict(self) -> dict:
        return {"ok": self.ok, "structural": self.structural, "condition_i": self.condition_i,
                "condition_ii": self.condition_ii, "c_B": self.c_B, "c_D": self.c_D,
                "c_P": self.c_P, "samples": self.samples}


def _greedy_cover_count(dist_rows: np.ndarray, ball: np.ndarray, r: int) -> int:
    uncovered = ball.copy()
    count = 0
    while uncovered.any():
        gain = (dist_rows[:, uncovered] <= r).sum(axis=1)
        best = int(np.argmax(gain))
        uncovered &= dist_rows[best] > r
        count += 1
    return count


def check_causal_conditions(lattice, budget: int = 200, seed: int = 0, exhaustive: bool = True,
                            metric: str = "cell") -> ConditionReport:
    """Validate the complex and the causal conditions, and estimate the
    constants c_B, c_D, c_P as worst observed ratios over sampled sets."""
    cx, s = lattice.complex, lattice.structure
    rng = np.random.default_rng(seed)
    structural = validate_complex(cx)
    cond_ii = []
    if exhaustive:
        for c, rule in enumerate(s.rules):
            for p in rule.condition_ii_violations():
                vs = np.flatnonzero(s.vertex_class == c)
                cond_ii.append({"vertex": int(vs[0]), "pattern": int(p)})
    cond_i = []
    cover = s.cover
    L = systole(cx, metric)
    V = cx.num_cells(0)
    c_D = c_P = 1.0
    radius = max(1, (L // 2 - 1) // 2)
    n_samples = 0
    for _ in range(budget):
        v = int(rng.integers(V))
        dv = distances_from(cx, [v], metric)[0]
        near = np.flatnonzero((dv <= radius) & (dv > 0))
        if len(near) == 0:
            continue
        size = int(rng.integers(1, min(4, len(near)) + 1))
        pick = [v] + [int(x) for x in rng.choice(near, size=size, replace=False)]
        anchor = tuple(cx.vertex_coords[v].tolist())
        pts = [cover.lift(u, anchor) for u in pick]
        try:
            lo, hi = cover.inf(pts), cover.sup(pts)
        except CausalError as exc:
            cond_i.append({"vertices": pick, "error": str(exc)})
            continue
        n_samples += 1
        region = cover.interval(lo, hi)
        reg_t = sorted({cover.vertex(x) for x in region})
        rows = distances_from(cx, pick, metric)
        diam_v = int(rows[:, pick].max())
        if diam_v > 0:
            diam_r = int(distances_from(cx, reg_t, metric)[:, reg_t].max())
            c_D = max(c_D, diam_r / diam_v)
        # longest causal path between comparable pairs of the sample
        for a, b in itertools.permutations(range(len(pick)), 2):
            if cover.precedes(pts[a], pts[b]) and pts[a] != pts[b]:
                lp = cover.longest_path(pts[a], pts[b])
                c_P = max(c_P, lp / int(rows[a, pick[b]]))
    # ball-cover constant: cover B_v(R) by balls of radius r
    d = cx.dimension
    c_B = 0.0
    v = int(rng.integers(V))
    R = max(2, L // 2 - 1)
    dv = distances_from(cx, [v], metric)[0]
    ball = dv <= R
    rows = distances_from(cx, np.flatnonzero(ball), metric)
    for r in range(1, R):
        cnt = _greedy_cover_count(rows, ball.copy(), r)
        c_B = max(c_B, cnt / (R / r) ** d)
    return ConditionReport(structural, cond_i, cond_ii, float(c_B), float(c_D), float(c_P), n_samples)
