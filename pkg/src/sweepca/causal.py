"""Causal structure induced by a sweep direction.

The partial order is only meaningful on local regions of the torus, so all
order queries work with *lifted* integer coordinates in the universal cover.
A lifted point maps to a torus vertex by reduction modulo the period; its
neighbours are found from the lifted edge offsets of that torus vertex.

``SweepStructure`` precomputes, for every vertex, the local slot layout of the
syndrome star and of the future k-cells, plus the lookup tables that the
cellular-automaton kernel uses (one table per translation class of vertices).
"""
from __future__ import annotations

import itertools
from collections import deque

import numpy as np

from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import shortest_path

from .complex import FACET_RULES, CellComplex, ComplexError, f2_span

INFINITE = float("inf")
MAX_TABLE_BITS = 16


class CausalError(ComplexError):
    """Raised when a causal query is ill-posed (no unique infimum or supremum)."""


class RegionTooLargeError(CausalError):
    """Raised when vertices do not fit in a local region (diameter < L/2)."""


class Cover:
    """Universal-cover navigation for a torus complex and a sweep direction."""

    def __init__(self, cx: CellComplex, direction):
        self.cx = cx
        self.t = np.asarray(direction, dtype=float)
        if self.t.shape != (cx.dimension,):
            raise ValueError("sweep direction has the wrong dimension")
        pts = cx.cell_points[1]
        ev = cx.cell_vertices[1]
        delta = pts[:, 1] - pts[:, 0]
        rise = cx.position(delta) @ self.t
        scale = np.abs(cx.position(delta)).max()
        if np.any(np.abs(rise) <= 1e-9 * max(scale, 1.0)):
            bad = int(np.flatnonzero(np.abs(rise) <= 1e-9 * max(scale, 1.0))[0])
            raise CausalError(f"sweep direction {tuple(self.t)} is perpendicular to edge {bad}")
        n = cx.num_cells(0)
        fut: list[list] = [[] for _ in range(n)]
        past: list[list] = [[] for _ in range(n)]
        for (a, b), dv, r in zip(ev.tolist(), delta.tolist(), rise.tolist()):
            dv = tuple(dv)
            neg = tuple(-x for x in dv)
            (fut if r > 0 else past)[a].append(dv)
            (past if r > 0 else fut)[b].append(neg)
        self.future_offsets = [tuple(sorted(set(f))) for f in fut]
        self.past_offsets = [tuple(sorted(set(p))) for p in past]
        self.min_rise = float(np.abs(rise).min())
        self.max_rise = float(np.abs(rise).max())
        self._lookup = cx._lookup
        self._period = tuple(int(p) for p in cx.period)
        # height t . (E x) is linear in the integer coordinates
        self._height_coef = tuple(float(c) for c in cx.embedding.T @ self.t)
        self._prec_cache: dict = {}
        self._join_cache: dict = {}
        self._meet_cache: dict = {}

    # -- basic navigation --------------------------------------------------------
    def vertex(self, x) -> int:
        return int(self._lookup[tuple(a % p for a, p in zip(x, self._period))])

    def height(self, x) -> float:
        return float(sum(a * h for a, h in zip(x, self._height_coef)))

    def future_neighbors(self, x):
        v = self.vertex(x)
        return [tuple(a + b for a, b in zip(x, o)) for o in self.future_offsets[v]]

    def past_neighbors(self, x):
        v = self.vertex(x)
        return [tuple(a + b for a, b in zip(x, o)) for o in self.past_offsets[v]]

    def neighbors(self, x):
        return self.future_neighbors(x) + self.past_neighbors(x)

    def future_cone(self, x, max_height: float) -> set:
        return self._cone(tuple(x), max_height, future=True)

    def past_cone(self, x, min_height: float) -> set:
        return self._cone(tuple(x), min_height, future=False)

    def _cone(self, x, bound, future):
        seen = {x}
        queue = deque([x])
        eps = 1e-9
        while queue:
            y = queue.popleft()
            for z in (self.future_neighbors(y) if future else self.past_neighbors(y)):
                if z in seen:
                    continue
                h = self.height(z)
                if (future and h > bound + eps) or (not future and h < bound - eps):
                    continue
                seen.add(z)
                queue.append(z)
        return seen

    # -- order --------------------------------------------------------------------
    def _key(self, x, y):
        return self.vertex(x), tuple(b - a for a, b in zip(x, y))

    def precedes(self, x, y) -> bool:
        """x precedes-or-equals y: a causal path from x to y with rising height."""
        x, y = tuple(x), tuple(y)
        if x == y:
            return True
        key = self._key(x, y)
        hit = self._prec_cache.get(key)
        if hit is None:
            hy = self.height(y)
            hit = hy > self.height(x) and y in self.future_cone(x, hy)
            self._prec_cache[key] = hit
        return hit

    def join(self, x, y):
        """Least common successor (supremum) of two lifted points."""
        return self._bound(tuple(x), tuple(y), upper=True)

    def meet(self, x, y):
        return self._bound(tuple(x), tuple(y), upper=False)

    def _bound(self, x, y, upper):
        if self.precedes(x, y):
            return y if upper else x
        if self.precedes(y, x):
            return x if upper else y
        cache = self._join_cache if upper else self._meet_cache
        key = self._key(x, y)
        if key in cache:
            off = cache[key]
            return tuple(a + b for a, b in zip(x, off))
        hx, hy = self.height(x), self.height(y)
        slack = 2 * self.max_rise
        for _ in range(12):
            if upper:
                top = max(hx, hy) + slack
                common = self.future_cone(x, top) & self.future_cone(y, top)
                extreme = [z for z in common if not any(w in common for w in self.past_neighbors(z))]
            else:
                bot = min(hx, hy) - slack
                common = self.past_cone(x, bot) & self.past_cone(y, bot)
                extreme = [z for z in common if not any(w in common for w in self.future_neighbors(z))]
            if len(extreme) == 1:
                z = extreme[0]
                cache[key] = tuple(b - a for a, b in zip(x, z))
                return z
            if len(extreme) > 1:
                # candidates at the truncation boundary may be spurious; widen and retry
                if upper:
                    inner = [z for z in extreme if self.height(z) < top - self.max_rise]
                else:
                    inner = [z for z in extreme if self.height(z) > bot + self.max_rise]
                if len(inner) > 1:
                    kind = "supremum" if upper else "infimum"
                    raise CausalError(f"no unique {kind} for {x} and {y}")
            slack *= 2
        raise CausalError(f"no {'supremum' if upper else 'infimum'} found for {x} and {y}")

    def sup(self, points):
        pts = [tuple(p) for p in points]
        if not pts:
            raise CausalError("supremum of an empty set")
        acc = pts[0]
        for p in pts[1:]:
            acc = self.join(acc, p)
        return acc

    def inf(self, points):
        pts = [tuple(p) for p in points]
        if not pts:
            raise CausalError("infimum of an empty set")
        acc = pts[0]
        for p in pts[1:]:
            acc = self.meet(acc, p)
        return acc

    def interval(self, low, high) -> set:
        """All lifted vertices w with low <= w <= high (the causal diamond's vertices)."""
        low, high = tuple(low), tuple(high)
        if not self.precedes(low, high):
            return set()
        up = self.future_cone(low, self.height(high))
        down = self.past_cone(high, self.height(low))
        return up & down

    def diamond(self, points) -> set:
        pts = [tuple(p) for p in points]
        if not pts:
            return set()
        return self.interval(self.inf(pts), self.sup(pts))

    def longest_paths_to(self, region: set, top) -> dict:
        """Longest causal path length from each vertex of ``region`` to ``top``,
        restricted to the region (intended for an interval ending at ``top``)."""
        order = sorted(region, key=self.height, reverse=True)
        best = {tuple(top): 0}
        for x in order:
            if x == tuple(top):
                continue
            vals = [best[y] for y in self.future_neighbors(x) if y in best]
            if vals:
                best[x] = 1 + max(vals)
        return best

    def longest_path(self, low, high) -> int:
        low, high = tuple(low), tuple(high)
        if not self.precedes(low, high):
            raise CausalError("no causal path between the given points")
        return self.longest_paths_to(self.interval(low, high), high)[low]

    def causal_distance_sets(self, sources, max_depth: int, within: set | None = None) -> dict:
        """Shortest causal distance (either direction) from a set of points to
        every point within ``max_depth`` steps.  ``within`` restricts the
        search to an order-convex set such as a causal diamond, which loses no
        shortest path between its members."""
        best: dict = {}
        for future in (True, False):
            dist = {tuple(s): 0 for s in sources}
            queue = deque(dist)
            while queue:
                y = queue.popleft()
                if dist[y] >= max_depth:
                    continue
                for z in (self.future_neighbors(y) if future else self.past_neighbors(y)):
                    if z not in dist and (within is None or z in within):
                        dist[z] = dist[y] + 1
                        queue.append(z)
            for z, dz in dist.items():
                if dz < best.get(z, INFINITE):
                    best[z] = dz
        return best

    def causal_distance(self, x, y) -> float:
        x, y = tuple(x), tuple(y)
        if x == y:
            return 0
        hx, hy = self.height(x), self.height(y)
        lo, hi = (x, y) if hx < hy else (y, x)
        bound = int(abs(hy - hx) / self.min_rise) + 1
        dist = {lo: 0}
        queue = deque([lo])
        top = max(hx, hy) + 1e-9
        while queue:
            z = queue.popleft()
            if z == hi:
                return dist[z]
            if dist[z] >= bound:
                continue
            for w in self.future_neighbors(z):
                if w not in dist and self.height(w) <= top:
                    dist[w] = dist[z] + 1
                    queue.append(w)
        return INFINITE

    def cell_points_at(self, k: int, index: int, near) -> list:
        """Lifted coordinates of a torus k-cell, translated next to ``near``."""
        pts = self.cx.cell_points[k][index]
        near = np.asarray(near)
        shift = self.cx.minimal_image(pts[0] - near) - (pts[0] - near)
        return [tuple(p) for p in (pts + shift).tolist()]

    def lift(self, vertex: int, near) -> tuple:
        c = self.cx.vertex_coords[vertex]
        near = np.asarray(near)
        return tuple((near + self.cx.minimal_image(c - near)).tolist())


def _encode_rows(rel: np.ndarray, bound: int) -> np.ndarray:
    base = 2 * bound + 1
    codes = np.zeros(rel.shape[:-1], dtype=np.int64)
    for i in range(rel.shape[-1]):
        codes = codes * base + (rel[..., i] + bound)
    return codes


def _star_layout(cx: CellComplex, k: int):
    """For every vertex, the k-cells containing it ordered by their relative
    geometry.  Returns (cells[v, slot], keys[v, slot, m], rel points per slot
    for every vertex)."""
    pts = cx.cell_points[k]
    verts = cx.cell_vertices[k]
    n, m, d = pts.shape
    rel = pts[:, None, :, :] - pts[:, :, None, :]          # (n, j, m, d) relative to vertex j
    bound = int(np.abs(rel).max()) + 1
    codes = np.sort(_encode_rows(rel, bound), axis=2)       # (n, j, m)
    owner = verts.reshape(-1)
    cells = np.repeat(np.arange(n), m)
    keys = codes.reshape(n * m, m)
    order = np.lexsort(tuple(keys[:, c] for c in reversed(range(m))) + (owner,))
    owner, cells, keys = owner[order], cells[order], keys[order]
    counts = np.bincount(owner, minlength=cx.num_cells(0))
    if counts.min() != counts.max():
        # irregular stars are padded with -1
        width = counts.max()
        out_cells = np.full((cx.num_cells(0), width), -1, dtype=np.int64)
        out_keys = np.full((cx.num_cells(0), width, m), -1, dtype=np.int64)
        start = np.concatenate([[0], np.cumsum(counts)])
        for v in range(cx.num_cells(0)):
            out_cells[v, :counts[v]] = cells[start[v]:start[v + 1]]
            out_keys[v, :counts[v]] = keys[start[v]:start[v + 1]]
        return out_cells, out_keys, rel, order
    width = counts[0]
    return cells.reshape(-1, width), keys.reshape(-1, width, m), rel, order


class LocalRule:
    """Rule tables for one translation class of vertices.

    Slots are positions in the vertex's syndrome star ((k-1)-cells containing
    it); candidates are subsets of the future k-cells, stored as bitmasks over
    future slots.  ``greedy[p]`` / ``sweep[p]`` give the flip bitmask for a
    local syndrome pattern ``p``."""

    def __init__(self, cover: Cover, anchor: tuple, syn_rel, kcell_rel, kind: str):
        self.cover = cover
        self.anchor = anchor
        self.geometry_key = (kind, tuple(map(tuple, map(sorted, syn_rel))),
                             tuple(map(tuple, map(sorted, kcell_rel))))
        self.syn_cells = [tuple(sorted(tuple(a + b for a, b in zip(anchor, r)) for r in cell)) for cell in syn_rel]
        self.kcells = [tuple(tuple(a + b for a, b in zip(anchor, r)) for r in cell) for cell in kcell_rel]
        slot_of = {c: i for i, c in enumerate(self.syn_cells)}
        self.n_slots = len(self.syn_cells)
        self.syn_future = [all(cover.precedes(anchor, p) for p in c) for c in self.syn_cells]
        self.k_future = [all(cover.precedes(anchor, p) for p in c) for c in self.kcells]
        facets = FACET_RULES[kind]
        # local boundary of every star k-cell, restricted to the syndrome star
        self.k_bmask = []
        for cell in self.kcells:
            m = 0
            for f in facets(np.array(cell)):
                key = tuple(sorted(map(tuple, f.tolist())))
                if anchor in key:
                    if key not in slot_of:
                        raise ComplexError("facet of a star cell missing from the syndrome star")
                    m ^= 1 << slot_of[key]
            self.k_bmask.append(m)
        self.future_slots = [i for i, f in enumerate(self.k_future) if f]
        self.future_syndrome_mask = sum(1 << i for i, f in enumerate(self.syn_future) if f)
        self.admissible = f2_span(self.k_bmask)
        self._build_candidates()

    # -- candidate enumeration ---------------------------------------------------
    def _build_candidates(self):
        cov = self.cover
        fs = self.future_slots
        nf = len(fs)
        if nf > 20:
            raise ComplexError("too many future cells for exhaustive candidate search")
        cand = []
        for r in range(nf + 1):
            for combo in itertools.combinations(range(nf), r):
                bm = 0
                for j in combo:
                    bm ^= self.k_bmask[fs[j]]
                verts = {p for j in combo for p in self.kcells[fs[j]]}
                cand.append((combo, bm, verts))
        self.candidates = []
        for combo, bm, verts in cand:
            if verts:
                lo, hi = cov.inf(verts), cov.sup(verts)
            else:
                lo = hi = None
            self.candidates.append((combo, bm, lo, hi))
        # preference order: fewest flips, then lexicographic on future-slot index
        self.candidates.sort(key=lambda c: (len(c[0]), c[0]))
        self._slot_inf = [cov.inf(c) for c in self.syn_cells]
        self._slot_sup = [cov.sup(c) for c in self.syn_cells]

    def pattern_bounds(self, pattern: int):
        lo = hi = None
        for s in range(self.n_slots):
            if pattern >> s & 1:
                lo = self._slot_inf[s] if lo is None else self.cover.meet(lo, self._slot_inf[s])
                hi = self._slot_sup[s] if hi is None else self.cover.join(hi, self._slot_sup[s])
        return lo, hi

    def trailing(self, pattern: int) -> bool:
        return pattern != 0 and (pattern & ~self.future_syndrome_mask) == 0

    def choose(self, pattern: int, rule: str) -> int | None:
        """Flip set (bitmask over future slots) for a local syndrome pattern.

        ``rule='sweep'``: exact local match with equal causal diamond, only at
        trailing vertices; returns None when a trailing pattern has no match.
        ``rule='greedy'``: boundary contained in the pattern, diamond contained,
        minimal residual."""
        if pattern == 0:
            return 0
        cov = self.cover
        lo, hi = self.pattern_bounds(pattern)
        if rule == "sweep":
            if not self.trailing(pattern):
                return 0
            for combo, bm, clo, chi in self.candidates:
                if bm == pattern and clo == lo and chi == hi:
                    return self._to_mask(combo)
            return None
        if rule != "greedy":
            raise ValueError(f"unknown rule {rule!r}")
        best, best_res = 0, bin(pattern).count("1")
        for combo, bm, clo, chi in self.candidates:
            if not combo or bm & ~pattern:
                continue
            res = bin(pattern ^ bm).count("1")
            if res >= best_res:
                continue
            if cov.precedes(lo, clo) and cov.precedes(chi, hi):
                best, best_res = self._to_mask(combo), res
        return best

    @staticmethod
    def _to_mask(combo) -> int:
        m = 0
        for j in combo:
            m |= 1 << j
        return m

    def admissible_candidates(self, pattern: int) -> list:
        """All sweep-admissible flip sets for a trailing pattern (as tuples of
        future-slot positions)."""
        lo, hi = self.pattern_bounds(pattern)
        return [combo for combo, bm, clo, chi in self.candidates
                if bm == pattern and clo == lo and chi == hi]

    def table(self, rule: str) -> np.ndarray:
        if self.n_slots > MAX_TABLE_BITS:
            raise ComplexError(f"syndrome star of {self.n_slots} cells is too large for a lookup table")
        out = np.zeros(1 << self.n_slots, dtype=np.int64)
        for p in range(1, 1 << self.n_slots):
            m = self.choose(p, rule)
            out[p] = 0 if m is None else m
        return out

    def condition_ii_violations(self) -> list[int]:
        """Admissible trailing patterns with no matching flip set."""
        bad = []
        for p in sorted(self.admissible):
            if self.trailing(p) and self.choose(p, "sweep") is None:
                bad.append(p)
        return bad


class SweepStructure:
    """Per-vertex causal data for a sweep direction and code type k."""

    def __init__(self, cx: CellComplex, k: int, direction, check: bool = True):
        if not 1 <= k <= cx.dimension:
            raise ValueError("code type out of range")
        self.cx = cx
        self.k = k
        self.direction = tuple(float(x) for x in direction)
        self.cover = Cover(cx, direction)
        self.syn_slots, syn_keys, _, _ = _star_layout(cx, k - 1)
        self.k_slots_all, k_keys, _, _ = _star_layout(cx, k)
        # translation classes by local signature
        sig = np.concatenate([syn_keys.reshape(len(syn_keys), -1), k_keys.reshape(len(k_keys), -1)], axis=1)
        _, first, inverse = np.unique(sig, axis=0, return_index=True, return_inverse=True)
        self.vertex_class = inverse.reshape(-1).astype(np.int64)
        self.rules: list[LocalRule] = []
        for rep in first:
            anchor = tuple(cx.vertex_coords[rep].tolist())
            self.rules.append(LocalRule(
                self.cover, anchor,
                self._rel_cells(k - 1, self.syn_slots[rep], anchor),
                self._rel_cells(k, self.k_slots_all[rep], anchor),
                cx.kind))
        nf = max(len(r.future_slots) for r in self.rules)
        self.fut_slots = np.full((cx.num_cells(0), nf), -1, dtype=np.int64)
        for c, rule in enumerate(self.rules):
            vs = np.flatnonzero(self.vertex_class == c)
            if rule.future_slots:
                self.fut_slots[np.ix_(vs, np.arange(len(rule.future_slots)))] = self.k_slots_all[vs][:, rule.future_slots]
        if check:
            bad = {c: r.condition_ii_violations() for c, r in enumerate(self.rules)}
            bad = {c: v for c, v in bad.items() if v}
            if bad:
                c, pats = next(iter(bad.items()))
                raise CausalError(f"local sweep condition fails for vertex class {c} on pattern {pats[0]:#b}")
        self._tables: dict = {}

    def _rel_cells(self, k: int, cells: np.ndarray, anchor) -> list:
        out = []
        for c in cells:
            if c < 0:
                continue
            pts = self.cx.cell_points[k][c]
            verts = self.cx.cell_vertices[k][c]
            a_idx = self.cx.vertex_index(np.array(anchor))
            j = int(np.flatnonzero(verts == a_idx)[0])
            out.append([tuple(r) for r in (pts - pts[j]).tolist()])
        return out

    # -- tables for the kernel ----------------------------------------------------
    def tables(self, rule: str) -> np.ndarray:
        if rule not in self._tables:
            self._tables[rule] = _cached_tables(self, rule)
        return self._tables[rule]

    # -- per-vertex views ---------------------------------------------------------
    def rule_of(self, v: int) -> LocalRule:
        return self.rules[self.vertex_class[v]]

    def future_edges(self, v: int) -> list[int]:
        return self._partition_edges(v, True)

    def past_edges(self, v: int) -> list[int]:
        return self._partition_edges(v, False)

    def _partition_edges(self, v, future):
        cx = self.cx
        out = []
        for e in cx.cofacets(0, v):
            pts = cx.cell_points[1][e]
            j = int(np.flatnonzero(cx.cell_vertices[1][e] == v)[0])
            other = pts[1 - j] - pts[j]
            rise = float(cx.position(other) @ np.asarray(self.direction))
            if (rise > 0) == future:
                out.append(int(e))
        return sorted(out)

    def future_kcells(self, v: int) -> list[int]:
        rule = self.rule_of(v)
        return sorted(int(self.k_slots_all[v][i]) for i in rule.future_slots)

    def future_syndrome_cells(self, v: int) -> list[int]:
        rule = self.rule_of(v)
        return sorted(int(self.syn_slots[v][i]) for i in range(rule.n_slots) if rule.syn_future[i])

    def pattern(self, v: int, syndrome_bits: np.ndarray) -> int:
        rule = self.rule_of(v)
        p = 0
        for s in range(rule.n_slots):
            if syndrome_bits[self.syn_slots[v][s]]:
                p |= 1 << s
        return p

    def cells_from_mask(self, v: int, mask: int) -> list[int]:
        return [int(self.fut_slots[v][j]) for j in range(self.fut_slots.shape[1]) if mask >> j & 1]

    def phi_candidates(self, v: int, syndrome_bits: np.ndarray) -> list[list[int]]:
        rule = self.rule_of(v)
        p = self.pattern(v, syndrome_bits)
        return [self.cells_from_mask(v, rule._to_mask(c)) for c in rule.admissible_candidates(p)]


_TABLE_CACHE: dict = {}


def _cached_tables(structure: SweepStructure, rule: str) -> np.ndarray:
    # tables depend only on local geometry, so they are shared across sizes
    tabs = []
    for r in structure.rules:
        key = (r.geometry_key, structure.direction, rule)
        if key not in _TABLE_CACHE:
            _TABLE_CACHE[key] = r.table(rule)
        tabs.append(_TABLE_CACHE[key])
    out = np.zeros((len(tabs), max(len(t) for t in tabs)), dtype=np.int64)
    for i, t in enumerate(tabs):
        out[i, :len(t)] = t
    return out


# -- torus metrics ----------------------------------------------------------------------

METRICS = ("skeleton", "cell")


def adjacency(cx: CellComplex, metric: str = "skeleton"):
    """Sparse vertex adjacency.  ``skeleton``: edges of the complex.  ``cell``:
    any two vertices of a common top cell (identical to ``skeleton`` on
    simplicial complexes; on cubical ones the diagonal of a cell has length 1)."""
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    cache = cx.__dict__.setdefault("_adjacency", {})
    if metric not in cache:
        verts = cx.cell_vertices[1] if metric == "skeleton" else cx.cell_vertices[cx.dimension]
        i, j = np.triu_indices(verts.shape[1], 1)
        a = np.concatenate([verts[:, i].ravel(), verts[:, j].ravel()])
        b = np.concatenate([verts[:, j].ravel(), verts[:, i].ravel()])
        n = cx.num_cells(0)
        m = coo_matrix((np.ones(len(a), dtype=np.int8), (a, b)), shape=(n, n)).tocsr()
        m.data[:] = 1
        cache[metric] = m
    return cache[metric]


def distances_from(cx: CellComplex, sources, metric: str = "skeleton") -> np.ndarray:
    """Graph distances from each source vertex to every vertex, shape (len(sources), V)."""
    src = np.atleast_1d(np.asarray(sources, dtype=np.int64))
    d = shortest_path(adjacency(cx, metric), unweighted=True, indices=src, directed=False)
    return d.astype(np.int64)


def distance(cx: CellComplex, u: int, w: int, metric: str = "skeleton") -> int:
    return int(distances_from(cx, [u], metric)[0, w])


def diameter(cx: CellComplex, vertices, metric: str = "skeleton") -> int:
    vs = np.unique(np.asarray(list(vertices), dtype=np.int64))
    if len(vs) <= 1:
        return 0
    return int(distances_from(cx, vs, metric)[:, vs].max())


def systole(cx: CellComplex, metric: str = "skeleton") -> int:
    """Length of the shortest non-contractible loop through vertex 0 along a
    lattice axis (the linear size L for the shipped lattices)."""
    v0 = cx.vertex_coords[0]
    best = None
    for axis in range(cx.dimension):
        # walk the cover: distance from v0 to its translate by one period
        step = np.zeros(cx.dimension, dtype=np.int64)
        step[axis] = cx.period[axis]
        half = v0 + step // 2
        w = int(cx.vertex_index(half)) if cx.vertex_index(half) >= 0 else None
        if w is None:
            continue
        d = 2 * distance(cx, 0, w, metric)
        best = d if best is None else min(best, d)
    return best


def lift_local(structure: "SweepStructure", vertices, size: int | None = None) -> list[tuple]:
    """Lift torus vertices into one patch of the cover around the first one,
    rejecting sets whose diameter is not below L/2."""
    cx = structure.cx
    vs = [int(v) for v in vertices]
    if not vs:
        return []
    L = size if size is not None else systole(cx)
    if diameter(cx, vs) * 2 >= L:
        raise RegionTooLargeError(f"vertex set of diameter {diameter(cx, vs)} is not local (L = {L})")
    anchor = tuple(cx.vertex_coords[vs[0]].tolist())
    return [structure.cover.lift(v, anchor) for v in vs]


def causal_distance(structure: "SweepStructure", u: int, w: int, size: int | None = None):
    """Shortest causal path length between torus vertices u and w (INFINITE if
    they are incomparable)."""
    a, b = lift_local(structure, [u, w], size)
    return structure.cover.causal_distance(a, b)


def causal_diamond(structure: "SweepStructure", vertices, size: int | None = None) -> set[int]:
    """Torus vertices of the causal diamond of a local vertex set."""
    pts = lift_local(structure, vertices, size)
    if not pts:
        return set()
    cover = structure.cover
    return {cover.vertex(x) for x in cover.diamond(pts)}


def diamond_cells(cx: CellComplex, k: int, diamond_vertices) -> np.ndarray:
    """Indices of k-cells all of whose vertices lie in the given vertex set."""
    mask = np.zeros(cx.num_cells(0), dtype=bool)
    mask[list(diamond_vertices)] = True
    return np.flatnonzero(mask[cx.cell_vertices[k]].all(axis=1))
