"""F2 chain complexes over periodic cell complexes.

Cells of every dimension are stored by dense integer index.  Each k-cell also
keeps the lifted integer coordinates of its vertices (a representative of its
translation class modulo the torus period), which is what makes cells on very
small tori (L = 2) distinguishable even when they share a vertex set.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np


class ComplexError(ValueError):
    """Raised for malformed complexes or chains that do not belong to one."""


@dataclass(frozen=True)
class Chain:
    """An F2 chain: a set of k-cell indices."""

    k: int
    support: frozenset

    def __init__(self, k: int, support: Iterable[int] = ()):
        object.__setattr__(self, "k", int(k))
        object.__setattr__(self, "support", frozenset(int(i) for i in support))

    def __len__(self) -> int:
        return len(self.support)

    def __iter__(self):
        return iter(sorted(self.support))

    def __contains__(self, item) -> bool:
        return item in self.support

    def __add__(self, other: "Chain") -> "Chain":
        return add(self, other)

    def __bool__(self) -> bool:
        return bool(self.support)

    def to_array(self, size: int) -> np.ndarray:
        out = np.zeros(size, dtype=np.uint8)
        if self.support:
            out[np.fromiter(self.support, dtype=np.int64)] = 1
        return out

    @classmethod
    def from_array(cls, k: int, bits: np.ndarray) -> "Chain":
        return cls(k, np.flatnonzero(np.asarray(bits)).tolist())

    def __repr__(self) -> str:
        return f"Chain(k={self.k}, {sorted(self.support)})"


def add(a: Chain, b: Chain) -> Chain:
    if a.k != b.k:
        raise ComplexError(f"cannot add a {a.k}-chain and a {b.k}-chain")
    return Chain(a.k, a.support ^ b.support)


def parity_reduce(indices: np.ndarray, size: int) -> np.ndarray:
    """Sum a multiset of cell indices over F2 into a dense bit array."""
    if indices.size == 0:
        return np.zeros(size, dtype=np.uint8)
    return (np.bincount(indices.ravel(), minlength=size) & 1).astype(np.uint8)


def canonical_points(points: np.ndarray, period: np.ndarray) -> tuple[np.ndarray, tuple]:
    """Translate a lifted cell so its lexicographically smallest vertex lies in
    the fundamental domain.  Returns the shifted points (original vertex order)
    and a hashable key identifying the translation class."""
    order = np.lexsort(points.T[::-1])
    low = points[order[0]]
    shifted = points + (np.mod(low, period) - low)
    key = tuple(sorted(map(tuple, shifted.tolist())))
    return shifted, key


def simplex_facets(points: np.ndarray) -> list[np.ndarray]:
    n = len(points)
    return [np.delete(points, i, axis=0) for i in range(n)]


def cube_facets(points: np.ndarray) -> list[np.ndarray]:
    """Facets of a parallelotope whose 2**k corners are in binary order
    (bit j of the corner index selects generating vector j)."""
    n = len(points)
    k = n.bit_length() - 1
    out = []
    for j in range(k):
        for side in (0, 1):
            idx = [i for i in range(n) if (i >> j) & 1 == side]
            out.append(points[idx])
    return out


FACET_RULES: dict[str, Callable[[np.ndarray], list[np.ndarray]]] = {
    "simplicial": simplex_facets,
    "cubical": cube_facets,
}


class CellComplex:
    """A finite cell complex on a d-torus with F2 boundary maps.

    ``cell_points[k]`` has shape (n_k, m_k, d): lifted integer coordinates of
    the vertices of every k-cell.  ``boundary_incidence[k]`` has shape
    (n_k, b_k) and lists the (k-1)-cell indices in the boundary of each k-cell.
    Real positions are ``coords @ embedding.T``.
    """

    def __init__(
        self,
        dimension: int,
        period: Sequence[int],
        embedding: np.ndarray,
        vertex_coords: np.ndarray,
        cell_points: Sequence[np.ndarray],
        boundary_incidence: Sequence[np.ndarray],
        kind: str = "simplicial",
    ):
        self.dimension = int(dimension)
        self.period = np.asarray(period, dtype=np.int64)
        self.embedding = np.asarray(embedding, dtype=float)
        self.vertex_coords = np.asarray(vertex_coords, dtype=np.int64)
        self.kind = kind
        if len(cell_points) != self.dimension + 1 or len(boundary_incidence) != self.dimension + 1:
            raise ComplexError("need cell data for every dimension 0..d")
        self.cell_points = tuple(np.asarray(p, dtype=np.int64) for p in cell_points)
        self.boundary_incidence = tuple(np.asarray(b, dtype=np.int64) for b in boundary_incidence)

        self._lookup = np.full(tuple(self.period), -1, dtype=np.int64)
        self._lookup[tuple(self.vertex_coords.T)] = np.arange(len(self.vertex_coords))
        if (self._lookup >= 0).sum() != len(self.vertex_coords):
            raise ComplexError("duplicate vertex coordinates")
        self.cell_vertices = tuple(self.vertex_index(p) for p in self.cell_points)
        self._validate_shapes()
        self.coboundary_indptr, self.coboundary_indices = self._transpose_all()
        for arr in (*self.cell_points, *self.boundary_incidence, *self.cell_vertices,
                    self.vertex_coords, self.period, self.embedding):
            arr.setflags(write=False)

    # -- construction helpers -------------------------------------------------
    @classmethod
    def from_top_cells(cls, dimension: int, period, embedding, top_points: np.ndarray,
                       kind: str, extra_vertices: np.ndarray | None = None) -> "CellComplex":
        """Generate all faces of the given top-dimensional cells, deduplicating
        by translation class."""
        period = np.asarray(period, dtype=np.int64)
        facets_of = FACET_RULES[kind]
        levels_points: list[list[np.ndarray]] = [[] for _ in range(dimension + 1)]
        levels_keys: list[dict] = [dict() for _ in range(dimension + 1)]
        boundary: list[list[list[int]]] = [[] for _ in range(dimension + 1)]

        def register(k: int, pts: np.ndarray) -> int:
            shifted, key = canonical_points(pts, period)
            idx = levels_keys[k].get(key)
            if idx is None:
                idx = len(levels_points[k])
                levels_keys[k][key] = idx
                levels_points[k].append(shifted)
                if k > 0:
                    boundary[k].append([register(k - 1, f) for f in facets_of(shifted)])
                else:
                    boundary[k].append([])
            return idx

        if extra_vertices is not None:
            for v in np.asarray(extra_vertices, dtype=np.int64):
                register(0, v[None, :])
        for pts in np.asarray(top_points, dtype=np.int64):
            register(dimension, pts)

        vertex_coords = np.array([p[0] for p in levels_points[0]], dtype=np.int64)
        cell_points = [np.array(levels_points[k], dtype=np.int64).reshape(len(levels_points[k]), -1, len(period))
                       for k in range(dimension + 1)]
        bnd = [np.zeros((len(levels_points[0]), 0), dtype=np.int64)]
        bnd += [np.array(boundary[k], dtype=np.int64) for k in range(1, dimension + 1)]
        return cls(dimension, period, embedding, vertex_coords, cell_points, bnd, kind=kind)

    def _validate_shapes(self) -> None:
        if self.vertex_coords.shape[1] != self.dimension:
            raise ComplexError("vertex coordinates have the wrong dimension")
        for k in range(1, self.dimension + 1):
            b = self.boundary_incidence[k]
            if b.ndim != 2 or len(b) != self.num_cells(k):
                raise ComplexError(f"boundary incidence for k={k} has wrong shape")
            if b.size and (b.min() < 0 or b.max() >= self.num_cells(k - 1)):
                raise ComplexError(f"boundary incidence for k={k} references a missing cell")
            for row in b:
                if len(set(row.tolist())) != len(row):
                    raise ComplexError(f"duplicate entry in a boundary list for k={k}")

    def _transpose_all(self):
        indptr, indices = [], []
        for k in range(self.dimension + 1):
            if k == self.dimension:
                indptr.append(np.zeros(self.num_cells(k) + 1, dtype=np.int64))
                indices.append(np.zeros(0, dtype=np.int64))
                continue
            b = self.boundary_incidence[k + 1]
            rows = np.repeat(np.arange(len(b)), b.shape[1])
            cols = b.ravel()
            order = np.lexsort((rows, cols))
            counts = np.bincount(cols, minlength=self.num_cells(k))
            indptr.append(np.concatenate([[0], np.cumsum(counts)]))
            indices.append(rows[order])
        return tuple(indptr), tuple(indices)

    # -- queries ----------------------------------------------------------------
    def num_cells(self, k: int) -> int:
        return len(self.cell_points[k])

    @property
    def counts(self) -> tuple[int, ...]:
        return tuple(self.num_cells(k) for k in range(self.dimension + 1))

    def euler_characteristic(self) -> int:
        return sum((-1) ** k * n for k, n in enumerate(self.counts))

    def vertex_index(self, coords: np.ndarray) -> np.ndarray:
        """Torus vertex index of (arrays of) lifted integer coordinates."""
        c = np.mod(np.asarray(coords, dtype=np.int64), self.period)
        return self._lookup[tuple(np.moveaxis(c, -1, 0))]

    def position(self, coords: np.ndarray) -> np.ndarray:
        return np.asarray(coords, dtype=float) @ self.embedding.T

    def minimal_image(self, delta: np.ndarray) -> np.ndarray:
        """Shortest representative of an integer displacement modulo the period."""
        d = np.mod(np.asarray(delta, dtype=np.int64), self.period)
        return np.where(d > self.period // 2, d - self.period, d)

    def facets(self, k: int, index: int) -> np.ndarray:
        return self.boundary_incidence[k][index]

    def cofacets(self, k: int, index: int) -> np.ndarray:
        ptr = self.coboundary_indptr[k]
        return self.coboundary_indices[k][ptr[index]:ptr[index + 1]]

    def star(self, k: int, index: int, n: int) -> list[int]:
        """All n-cells containing the given k-cell (the n-star)."""
        if n < k:
            raise ComplexError("star dimension must be at least the cell dimension")
        self._check_index(k, index)
        current = {int(index)}
        for level in range(k, n):
            nxt = set()
            for c in current:
                nxt.update(self.cofacets(level, c).tolist())
            current = nxt
        return sorted(current)

    def _check_index(self, k: int, index: int) -> None:
        if not 0 <= k <= self.dimension:
            raise ComplexError(f"no cells of dimension {k}")
        if not 0 <= index < self.num_cells(k):
            raise ComplexError(f"{k}-cell index {index} out of range")

    def _check_chain(self, chain: Chain) -> None:
        if not 0 <= chain.k <= self.dimension:
            raise ComplexError(f"no cells of dimension {chain.k}")
        n = self.num_cells(chain.k)
        if chain.support and (min(chain.support) < 0 or max(chain.support) >= n):
            raise ComplexError(f"chain references a {chain.k}-cell outside the complex")

    # -- F2 linear maps -----------------------------------------------------------
    def boundary(self, chain: Chain) -> Chain:
        if chain.k < 1:
            raise ComplexError("the boundary of a 0-chain is not defined")
        self._check_chain(chain)
        bits = self.boundary_bits(chain.k, chain.to_array(self.num_cells(chain.k)))
        return Chain.from_array(chain.k - 1, bits)

    def boundary_bits(self, k: int, bits: np.ndarray) -> np.ndarray:
        """Boundary of a dense k-chain, returned as a dense (k-1)-chain."""
        idx = np.flatnonzero(bits)
        return parity_reduce(self.boundary_incidence[k][idx], self.num_cells(k - 1))

    def zero(self, k: int) -> Chain:
        return Chain(k)

    # -- serialization -----------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "schema": "sweepca.complex/1",
            "dimension": self.dimension,
            "kind": self.kind,
            "period": self.period.tolist(),
            "embedding": self.embedding.tolist(),
            "counts": list(self.counts),
            "vertices": self.vertex_coords.tolist(),
            "cells": {str(k): self.cell_points[k].tolist() for k in range(1, self.dimension + 1)},
            "boundary": {str(k): self.boundary_incidence[k].tolist() for k in range(1, self.dimension + 1)},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CellComplex":
        if data.get("schema") != "sweepca.complex/1":
            raise ComplexError(f"unknown complex schema {data.get('schema')!r}")
        d = int(data["dimension"])
        verts = np.asarray(data["vertices"], dtype=np.int64).reshape(-1, d)
        points = [verts[:, None, :]]
        bnd = [np.zeros((len(verts), 0), dtype=np.int64)]
        for k in range(1, d + 1):
            pts = np.asarray(data["cells"][str(k)], dtype=np.int64)
            points.append(pts.reshape(len(pts), -1, d) if len(pts) else np.zeros((0, 1, d), dtype=np.int64))
            b = np.asarray(data["boundary"][str(k)], dtype=np.int64)
            bnd.append(b.reshape(len(pts), -1) if len(pts) else np.zeros((0, 0), dtype=np.int64))
        cx = cls(d, data["period"], np.asarray(data["embedding"]), verts, points, bnd,
                 kind=data.get("kind", "simplicial"))
        if "counts" in data and list(cx.counts) != list(data["counts"]):
            raise ComplexError("cell counts do not match the stored incidence lists")
        problems = validate_complex(cx)
        if problems:
            raise ComplexError("; ".join(problems[:5]))
        return cx

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "CellComplex":
        return cls.from_dict(json.loads(text))


def validate_complex(cx: CellComplex) -> list[str]:
    """Structural checks: boundary-of-boundary, transposition, geometric
    containment of facets.  Returns human-readable violations (empty if none)."""
    problems = []
    for k in range(2, cx.dimension + 1):
        b2 = cx.boundary_incidence[k - 1][cx.boundary_incidence[k]]  # (n_k, b_k, b_{k-1})
        for i, row in enumerate(b2.reshape(len(b2), -1)):
            if (np.bincount(row) & 1).any():
                problems.append(f"boundary of boundary of {k}-cell {i} is nonzero")
                break
    for k in range(cx.dimension):
        for c in range(cx.num_cells(k)):
            cof = cx.cofacets(k, c)
            for parent in cof:
                if c not in cx.boundary_incidence[k + 1][parent]:
                    problems.append(f"coboundary of {k}-cell {c} lists {parent} which does not contain it")
                    break
    for k in range(1, cx.dimension + 1):
        for i, (pts, facets) in enumerate(zip(cx.cell_points[k], cx.boundary_incidence[k])):
            verts = set(cx.vertex_index(pts).tolist())
            for f in facets:
                fv = set(cx.cell_vertices[k - 1][f].tolist())
                if not fv <= verts:
                    problems.append(f"{k - 1}-cell {f} is not contained in {k}-cell {i}")
                    break
    return problems


def incidence_totals(cx: CellComplex, k: int) -> tuple[int, int]:
    """(sum of boundary-list lengths over k-cells, sum of coboundary-list
    lengths over (k-1)-cells); equal for a consistent complex."""
    down = int(cx.boundary_incidence[k].size)
    up = int(cx.coboundary_indptr[k - 1][-1])
    return down, up


def f2_span(vectors: Sequence[int]) -> set[int]:
    """All F2 combinations of bitmask vectors (small inputs only)."""
    span = {0}
    for v in vectors:
        if v not in span:
            span |= {s ^ v for s in span}
    return span


def subsets(items: Sequence, max_size: int | None = None):
    n = len(items)
    top = n if max_size is None else min(n, max_size)
    for r in range(top + 1):
        yield from itertools.combinations(items, r)
