"""Concrete periodic lattices and their sweep structures.

Families
--------
``cubic3d``         cubical 3-torus, unit spacing, default t = -(1,1,1)
``bcc3d``           bcc triangulation of the 3-torus; corners (2Z)^3, centers
                    (2Z+1)^3, 12 tetrahedra per corner cube, default t = (1,1,1)
``square2d``        square 2-torus, default t = -(1,1)
``parallelogram2d`` rhombille tiling (three rhombus orientations) on a 2-torus
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import TYPE_CHECKING

import numpy as np

from .complex import CellComplex, Chain

if TYPE_CHECKING:
    from .causal import SweepStructure

FAMILIES = ("cubic3d", "bcc3d", "square2d", "parallelogram2d")

DEFAULT_DIRECTIONS = {
    "cubic3d": (-1.0, -1.0, -1.0),
    "bcc3d": (1.0, 1.0, 1.0),
    "square2d": (-1.0, -1.0),
    "parallelogram2d": (-1.0, -1.0),
}

DIMENSION = {"cubic3d": 3, "bcc3d": 3, "square2d": 2, "parallelogram2d": 2}


@dataclass(frozen=True)
class LatticeSpec:
    family: str
    size: int
    k: int = 2
    sweep_direction: tuple | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown lattice family {self.family!r}; expected one of {FAMILIES}")
        if self.size < 2:
            raise ValueError("linear size must be at least 2")
        d = DIMENSION[self.family]
        if not 1 <= self.k <= d:
            raise ValueError(f"code type k={self.k} outside 1..{d}")
        if self.sweep_direction is not None:
            if len(self.sweep_direction) != d:
                raise ValueError("sweep direction has the wrong dimension")
            object.__setattr__(self, "sweep_direction", tuple(float(x) for x in self.sweep_direction))

    @property
    def dimension(self) -> int:
        return DIMENSION[self.family]

    @property
    def direction(self) -> tuple:
        return self.sweep_direction if self.sweep_direction is not None else DEFAULT_DIRECTIONS[self.family]

    def to_dict(self) -> dict:
        return {"family": self.family, "size": self.size, "k": self.k,
                "sweep_direction": list(self.direction)}


def cubic3d(L: int) -> CellComplex:
    g = np.stack(np.meshgrid(*[np.arange(L)] * 3, indexing="ij"), -1).reshape(-1, 3)
    corners = np.array([[(i >> 0) & 1, (i >> 1) & 1, (i >> 2) & 1] for i in range(8)])
    cubes = g[:, None, :] + corners[None, :, :]
    return CellComplex.from_top_cells(3, (L, L, L), np.eye(3), cubes, "cubical", extra_vertices=g)


def square2d(L: int) -> CellComplex:
    g = np.stack(np.meshgrid(np.arange(L), np.arange(L), indexing="ij"), -1).reshape(-1, 2)
    corners = np.array([[0, 0], [1, 0], [0, 1], [1, 1]])
    return CellComplex.from_top_cells(2, (L, L), np.eye(2), g[:, None, :] + corners[None], "cubical",
                                      extra_vertices=g)


def bcc3d(L: int) -> CellComplex:
    P = 2 * L
    base = 2 * np.stack(np.meshgrid(*[np.arange(L)] * 3, indexing="ij"), -1).reshape(-1, 3)
    ring = [(1, 1), (1, -1), (-1, -1), (-1, 1)]
    tets = []
    eye = np.eye(3, dtype=np.int64)
    for c in base:
        for i in range(3):
            j, k = [a for a in range(3) if a != i]
            centers = [c + eye[i] + sj * eye[j] + sk * eye[k] for sj, sk in ring]
            for r in range(4):
                tets.append([c, c + 2 * eye[i], centers[r], centers[(r + 1) % 4]])
    verts = np.concatenate([base, base + 1])
    return CellComplex.from_top_cells(3, (P, P, P), np.eye(3), np.array(tets), "simplicial",
                                      extra_vertices=verts)


PARALLELOGRAM_STEPS = np.array([[1, 0], [0, 1], [-1, -1]])


def parallelogram2d(L: int) -> CellComplex:
    """Rhombille tiling: the surface of a staircase of unit cubes projected
    along (1,1,1).  Vertices are Z^2 (skew coordinates) with period 3L; each
    vertex with X+Y = 0 mod 3 is the low corner of three rhombi."""
    P = 3 * L
    g = np.stack(np.meshgrid(np.arange(P), np.arange(P), indexing="ij"), -1).reshape(-1, 2)
    low = g[(g.sum(axis=1) % 3) == 0]
    cells = []
    for w in low:
        for a, b in ((0, 1), (0, 2), (1, 2)):
            ea, eb = PARALLELOGRAM_STEPS[a], PARALLELOGRAM_STEPS[b]
            cells.append([w, w + ea, w + eb, w + ea + eb])
    embedding = np.array([[1.0, -0.5], [0.0, math.sqrt(3) / 2]])
    return CellComplex.from_top_cells(2, (P, P), embedding, np.array(cells), "cubical", extra_vertices=g)


BUILDERS = {"cubic3d": cubic3d, "bcc3d": bcc3d, "square2d": square2d, "parallelogram2d": parallelogram2d}


@dataclass(frozen=True)
class LatticeConstants:
    """Locally-Euclidean constants of a lattice family: ball-cover constant
    c_B, diameter ratio c_D, path ratio c_P."""

    d: int
    c_B: float
    c_D: float
    c_P: float
    max_star_k: int

    def __post_init__(self):
        if self.c_D < 1:
            raise ValueError("c_D must be at least 1")
        if self.c_P < self.d:
            raise ValueError("c_P below the dimension bound")


# bcc values are the published ones.  The others are the worst ratios observed by
# check_causal_conditions under the cell metric (a top cell has diameter 1), with
# c_B kept at the generous cube-counting value.
KNOWN_CONSTANTS = {
    "bcc3d": dict(c_B=24.0, c_D=2.0, c_P=3.0),
    "cubic3d": dict(c_B=24.0, c_D=1.0, c_P=3.0),
    "square2d": dict(c_B=8.0, c_D=1.0, c_P=2.0),
    "parallelogram2d": dict(c_B=8.0, c_D=2.0, c_P=2.0),
}


@dataclass(eq=False)
class Lattice:
    """A built lattice: complex + causal structure + logical parity masks."""

    spec: LatticeSpec
    complex: CellComplex
    structure: "SweepStructure"
    constants: LatticeConstants
    _structures: dict = field(default_factory=dict, repr=False)

    @property
    def k(self) -> int:
        return self.spec.k

    @property
    def size(self) -> int:
        return self.spec.size

    @property
    def num_qubits(self) -> int:
        return self.complex.num_cells(self.k)

    @property
    def num_checks(self) -> int:
        return self.complex.num_cells(self.k - 1)

    def structure_for(self, direction) -> "SweepStructure":
        """Sweep structure for an alternative sweep direction (cached)."""
        key = tuple(float(x) for x in direction)
        if key == tuple(self.structure.direction):
            return self.structure
        if key not in self._structures:
            from .causal import SweepStructure
            self._structures[key] = SweepStructure(self.complex, self.k, key)
        return self._structures[key]

    def default_tmax(self) -> int:
        c = self.constants
        return int(math.ceil(4 * c.c_D * c.c_P * self.size))

    @cached_property
    def logical_masks(self) -> np.ndarray:
        return logical_representatives(self.complex, self.k)

    def syndrome_of(self, error_bits: np.ndarray) -> np.ndarray:
        return self.complex.boundary_bits(self.k, error_bits)


_CACHE: dict = {}


def build(spec: LatticeSpec, use_cache: bool = True) -> Lattice:
    """Build the complex and precompute all sweep-rule tables."""
    from .causal import SweepStructure

    key = (spec.family, spec.size, spec.k, spec.direction)
    if use_cache and key in _CACHE:
        return _CACHE[key]
    cx = BUILDERS[spec.family](spec.size)
    structure = SweepStructure(cx, spec.k, spec.direction)
    consts = KNOWN_CONSTANTS[spec.family]
    max_star = max(len(cx.star(0, v, spec.k)) for v in range(min(cx.num_cells(0), 64)))
    lat = Lattice(spec, cx, structure,
                  LatticeConstants(d=cx.dimension, max_star_k=max_star, **consts))
    if use_cache:
        _CACHE[key] = lat
    return lat


# -- logical operators ---------------------------------------------------------------

_GENERIC_POINT = (0.3183098861837907, 0.5772156649015329)


def _strictly_inside(tri: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Vectorized strict point-in-triangle test; tri has shape (n, 3, 2)."""
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]

    def cross(u, v, w):
        return (v[:, 0] - u[:, 0]) * (w[1] - u[:, 1]) - (v[:, 1] - u[:, 1]) * (w[0] - u[:, 0])

    s1, s2, s3 = cross(a, b, q), cross(b, c, q), cross(c, a, q)
    return ((s1 > 0) & (s2 > 0) & (s3 > 0)) | ((s1 < 0) & (s2 < 0) & (s3 < 0))


def logical_representatives(cx: CellComplex, k: int) -> np.ndarray:
    """Parity masks detecting the homology class of a (d-1)-cycle.

    Mask i is the set of (d-1)-cells crossed by a generic straight line along
    lattice axis i, i.e. a dual 1-cycle wrapping the torus once.  Each mask has
    even overlap with the boundary of every d-cell.  Returns a (d, n_k) uint8
    array."""
    d = cx.dimension
    if k != d - 1:
        raise NotImplementedError("logical masks are implemented for codimension-one codes (k = d-1)")
    pts = cx.cell_points[k].astype(float)
    masks = np.zeros((d, len(pts)), dtype=np.uint8)
    for axis in range(d):
        others = [a for a in range(d) if a != axis]
        per = cx.period[others].astype(float)
        proj = pts[:, :, others]
        hit = np.zeros(len(pts), dtype=np.uint8)
        for shift in np.stack(np.meshgrid(*[np.arange(-1, 2)] * len(others), indexing="ij"), -1).reshape(-1, len(others)):
            q = np.array(_GENERIC_POINT[:len(others)]) + shift * per
            if len(others) == 1:
                lo, hi = proj[:, :, 0].min(axis=1), proj[:, :, 0].max(axis=1)
                hit ^= ((lo < q[0]) & (q[0] < hi)).astype(np.uint8)
            elif proj.shape[1] == 3:
                hit ^= _strictly_inside(proj, q).astype(np.uint8)
            elif proj.shape[1] == 4:
                # corners are in binary order; cyclic order is 0, 1, 3, 2
                hit ^= _strictly_inside(proj[:, [0, 1, 3]], q).astype(np.uint8)
                hit ^= _strictly_inside(proj[:, [0, 3, 2]], q).astype(np.uint8)
            else:
                raise NotImplementedError("unsupported cell shape for logical masks")
        masks[axis] = hit
    return masks


def coordinate_surface(cx: CellComplex, axis: int) -> np.ndarray:
    """A non-contractible (d-1)-cycle separating along ``axis``: one boundary
    component of the slab of top cells whose centroid lies in the first half
    of the period.  Returned as a dense k-chain (k = d-1)."""
    d = cx.dimension
    top = cx.cell_points[d]
    cen = top.mean(axis=1)[:, axis] % cx.period[axis]
    slab = (cen < cx.period[axis] / 2).astype(np.uint8)
    bnd = cx.boundary_bits(d, slab)
    faces = np.flatnonzero(bnd)
    fc = cx.cell_points[d - 1][faces].mean(axis=1)[:, axis] % cx.period[axis]
    # the two components sit near 0 (== period) and near period/2
    half = cx.period[axis] / 2
    near_half = np.abs(fc - half) < cx.period[axis] / 4
    out = np.zeros(cx.num_cells(d - 1), dtype=np.uint8)
    out[faces[near_half]] = 1
    return out


def error_chain(lat: Lattice, cells) -> Chain:
    return Chain(lat.k, cells)
