"""Sweep Rule and Greedy Sweep Rule as synchronous cellular automata.

Two entry points share one set of lookup tables:

* ``flip_set`` / ``apply_rule_reference``: plain Python, one vertex at a time,
  evaluating the rule from its definition (used as the test oracle);
* ``Engine``: a numba kernel that iterates the two-phase update on dense
  uint8 syndrome vectors (used by the decoder and Monte Carlo).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .causal import SweepStructure
from .complex import Chain

RULES = ("sweep", "greedy")


@dataclass(frozen=True)
class SweepConfig:
    """How the automaton chooses flips.

    ``directions`` optionally replaces the lattice's sweep direction by a
    cyclic schedule; the active direction advances every ``epoch`` steps.
    Ties among equally good flip sets are broken by size, then
    lexicographically on the translation-invariant local slot order
    (``tie_break='local-lex'``, the only supported value)."""

    rule: str = "greedy"
    tie_break: str = "local-lex"
    directions: tuple | None = None
    epoch: int = 1

    def __post_init__(self):
        if self.rule not in RULES:
            raise ValueError(f"rule must be one of {RULES}, got {self.rule!r}")
        if self.tie_break != "local-lex":
            raise ValueError("only the 'local-lex' tie-break is implemented")
        if self.epoch < 1:
            raise ValueError("epoch must be positive")
        if self.directions is not None:
            dirs = tuple(tuple(float(x) for x in t) for t in self.directions)
            if not dirs:
                raise ValueError("direction schedule is empty")
            object.__setattr__(self, "directions", dirs)

    def to_dict(self) -> dict:
        return {"rule": self.rule, "tie_break": self.tie_break,
                "directions": None if self.directions is None else [list(t) for t in self.directions],
                "epoch": self.epoch}


def _as_bits(sigma, size: int) -> np.ndarray:
    if isinstance(sigma, Chain):
        return sigma.to_array(size)
    bits = np.asarray(sigma, dtype=np.uint8)
    if bits.shape != (size,):
        raise ValueError(f"expected a length-{size} bit vector, got shape {bits.shape}")
    return bits


# -- reference implementation -------------------------------------------------------

def is_trailing(structure: SweepStructure, v: int, sigma) -> bool:
    bits = _as_bits(sigma, structure.cx.num_cells(structure.k - 1))
    return structure.rule_of(v).trailing(structure.pattern(v, bits))


def flip_set(structure: SweepStructure, v: int, sigma, cfg: SweepConfig = SweepConfig()) -> Chain:
    """phi(v) for the configured rule, evaluated from the definition."""
    bits = _as_bits(sigma, structure.cx.num_cells(structure.k - 1))
    rule = structure.rule_of(v)
    p = structure.pattern(v, bits)
    m = rule.choose(p, cfg.rule)
    if m is None:
        # trailing but no exact match: the pattern is not a local boundary
        # (only possible for syndromes that are not boundaries)
        m = 0
    return Chain(structure.k, structure.cells_from_mask(v, m))


def apply_rule_reference(structure: SweepStructure, sigma, cfg: SweepConfig = SweepConfig()):
    """One synchronous update; returns (rho, sigma') as dense bit vectors."""
    cx, k = structure.cx, structure.k
    bits = _as_bits(sigma, cx.num_cells(k - 1)).copy()
    rho = np.zeros(cx.num_cells(k), dtype=np.uint8)
    active = np.unique(cx.cell_vertices[k - 1][bits.astype(bool)])
    for v in active:
        for c in flip_set(structure, int(v), bits, cfg):
            rho[c] ^= 1
    return rho, bits ^ cx.boundary_bits(k, rho)


# -- fast engine ----------------------------------------------------------------------

@njit(cache=True)
def _run(sigma, corr, max_steps, syn_slots, nslots, vclass, tables, fut_slots,
         kfacets, syn_verts):
    """Iterate the update at most ``max_steps`` times, stopping early when the
    syndrome is empty or a fixed point is reached.  Mutates ``sigma`` and
    ``corr`` in place.  Returns (steps applied, fixed point reached)."""
    n_v = syn_slots.shape[0]
    n_k = kfacets.shape[0]
    mark = np.zeros(n_v, np.uint8)
    active = np.empty(n_v, np.int64)
    touched = np.zeros(n_k, np.uint8)
    flip = np.zeros(n_k, np.uint8)
    flist = np.empty(n_k, np.int64)
    for step in range(max_steps):
        na = 0
        for e in range(sigma.shape[0]):
            if sigma[e]:
                for j in range(syn_verts.shape[1]):
                    v = syn_verts[e, j]
                    if mark[v] == 0:
                        mark[v] = 1
                        active[na] = v
                        na += 1
        if na == 0:
            return step, False
        # phase 1: every vertex reads the same snapshot
        nf = 0
        for a in range(na):
            v = active[a]
            mark[v] = 0
            c = vclass[v]
            p = 0
            for s in range(nslots[c]):
                if sigma[syn_slots[v, s]]:
                    p |= 1 << s
            m = tables[c, p]
            j = 0
            while m:
                if m & 1:
                    f = fut_slots[v, j]
                    if touched[f] == 0:
                        touched[f] = 1
                        flist[nf] = f
                        nf += 1
                    flip[f] ^= 1
                m >>= 1
                j += 1
        # phase 2: apply the merged flips
        changed = False
        for i in range(nf):
            f = flist[i]
            touched[f] = 0
            if flip[f]:
                flip[f] = 0
                changed = True
                corr[f] ^= 1
                for g in range(kfacets.shape[1]):
                    sigma[kfacets[f, g]] ^= 1
        if not changed:
            return step + 1, True
    return max_steps, False


class Engine:
    """Table-driven automaton for one sweep structure and rule."""

    def __init__(self, structure: SweepStructure, rule: str = "greedy"):
        if rule not in RULES:
            raise ValueError(f"unknown rule {rule!r}")
        cx, k = structure.cx, structure.k
        self.structure = structure
        self.rule = rule
        self.n_syndrome = cx.num_cells(k - 1)
        self.n_qubits = cx.num_cells(k)
        self.syn_slots = np.ascontiguousarray(structure.syn_slots, dtype=np.int64)
        self.nslots = np.array([r.n_slots for r in structure.rules], dtype=np.int64)
        self.vclass = np.ascontiguousarray(structure.vertex_class, dtype=np.int64)
        self.tables = np.ascontiguousarray(structure.tables(rule), dtype=np.int64)
        self.fut_slots = np.ascontiguousarray(structure.fut_slots, dtype=np.int64)
        self.kfacets = np.ascontiguousarray(cx.boundary_incidence[k], dtype=np.int64)
        self.syn_verts = np.ascontiguousarray(cx.cell_vertices[k - 1], dtype=np.int64)

    def run(self, sigma: np.ndarray, corr: np.ndarray, max_steps: int) -> tuple[int, bool]:
        """In-place iteration; see ``_run``."""
        if sigma.dtype != np.uint8 or corr.dtype != np.uint8:
            raise TypeError("engine buffers must be uint8")
        steps, stuck = _run(sigma, corr, int(max_steps), self.syn_slots, self.nslots, self.vclass,
                            self.tables, self.fut_slots, self.kfacets, self.syn_verts)
        return int(steps), bool(stuck)

    def step(self, sigma) -> tuple[np.ndarray, np.ndarray]:
        s = _as_bits(sigma, self.n_syndrome).copy()
        rho = np.zeros(self.n_qubits, dtype=np.uint8)
        self.run(s, rho, 1)
        return rho, s


def engine_for(structure: SweepStructure, rule: str) -> Engine:
    cache = structure.__dict__.setdefault("_engines", {})
    if rule not in cache:
        cache[rule] = Engine(structure, rule)
    return cache[rule]


class Schedule:
    """Resolves the engine active at step T for a lattice and config."""

    def __init__(self, lattice, cfg: SweepConfig):
        self.cfg = cfg
        if cfg.directions is None:
            self.engines = [engine_for(lattice.structure, cfg.rule)]
        else:
            self.engines = [engine_for(lattice.structure_for(t), cfg.rule) for t in cfg.directions]

    def run(self, sigma: np.ndarray, corr: np.ndarray, max_steps: int, start: int = 0) -> tuple[int, bool]:
        """Advance up to ``max_steps`` steps beginning at global step ``start``."""
        if len(self.engines) == 1:
            return self.engines[0].run(sigma, corr, max_steps)
        done = 0
        stuck_streak = 0
        while done < max_steps:
            t = start + done
            eng = self.engines[(t // self.cfg.epoch) % len(self.engines)]
            chunk = min(self.cfg.epoch - t % self.cfg.epoch, max_steps - done)
            steps, stuck = eng.run(sigma, corr, chunk)
            done += steps if not stuck else chunk
            if not sigma.any():
                return done, False
            # a fixed point of every direction in turn is a global fixed point
            stuck_streak = stuck_streak + 1 if stuck else 0
            if stuck_streak >= len(self.engines):
                return done, True
        return done, False


def apply_rule(lattice, sigma, cfg: SweepConfig = SweepConfig(), step_index: int = 0):
    """One synchronous update of the automaton on the whole lattice.

    Returns (rho, sigma') with the same representation as the input
    (``Chain`` or dense bit vector)."""
    k = lattice.k
    bits = _as_bits(sigma, lattice.num_checks).copy()
    rho = np.zeros(lattice.num_qubits, dtype=np.uint8)
    Schedule(lattice, cfg).run(bits, rho, 1, start=step_index)
    if isinstance(sigma, Chain):
        return Chain.from_array(k, rho), Chain.from_array(k - 1, bits)
    return rho, bits


def trace(lattice, sigma, cfg: SweepConfig = SweepConfig(), max_steps: int = 100) -> list[dict]:
    """Step-by-step record of (T, |sigma|, flipped cells) until the wall is gone."""
    bits = _as_bits(sigma, lattice.num_checks).copy()
    sched = Schedule(lattice, cfg)
    out = [{"T": 0, "syndrome_weight": int(bits.sum()), "flips": []}]
    for t in range(max_steps):
        if not bits.any():
            break
        rho = np.zeros(lattice.num_qubits, dtype=np.uint8)
        sched.run(bits, rho, 1, start=t)
        out.append({"T": t + 1, "syndrome_weight": int(bits.sum()),
                    "flips": np.flatnonzero(rho).tolist()})
        if not rho.any():
            break
    return out
