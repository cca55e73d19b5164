"""Phenomenological noise and the multi-cycle memory experiment."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .decoder import CORRECTED, LOGICAL_FAILURE, TIMEOUT, classify, decode
from .sweep import Schedule, SweepConfig


@dataclass(frozen=True)
class NoiseParams:
    """Per-cycle data flip rate, measurement flip rate and cycle count.

    Cycle c adds fresh data errors.  For c < n_cyc the decoder sees a noisy
    syndrome and applies the rule ``sweeps_per_cycle`` times.  Errors of the
    last cycle are handed to the perfect-measurement decode directly, so that
    n_cyc = 1 is the perfect-measurement experiment.  Set
    ``noisy_final_cycle=True`` to also run noisy sweeps in the last cycle."""

    p_data: float
    p_meas: float
    n_cyc: int = 1
    sweeps_per_cycle: int = 1
    noisy_final_cycle: bool = False

    def __post_init__(self):
        for name in ("p_data", "p_meas"):
            val = getattr(self, name)
            if not 0.0 <= val <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {val}")
        if self.n_cyc < 1:
            raise ValueError("n_cyc must be at least 1")
        if self.sweeps_per_cycle < 1:
            raise ValueError("sweeps_per_cycle must be at least 1")

    @classmethod
    def uniform(cls, p: float, n_cyc: int = 1, **kw) -> "NoiseParams":
        return cls(p_data=p, p_meas=p, n_cyc=n_cyc, **kw)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrialRecord:
    seed: int | tuple
    outcome: str
    logical_class: tuple
    cycles: int
    residual_weight: int
    decode_steps: int

    @property
    def failed(self) -> bool:
        return self.outcome != CORRECTED


def sample_error(n: int, p: float, rng: np.random.Generator) -> np.ndarray:
    """Independent Bernoulli(p) flips on ``n`` cells, as a uint8 vector."""
    if p <= 0.0:
        return np.zeros(n, dtype=np.uint8)
    if p >= 1.0:
        return np.ones(n, dtype=np.uint8)
    return (rng.random(n) < p).astype(np.uint8)


def sample_meas_noise(n: int, p: float, rng: np.random.Generator) -> np.ndarray:
    return sample_error(n, p, rng)


def run_memory_trial(lattice, noise: NoiseParams, cfg: SweepConfig = SweepConfig(),
                     rng: np.random.Generator | None = None, seed=None,
                     tmax: int | None = None) -> TrialRecord:
    """One memory experiment: noisy cycles, then a perfect decode.

    The rule only ever sees observed syndromes; the true error is used for
    syndrome generation and final classification."""
    if rng is None:
        rng = np.random.default_rng(seed)
    nq, ns = lattice.num_qubits, lattice.num_checks
    err = np.zeros(nq, dtype=np.uint8)
    sched = Schedule(lattice, cfg)
    step = 0
    for c in range(noise.n_cyc):
        err ^= sample_error(nq, noise.p_data, rng)
        if c == noise.n_cyc - 1 and not noise.noisy_final_cycle:
            break
        observed = lattice.syndrome_of(err) ^ sample_meas_noise(ns, noise.p_meas, rng)
        flips = np.zeros(nq, dtype=np.uint8)
        sched.run(observed, flips, noise.sweeps_per_cycle, start=step)
        step += noise.sweeps_per_cycle
        err ^= flips
    out = decode(lattice, lattice.syndrome_of(err), cfg, tmax)
    if out.status == TIMEOUT:
        return TrialRecord(seed, TIMEOUT, (), noise.n_cyc, int(out.residual_syndrome.sum()), out.steps)
    cls = classify(lattice, err, out.correction)
    status = LOGICAL_FAILURE if any(cls) else CORRECTED
    return TrialRecord(seed, status, cls, noise.n_cyc, 0, out.steps)
