"""Iterated-rule decoder with homology classification."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .complex import ComplexError
from .sweep import Schedule, SweepConfig, _as_bits

CORRECTED = "corrected"
LOGICAL_FAILURE = "logical_failure"
TIMEOUT = "timeout"


class NonzeroSyndromeError(ComplexError):
    """The residual handed to ``classify`` is not a cycle."""


@dataclass
class DecodeOutcome:
    """Result of running the decoder to termination.

    ``status`` is ``corrected`` when the syndrome was cleared, ``timeout``
    when T_max steps passed (or a fixed point was hit) with syndrome left.
    ``decode`` alone cannot see the true error, so ``logical_failure`` is set
    only by callers that classify against it (``decode_error``)."""

    status: str
    correction: np.ndarray
    steps: int
    residual_syndrome: np.ndarray
    logical_class: tuple = ()
    stalled: bool = False
    valid_input: bool | None = None

    @property
    def success(self) -> bool:
        return self.status == CORRECTED

    def to_dict(self) -> dict:
        return {"status": self.status,
                "correction": np.flatnonzero(self.correction).tolist(),
                "steps": self.steps,
                "residual_syndrome": np.flatnonzero(self.residual_syndrome).tolist(),
                "logical_class": list(self.logical_class),
                "stalled": self.stalled,
                "valid_input": self.valid_input}


def decode(lattice, sigma, cfg: SweepConfig = SweepConfig(), tmax: int | None = None) -> DecodeOutcome:
    """Apply the rule until the syndrome vanishes or ``tmax`` steps elapse.

    A fixed point with nonzero syndrome can never clear, so the loop stops
    there and reports a timeout (reported steps = tmax, as if it had waited)."""
    tmax = lattice.default_tmax() if tmax is None else int(tmax)
    if tmax < 0:
        raise ValueError("tmax must be non-negative")
    bits = _as_bits(sigma, lattice.num_checks).copy()
    corr = np.zeros(lattice.num_qubits, dtype=np.uint8)
    steps, stalled = Schedule(lattice, cfg).run(bits, corr, tmax)
    if bits.any():
        return DecodeOutcome(TIMEOUT, corr, tmax, bits, stalled=stalled,
                             valid_input=False if stalled else None)
    return DecodeOutcome(CORRECTED, corr, steps, bits, valid_input=True)


def classify(lattice, error, correction) -> tuple:
    """Logical class of the residual error + correction, one parity per mask."""
    n = lattice.num_qubits
    res = _as_bits(error, n) ^ _as_bits(correction, n)
    if lattice.syndrome_of(res).any():
        raise NonzeroSyndromeError("residual error has a nonzero boundary")
    masks = lattice.logical_masks
    return tuple(int(x) for x in (masks.astype(np.int64) @ res.astype(np.int64)) % 2)


def decode_error(lattice, error, cfg: SweepConfig = SweepConfig(), tmax: int | None = None) -> DecodeOutcome:
    """Decode the syndrome of a known error and classify the outcome."""
    err = _as_bits(error, lattice.num_qubits)
    out = decode(lattice, lattice.syndrome_of(err), cfg, tmax)
    if out.status == CORRECTED:
        out.logical_class = classify(lattice, err, out.correction)
        if any(out.logical_class):
            out.status = LOGICAL_FAILURE
    return out
