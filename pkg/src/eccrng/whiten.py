"""Whitening stages: von Neumann rejection, LFSR scrambling, stage pipelines.

The LFSR register is written as cells 1..N where cell j holds the bit loaded
j steps ago (cell N is the oldest).  Tap notation matches the usual PRBS
shorthand: a tuple like (3, 1, 0) means the new cell value is the XOR of
cells 3 and 1, and tap 0 marks the point where the incoming data bit is
XORed in.  Each step expels cell N as the output bit, so whitening keeps
the stream length.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codes import BchCode, compress_stream_matrix, compress_stream_shiftreg
from .gf2 import as_bit_array

__all__ = [
    "FEEDBACK_INJECTION",
    "OUTPUT_XOR_INJECTION",
    "DEFAULT_INJECTION",
    "SHIPPED_TAP_SETS",
    "LfsrSpec",
    "RejectionStage",
    "LfsrStage",
    "EccStage",
    "PipelineSpec",
    "von_neumann",
    "expected_rejection_rate",
    "lfsr_whiten",
    "lfsr_free_run_period",
    "run_pipeline",
]

# Injection modes: where the data stream couples into the register.
FEEDBACK_INJECTION = "feedback"      # vacated cell <- feedback XOR input
OUTPUT_XOR_INJECTION = "output-xor"  # free-running register; output <- expelled XOR input
DEFAULT_INJECTION = FEEDBACK_INJECTION

# Tap sets shipped with the toolkit; every one is maximal-length
# (free-run cycle 2^N - 1 from any nonzero seed).
SHIPPED_TAP_SETS: tuple[tuple[int, ...], ...] = (
    (1, 0),
    (2, 1, 0),
    (3, 1, 0),
    (4, 1, 0),
    (7, 1, 0),
    (7, 3, 0),
)


def von_neumann(bits) -> np.ndarray:
    """Pairwise rejection: 01 -> 0, 10 -> 1, 00/11 dropped.

    A trailing unpaired bit is discarded.  Output bits are exactly unbiased
    for i.i.d. input regardless of the input bias.
    """
    b = as_bit_array(bits)
    npairs = b.size // 2
    first = b[0 : 2 * npairs : 2]
    second = b[1 : 2 * npairs : 2]
    return first[first != second]


def expected_rejection_rate(p: float) -> float:
    """Expected surviving fraction per input bit for i.i.d. Bernoulli(p): p(1-p)."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability must lie in [0, 1], got {p}")
    return p * (1.0 - p)


@dataclass(frozen=True)
class LfsrSpec:
    """Tap tuple for a whitening register; width = largest tap."""

    taps: tuple[int, ...]

    def __post_init__(self):
        taps = tuple(sorted(set(int(t) for t in self.taps), reverse=True))
        if not taps or taps[-1] != 0 or len(taps) < 2:
            raise ValueError(f"taps must include 0 (input point) and a cell tap, got {self.taps}")
        if any(t < 0 for t in taps):
            raise ValueError(f"tap positions must be non-negative, got {self.taps}")
        object.__setattr__(self, "taps", taps)

    @property
    def width(self) -> int:
        return self.taps[0]

    @property
    def feedback_mask(self) -> int:
        # cell j maps to bit j-1 of the state integer
        m = 0
        for t in self.taps:
            if t > 0:
                m |= 1 << (t - 1)
        return m


def _check_seed(spec: LfsrSpec, seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed < (1 << spec.width):
        raise ValueError(
            f"seed {seed} out of range for a {spec.width}-cell register "
            f"(need 0 <= seed < {1 << spec.width})"
        )
    return seed


def lfsr_whiten(spec: LfsrSpec, seed: int, bits, injection: str = DEFAULT_INJECTION) -> np.ndarray:
    """Run the register over the stream; one output bit per input bit.

    seed bit j-1 preloads cell j.  Per step: feedback = XOR of tapped cells;
    in feedback injection the vacated cell is loaded with feedback XOR input
    and the expelled cell is the output; in output-xor injection the register
    free-runs and the output is the expelled cell XOR the input bit.
    """
    if injection not in (FEEDBACK_INJECTION, OUTPUT_XOR_INJECTION):
        raise ValueError(f"unknown injection mode {injection!r}")
    b = as_bit_array(bits)
    width = spec.width
    state = _check_seed(spec, seed)
    fbmask = spec.feedback_mask
    statemask = (1 << width) - 1
    oldest = width - 1
    out = np.empty(b.size, dtype=np.uint8)
    feedback_mode = injection == FEEDBACK_INJECTION
    seq = b.tolist()
    for i, bit in enumerate(seq):
        fb = (state & fbmask).bit_count() & 1
        expelled = (state >> oldest) & 1
        if feedback_mode:
            out[i] = expelled
            state = ((state << 1) | (fb ^ bit)) & statemask
        else:
            out[i] = expelled ^ bit
            state = ((state << 1) | fb) & statemask
    return out


def lfsr_free_run_period(spec: LfsrSpec, seed: int) -> int:
    """Steps until the state first repeats with the input held at zero."""
    state = start = _check_seed(spec, seed)
    fbmask = spec.feedback_mask
    statemask = (1 << spec.width) - 1
    steps = 0
    while True:
        fb = (state & fbmask).bit_count() & 1
        state = ((state << 1) | fb) & statemask
        steps += 1
        if state == start:
            return steps
        if steps > statemask + 1:  # cannot happen for an invertible update
            raise RuntimeError("free-run cycle search did not close")


@dataclass(frozen=True)
class RejectionStage:
    """Von Neumann pairwise rejection stage."""


@dataclass(frozen=True)
class LfsrStage:
    spec: LfsrSpec
    seed: int = 1
    injection: str = DEFAULT_INJECTION


@dataclass(frozen=True)
class EccStage:
    code: BchCode
    route: str = "matrix"  # or "shiftreg"

    def __post_init__(self):
        if self.route not in ("matrix", "shiftreg"):
            raise ValueError(f"unknown compression route {self.route!r}")


@dataclass(frozen=True)
class PipelineSpec:
    """Ordered whitening stages; default composition is LFSR then ECC."""

    stages: tuple

    def __post_init__(self):
        stages = tuple(self.stages)
        if not stages:
            raise ValueError("pipeline needs at least one stage")
        for s in stages:
            if not isinstance(s, (RejectionStage, LfsrStage, EccStage)):
                raise ValueError(f"unknown pipeline stage {s!r}")
        object.__setattr__(self, "stages", stages)


def run_pipeline(pipeline: PipelineSpec, bits) -> np.ndarray:
    out = as_bit_array(bits)
    for stage in pipeline.stages:
        if isinstance(stage, RejectionStage):
            out = von_neumann(out)
        elif isinstance(stage, LfsrStage):
            out = lfsr_whiten(stage.spec, stage.seed, out, stage.injection)
        else:
            if stage.route == "matrix":
                out = compress_stream_matrix(stage.code, out)
            else:
                out = compress_stream_shiftreg(stage.code, out)
    return out
