"""Sliced quantization of Gaussian key elements and idealized reconciliation.

Each key element is mapped to one of ``2**m`` equal-probability cells of the
N(0, v_m) marginal and labelled by the cell index written MSB first, so the
first bit is the sign and each further bit bisects the cell chosen so far.
Ties (a value exactly on an edge) go to the lower cell.

Reconciliation does not run a real code.  Per slice level Alice is charged
``ceil(n * h2(p) / beta)`` syndrome bits, p being the measured bit-flip rate
of that level, Bob's labels are replaced by Alice's, and a 64-bit digest
comparison verifies agreement.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from ..errors import ReconciliationFailure
from .transcript import Transcript, json_payload

DEFAULT_SLICES = 4
DEFAULT_RANGE_SIGMA = 5.0


def binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def slice_edges(m: int, v_m: float = 1.0) -> np.ndarray:
    """The ``2**m - 1`` interior cell edges, ascending."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if not v_m > 0:
        raise ValueError(f"v_m must be > 0, got {v_m}")
    q = np.arange(1, 2**m) / 2**m
    edges = norm.ppf(q) * math.sqrt(v_m)
    # the median edge is exactly 0 so the sign bit is a pure sign test
    edges[len(edges) // 2] = 0.0
    return edges


def slice_cells(values, m: int, v_m: float = 1.0, range_sigma: float = DEFAULT_RANGE_SIGMA):
    """Cell indices for an array of values, and how many fell outside the range.

    Values beyond ``+-range_sigma * sqrt(v_m)`` are clamped to the edge cells
    (which the outermost cells already contain); they are only counted.
    """
    if not range_sigma > 0:
        raise ValueError(f"range_sigma must be > 0, got {range_sigma}")
    values = np.asarray(values, dtype=float)
    limit = range_sigma * math.sqrt(v_m)
    clamped = int(np.count_nonzero(np.abs(values) > limit))
    cells = np.searchsorted(slice_edges(m, v_m), np.clip(values, -limit, limit), side="left")
    return cells.astype(np.int64), clamped


def cells_to_levels(cells: np.ndarray, m: int) -> np.ndarray:
    """(n, m) bit matrix; column 0 is the sign bit."""
    shifts = np.arange(m - 1, -1, -1)
    return ((np.asarray(cells)[:, None] >> shifts) & 1).astype(np.uint8)


def slice_quantize(value: float, m: int, range_sigma: float = DEFAULT_RANGE_SIGMA, v_m: float = 1.0) -> str:
    """m-bit label of one value as a '0'/'1' string."""
    cells, _ = slice_cells([value], m, v_m, range_sigma)
    return format(int(cells[0]), f"0{m}b")


def label_digest(levels: np.ndarray) -> bytes:
    """64-bit verification digest of a label matrix."""
    packed = np.packbits(np.ascontiguousarray(levels, dtype=np.uint8).ravel())
    return hashlib.blake2b(packed.tobytes(), digest_size=8).digest()


@dataclass
class ReconciliationResult:
    alice_levels: np.ndarray  # (n, m)
    bob_levels: np.ndarray  # (n, m), after correction
    level_error_rates: list[float]
    level_disclosed: list[int]
    corrected_bits: int
    verified: bool
    clamped: int

    @property
    def disclosed_bits(self) -> int:
        return sum(self.level_disclosed)

    def alice_bits(self) -> np.ndarray:
        return self.alice_levels.ravel()

    def bob_bits(self) -> np.ndarray:
        return self.bob_levels.ravel()


def reconcile_levels(
    alice_levels: np.ndarray,
    bob_levels: np.ndarray,
    beta: float,
    transcript: Transcript | None = None,
    apply_correction: bool = True,
) -> tuple[np.ndarray, list[float], list[int], int, bool]:
    """Charge syndrome bits per level, correct Bob, verify by digest.

    ``apply_correction=False`` skips the correction step; it exists to
    exercise the failure path.
    """
    if not 0.0 < beta <= 1.0:
        raise ValueError(f"beta must lie in (0, 1], got {beta}")
    alice_levels = np.asarray(alice_levels, dtype=np.uint8)
    bob_levels = np.asarray(bob_levels, dtype=np.uint8)
    if alice_levels.shape != bob_levels.shape:
        raise ValueError("label matrices differ in shape")
    n, m = alice_levels.shape
    flips = alice_levels != bob_levels
    rates, disclosed = [], []
    for level in range(m):
        errors = int(np.count_nonzero(flips[:, level]))
        p = errors / n if n else 0.0
        bits = math.ceil(n * binary_entropy(p) / beta)
        rates.append(p)
        disclosed.append(bits)
        if transcript is not None:
            transcript.send("A", "syndrome", json_payload({"level": level, "n": n, "bits": bits}), bits)
    corrected = alice_levels.copy() if apply_correction else bob_levels.copy()
    digest_a = label_digest(alice_levels)
    digest_b = label_digest(corrected)
    if transcript is not None:
        transcript.send("A", "verify_hash", digest_a)
        transcript.send("B", "verify_result", digest_b)
    return corrected, rates, disclosed, int(np.count_nonzero(flips)), digest_a == digest_b


def reconcile(
    alice_values,
    bob_values,
    m: int = DEFAULT_SLICES,
    v_m: float = 1.0,
    beta: float = 0.9,
    range_sigma: float = DEFAULT_RANGE_SIGMA,
    transcript: Transcript | None = None,
    apply_correction: bool = True,
) -> ReconciliationResult:
    """Quantize both parties' key elements and reconcile Bob's labels.

    Raises
    ------
    ReconciliationFailure
        The verification digests disagree.
    """
    alice_cells, clamped_a = slice_cells(alice_values, m, v_m, range_sigma)
    bob_cells, clamped_b = slice_cells(bob_values, m, v_m, range_sigma)
    if transcript is not None:
        transcript.tally("clamped_alice", clamped_a)
        transcript.tally("clamped_bob", clamped_b)
    alice_levels = cells_to_levels(alice_cells, m)
    bob_levels = cells_to_levels(bob_cells, m)
    corrected, rates, disclosed, corrected_bits, ok = reconcile_levels(
        alice_levels, bob_levels, beta, transcript, apply_correction
    )
    result = ReconciliationResult(
        alice_levels, corrected, rates, disclosed, corrected_bits, ok, clamped_a + clamped_b
    )
    if not ok:
        raise ReconciliationFailure("verification digest mismatch after correction", result, transcript)
    return result
