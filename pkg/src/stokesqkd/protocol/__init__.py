"""Session orchestration: sifting, estimation, reconciliation, privacy amplification."""

from .privacy import privacy_amplify, toeplitz_hash, toeplitz_matrix
from .session import (
    KeyResult,
    SessionConfig,
    SiftedFrame,
    bits_to_hex,
    estimate_channel,
    final_key_length,
    hex_to_bits,
    run_session,
    sift,
)
from .slicing import binary_entropy, reconcile, slice_cells, slice_edges, slice_quantize
from .transcript import Message, Transcript

__all__ = [
    "KeyResult",
    "Message",
    "SessionConfig",
    "SiftedFrame",
    "Transcript",
    "binary_entropy",
    "bits_to_hex",
    "estimate_channel",
    "final_key_length",
    "hex_to_bits",
    "privacy_amplify",
    "reconcile",
    "run_session",
    "sift",
    "slice_cells",
    "slice_edges",
    "slice_quantize",
    "toeplitz_hash",
    "toeplitz_matrix",
]
