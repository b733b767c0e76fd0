"""Privacy amplification by seeded binary Toeplitz hashing over GF(2)."""

from __future__ import annotations

import numpy as np

from ..errors import LengthError


def toeplitz_seed_bits(seed: int, in_len: int, out_len: int) -> np.ndarray:
    """The ``in_len + out_len - 1`` bits that define the Toeplitz matrix."""
    rng = np.random.default_rng(seed)
    return rng.integers(0, 2, max(in_len + out_len - 1, 0), dtype=np.uint8)


def toeplitz_matrix(diagonals: np.ndarray, in_len: int, out_len: int) -> np.ndarray:
    """Dense matrix with ``T[i, j] = diagonals[i - j + in_len - 1]``."""
    i = np.arange(out_len)[:, None]
    j = np.arange(in_len)[None, :]
    return diagonals[i - j + in_len - 1]


def toeplitz_hash(bits: np.ndarray, diagonals: np.ndarray, out_len: int) -> np.ndarray:
    """GF(2) product of the Toeplitz matrix defined by ``diagonals`` with ``bits``.

    Row i of the product is entry ``i + in_len - 1`` of the integer
    convolution ``diagonals * bits``, taken mod 2.  The convolution is done by
    FFT; every entry is an integer at most ``in_len``, far inside float64's
    exact range, and the rounding residue is checked.
    """
    bits = np.asarray(bits, dtype=np.uint8)
    in_len = len(bits)
    if out_len == 0:
        return np.zeros(0, dtype=np.uint8)
    if len(diagonals) != in_len + out_len - 1:
        raise ValueError("diagonals must have in_len + out_len - 1 entries")
    size = len(diagonals) + in_len - 1
    nfft = 1 << (size - 1).bit_length()
    conv = np.fft.irfft(np.fft.rfft(diagonals, nfft) * np.fft.rfft(bits, nfft), nfft)[:size]
    window = conv[in_len - 1 : in_len - 1 + out_len]
    rounded = np.rint(window)
    if out_len and np.max(np.abs(window - rounded)) > 0.25:
        raise ArithmeticError("FFT convolution lost integer precision")
    return (rounded.astype(np.int64) & 1).astype(np.uint8)


def privacy_amplify(bits, out_len: int, seed: int) -> np.ndarray:
    """Compress ``bits`` to ``out_len`` bits with a seeded random Toeplitz matrix."""
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.ndim != 1:
        raise ValueError("bits must be a 1-d array")
    if np.any(bits > 1):
        raise ValueError("bits must be 0/1")
    if not 0 <= out_len <= len(bits):
        raise LengthError(f"out_len must lie in [0, {len(bits)}], got {out_len}")
    if out_len == 0:
        return np.zeros(0, dtype=np.uint8)
    diagonals = toeplitz_seed_bits(seed, len(bits), out_len)
    return toeplitz_hash(bits, diagonals, out_len)
