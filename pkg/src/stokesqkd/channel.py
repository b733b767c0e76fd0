"""Seeded Monte Carlo of the Stokes-variable channel under a cloning attack.

All quantities are in normalized shot-noise units.  Alice draws two
independent Gaussian displacements (s2, s3) of variance ``v_m`` per pulse.
Bob measures one of them and sees

    bob = alice[basis] + N(0, 1 + r + n_B)

while Eve, running an individual cloning attack that saturates the crossed
uncertainty relation, holds a copy with noise ``n_E = 1/n_B``:

    eve[b] = alice[b] + N(0, 1 + r + 1/n_B)      for b in (S2, S3)

Line loss is represented only through its equivalent noise,
``n_B = (1 - eta) / eta``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from .errors import InvalidTransmission, PerfectLine

#: Tolerance on eta == 1/(1 + n_B) for a consistent ChannelParams.
CONSISTENCY_TOL = 1e-12


class Basis(enum.IntEnum):
    S2 = 0
    S3 = 1


class Stream(enum.IntEnum):
    """Stream ids: one independent generator per party within a session."""

    ALICE = 0
    BOB = 1
    CHANNEL = 2
    EVE = 3


def make_rng(seed: int, stream_id: int) -> np.random.Generator:
    """PCG64 generator for ``(seed, stream_id)``.

    Streams are derived with ``SeedSequence(seed, spawn_key=(stream_id,))``,
    so distinct ids give statistically independent sequences and the same
    pair always reproduces the same draws.
    """
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    if stream_id < 0:
        raise ValueError(f"stream_id must be >= 0, got {stream_id}")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(stream_id,))))


def eta_to_nB(eta: float) -> float:
    """Equivalent channel noise of a line with transmission ``eta``."""
    if not 0.0 < eta <= 1.0:
        raise InvalidTransmission(f"eta must lie in (0, 1], got {eta}")
    return (1.0 - eta) / eta


def nB_to_eta(n_B: float) -> float:
    if not n_B >= 0.0:
        raise ValueError(f"n_B must be >= 0, got {n_B}")
    return 1.0 / (1.0 + n_B)


def clone_noise(n_B):
    """Eve's matched-basis noise when the cloner saturates the crossed bound.

    Works on floats and on exact types such as :class:`fractions.Fraction`;
    for the latter ``n_B * n_E == 1`` holds exactly.  Arrays are mapped
    elementwise.
    """
    if isinstance(n_B, np.ndarray):
        if np.any(n_B == 0):
            raise PerfectLine("n_B = 0: the clone's noise diverges and Eve learns nothing")
        if np.any(~(n_B > 0)):
            raise ValueError("n_B must be > 0")
        return 1.0 / n_B
    if n_B == 0:
        raise PerfectLine("n_B = 0: the clone's noise diverges and Eve learns nothing")
    if n_B < 0:
        raise ValueError(f"n_B must be > 0, got {n_B}")
    return 1 / n_B


@dataclass(frozen=True)
class ChannelParams:
    """Modulation variance, line transmission/noise and source thermal ratio."""

    v_m: float
    eta: float
    n_B: float
    r: float = 0.0

    def __post_init__(self):
        if not self.v_m >= 0.0:
            raise ValueError(f"v_m must be >= 0, got {self.v_m}")
        if not 0.0 < self.eta <= 1.0:
            raise InvalidTransmission(f"eta must lie in (0, 1], got {self.eta}")
        if not self.n_B >= 0.0:
            raise ValueError(f"n_B must be >= 0, got {self.n_B}")
        if not self.r >= 0.0:
            raise ValueError(f"r must be >= 0, got {self.r}")
        if abs(self.eta - 1.0 / (1.0 + self.n_B)) > CONSISTENCY_TOL:
            raise ValueError(f"eta={self.eta} and n_B={self.n_B} violate eta = 1/(1+n_B)")

    @classmethod
    def from_eta(cls, v_m: float, eta: float, r: float = 0.0) -> "ChannelParams":
        return cls(v_m=v_m, eta=eta, n_B=eta_to_nB(eta), r=r)

    @classmethod
    def from_noise(cls, v_m: float, n_B: float, r: float = 0.0) -> "ChannelParams":
        return cls(v_m=v_m, eta=nB_to_eta(n_B), n_B=n_B, r=r)

    @property
    def intrinsic_noise(self) -> float:
        """Shot noise plus source thermal noise, 1 + r."""
        return 1.0 + self.r

    @property
    def bob_noise(self) -> float:
        return self.intrinsic_noise + self.n_B

    @property
    def n_E(self) -> float:
        return math.inf if self.n_B == 0 else clone_noise(self.n_B)

    @property
    def eve_noise(self) -> float:
        return self.intrinsic_noise + self.n_E


@dataclass(frozen=True)
class RoundRecord:
    round_id: int
    alice_s2: float
    alice_s3: float
    bob_basis: Basis
    bob_outcome: float
    eve_outcome_s2: Optional[float] = None
    eve_outcome_s3: Optional[float] = None

    def alice_value(self, basis: Basis) -> float:
        return self.alice_s2 if basis == Basis.S2 else self.alice_s3

    def eve_value(self, basis: Basis) -> Optional[float]:
        return self.eve_outcome_s2 if basis == Basis.S2 else self.eve_outcome_s3


@dataclass
class RoundBatch:
    """Column-oriented block of rounds; ``eve`` is None when Eve is absent
    or the line is perfect (n_B = 0)."""

    alice: np.ndarray  # (n, 2): columns S2, S3
    bob_basis: np.ndarray  # (n,), values of Basis
    bob_outcome: np.ndarray  # (n,)
    eve: Optional[np.ndarray] = None  # (n, 2)
    first_round: int = 0

    def __len__(self):
        return len(self.bob_outcome)

    def alice_matched(self) -> np.ndarray:
        return self.alice[np.arange(len(self)), self.bob_basis]

    def eve_matched(self) -> Optional[np.ndarray]:
        if self.eve is None:
            return None
        return self.eve[np.arange(len(self)), self.bob_basis]

    def record(self, i: int) -> RoundRecord:
        eve = (None, None) if self.eve is None else (float(self.eve[i, 0]), float(self.eve[i, 1]))
        return RoundRecord(
            round_id=self.first_round + i,
            alice_s2=float(self.alice[i, 0]),
            alice_s3=float(self.alice[i, 1]),
            bob_basis=Basis(int(self.bob_basis[i])),
            bob_outcome=float(self.bob_outcome[i]),
            eve_outcome_s2=eve[0],
            eve_outcome_s3=eve[1],
        )

    def records(self) -> Iterator[RoundRecord]:
        for i in range(len(self)):
            yield self.record(i)


def draw_modulation(params: ChannelParams, rng: np.random.Generator) -> tuple[float, float]:
    """One (s2, s3) pair, independent N(0, v_m) each."""
    if not params.v_m > 0.0:
        raise ValueError("modulation requires v_m > 0")
    s2, s3 = rng.normal(0.0, math.sqrt(params.v_m), 2)
    return float(s2), float(s3)


def draw_modulations(params: ChannelParams, rng: np.random.Generator, n: int) -> np.ndarray:
    """``n`` modulation pairs as an (n, 2) array (columns S2, S3)."""
    if not params.v_m > 0.0:
        raise ValueError("modulation requires v_m > 0")
    return rng.normal(0.0, math.sqrt(params.v_m), (n, 2))


def draw_bases(rng: np.random.Generator, n: int) -> np.ndarray:
    """Bob's uniform basis choices."""
    return rng.integers(0, 2, n, dtype=np.int8)


def transmit_round(
    params: ChannelParams,
    alice: tuple[float, float],
    bob_basis: Basis,
    channel_rng: np.random.Generator,
    eve_rng: Optional[np.random.Generator] = None,
    round_id: int = 0,
) -> RoundRecord:
    """Send one modulated pulse to Bob, with Eve cloning it if ``eve_rng`` is given.

    Eve's copy is measured in both bases up front; only the outcome in the
    basis Bob later announces is meaningful, which is statistically the same
    as deferring her measurement.
    """
    basis = Basis(bob_basis)
    value = alice[basis]
    bob = value + channel_rng.normal(0.0, math.sqrt(params.bob_noise))
    eve = (None, None)
    if eve_rng is not None and params.n_B > 0:
        e = np.asarray(alice) + eve_rng.normal(0.0, math.sqrt(params.eve_noise), 2)
        eve = (float(e[0]), float(e[1]))
    return RoundRecord(round_id, float(alice[0]), float(alice[1]), basis, float(bob), *eve)


def transmit(
    params: ChannelParams,
    alice: np.ndarray,
    bob_basis: np.ndarray,
    channel_rng: np.random.Generator,
    eve_rng: Optional[np.random.Generator] = None,
    first_round: int = 0,
) -> RoundBatch:
    """Vectorized :func:`transmit_round` over a block of rounds."""
    alice = np.asarray(alice, dtype=float)
    bob_basis = np.asarray(bob_basis, dtype=np.int8)
    n = len(bob_basis)
    if alice.shape != (n, 2):
        raise ValueError(f"alice must have shape ({n}, 2), got {alice.shape}")
    matched = alice[np.arange(n), bob_basis]
    bob = matched + channel_rng.normal(0.0, math.sqrt(params.bob_noise), n)
    eve = None
    if eve_rng is not None and params.n_B > 0:
        eve = alice + eve_rng.normal(0.0, math.sqrt(params.eve_noise), (n, 2))
    return RoundBatch(alice, bob_basis, bob, eve, first_round)


def simulate_rounds(params: ChannelParams, n: int, seed: int, eve: bool = True) -> RoundBatch:
    """Draw modulations, bases and outcomes for ``n`` rounds from one seed."""
    alice = draw_modulations(params, make_rng(seed, Stream.ALICE), n)
    bases = draw_bases(make_rng(seed, Stream.BOB), n)
    eve_rng = make_rng(seed, Stream.EVE) if eve else None
    return transmit(params, alice, bases, make_rng(seed, Stream.CHANNEL), eve_rng)
