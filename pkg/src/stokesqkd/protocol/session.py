"""One key-distribution session: modulation to privacy-amplified key.

Phases, in transcript order:

1. Alice draws an (s2, s3) Gaussian modulation per pulse.
2. The pulse crosses the channel (Eve clones it when active).
3. Bob measures S2 or S3 at random and announces his bases.
4. Sifting.  Alice stored both values, so every round yields a key element.
5. Parameter estimation on a random subset disclosed by Alice.
6. Sliced reconciliation of the remaining elements.
7. Toeplitz privacy amplification to the final length

       max(0, floor(beta * I_AB * n) - ceil(I_AE * n) - margin)

   with I_AB at the estimated n_B and I_AE at a one-sided upper
   confidence limit of n_B (all channel noise attributed to Eve).  The
   bound keeps finite-size estimation error from overstating the key: Eve's
   information grows with n_B, so an underestimate would favour her.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.stats import chi2, norm

from ..channel import Basis, ChannelParams, Stream, draw_bases, draw_modulations, make_rng, transmit
from ..errors import InsecureChannel, ReconciliationFailure, SampleTooSmall
from ..infotheory import MIN_MI_SAMPLES, MIReport, Regime, estimate_mi_gaussian, mutual_info_ab, mutual_info_ae
from .privacy import privacy_amplify
from .slicing import DEFAULT_RANGE_SIGMA, DEFAULT_SLICES, reconcile
from .transcript import Transcript, json_payload

MIN_ESTIMATION_SAMPLES = 500
FLOAT_WIRE_BITS = 64
#: z-score of the one-sided upper confidence limit on n_B used for Eve's bound.
DEFAULT_PE_Z = 2.0


@dataclass(frozen=True)
class SessionConfig:
    params: ChannelParams
    n_rounds: int
    seed: int
    est_fraction: float = 0.1
    slices: int = DEFAULT_SLICES
    recon_efficiency: float = 0.9
    security_margin_bits: int = 64
    range_sigma: float = DEFAULT_RANGE_SIGMA
    eve_active: bool = True
    pe_z: float = DEFAULT_PE_Z

    def __post_init__(self):
        if self.n_rounds < 1:
            raise ValueError(f"n_rounds must be >= 1, got {self.n_rounds}")
        if not 0.0 < self.est_fraction <= 0.5:
            raise ValueError(f"est_fraction must lie in (0, 0.5], got {self.est_fraction}")
        if self.slices < 1:
            raise ValueError(f"slices must be >= 1, got {self.slices}")
        if not 0.0 < self.recon_efficiency <= 1.0:
            raise ValueError(f"recon_efficiency must lie in (0, 1], got {self.recon_efficiency}")
        if self.security_margin_bits < 0:
            raise ValueError("security_margin_bits must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if not self.params.v_m > 0:
            raise ValueError("a key session needs v_m > 0")
        if not self.pe_z >= 0:
            raise ValueError("pe_z must be >= 0")


@dataclass
class SiftedFrame:
    """Key elements of the rounds Bob measured in ``basis``, in round order."""

    basis: Basis
    round_ids: np.ndarray
    alice_values: np.ndarray
    bob_values: np.ndarray
    eve_values: Optional[np.ndarray] = None

    def __post_init__(self):
        n = len(self.round_ids)
        if len(self.alice_values) != n or len(self.bob_values) != n:
            raise ValueError("frame columns differ in length")
        if self.eve_values is not None and len(self.eve_values) != n:
            raise ValueError("eve column differs in length")

    def __len__(self):
        return len(self.round_ids)


def sift(batch, round_mask: Optional[np.ndarray] = None) -> list[SiftedFrame]:
    """Split rounds by Bob's announced basis, keeping Alice's matching value.

    ``round_mask`` restricts the result to a subset of rounds.
    """
    ids = np.arange(len(batch)) + batch.first_round
    alice = batch.alice_matched()
    eve = batch.eve_matched()
    keep = np.ones(len(batch), dtype=bool) if round_mask is None else np.asarray(round_mask, dtype=bool)
    frames = []
    for basis in Basis:
        sel = keep & (batch.bob_basis == basis)
        frames.append(
            SiftedFrame(
                basis=basis,
                round_ids=ids[sel],
                alice_values=alice[sel],
                bob_values=batch.bob_outcome[sel],
                eve_values=None if eve is None else eve[sel],
            )
        )
    return frames


def _as_frames(frames) -> Sequence[SiftedFrame]:
    return [frames] if isinstance(frames, SiftedFrame) else list(frames)


def estimate_channel(frames, r: float) -> tuple[float, float]:
    """Estimate Bob's channel noise from disclosed key elements.

    Returns ``(n_B_hat, excess_hat)`` where ``excess_hat`` is the raw
    estimate of ``r + n_B`` (residual variance minus shot noise) and
    ``n_B_hat = excess_hat - r`` clamped at 0.  ``r`` is the calibrated
    source parameter; it cannot be separated from n_B by Bob alone.
    """
    frames = _as_frames(frames)
    alice = np.concatenate([f.alice_values for f in frames])
    bob = np.concatenate([f.bob_values for f in frames])
    if len(alice) < MIN_ESTIMATION_SAMPLES:
        raise SampleTooSmall(f"need {MIN_ESTIMATION_SAMPLES} samples for estimation, got {len(alice)}")
    variance = float(np.var(bob - alice, ddof=1))
    excess = variance - 1.0
    return max(0.0, excess - r), excess


def noise_upper_bound(n_B_hat: float, excess_hat: float, n_samples: int, r: float, z: float) -> float:
    """One-sided upper confidence limit on n_B at z-score ``z``.

    The residual variance estimate is chi-square distributed with
    ``n_samples - 1`` degrees of freedom; ``z = 0`` returns ``n_B_hat``.
    """
    if z == 0:
        return n_B_hat
    dof = n_samples - 1
    variance_up = (excess_hat + 1.0) * dof / chi2.ppf(norm.sf(z), dof)
    return max(0.0, variance_up - 1.0 - r)


@dataclass
class KeyResult:
    alice_key: np.ndarray
    bob_key: np.ndarray
    raw_count: int
    sifted_count: int
    est_count: int
    reconciled_count: int
    corrected_bits: int
    disclosed_bits: int
    final_length: int
    empirical: Optional[MIReport]
    status: str = "ok"
    verified: bool = False
    n_B_hat: Optional[float] = None
    n_B_bound: Optional[float] = None
    excess_noise_hat: Optional[float] = None
    sample_i_ab: Optional[float] = None
    level_error_rates: list[float] = field(default_factory=list)
    length_terms: dict = field(default_factory=dict)

    @property
    def n_used(self) -> int:
        return self.reconciled_count

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "verified": self.verified,
            "raw_count": self.raw_count,
            "sifted_count": self.sifted_count,
            "est_count": self.est_count,
            "reconciled_count": self.reconciled_count,
            "corrected_bits": self.corrected_bits,
            "disclosed_bits": self.disclosed_bits,
            "final_length": self.final_length,
            "n_B_hat": self.n_B_hat,
            "n_B_bound": self.n_B_bound,
            "excess_noise_hat": self.excess_noise_hat,
            "sample_i_ab": self.sample_i_ab,
            "level_error_rates": self.level_error_rates,
            "length_terms": self.length_terms,
            "empirical": None if self.empirical is None else self.empirical.to_dict(),
            "alice_key_hex": bits_to_hex(self.alice_key),
            "bob_key_hex": bits_to_hex(self.bob_key),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def bits_to_hex(bits: np.ndarray) -> str:
    """Lowercase hex; the first bit is the high bit of the first byte."""
    return np.packbits(np.asarray(bits, dtype=np.uint8)).tobytes().hex()


def hex_to_bits(text: str, length: int) -> np.ndarray:
    return np.unpackbits(np.frombuffer(bytes.fromhex(text), dtype=np.uint8))[:length]


def final_key_length(beta: float, i_ab: float, i_ae: float, n_used: int, margin: int, label_bits: int) -> dict:
    """Length accounting; every term is returned so it can be logged."""
    ab_term = math.floor(beta * i_ab * n_used)
    ae_term = math.ceil(i_ae * n_used)
    formula = max(0, ab_term - ae_term - margin)
    return {
        "n_used": n_used,
        "beta": beta,
        "i_ab_est": i_ab,
        "i_ae_bound": i_ae,
        "ab_term": ab_term,
        "ae_term": ae_term,
        "margin": margin,
        "label_bits": label_bits,
        "final_length": min(formula, label_bits),
    }


def run_session(config: SessionConfig) -> tuple[KeyResult, Transcript]:
    """Run all phases for ``config``; deterministic in ``config.seed``.

    Raises
    ------
    InsecureChannel
        Estimated dI, with Eve's share taken at the upper noise bound, is
        not positive.  The exception carries the empty-key
        result and the full transcript.
    ReconciliationFailure
        Verification digests disagree after correction.
    """
    p = config.params
    n = config.n_rounds
    alice_rng = make_rng(config.seed, Stream.ALICE)
    bob_rng = make_rng(config.seed, Stream.BOB)
    channel_rng = make_rng(config.seed, Stream.CHANNEL)
    eve_rng = make_rng(config.seed, Stream.EVE) if config.eve_active else None
    transcript = Transcript()

    alice = draw_modulations(p, alice_rng, n)
    bases = draw_bases(bob_rng, n)
    batch = transmit(p, alice, bases, channel_rng, eve_rng)
    transcript.send("B", "basis_announcement", np.packbits(bases.astype(np.uint8)).tobytes())

    sifted_count = len(batch)
    est_count = math.floor(config.est_fraction * sifted_count)
    est_idx = np.sort(bob_rng.choice(sifted_count, size=est_count, replace=False))
    est_mask = np.zeros(sifted_count, dtype=bool)
    est_mask[est_idx] = True
    transcript.send("B", "estimation_indices", est_idx.astype("<i8").tobytes())
    est_frames = sift(batch, est_mask)
    est_alice = np.concatenate([f.alice_values for f in est_frames])
    transcript.send(
        "A", "estimation_values", est_alice.astype("<f8").tobytes(), FLOAT_WIRE_BITS * est_count
    )
    n_B_hat, excess = estimate_channel(est_frames, p.r)
    n_B_bound = noise_upper_bound(n_B_hat, excess, est_count, p.r, config.pe_z)
    transcript.send(
        "B",
        "channel_estimate",
        json_payload({"n_B_hat": n_B_hat, "n_B_bound": n_B_bound, "excess": excess}),
    )

    report = MIReport.from_informations(
        mutual_info_ab(p.v_m, n_B_hat, p.r), mutual_info_ae(p.v_m, n_B_hat, p.r)
    )
    sample_i_ab = None
    if est_count >= MIN_MI_SAMPLES:
        est_bob = np.concatenate([f.bob_values for f in est_frames])
        sample_i_ab = estimate_mi_gaussian(est_alice, est_bob).bits

    key_frames = sift(batch, ~est_mask)
    reconciled_count = sum(len(f) for f in key_frames)
    empty = np.zeros(0, dtype=np.uint8)
    result = KeyResult(
        alice_key=empty,
        bob_key=empty,
        raw_count=n,
        sifted_count=sifted_count,
        est_count=est_count,
        reconciled_count=reconciled_count,
        corrected_bits=0,
        disclosed_bits=transcript.bits_disclosed,
        final_length=0,
        empirical=report,
        n_B_hat=n_B_hat,
        n_B_bound=n_B_bound,
        excess_noise_hat=excess,
        sample_i_ab=sample_i_ab,
    )

    # abort on the conservative rate: Eve's share at the upper noise bound
    i_ae_bound = mutual_info_ae(p.v_m, n_B_bound, p.r)
    guarded = MIReport.from_informations(report.i_ab, i_ae_bound)
    if guarded.regime is not Regime.SECURE:
        result.status = "insecure_abort"
        transcript.send("A", "abort", json_payload({"reason": "insecure", "delta_i": guarded.delta_i}))
        raise InsecureChannel(
            f"estimated delta_i = {guarded.delta_i:.6g} bits <= 0 (n_B_bound = {n_B_bound:.6g})",
            result,
            transcript,
        )

    try:
        recon = reconcile(
            np.concatenate([f.alice_values for f in key_frames]),
            np.concatenate([f.bob_values for f in key_frames]),
            m=config.slices,
            v_m=p.v_m,
            beta=config.recon_efficiency,
            range_sigma=config.range_sigma,
            transcript=transcript,
        )
    except ReconciliationFailure as exc:
        result.status = "reconciliation_failure"
        result.disclosed_bits = transcript.bits_disclosed
        exc.result, exc.transcript = result, transcript
        raise

    terms = final_key_length(
        config.recon_efficiency,
        report.i_ab,
        i_ae_bound,
        reconciled_count,
        config.security_margin_bits,
        recon.alice_levels.size,
    )
    out_len = terms["final_length"]
    pa_seed = int(alice_rng.integers(0, 2**64, dtype=np.uint64))
    transcript.send("A", "pa_seed", json_payload({"seed": pa_seed, "out_len": out_len}))

    result.alice_key = privacy_amplify(recon.alice_bits(), out_len, pa_seed)
    result.bob_key = privacy_amplify(recon.bob_bits(), out_len, pa_seed)
    result.corrected_bits = recon.corrected_bits
    result.disclosed_bits = transcript.bits_disclosed
    result.final_length = out_len
    result.verified = recon.verified and np.array_equal(result.alice_key, result.bob_key)
    result.level_error_rates = recon.level_error_rates
    result.length_terms = terms
    return result, transcript
