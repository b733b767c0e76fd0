"""Monte Carlo cross-checks of the channel model against the closed forms."""

from __future__ import annotations

import math

import numpy as np
from scipy.stats import chi2

from .channel import ChannelParams, simulate_rounds
from .infotheory import MIReport, estimate_mi_gaussian, mutual_info_ab, mutual_info_ae

MI_TOLERANCE_BITS = 0.02
DELTA_I_TOLERANCE_BITS = 0.03
VARIANCE_CONFIDENCE = 0.9999
MIN_VALIDATION_ROUNDS = 10_000


def chi2_variance_interval(variance: float, n: int, confidence: float = VARIANCE_CONFIDENCE) -> tuple[float, float]:
    """Two-sided interval for the sample variance (ddof=1) of n Gaussian draws."""
    tail = (1.0 - confidence) / 2.0
    dof = n - 1
    return variance * chi2.ppf(tail, dof) / dof, variance * chi2.ppf(1.0 - tail, dof) / dof


def derive_seed(seed: int, index: int) -> int:
    """Independent 64-bit seed for batch ``index`` of a run seeded with ``seed``."""
    return int(np.random.SeedSequence([seed, index]).generate_state(1, np.uint64)[0])


def _variance_check(name, samples, expected):
    n = len(samples)
    lo, hi = chi2_variance_interval(expected, n)
    value = float(np.var(samples, ddof=1))
    return {"name": name, "empirical": value, "expected": expected, "interval": [float(lo), float(hi)], "pass": bool(lo <= value <= hi)}


def _tolerance_check(name, empirical, analytic, tol):
    return {
        "name": name,
        "empirical": empirical,
        "analytic": analytic,
        "tolerance": tol,
        "pass": bool(abs(empirical - analytic) <= tol),
    }


def validate_channel(params: ChannelParams, n_rounds: int, seed: int) -> dict:
    """Sample ``n_rounds`` and compare moments and MI estimates to theory.

    Checks: modulation variance, Bob's and Eve's residual variances (99.99%
    chi-square intervals), Bob/Eve noise independence (|corr| <= 4/sqrt(N)),
    Gaussian-MI estimates of I_AB and I_AE (0.02 bits) and of dI (0.03 bits).
    Eve checks are skipped on a perfect line, where she has no copy.
    """
    if n_rounds < MIN_VALIDATION_ROUNDS:
        raise ValueError(f"validation needs at least {MIN_VALIDATION_ROUNDS} rounds, got {n_rounds}")
    batch = simulate_rounds(params, n_rounds, seed)
    alice = batch.alice_matched()
    bob_residual = batch.bob_outcome - alice
    i_ab = mutual_info_ab(params.v_m, params.n_B, params.r)
    i_ae = mutual_info_ae(params.v_m, params.n_B, params.r)
    est_ab = estimate_mi_gaussian(alice, batch.bob_outcome)

    checks = [
        _variance_check("modulation_variance", batch.alice.ravel(), params.v_m),
        _variance_check("bob_residual_variance", bob_residual, params.bob_noise),
        _tolerance_check("i_ab", est_ab.bits, i_ab, MI_TOLERANCE_BITS),
    ]
    est_ae_bits = 0.0
    eve = batch.eve_matched()
    if eve is not None:
        eve_residual = eve - alice
        est_ae_bits = estimate_mi_gaussian(alice, eve).bits
        corr = float(np.corrcoef(bob_residual, eve_residual)[0, 1])
        bound = 4.0 / math.sqrt(n_rounds)
        checks += [
            _variance_check("eve_residual_variance", eve_residual, params.eve_noise),
            _tolerance_check("i_ae", est_ae_bits, i_ae, MI_TOLERANCE_BITS),
            {"name": "noise_independence", "empirical": corr, "bound": bound, "pass": bool(abs(corr) <= bound)},
        ]
    checks.append(_tolerance_check("delta_i", est_ab.bits - est_ae_bits, i_ab - i_ae, DELTA_I_TOLERANCE_BITS))
    return {
        "params": {"v_m": params.v_m, "eta": params.eta, "n_B": params.n_B, "r": params.r},
        "n_rounds": n_rounds,
        "seed": seed,
        "eve_sampled": eve is not None,
        "analytic": MIReport.from_informations(i_ab, i_ae).to_dict(),
        "empirical": MIReport.from_informations(est_ab.bits, est_ae_bits).to_dict(),
        "checks": checks,
        "all_pass": all(c["pass"] for c in checks),
    }


def default_attack_sweep() -> list[float]:
    return [0.1, 0.25, 0.5, 0.75, 0.9, 1.0, 1.1, 1.25, 1.5, 2.0, 3.0]


def attack_sweep(n_B_values, v_m: float, r: float, n_rounds: int, seed: int) -> list[dict]:
    """Closed-form and sampled informations of Bob and the cloner along n_B.

    ``eve_advantage`` is |rho_AE| - |rho_AB| from the samples; it is positive
    exactly where Eve's copy is better correlated with Alice than Bob's.
    """
    rows = []
    for index, n_B in enumerate(n_B_values):
        params = ChannelParams.from_noise(v_m, float(n_B), r)
        batch = simulate_rounds(params, n_rounds, derive_seed(seed, index))
        alice = batch.alice_matched()
        ab = estimate_mi_gaussian(alice, batch.bob_outcome)
        eve = batch.eve_matched()
        ae = estimate_mi_gaussian(alice, eve) if eve is not None else None
        report = MIReport.from_informations(mutual_info_ab(v_m, n_B, r), mutual_info_ae(v_m, n_B, r))
        rows.append(
            {
                "n_B": float(n_B),
                "eta": params.eta,
                "n_E": None if math.isinf(params.n_E) else params.n_E,
                "i_ab_bits": report.i_ab,
                "i_ae_bits": report.i_ae,
                "delta_i_bits": report.delta_i,
                "regime": report.regime.value,
                "i_ab_empirical_bits": ab.bits,
                "i_ae_empirical_bits": 0.0 if ae is None else ae.bits,
                "eve_advantage": (0.0 if ae is None else abs(ae.rho)) - abs(ab.rho),
            }
        )
    return rows
