import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stokesqkd.channel import (
    Basis,
    ChannelParams,
    Stream,
    clone_noise,
    draw_bases,
    draw_modulation,
    draw_modulations,
    eta_to_nB,
    make_rng,
    nB_to_eta,
    simulate_rounds,
    transmit,
    transmit_round,
)
from stokesqkd.errors import InvalidTransmission, PerfectLine
from stokesqkd.stokes import PolarizedState, normalized_variances
from stokesqkd.validation import chi2_variance_interval

N = 100_000


def test_chi2_interval_matches_hand_bounds():
    # 99.99% two-sided, N = 1e5: roughly +-3.89 * sqrt(2/N) relative
    lo, hi = chi2_variance_interval(4.0, N)
    assert 3.85 < lo < 3.96 and 4.04 < hi < 4.15
    lo, hi = chi2_variance_interval(1.5, N)
    assert 1.47 < lo and hi < 1.53


def test_modulation_statistics():
    params = ChannelParams.from_noise(4.0, 0.5)
    draws = draw_modulations(params, make_rng(7, Stream.ALICE), N)
    assert abs(draws.mean()) <= 4 * math.sqrt(4.0 / N)
    for column in draws.T:
        assert 3.85 <= np.var(column, ddof=1) <= 4.15
    assert abs(np.corrcoef(draws.T)[0, 1]) < 4 / math.sqrt(N)


def test_single_draw_is_deterministic():
    params = ChannelParams.from_noise(4.0, 0.5)
    a = draw_modulation(params, make_rng(11, 0))
    b = draw_modulation(params, make_rng(11, 0))
    assert a == b
    assert a != draw_modulation(params, make_rng(11, 1))


def test_modulation_needs_positive_variance():
    with pytest.raises(ValueError):
        draw_modulation(ChannelParams.from_noise(0.0, 0.5), make_rng(0, 0))


def test_rng_contract():
    assert np.array_equal(make_rng(5, 3).random(10), make_rng(5, 3).random(10))
    assert not np.array_equal(make_rng(5, 3).random(10), make_rng(5, 2).random(10))
    make_rng(2**64 - 1, 0)
    with pytest.raises(ValueError):
        make_rng(2**64, 0)
    with pytest.raises(ValueError):
        make_rng(-1, 0)


@pytest.mark.parametrize("n_B, n_E", [(1, 1), (0.25, 4)])
def test_clone_noise_examples(n_B, n_E):
    assert clone_noise(n_B) == n_E


def test_clone_noise_perfect_line():
    with pytest.raises(PerfectLine):
        clone_noise(0.0)
    with pytest.raises(PerfectLine):
        clone_noise(np.array([1.0, 0.0]))
    with pytest.raises(ValueError):
        clone_noise(-1.0)


def test_clone_noise_exact_on_rationals():
    x = Fraction(3, 7)
    assert clone_noise(x) * x == 1


@given(st.floats(1e-6, 1e6))
def test_clone_noise_involution(x):
    assert clone_noise(clone_noise(x)) == pytest.approx(x, rel=1e-15)


@pytest.mark.parametrize("eta, n_B", [(0.5, 1.0), (1.0, 0.0)])
def test_eta_examples(eta, n_B):
    assert eta_to_nB(eta) == n_B
    assert nB_to_eta(n_B) == eta


@pytest.mark.parametrize("eta", [0.0, -0.2, 1.0000001])
def test_eta_invalid(eta):
    with pytest.raises(InvalidTransmission):
        eta_to_nB(eta)


@given(st.floats(1e-6, 1.0))
def test_eta_round_trip(eta):
    assert nB_to_eta(eta_to_nB(eta)) == pytest.approx(eta, rel=1e-12)


@given(st.floats(0.0, 1e6))
def test_nB_round_trip(n_B):
    assert eta_to_nB(nB_to_eta(n_B)) == pytest.approx(n_B, rel=1e-12, abs=1e-15)


def test_params_consistency():
    ChannelParams(v_m=1, eta=0.5, n_B=1.0)
    with pytest.raises(ValueError):
        ChannelParams(v_m=1, eta=0.5, n_B=0.9)
    with pytest.raises(ValueError):
        ChannelParams.from_noise(1, 0.5, r=-1)
    with pytest.raises(InvalidTransmission):
        ChannelParams.from_eta(1, 0.0)


def test_intrinsic_noise_matches_thermal_state_moments():
    params = ChannelParams.from_noise(4.0, 0.3, r=0.7)
    carrier = 1e3
    state = PolarizedState(carrier, 0, n_th=params.r * carrier**2)
    assert normalized_variances(state) == pytest.approx((params.intrinsic_noise,) * 2)


@pytest.mark.parametrize("r", [0.0, 1.0])
def test_residual_variances_and_independence(r):
    params = ChannelParams.from_noise(4.0, 0.5, r)
    batch = simulate_rounds(params, N, seed=20240)
    alice = batch.alice_matched()
    bob_res = batch.bob_outcome - alice
    eve_res = batch.eve_matched() - alice
    lo, hi = chi2_variance_interval(1 + r + 0.5, N)
    assert lo <= np.var(bob_res, ddof=1) <= hi
    lo, hi = chi2_variance_interval(1 + r + 2.0, N)
    assert lo <= np.var(eve_res, ddof=1) <= hi
    assert abs(np.corrcoef(bob_res, eve_res)[0, 1]) <= 4 / math.sqrt(N)
    assert abs(np.corrcoef(bob_res, alice)[0, 1]) <= 4 / math.sqrt(N)


def test_example_window_at_nB_half():
    batch = simulate_rounds(ChannelParams.from_noise(4.0, 0.5), N, seed=3)
    assert 1.47 <= np.var(batch.bob_outcome - batch.alice_matched(), ddof=1) <= 1.53


def test_thermal_only_noise_limit():
    batch = simulate_rounds(ChannelParams.from_noise(4.0, 1e-9, r=1.0), N, seed=4)
    lo, hi = chi2_variance_interval(2.0, N)
    assert lo <= np.var(batch.bob_outcome - batch.alice_matched(), ddof=1) <= hi


def test_zero_signal_is_pure_noise():
    params = ChannelParams.from_noise(1.0, 0.5)
    bases = draw_bases(make_rng(1, Stream.BOB), N)
    batch = transmit(params, np.zeros((N, 2)), bases, make_rng(1, Stream.CHANNEL))
    assert abs(batch.bob_outcome.mean()) <= 4 * math.sqrt(1.5 / N)
    assert batch.eve is None


def test_perfect_line_has_no_eve_copy():
    batch = simulate_rounds(ChannelParams.from_eta(4.0, 1.0), 1000, seed=1)
    assert batch.eve is None and batch.eve_matched() is None
    assert batch.record(0).eve_outcome_s2 is None


def test_simulation_determinism():
    params = ChannelParams.from_noise(4.0, 0.5, 0.2)
    a = simulate_rounds(params, 5000, seed=99)
    b = simulate_rounds(params, 5000, seed=99)
    for field in ("alice", "bob_basis", "bob_outcome", "eve"):
        assert getattr(a, field).tobytes() == getattr(b, field).tobytes()
    assert list(a.records())[:3] == list(b.records())[:3]


def test_bob_outcome_follows_basis():
    params = ChannelParams.from_noise(4.0, 1e-12)
    batch = simulate_rounds(params, 2000, seed=8)
    for rec in batch.records():
        assert abs(rec.bob_outcome - rec.alice_value(rec.bob_basis)) < 6 * math.sqrt(params.bob_noise)
        assert isinstance(rec.bob_basis, Basis)
    assert np.array_equal(batch.alice_matched(), [r.alice_value(r.bob_basis) for r in batch.records()])


def test_transmit_round_matches_model():
    params = ChannelParams.from_noise(4.0, 0.25, 0.5)
    ch, ev = make_rng(2, Stream.CHANNEL), make_rng(2, Stream.EVE)
    rec = transmit_round(params, (1.0, -2.0), Basis.S3, ch, ev, round_id=17)
    assert rec.round_id == 17 and rec.bob_basis is Basis.S3
    assert (rec.alice_s2, rec.alice_s3) == (1.0, -2.0)
    assert rec.eve_value(Basis.S2) is not None and rec.eve_value(Basis.S3) is not None
    residuals = [
        transmit_round(params, (0.0, 0.0), Basis.S2, ch, ev).eve_outcome_s2 for _ in range(20_000)
    ]
    lo, hi = chi2_variance_interval(1 + 0.5 + 4.0, 20_000)
    assert lo <= np.var(residuals, ddof=1) <= hi


def test_transmit_shape_check():
    params = ChannelParams.from_noise(1.0, 0.5)
    with pytest.raises(ValueError):
        transmit(params, np.zeros((3, 2)), np.zeros(4, dtype=np.int8), make_rng(0, 2))
