import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from entrainkit.acoustic import (HOP_S, FeatureTrack, compute_intensity, estimate_f0,
                                 feature_from_csv, feature_to_csv, normalize_pitch,
                                 summarize_turn, summarize_turns)
from entrainkit.corpus import AudioTrack, Transcript, Turn
from entrainkit.errors import InsufficientVoicedFrames, TooShort, TurnOutOfRange

SR = 16000


def sine(f, amp=0.5, seconds=1.0, sr=SR):
    return amp * np.sin(2 * np.pi * f * np.arange(int(seconds * sr)) / sr)


def track(x):
    return AudioTrack("A", SR, np.asarray(x, dtype=float))


def feature(values, valid=None, kind="f0_hz"):
    values = np.asarray(values, dtype=float)
    valid = np.ones(values.size, bool) if valid is None else np.asarray(valid, bool)
    return FeatureTrack(kind, HOP_S, 0.04, values, valid)


# ---------------------------------------------------------------- F0

def test_sine_220():
    f0 = estimate_f0(track(sine(220.0)))
    assert f0.valid.mean() >= 0.95
    assert 218 <= np.median(f0.values[f0.valid]) <= 222


def test_silence_unvoiced():
    assert not estimate_f0(track(np.zeros(SR))).valid.any()


def test_white_noise_mostly_unvoiced():
    x = 0.1 * np.random.default_rng(7).uniform(-1, 1, SR)
    assert estimate_f0(track(x)).valid.mean() <= 0.20


def test_voiced_f0_in_band():
    rng = np.random.default_rng(3)
    x = sine(140.0) + 0.05 * rng.standard_normal(SR)
    f0 = estimate_f0(track(x))
    v = f0.values[f0.valid]
    assert np.all((v >= 50) & (v <= 600))
    assert np.all(f0.values[~f0.valid] == 0)


def test_too_short():
    with pytest.raises(TooShort):
        estimate_f0(track(np.zeros(10)))
    with pytest.raises(TooShort):
        compute_intensity(track(np.zeros(10)))


@settings(max_examples=15)
@given(st.floats(80.0, 400.0), st.integers(1, 20))
def test_time_shift_equivariance(f, k):
    x = sine(f, seconds=0.5)
    shifted = np.concatenate([np.zeros(k * int(HOP_S * SR)), x])
    a = estimate_f0(track(x))
    b = estimate_f0(track(shifted))
    interior = slice(5, len(a) - 5)
    np.testing.assert_allclose(b.values[k:][interior], a.values[interior], atol=1e-6)
    np.testing.assert_array_equal(b.valid[k:][interior], a.valid[interior])
    ia = compute_intensity(track(x))
    ib = compute_intensity(track(shifted))
    np.testing.assert_allclose(ib.values[k:][interior], ia.values[interior], atol=1e-6)


@settings(max_examples=15)
@given(st.floats(70.0, 500.0))
def test_f0_amplitude_invariance(f):
    x = sine(f, amp=0.8, seconds=0.5) + 0.3 * sine(2 * f, amp=0.8, seconds=0.5)
    a = estimate_f0(track(x))
    b = estimate_f0(track(0.5 * x))
    both = a.valid & b.valid
    assert both.sum() > 0
    assert np.max(np.abs(a.values[both] - b.values[both])) <= 0.5


# ---------------------------------------------------------------- normalization

def test_normalize_constant_gives_zeros():
    z = normalize_pitch(feature(np.full(20, 200.0)))
    assert np.all(z.values == 0)


def test_normalize_two_values():
    z = normalize_pitch(feature([100.0, 300.0]), min_voiced=2)
    np.testing.assert_allclose(z.values, [-1.0, 1.0])


def test_normalize_removes_speaker_offset():
    low = normalize_pitch(feature(np.full(15, 120.0)))
    high = normalize_pitch(feature(np.full(15, 220.0)))
    assert np.all(low.values == 0) and np.all(high.values == 0)


def test_normalize_needs_voiced_frames():
    with pytest.raises(InsufficientVoicedFrames):
        normalize_pitch(feature(np.full(9, 200.0)))


def test_normalize_keeps_mask():
    vals = np.arange(30, dtype=float) + 100
    valid = np.arange(30) % 3 != 0
    z = normalize_pitch(feature(np.where(valid, vals, 0), valid))
    np.testing.assert_array_equal(z.valid, valid)
    assert np.all(z.values[~valid] == 0)


@given(st.lists(st.floats(50, 600), min_size=10, max_size=200))
def test_normalize_moments(values):
    v = np.array(values)
    if v.var() < 1e-3:
        return
    z = normalize_pitch(feature(v)).values
    assert abs(z.mean()) <= 1e-9
    assert abs(z.std() - 1.0) <= 1e-9


# ---------------------------------------------------------------- intensity

def test_full_scale_sine_level():
    x = sine(440.0, amp=1.0)
    inten = compute_intensity(track(x))
    steady = inten.values[5:-5]
    target = 20 * math.log10(math.sqrt(0.5) / 2e-5)
    assert abs(target - 90.97) < 0.005
    assert np.all(np.abs(steady - target) <= 0.05)


def test_halving_amplitude():
    full = compute_intensity(track(sine(440.0, amp=1.0))).values[5:-5]
    half = compute_intensity(track(sine(440.0, amp=0.5))).values[5:-5]
    np.testing.assert_allclose(full - half, 20 * math.log10(2), atol=0.05)


def test_silence_masked():
    inten = compute_intensity(track(np.zeros(SR)))
    assert not inten.valid.any()


# ---------------------------------------------------------------- summaries

def test_summary_direct():
    f = feature([0, 1, 2, 3, 0], [False, True, True, True, False])
    s = summarize_turn(f, Turn("A", 0.0, 0.05))
    assert (s.min, s.max, s.mean, s.n_frames) == (1.0, 3.0, 2.0, 3)


def test_summary_unvoiced_absent():
    f = feature(np.zeros(10), np.zeros(10, bool))
    assert summarize_turn(f, Turn("A", 0.0, 0.1)) is None


def test_summary_half_open():
    # frames centred at 0.00, 0.01, ..., 0.09; a turn ending at 0.03 drops the 0.03 frame
    f = feature([1, 2, 3, 100, 5, 6, 7, 8, 9, 10])
    s = summarize_turn(f, Turn("A", 0.0, 0.03))
    assert s.max == 3.0 and s.n_frames == 3


def test_summary_out_of_range():
    with pytest.raises(TurnOutOfRange):
        summarize_turn(feature(np.ones(10)), Turn("A", 5.0, 6.0))


@given(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=60), st.integers(0, 2**31))
def test_summary_ordering(values, seed):
    v = np.array(values)
    valid = np.random.default_rng(seed).uniform(size=v.size) < 0.8
    s = summarize_turn(feature(v, valid), Turn("A", 0.0, v.size * HOP_S))
    if s is not None:
        assert s.min <= s.mean <= s.max


def test_summarize_turns_per_speaker():
    t = Transcript((Turn("A", 0.0, 0.5), Turn("B", 0.5, 1.0)))
    f0 = {"A": feature(np.full(100, 2.0)), "B": feature(np.full(100, 3.0))}
    inten = {"A": feature(np.full(100, 60.0), kind="intensity_db")}
    out = summarize_turns(t, f0, inten)
    assert out[0].f0_mean == 2.0 and out[1].f0_mean == 3.0
    assert out[0].int_mean == 60.0 and out[1].int_mean is None


def test_feature_csv_round_trip():
    f = feature([1.5, 0.0, 2.25], [True, False, True])
    back = feature_from_csv(feature_to_csv(f), "f0_hz", 0.04)
    np.testing.assert_array_equal(back.values, f.values)
    np.testing.assert_array_equal(back.valid, f.valid)
