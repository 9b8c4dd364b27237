import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from entrainkit.acoustic import TurnFeatureSummary
from entrainkit.corpus import AU_IDS, FauTrack
from entrainkit.entrainment import (ProximityDistances, adjacent_distance, baseline_draws,
                                    conversation_synchrony, nonadjacent_baseline,
                                    proximity_distances, proximity_effect, windowed_synchrony,
                                    windowed_synchrony_arrays)
from entrainkit.errors import InsufficientPartnerTurns, NoUsableWindows, TooFewPairs

CLAMPED_Z = math.atanh(1 - 1e-6)


def summaries(values):
    return [TurnFeatureSummary(i, "AB"[i % 2], f0_min=v, f0_max=v, f0_mean=v,
                               int_min=v, int_max=v, int_mean=v)
            for i, v in enumerate(values)]


def fau(channel, valid=None, rate=100.0):
    n = len(channel)
    valid = np.ones(n, bool) if valid is None else valid
    return FauTrack("A", rate, np.arange(n) / rate, {au: np.asarray(channel, float) for au in AU_IDS}, valid)


# ---------------------------------------------------------------- proximity

def test_adjacent_direct():
    assert adjacent_distance([200.0, 210.0])[1].tolist() == [10.0]
    assert adjacent_distance([7.0, 7.0])[1].tolist() == [0.0]


def test_adjacent_chain():
    idx, d = adjacent_distance([5.0, 9.0, 4.0])
    assert idx.tolist() == [0, 1] and d.tolist() == [4.0, 5.0]


def test_adjacent_skips_undefined():
    idx, d = adjacent_distance([5.0, np.nan, 4.0, 1.0])
    assert idx.tolist() == [2] and d.tolist() == [3.0]


def test_constant_partner_baseline():
    values = [200.0] + [210.0, 0.0] * 8
    values = np.array(values)
    values[2::2] = 200.0
    speakers = ["AB"[i % 2] for i in range(values.size)]
    for seed in range(5):
        assert nonadjacent_baseline(values, speakers, 0, np.random.default_rng(seed)) == 10.0


def test_baseline_with_replacement_is_convex():
    # turn 0 (A, 0) is followed by B turns; the adjacent one (index 1) is excluded
    values = np.array([0.0, 99.0, 0.0, 1.0, 0.0, 3.0])
    speakers = list("ABABAB")
    v = nonadjacent_baseline(values, speakers, 0, np.random.default_rng(11), k=10)
    assert 1.0 <= v <= 3.0


def test_baseline_without_replacement_reexecution():
    partners = np.arange(2, 24, 2, dtype=float)  # 11 values
    values = np.empty(2 * partners.size)
    values[0::2] = 0.0
    values[1::2] = partners
    speakers = ["AB"[i % 2] for i in range(values.size)]
    got = nonadjacent_baseline(values, speakers, 0, np.random.default_rng(5), k=10)
    pool = np.arange(3, values.size, 2)  # partner turns except the adjacent one
    picks = np.random.default_rng(5).choice(pool, size=10, replace=False)
    assert got == pytest.approx(values[picks].mean(), abs=0)
    assert len(set(picks.tolist())) == 10


def test_insufficient_partner_turns():
    with pytest.raises(InsufficientPartnerTurns):
        baseline_draws(np.array([1.0, 2.0, 3.0]), list("ABA"), 0, np.random.default_rng(0))


def test_identical_sequences_no_effect():
    a = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
    e = proximity_effect(ProximityDistances("f0", "mean", np.arange(5), a, a.copy()))
    assert e.t_stat == 0.0 and e.cliffs_delta == 0.0


def test_complete_dominance_flagged():
    e = proximity_effect(ProximityDistances("f0", "mean", np.arange(5), np.ones(5), np.full(5, 2.0)))
    assert e.cliffs_delta == -1.0
    assert e.flag == "zero_variance_differences" and math.isnan(e.t_stat)


def test_too_few_pairs():
    with pytest.raises(TooFewPairs):
        proximity_effect(ProximityDistances("f0", "mean", np.arange(4), np.ones(4), np.ones(4)))


@given(st.lists(st.floats(0, 10), min_size=5, max_size=30), st.floats(0.01, 5))
def test_sign_convention(adj, gap):
    adj = np.array(adj)
    nonadj = adj.max() + gap + np.arange(adj.size)
    e = proximity_effect(ProximityDistances("f0", "mean", np.arange(adj.size), adj, nonadj))
    assert e.cliffs_delta == -1.0


@given(st.lists(st.floats(-100, 100), min_size=8, max_size=40), st.integers(0, 2**32))
def test_distances_deterministic(values, seed):
    s = summaries(values)
    a = proximity_distances(s, "f0", "mean", seed, "c1")
    b = proximity_distances(s, "f0", "mean", seed, "c1")
    for field in ("index", "adjacent", "nonadjacent", "draws"):
        assert np.array_equal(getattr(a, field), getattr(b, field))
    assert np.all(a.adjacent >= 0) and np.all(a.nonadjacent >= 0)
    assert a.adjacent.size == a.nonadjacent.size


def test_null_mean_delta():
    rng = np.random.default_rng(2024)
    deltas = []
    for c in range(200):
        s = summaries(rng.standard_normal(40))
        deltas.append(proximity_effect(proximity_distances(s, "f0", "mean", 0, f"n{c}")).cliffs_delta)
    assert abs(np.mean(deltas)) <= 0.05


# ---------------------------------------------------------------- synchrony

def test_identical_tracks_clamped():
    x = np.random.default_rng(0).uniform(0, 5, 3000)
    e = windowed_synchrony(fau(x), fau(x), "AU12")
    assert e.n_windows == 6
    assert e.mean_z == pytest.approx(CLAMPED_Z, abs=1e-6)
    assert abs(e.mean_z - 7.254) < 0.001


def test_negated_tracks():
    x = np.random.default_rng(0).uniform(0, 5, 3000)
    e = windowed_synchrony_arrays(x, -x, np.ones(x.size, bool))
    assert e.mean_z == pytest.approx(-CLAMPED_Z, abs=1e-6)


def test_independent_noise_near_zero():
    rng = np.random.default_rng(99)
    n = 360 * 500
    e = windowed_synchrony_arrays(rng.standard_normal(n), rng.standard_normal(n), np.ones(n, bool))
    assert e.n_windows == 360
    assert abs(e.mean_z) < 0.05


def test_windows_skipped():
    x = np.random.default_rng(1).standard_normal(1000)
    valid = np.ones(1000, bool)
    valid[:495] = False  # first window has 5 joint-valid frames
    e = windowed_synchrony_arrays(x, x, valid)
    assert e.n_windows == 1
    flat = np.concatenate([np.zeros(500), x[:500]])
    assert windowed_synchrony_arrays(flat, x, np.ones(1000, bool)).n_windows == 1
    with pytest.raises(NoUsableWindows):
        windowed_synchrony_arrays(np.zeros(1000), x, np.ones(1000, bool))


def test_nearest_frame_alignment():
    rng = np.random.default_rng(4)
    x = rng.uniform(0, 3, 900)
    a = fau(x, rate=30.0)
    e = windowed_synchrony(a, a, "AU01")
    assert e.mean_z == pytest.approx(CLAMPED_Z, abs=1e-6)


def test_conversation_synchrony_all_aus():
    x = np.random.default_rng(0).uniform(0, 5, 1000)
    out = conversation_synchrony(fau(x), fau(x))
    assert set(out) == set(AU_IDS)


@given(st.integers(0, 2**32), st.floats(0.01, 100), st.floats(-100, 100))
def test_symmetry_and_affine_invariance(seed, alpha, beta):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal(1500)
    b = 0.5 * a + rng.standard_normal(1500)
    valid = rng.uniform(size=1500) < 0.9
    ab = windowed_synchrony_arrays(a, b, valid)
    assert windowed_synchrony_arrays(b, a, valid) == ab
    moved = windowed_synchrony_arrays(a, alpha * b + beta, valid)
    assert abs(moved.mean_z - ab.mean_z) <= 1e-9
