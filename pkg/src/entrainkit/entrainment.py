"""Turn-level proximity entrainment and windowed FAU synchrony."""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass
from typing import Dict, Optional, Sequence

import numpy as np

from . import stats
from .corpus import AU_IDS
from .errors import (
    InsufficientPartnerTurns,
    NoUsableWindows,
    TooFewPairs,
    ZeroVarianceDifferences,
)

FEATURES = ("f0", "intensity")
STATISTICS = ("min", "max", "mean")
FEATURE_STATS = tuple((f, s) for f in FEATURES for s in STATISTICS)

K_BASELINE = 10
MIN_PAIRS = 5
WINDOW_S = 5.0
GRID_S = 0.010
MIN_WINDOW_FRAMES = 10


@dataclass(frozen=True)
class ProximityDistances:
    feature: str
    statistic: str
    index: np.ndarray  # turn index i of each pair
    adjacent: np.ndarray  # |fc_i - fp_(i+1)|
    nonadjacent: np.ndarray  # mean of k baseline distances
    draws: Optional[np.ndarray] = None  # (n, k) individual baseline distances

    @property
    def n_pairs(self):
        return int(self.adjacent.size)


@dataclass(frozen=True)
class ProximityEffect:
    t_stat: float
    p: float
    cliffs_delta: float
    n_pairs: int
    flag: str = ""


@dataclass(frozen=True)
class SynchronyEntry:
    mean_z: float
    n_windows: int
    window_s: float = WINDOW_S


def feature_values(summaries, feature, statistic):
    """Per-turn value (NaN when the summary is absent)."""
    out = np.full(len(summaries), np.nan)
    for i, s in enumerate(summaries):
        v = s.get(feature, statistic)
        if v is not None:
            out[i] = v
    return out


def adjacent_distance(values):
    """``(indices, |v_i - v_(i+1)|)`` for every i where both turns are defined."""
    v = np.asarray(values, dtype=float)
    d = np.abs(v[:-1] - v[1:])
    keep = np.flatnonzero(np.isfinite(d))
    return keep, d[keep]


def _partner_pool(values, speakers, i):
    me = speakers[i]
    return np.array([
        j for j in range(len(values))
        if speakers[j] != me and j != i + 1 and np.isfinite(values[j])
    ], dtype=int)


def baseline_draws(values, speakers, i, rng, k=K_BASELINE):
    """The k individual distances |fc_i - fp_j| behind the non-adjacent baseline.

    Partner turns exclude the adjacent turn i+1. Draws are without
    replacement when at least k candidates exist, with replacement otherwise.
    """
    values = np.asarray(values, dtype=float)
    pool = _partner_pool(values, speakers, i)
    if pool.size < 2:
        raise InsufficientPartnerTurns(f"turn {i}: {pool.size} usable partner turn(s)")
    picks = rng.choice(pool, size=k, replace=pool.size < k)
    return np.abs(values[i] - values[picks])


def nonadjacent_baseline(values, speakers, i, rng, k=K_BASELINE):
    return float(np.mean(baseline_draws(values, speakers, i, rng, k)))


def conversation_key(conversation_id):
    return zlib.crc32(str(conversation_id).encode("utf-8"))


def turn_rng(master_seed, conversation_id, feature, statistic, turn_index):
    """Independent stream per (conversation, feature statistic, turn)."""
    fs = FEATURE_STATS.index((feature, statistic))
    seq = np.random.SeedSequence([int(master_seed) & 0xFFFFFFFFFFFFFFFF,
                                  conversation_key(conversation_id), fs, int(turn_index)])
    return np.random.Generator(np.random.PCG64(seq))


def proximity_distances(summaries, feature, statistic, seed, conversation_id="", k=K_BASELINE):
    """Adjacent and non-adjacent distances for one feature statistic.

    Each turn contributes once as the "current" turn against its successor,
    so both speakers take the current role in alternation.
    """
    values = feature_values(summaries, feature, statistic)
    speakers = [s.speaker for s in summaries]
    idx, adj = adjacent_distance(values)
    keep_idx, keep_adj, nonadj, draws = [], [], [], []
    for i, a in zip(idx, adj):
        rng = turn_rng(seed, conversation_id, feature, statistic, i)
        try:
            d = baseline_draws(values, speakers, int(i), rng, k)
        except InsufficientPartnerTurns:
            continue
        keep_idx.append(int(i))
        keep_adj.append(a)
        nonadj.append(float(np.mean(d)))
        draws.append(d)
    return ProximityDistances(
        feature=feature,
        statistic=statistic,
        index=np.array(keep_idx, dtype=int),
        adjacent=np.array(keep_adj, dtype=float),
        nonadjacent=np.array(nonadj, dtype=float),
        draws=np.array(draws, dtype=float).reshape(len(draws), k) if draws else np.empty((0, k)),
    )


def proximity_effect(d: ProximityDistances, min_pairs=MIN_PAIRS):
    """Paired t on adjacent vs averaged baseline plus Cliff's delta.

    Delta compares adjacent distances with the individual baseline draws
    when they are available (falls back to the averaged baseline). Negative
    delta means adjacent turns are closer than chance, i.e. entrainment.
    """
    n = d.n_pairs
    if n < min_pairs:
        raise TooFewPairs(f"{n} pairs, need {min_pairs}")
    flag = ""
    try:
        res = stats.paired_t(d.adjacent, d.nonadjacent)
        t, p = res.statistic, res.p
    except ZeroVarianceDifferences:
        if np.all(d.adjacent == d.nonadjacent):
            t, p = 0.0, 1.0
        else:
            t, p = math.nan, math.nan
            flag = "zero_variance_differences"
    reference = d.nonadjacent
    if d.draws is not None and d.draws.size:
        reference = d.draws.ravel()
    delta = stats.cliffs_delta(d.adjacent, reference)
    return ProximityEffect(t_stat=t, p=p, cliffs_delta=delta, n_pairs=n, flag=flag)


# ---------------------------------------------------------------- synchrony

def align_to_grid(timestamps, values, valid, grid):
    """Nearest-frame mapping of a track onto ``grid``."""
    ts = np.asarray(timestamps, dtype=float)
    pos = np.searchsorted(ts, grid)
    pos = np.clip(pos, 1, ts.size - 1) if ts.size > 1 else np.zeros_like(pos)
    if ts.size > 1:
        left = pos - 1
        take_left = (grid - ts[left]) <= (ts[pos] - grid)
        pos = np.where(take_left, left, pos)
    return np.asarray(values, dtype=float)[pos], np.asarray(valid, dtype=bool)[pos]


def windowed_synchrony_arrays(x, y, valid, frame_s=GRID_S, window_s=WINDOW_S,
                              min_frames=MIN_WINDOW_FRAMES):
    """Mean Fisher z of per-window Pearson r over complete windows."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    valid = np.asarray(valid, dtype=bool)
    per = int(round(window_s / frame_s))
    n_windows = x.size // per
    zs = []
    for w in range(n_windows):
        sl = slice(w * per, (w + 1) * per)
        m = valid[sl]
        if m.sum() < min_frames:
            continue
        a, b = x[sl][m], y[sl][m]
        if np.ptp(a) == 0.0 or np.ptp(b) == 0.0:
            continue
        zs.append(stats.fisher_z(stats.pearson_r(a, b)))
    if not zs:
        raise NoUsableWindows("no window had enough joint-valid, non-constant frames")
    return SynchronyEntry(mean_z=float(np.mean(zs)), n_windows=len(zs), window_s=window_s)


def shared_grid(a, b, step=GRID_S):
    start = max(a.timestamps_s[0], b.timestamps_s[0])
    stop = min(a.timestamps_s[-1], b.timestamps_s[-1])
    n = int(np.floor((stop - start) / step + 1e-9)) + 1
    return start + np.arange(max(n, 0)) * step


def windowed_synchrony(a, b, au, window_s=WINDOW_S):
    """Synchrony of one AU channel between two :class:`FauTrack` objects."""
    grid = shared_grid(a, b)
    if grid.size == 0:
        raise NoUsableWindows("tracks do not overlap in time")
    xa, va = align_to_grid(a.timestamps_s, a.channels[au], a.valid, grid)
    xb, vb = align_to_grid(b.timestamps_s, b.channels[au], b.valid, grid)
    return windowed_synchrony_arrays(xa, xb, va & vb, GRID_S, window_s)


def conversation_synchrony(a, b, window_s=WINDOW_S) -> Dict[str, SynchronyEntry]:
    """All 17 AUs; AUs without a usable window are left out."""
    grid = shared_grid(a, b)
    out = {}
    if grid.size == 0:
        return out
    for au in AU_IDS:
        xa, va = align_to_grid(a.timestamps_s, a.channels[au], a.valid, grid)
        xb, vb = align_to_grid(b.timestamps_s, b.channels[au], b.valid, grid)
        try:
            out[au] = windowed_synchrony_arrays(xa, xb, va & vb, GRID_S, window_s)
        except NoUsableWindows:
            continue
    return out
