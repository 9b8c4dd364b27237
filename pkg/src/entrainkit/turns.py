"""Turn-duration and inter-speaker pause statistics per conversation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyTranscript

PAUSE_THRESHOLD_S = 0.6
# transcript times carry millisecond precision; a gap of exactly the threshold
# computed as 1.6 - 1.0 must not count as exceeding it
GAP_TOLERANCE_S = 1e-9

ROW_COLUMNS = (
    "conversation_id",
    "turn_min", "turn_max", "turn_mean", "turn_total", "turn_count",
    "pause_min", "pause_max", "pause_mean", "pause_total", "pause_count",
)


@dataclass(frozen=True)
class DurationStats:
    min_s: float
    max_s: float
    mean_s: float
    total_s: float
    count: int

    @classmethod
    def of(cls, durations):
        d = np.asarray(durations, dtype=float)
        if d.size == 0:
            return cls(0.0, 0.0, 0.0, 0.0, 0)
        lo, hi = float(d.min()), float(d.max())
        mean = min(max(float(d.mean()), lo), hi)
        return cls(lo, hi, mean, float(d.sum()), int(d.size))


TurnStats = DurationStats
PauseStats = DurationStats


def turn_stats(transcript):
    if len(transcript.turns) == 0:
        raise EmptyTranscript("transcript has no turns")
    return DurationStats.of([t.duration for t in transcript.turns])


def gaps(transcript):
    """Offset-to-onset gaps between consecutive turns (negative = overlap)."""
    turns = transcript.turns
    return np.array([b.start_s - a.end_s for a, b in zip(turns, turns[1:])], dtype=float)


def pause_stats(transcript, threshold_s=PAUSE_THRESHOLD_S):
    """Statistics over gaps strictly longer than ``threshold_s``.

    Overlaps (negative gaps) never count. No qualifying gap gives an
    all-zero record with count 0.
    """
    if len(transcript.turns) == 0:
        raise EmptyTranscript("transcript has no turns")
    g = gaps(transcript)
    return DurationStats.of(g[g > threshold_s + GAP_TOLERANCE_S])


def turn_pause_row(conversation_id, ts, ps):
    return {
        "conversation_id": conversation_id,
        "turn_min": ts.min_s, "turn_max": ts.max_s, "turn_mean": ts.mean_s,
        "turn_total": ts.total_s, "turn_count": ts.count,
        "pause_min": ps.min_s, "pause_max": ps.max_s, "pause_mean": ps.mean_s,
        "pause_total": ps.total_s, "pause_count": ps.count,
    }
