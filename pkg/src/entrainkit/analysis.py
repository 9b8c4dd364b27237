"""Per-conversation analysis: features, turn/pause stats, proximity, synchrony."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from . import acoustic, entrainment, turns
from .corpus import Conversation, load_audio, parse_fau_table, parse_transcript
from .errors import EntrainError, InsufficientVoicedFrames, TooFewPairs


@dataclass
class ConversationResult:
    conversation_id: str
    turn_row: Dict[str, float]
    proximity: Dict[str, dict]  # "f0:min" -> {n_pairs, t, p, delta, flag}
    synchrony: Dict[str, dict]  # AU -> {n_windows, mean_z}
    notes: list = field(default_factory=list)

    def to_dict(self):
        return {
            "conversation_id": self.conversation_id,
            "turn_row": self.turn_row,
            "proximity": self.proximity,
            "synchrony": self.synchrony,
            "notes": self.notes,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(**d)

    def delta(self, feature, statistic):
        entry = self.proximity.get(f"{feature}:{statistic}")
        return None if entry is None else entry["delta"]


def conversation_from_bytes(conversation_id, transcript, audio, fau):
    """Build a :class:`Conversation` from raw file contents keyed by speaker."""
    tr = parse_transcript(transcript, source=conversation_id)
    return Conversation(
        id=conversation_id,
        transcript=tr,
        audio={spk: load_audio(raw, spk) for spk, raw in audio.items()},
        fau={spk: parse_fau_table(raw, spk) for spk, raw in fau.items()},
    )


def acoustic_summaries(conv: Conversation, notes=None):
    f0_z, inten = {}, {}
    for spk, track in conv.audio.items():
        f0 = acoustic.estimate_f0(track)
        try:
            f0_z[spk] = acoustic.normalize_pitch(f0)
        except InsufficientVoicedFrames as exc:
            if notes is not None:
                notes.append(f"{spk}: {exc}")
        inten[spk] = acoustic.compute_intensity(track)
    return acoustic.summarize_turns(conv.transcript, f0_z, inten)


def analyze_conversation(conv: Conversation, seed=0, pause_threshold_s=turns.PAUSE_THRESHOLD_S,
                         window_s=entrainment.WINDOW_S, k_baseline=entrainment.K_BASELINE):
    notes = []
    ts = turns.turn_stats(conv.transcript)
    ps = turns.pause_stats(conv.transcript, pause_threshold_s)
    row = turns.turn_pause_row(conv.id, ts, ps)

    proximity = {}
    if conv.audio:
        summaries = acoustic_summaries(conv, notes)
        for feature, statistic in entrainment.FEATURE_STATS:
            d = entrainment.proximity_distances(summaries, feature, statistic, seed, conv.id, k_baseline)
            try:
                eff = entrainment.proximity_effect(d)
            except TooFewPairs as exc:
                notes.append(f"{feature}:{statistic}: {exc}")
                continue
            proximity[f"{feature}:{statistic}"] = {
                "n_pairs": eff.n_pairs, "t": eff.t_stat, "p": eff.p,
                "delta": eff.cliffs_delta, "flag": eff.flag,
            }

    synchrony = {}
    speakers = conv.transcript.speakers
    if len(conv.fau) == 2 and len(speakers) == 2:
        a, b = conv.fau[speakers[0]], conv.fau[speakers[1]]
        for au, entry in entrainment.conversation_synchrony(a, b, window_s).items():
            synchrony[au] = {"n_windows": entry.n_windows, "mean_z": entry.mean_z}
    return ConversationResult(conv.id, row, proximity, synchrony, notes)


def analyze_bundle(bundle, seed=0, **kwargs):
    conv = conversation_from_bytes(bundle.conversation_id, bundle.transcript_csv, bundle.audio, bundle.fau)
    return analyze_conversation(conv, seed=seed, **kwargs)
