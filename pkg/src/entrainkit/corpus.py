"""Domain types and ingestion of transcripts, audio, FAU tables and surveys.

All parsers are pure functions of their input text/bytes. Arrays stored on
the returned objects are marked read-only.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import audio as _audio
from .errors import (
    CorruptHeader,
    InvalidSpan,
    MissingAuColumn,
    MissingColumn,
    MoreThanTwoSpeakers,
    NegativeIntensity,
    NonMonotoneTimestamps,
    NonNumericTime,
    OutOfScaleRating,
    OverlappingTurns,
    UnpairedParticipant,
    UnsortedAfterMerge,
)

AU_IDS = (
    "AU01", "AU02", "AU04", "AU05", "AU06", "AU07", "AU09", "AU10", "AU12",
    "AU14", "AU15", "AU17", "AU20", "AU23", "AU25", "AU26", "AU45",
)

AU_NAMES = {
    "AU01": "Inner Brow Raiser",
    "AU02": "Outer Brow Raiser",
    "AU04": "Brow Lowerer",
    "AU05": "Upper Lid Raiser",
    "AU06": "Cheek Raiser",
    "AU07": "Lid Tightener",
    "AU09": "Nose Wrinkler",
    "AU10": "Upper Lip Raiser",
    "AU12": "Lip Corner Puller",
    "AU14": "Dimpler",
    "AU15": "Lip Corner Depressor",
    "AU17": "Chin Raiser",
    "AU20": "Lip Stretcher",
    "AU23": "Lip Tightener",
    "AU25": "Lips part",
    "AU26": "Jaw Drop",
    "AU45": "Blink",
}

TRANSCRIPT_COLUMNS = ("turn_id", "speaker", "start", "stop", "utterance")
MAX_CLIPPED_OVERLAP_S = 0.5

# construct key -> display name; the first 11 form the success score
PCS_CONSTRUCTS = {
    "affect": "Affect",
    "overall_affect": "Overall affect",
    "affect_beginning": "Affect at beginning",
    "affect_middle": "Affect at middle",
    "affect_end": "Affect at end",
    "best_affect": "Best affect",
    "how_enjoyable": "How much enjoyable",
    "i_like_you": "I like you",
    "you_like_me": "You like me",
    "conversationalist": "Conversationalist",
    "my_friends_like_you": "My friends like you",
}

COMMON_GROUND_CONSTRUCTS = {
    "in_common": "In common",
    "good_for_advice": "Good for advice",
    "thoughts_synced": "Our thoughts synced up",
    "joint_perspective": "Developed joint perspective",
    "shared_thoughts_feel": "Shared thoughts feels",
    "discussed_real_things": "Discussed real things",
    "thoughts_more_alike": "Thoughts became more alike",
    "anticipated_each_other": "Anticipated each other",
    "certain_of_perception": "Became certain of perception",
    "saw_world_same_way": "Saw world in same way",
}

ALL_CONSTRUCTS = {**PCS_CONSTRUCTS, **COMMON_GROUND_CONSTRUCTS}

# Declared scale maxima (ratings run 1..max). Configuration, not inferred.
DEFAULT_SCALES = {
    "affect": 9,
    "overall_affect": 9,
    "affect_beginning": 9,
    "affect_middle": 9,
    "affect_end": 9,
    "best_affect": 9,
    "how_enjoyable": 100,
    "i_like_you": 7,
    "you_like_me": 7,
    "conversationalist": 7,
    "my_friends_like_you": 7,
    **{key: 7 for key in COMMON_GROUND_CONSTRUCTS},
}


def _frozen(arr, dtype=float):
    arr = np.array(arr, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Turn:
    speaker: str
    start_s: float
    end_s: float
    text: str = ""

    def __post_init__(self):
        if not self.end_s > self.start_s:
            raise InvalidSpan(f"turn end {self.end_s} not after start {self.start_s}")
        if self.start_s < 0:
            raise InvalidSpan(f"negative start time {self.start_s}")

    @property
    def duration(self):
        return self.end_s - self.start_s


@dataclass(frozen=True)
class Transcript:
    turns: Tuple[Turn, ...]
    source: str = ""

    @property
    def speakers(self):
        seen = []
        for t in self.turns:
            if t.speaker not in seen:
                seen.append(t.speaker)
        return tuple(seen)

    def __len__(self):
        return len(self.turns)

    def spans(self):
        return [(t.speaker, t.start_s, t.end_s) for t in self.turns]


@dataclass(frozen=True)
class AudioTrack:
    speaker: str
    sample_rate_hz: int
    samples: np.ndarray

    @property
    def duration_s(self):
        return self.samples.size / self.sample_rate_hz


@dataclass(frozen=True)
class FauTrack:
    speaker: str
    frame_rate_hz: float
    timestamps_s: np.ndarray
    channels: Mapping[str, np.ndarray]
    valid: np.ndarray

    def __len__(self):
        return self.timestamps_s.size


@dataclass(frozen=True)
class SurveyResponse:
    conversation_id: str
    participant: str
    ratings: Mapping[str, float]
    scale_max: Mapping[str, int]


@dataclass(frozen=True)
class Conversation:
    id: str
    transcript: Transcript
    audio: Mapping[str, AudioTrack] = field(default_factory=dict)
    fau: Mapping[str, FauTrack] = field(default_factory=dict)
    surveys: Optional[Tuple[SurveyResponse, ...]] = None

    def __post_init__(self):
        speakers = set(self.transcript.speakers)
        for kind, mapping in (("audio", self.audio), ("fau", self.fau)):
            extra = set(mapping) - speakers
            if extra:
                raise ValueError(f"{kind} tracks for unknown speakers {sorted(extra)}")


# ---------------------------------------------------------------- transcripts

def _read_rows(raw):
    if isinstance(raw, bytes):
        raw = raw.decode("utf-8")
    reader = csv.DictReader(io.StringIO(raw.lstrip("﻿")))
    if reader.fieldnames is None:
        return [], []
    names = [name.strip() for name in reader.fieldnames]
    reader.fieldnames = names
    return names, list(reader)


def _float(value, what, row_no):
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise NonNumericTime(f"row {row_no}: {what} {value!r} is not numeric") from None
    if not math.isfinite(out):
        raise NonNumericTime(f"row {row_no}: {what} {value!r} is not finite")
    return out


def parse_transcript(raw, source="<memory>"):
    """Parse a turn CSV into a floor-alternating :class:`Transcript`.

    Adjacent rows by the same speaker are merged. Overlaps shorter than
    0.5 s are resolved by clipping the earlier turn; longer ones reject the
    file.
    """
    names, rows = _read_rows(raw)
    missing = [c for c in TRANSCRIPT_COLUMNS if c not in names]
    if missing:
        raise MissingColumn(f"transcript missing column(s): {', '.join(missing)}")

    merged: List[list] = []  # [speaker, start, end, text, first_row]
    speakers = []
    for row_no, row in enumerate(rows, start=2):
        speaker = (row["speaker"] or "").strip()
        start = _float(row["start"], "start", row_no)
        stop = _float(row["stop"], "stop", row_no)
        if not stop > start:
            raise InvalidSpan(f"row {row_no}: stop {stop} is not after start {start}")
        if speaker not in speakers:
            speakers.append(speaker)
            if len(speakers) > 2:
                raise MoreThanTwoSpeakers(f"row {row_no}: third speaker {speaker!r}")
        text = (row.get("utterance") or "").strip()
        if merged and merged[-1][0] == speaker:
            last = merged[-1]
            last[2] = max(last[2], stop)
            last[3] = f"{last[3]} {text}".strip() if text else last[3]
        else:
            merged.append([speaker, start, stop, text, row_no])

    for prev, cur in zip(merged, merged[1:]):
        if cur[1] < prev[1]:
            raise UnsortedAfterMerge(f"row {cur[4]}: start {cur[1]} precedes previous turn start {prev[1]}")
        overlap = prev[2] - cur[1]
        if overlap > 0:
            if overlap >= MAX_CLIPPED_OVERLAP_S or cur[1] <= prev[1]:
                raise OverlappingTurns(f"row {cur[4]}: overlaps previous turn by {overlap:.3f} s")
            prev[2] = cur[1]

    turns = tuple(Turn(s, a, b, t) for s, a, b, t, _ in merged)
    return Transcript(turns=turns, source=source)


def _fmt_time(value):
    text = repr(float(value))
    if "e" in text or "E" in text:
        return text
    decimals = len(text.split(".")[1]) if "." in text else 0
    return text if decimals >= 3 else f"{value:.3f}"


def transcript_to_csv(transcript):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRANSCRIPT_COLUMNS)
    for i, t in enumerate(transcript.turns, start=1):
        writer.writerow([i, t.speaker, _fmt_time(t.start_s), _fmt_time(t.end_s), t.text])
    return buf.getvalue()


# ---------------------------------------------------------------- audio

def load_audio(raw: bytes, speaker: str = ""):
    """Decode a WAV file, average channels to mono and resample to 16 kHz."""
    rate, frames = _audio.read_wav(raw)
    mono = _audio.downmix(frames)
    if rate != _audio.TARGET_RATE:
        mono = _audio.resample(mono, rate, _audio.TARGET_RATE)
    mono = np.clip(mono, -1.0, 1.0)
    return AudioTrack(speaker=speaker, sample_rate_hz=_audio.TARGET_RATE, samples=_frozen(mono))


def speaker_from_audio_name(name):
    """``<conversation_id>.<speaker_id>.wav`` -> (conversation_id, speaker_id)."""
    base = name.rsplit("/", 1)[-1]
    if not base.lower().endswith(".wav"):
        raise ValueError(f"not a .wav file name: {name}")
    stem = base[:-4]
    if "." not in stem:
        raise ValueError(f"audio file name lacks a speaker part: {name}")
    conv, spk = stem.rsplit(".", 1)
    return conv, spk


# ---------------------------------------------------------------- FAU

def parse_fau_table(raw, speaker: str = ""):
    """Read an OpenFace-style CSV of per-frame AU intensities (``_r`` columns)."""
    if isinstance(raw, bytes):
        raw = raw.decode("utf-8")
    reader = csv.reader(io.StringIO(raw.lstrip("\ufeff")))
    header = [name.strip() for name in next(reader, [])]
    for col in ("frame", "timestamp", "success"):
        if col not in header:
            raise MissingColumn(f"FAU table missing column {col}")
    for au in AU_IDS:
        if f"{au}_r" not in header:
            raise MissingAuColumn(au)
    cols = [header.index(c) for c in ("timestamp", "success")] + [header.index(f"{au}_r") for au in AU_IDS]
    rows = [row for row in reader if row]
    try:
        table = np.array([[row[c] for c in cols] for row in rows], dtype=float).reshape(len(rows), len(cols))
    except (ValueError, IndexError) as exc:
        raise NonNumericTime(f"FAU table has a malformed row: {exc}") from None
    n = table.shape[0]
    ts = table[:, 0]
    valid = table[:, 1] != 0.0
    values = {au: table[:, 2 + k].copy() for k, au in enumerate(AU_IDS)}
    if n > 1 and np.any(np.diff(ts) <= 0):
        bad = int(np.flatnonzero(np.diff(ts) <= 0)[0]) + 3
        raise NonMonotoneTimestamps(f"timestamps not strictly increasing at row {bad}")
    for au, arr in values.items():
        if np.any(arr < 0) or np.any(~np.isfinite(arr)):
            raise NegativeIntensity(f"{au} has negative or non-finite intensities")
    rate = float(1.0 / np.median(np.diff(ts))) if n > 1 else 0.0
    return FauTrack(
        speaker=speaker,
        frame_rate_hz=rate,
        timestamps_s=_frozen(ts),
        channels={au: _frozen(arr) for au, arr in values.items()},
        valid=_frozen(valid, dtype=bool),
    )


def fau_to_csv(track: FauTrack):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["frame", "timestamp", "success"] + [f"{au}_r" for au in AU_IDS])
    for i in range(len(track)):
        writer.writerow(
            [i, f"{track.timestamps_s[i]:.3f}", int(track.valid[i])]
            + [f"{track.channels[au][i]:.4f}" for au in AU_IDS]
        )
    return buf.getvalue()


# ---------------------------------------------------------------- surveys

def parse_surveys(raw, scales: Optional[Mapping[str, int]] = None,
                  required: Sequence[str] = tuple(PCS_CONSTRUCTS)):
    """One :class:`SurveyResponse` per row.

    Columns named in ``scales`` are read as ratings; blank cells are treated
    as missing. Conversations without exactly two rows raise an
    :class:`UnpairedParticipant` warning but are still returned.
    """
    scales = dict(DEFAULT_SCALES if scales is None else scales)
    names, rows = _read_rows(raw)
    for col in ("conversation_id", "participant_id", *required):
        if col not in names:
            raise MissingColumn(f"survey missing column {col}")
    constructs = [c for c in names if c in scales]
    out = []
    for row_no, row in enumerate(rows, start=2):
        ratings = {}
        for c in constructs:
            cell = (row[c] or "").strip()
            if not cell:
                continue
            value = float(cell)
            if not 1.0 <= value <= scales[c]:
                raise OutOfScaleRating(f"row {row_no}: {c}={value} outside 1..{scales[c]}")
            ratings[c] = value
        out.append(SurveyResponse(
            conversation_id=row["conversation_id"].strip(),
            participant=row["participant_id"].strip(),
            ratings=ratings,
            scale_max={c: scales[c] for c in constructs},
        ))
    counts: Dict[str, int] = {}
    for r in out:
        counts[r.conversation_id] = counts.get(r.conversation_id, 0) + 1
    for conv, count in counts.items():
        if count != 2:
            warnings.warn(f"conversation {conv} has {count} survey row(s)", UnpairedParticipant, stacklevel=2)
    return out


def surveys_to_csv(responses, constructs=tuple(ALL_CONSTRUCTS)):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["conversation_id", "participant_id", *constructs])
    for r in responses:
        cells = []
        for c in constructs:
            v = r.ratings.get(c)
            cells.append("" if v is None else f"{v:g}")
        writer.writerow([r.conversation_id, r.participant, *cells])
    return buf.getvalue()
