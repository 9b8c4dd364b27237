"""Frame-level F0 and intensity tracks and per-turn summaries.

Every track shares one clock: frame ``k`` is centred at ``k * 0.010`` s and
the signal is zero-padded beyond its ends. Window lengths differ per feature
(40 ms for F0, 32 ms for intensity) but centres coincide.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import fft as sp_fft
from numpy.lib.stride_tricks import sliding_window_view

from .errors import InsufficientVoicedFrames, TooShort, TurnOutOfRange

HOP_S = 0.010
F0_WINDOW_S = 0.040
INTENSITY_WINDOW_S = 0.032
F0_MIN_HZ = 50.0
F0_MAX_HZ = 600.0
YIN_THRESHOLD = 0.15
INTENSITY_REF = 2e-5
RMS_FLOOR = 1e-8
MIN_FRAMES_PER_TURN = 3
MIN_VOICED_FOR_NORM = 10

PITCH_DEVIATION_NOTICE = (
    "F0 estimated with a deterministic cumulative-mean-normalized difference "
    "tracker (threshold 0.15, 50-600 Hz), not a neural pitch estimator"
)


@dataclass(frozen=True)
class FeatureTrack:
    kind: str  # f0_hz | f0_z | intensity_db | fau
    frame_hop_s: float
    frame_len_s: float
    values: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        if self.values.shape != self.valid.shape:
            raise ValueError("values and mask lengths differ")

    def __len__(self):
        return self.values.size

    @property
    def times(self):
        return np.arange(self.values.size) * self.frame_hop_s

    @property
    def end_s(self):
        return self.values.size * self.frame_hop_s


@dataclass(frozen=True)
class FeatureSummary:
    min: float
    max: float
    mean: float
    n_frames: int


@dataclass(frozen=True)
class TurnFeatureSummary:
    turn_index: int
    speaker: str
    f0_min: Optional[float] = None
    f0_max: Optional[float] = None
    f0_mean: Optional[float] = None
    int_min: Optional[float] = None
    int_max: Optional[float] = None
    int_mean: Optional[float] = None

    def get(self, feature, statistic):
        prefix = "f0" if feature == "f0" else "int"
        return getattr(self, f"{prefix}_{statistic}")


def _readonly(arr):
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


def _padded(x, sr, window_s, hop_s=HOP_S):
    """Zero-padded signal and (hop, win, n_frames) for centred framing."""
    hop = int(round(hop_s * sr))
    win = int(round(window_s * sr))
    n_frames = x.size // hop
    if n_frames < 1:
        raise TooShort(f"signal of {x.size} samples shorter than one {hop}-sample hop")
    pad = win // 2
    padded = np.concatenate([np.zeros(pad), np.asarray(x, dtype=float), np.zeros(win)])
    return padded, hop, win, n_frames


def _frames(x, sr, window_s, hop_s=HOP_S):
    """Centred frames, zero-padded, shape (n_frames, window)."""
    padded, hop, win, n_frames = _padded(x, sr, window_s, hop_s)
    view = sliding_window_view(padded, win)[::hop]
    return view[:n_frames], hop, win


def _difference(frames, tau_max, shifted_energy=None):
    """YIN difference function d(tau), tau = 0..tau_max, fixed integration window.

    ``shifted_energy[:, tau]`` is the energy of samples tau..tau+w-1 of each
    frame; it is computed from ``frames`` when not supplied.
    """
    n, win = frames.shape
    w = win - tau_max
    if shifted_energy is None:
        sq = np.concatenate([np.zeros((n, 1)), np.cumsum(np.square(frames, dtype=float), axis=1)], axis=1)
        shifted_energy = sq[:, w:w + tau_max + 1] - sq[:, :tau_max + 1]
    # lags stop at tau_max and the head has w = win - tau_max samples, so a
    # circular correlation of length win never wraps
    nfft = sp_fft.next_fast_len(win, real=True)
    # single-precision FFT: about twice as fast, error far below the threshold scale
    single = np.asarray(frames, dtype=np.float32)
    spec_a = sp_fft.rfft(single[:, :w], nfft)
    spec_b = sp_fft.rfft(single, nfft)
    corr = sp_fft.irfft(np.conj(spec_a) * spec_b, nfft)[:, : tau_max + 1]
    d = shifted_energy[:, :1] + shifted_energy - 2.0 * corr
    return np.maximum(d, 0.0)


def _cmnd(d):
    out = np.ones_like(d)
    csum = np.cumsum(d[:, 1:], axis=1)
    taus = np.arange(1, d.shape[1])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = d[:, 1:] * taus / csum
    out[:, 1:] = np.where(csum > 0, ratio, 1.0)
    return out


def _pick_periods(cmnd, tau_min, tau_max, threshold):
    """Refined lag per row (NaN when no dip falls below ``threshold``).

    First lag under the threshold, walked down to its local minimum, then
    refined by parabolic interpolation.
    """
    band = cmnd[:, tau_min:tau_max + 1] < threshold
    found = band.any(axis=1)
    tau = tau_min + np.argmax(band, axis=1)
    rows = np.arange(cmnd.shape[0])
    moving = found.copy()
    while moving.any():
        nxt = np.minimum(tau + 1, tau_max)
        step = moving & (tau < tau_max) & (cmnd[rows, nxt] < cmnd[rows, tau])
        tau = np.where(step, nxt, tau)
        moving = step
    lo = cmnd[rows, np.maximum(tau - 1, 0)]
    mid = cmnd[rows, tau]
    hi = cmnd[rows, np.minimum(tau + 1, cmnd.shape[1] - 1)]
    denom = lo - 2.0 * mid + hi
    with np.errstate(divide="ignore", invalid="ignore"):
        shift = np.where(denom > 0, 0.5 * (lo - hi) / denom, 0.0)
    refined = tau + np.clip(shift, -1.0, 1.0)
    return np.where(found, refined, np.nan)


def estimate_f0(track, threshold=YIN_THRESHOLD, fmin=F0_MIN_HZ, fmax=F0_MAX_HZ, chunk=4096):
    """Per-hop F0 in Hz with a voicing mask (unvoiced frames hold 0)."""
    sr = track.sample_rate_hz
    padded, hop, win, n = _padded(track.samples, sr, F0_WINDOW_S)
    tau_max = int(np.ceil(sr / fmin))
    tau_min = int(np.floor(sr / fmax))
    if win <= tau_max:
        raise ValueError("F0 window too short for the minimum frequency")
    w = win - tau_max
    # running energies over the padded signal; frames overlap so share them
    cs = np.concatenate([[0.0], np.cumsum(padded * padded)])
    starts = np.arange(n) * hop
    energy = cs[starts + win] - cs[starts]
    e_w = sliding_window_view(cs[w:] - cs[:-w], tau_max + 1)
    frames = sliding_window_view(padded.astype(np.float32), win)
    f0 = np.zeros(n)
    voiced = np.zeros(n, dtype=bool)
    active = np.flatnonzero(energy > win * RMS_FLOOR ** 2)
    for start in range(0, active.size, chunk):
        idx = active[start:start + chunk]
        d = _difference(frames[starts[idx]], tau_max, e_w[starts[idx]])
        taus = _pick_periods(_cmnd(d), tau_min, tau_max, threshold)
        with np.errstate(divide="ignore", invalid="ignore"):
            hz = sr / taus
        ok = np.isfinite(hz) & (hz >= fmin) & (hz <= fmax)
        f0[idx[ok]] = hz[ok]
        voiced[idx[ok]] = True
    return FeatureTrack("f0_hz", HOP_S, F0_WINDOW_S, _readonly(f0), _readonly(voiced))


def normalize_pitch(f0: FeatureTrack, min_voiced=MIN_VOICED_FOR_NORM):
    """Z-score one speaker's voiced F0 frames (population SD) over the conversation."""
    voiced = f0.valid
    n_voiced = int(voiced.sum())
    if n_voiced < min_voiced:
        raise InsufficientVoicedFrames(f"{n_voiced} voiced frames, need {min_voiced}")
    vals = f0.values[voiced]
    mean = vals.mean()
    var = vals.var()
    out = np.zeros_like(f0.values)
    if var >= 1e-9:
        out[voiced] = (vals - mean) / np.sqrt(var)
    return FeatureTrack("f0_z", f0.frame_hop_s, f0.frame_len_s, _readonly(out), f0.valid)


def compute_intensity(track):
    """Per-hop level 20*log10(rms / 2e-5) over a Hann-weighted 32 ms window."""
    frames, _, win = _frames(track.samples, track.sample_rate_hz, INTENSITY_WINDOW_S)
    w = np.hanning(win + 2)[1:-1]
    power = frames ** 2 @ w / w.sum()
    rms = np.sqrt(power)
    valid = rms >= RMS_FLOOR
    db = np.zeros_like(rms)
    db[valid] = 20.0 * np.log10(rms[valid] / INTENSITY_REF)
    return FeatureTrack("intensity_db", HOP_S, INTENSITY_WINDOW_S, _readonly(db), _readonly(valid))


def summarize_turn(feat: FeatureTrack, turn, min_frames=MIN_FRAMES_PER_TURN):
    """Min/max/mean over valid frames centred in [start, end); None if too few."""
    if turn.start_s >= feat.end_s or turn.end_s <= 0:
        raise TurnOutOfRange(f"turn {turn.start_s}-{turn.end_s} s outside track of {feat.end_s:.3f} s")
    hop = feat.frame_hop_s
    first = int(np.ceil(turn.start_s / hop - 1e-9))
    last = int(np.ceil(turn.end_s / hop - 1e-9))  # exclusive
    first = max(first, 0)
    last = min(last, len(feat))
    vals = feat.values[first:last][feat.valid[first:last]]
    if vals.size < min_frames:
        return None
    lo, hi = float(vals.min()), float(vals.max())
    mean = min(max(float(vals.mean()), lo), hi)
    return FeatureSummary(lo, hi, mean, int(vals.size))


def summarize_turns(transcript, f0_tracks, intensity_tracks):
    """One :class:`TurnFeatureSummary` per turn from per-speaker tracks."""
    out = []
    for i, turn in enumerate(transcript.turns):
        fields = {}
        f0 = f0_tracks.get(turn.speaker)
        inten = intensity_tracks.get(turn.speaker)
        for prefix, track in (("f0", f0), ("int", inten)):
            if track is None:
                continue
            try:
                s = summarize_turn(track, turn)
            except TurnOutOfRange:
                s = None
            if s is not None:
                fields.update({f"{prefix}_min": s.min, f"{prefix}_max": s.max, f"{prefix}_mean": s.mean})
        out.append(TurnFeatureSummary(turn_index=i, speaker=turn.speaker, **fields))
    return out


def feature_to_csv(feat: FeatureTrack):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["frame_index", "time_s", "value", "valid"])
    for k in range(len(feat)):
        writer.writerow([k, f"{k * feat.frame_hop_s:.3f}", repr(float(feat.values[k])), int(feat.valid[k])])
    return buf.getvalue()


def feature_from_csv(raw, kind, frame_len_s, hop_s=HOP_S):
    rows = list(csv.DictReader(io.StringIO(raw)))
    values = np.array([float(r["value"]) for r in rows])
    valid = np.array([r["valid"].strip() == "1" for r in rows], dtype=bool)
    return FeatureTrack(kind, hop_s, frame_len_s, _readonly(values), _readonly(valid))
