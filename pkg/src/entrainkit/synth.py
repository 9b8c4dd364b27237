"""Deterministic synthetic dyadic conversations with known entrainment.

A bundle holds exactly the files the corpus loader reads: a transcript CSV,
one WAV and one FAU table per speaker, and two survey rows. Acoustic
coupling, facial synchrony and success are all set by :class:`SynthConfig`.
"""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np
from scipy.signal import lfilter
from scipy.special import ndtr

from .audio import write_wav
from .corpus import (
    ALL_CONSTRUCTS,
    AU_IDS,
    DEFAULT_SCALES,
    PCS_CONSTRUCTS,
    SurveyResponse,
    surveys_to_csv,
)
from .errors import InvalidConfig

HARMONIC_WEIGHTS = (1.0, 0.5, 0.25)
NOISE_DB = -30.0
FAU_AR = 0.8
FADE_S = 0.015
MANIFEST_COLUMNS = ("conversation_id", "clean", "transcript_path", "audio_a", "audio_b", "fau_a", "fau_b")


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    n_turns: int = 30
    coupling_lambda: float = 0.0
    fau_rho: float = 0.0
    mean_turn_s: float = 1.0
    mean_gap_s: float = 0.3
    base_f0: Tuple[float, float] = (120.0, 210.0)
    success_latent: float = 0.5
    conversation_id: str = ""
    speakers: Tuple[str, str] = ("A", "B")
    sample_rate: int = 16000
    fau_rate_hz: float = 30.0
    pitch_spread_st: float = 3.0
    level_db: float = -18.0
    level_spread_db: float = 4.0
    fau_dropout: float = 0.01
    include_fau: bool = True
    include_audio: bool = True

    def validate(self):
        problems = []
        if not 0 <= self.seed < 2 ** 64:
            problems.append("seed must be a 64-bit unsigned integer")
        if self.n_turns < 2:
            problems.append("n_turns must be >= 2")
        if not 0.0 <= self.coupling_lambda <= 1.0:
            problems.append("coupling_lambda must lie in [0, 1]")
        if not -1.0 < self.fau_rho < 1.0:
            problems.append("fau_rho must lie in (-1, 1)")
        if self.mean_turn_s <= 0 or self.mean_gap_s <= 0:
            problems.append("mean_turn_s and mean_gap_s must be positive")
        if not 0.0 <= self.success_latent <= 1.0:
            problems.append("success_latent must lie in [0, 1]")
        if any(not 50.0 < f < 600.0 for f in self.base_f0):
            problems.append("base_f0 must lie inside 50-600 Hz")
        if len(set(self.speakers)) != 2:
            problems.append("two distinct speaker ids required")
        if problems:
            raise InvalidConfig("; ".join(problems))
        return self

    @property
    def cid(self):
        return self.conversation_id or f"synth{self.seed}"


@dataclass
class SynthBundle:
    config: SynthConfig
    transcript_csv: str
    audio: Dict[str, bytes]
    fau: Dict[str, str]
    surveys: List[SurveyResponse]
    latent: Dict[str, list] = field(default_factory=dict)

    @property
    def conversation_id(self):
        return self.config.cid

    def file_names(self):
        cid = self.conversation_id
        a, b = self.config.speakers
        return {
            "transcript": f"{cid}.transcript.csv",
            "audio_a": f"{cid}.{a}.wav" if self.audio else "",
            "audio_b": f"{cid}.{b}.wav" if self.audio else "",
            "fau_a": f"{cid}.{a}.fau.csv" if self.fau else "",
            "fau_b": f"{cid}.{b}.fau.csv" if self.fau else "",
        }

    def write(self, directory):
        os.makedirs(directory, exist_ok=True)
        names = self.file_names()
        a, b = self.config.speakers
        with open(os.path.join(directory, names["transcript"]), "w", encoding="utf-8") as fh:
            fh.write(self.transcript_csv)
        for key, spk in (("a", a), ("b", b)):
            if self.audio:
                with open(os.path.join(directory, names[f"audio_{key}"]), "wb") as fh:
                    fh.write(self.audio[spk])
            if not self.fau:
                continue
            with open(os.path.join(directory, names[f"fau_{key}"]), "w", encoding="utf-8") as fh:
                fh.write(self.fau[spk])
        return names


def _rng(seed, *stream):
    return np.random.default_rng(np.random.SeedSequence([int(seed), *stream]))


def coupled_chain(n, lam, rng):
    """x_0 ~ N(0,1); x_(i+1) = (1 - lam) * e_(i+1) + lam * x_i."""
    e = rng.standard_normal(n)
    x = np.empty(n)
    x[0] = e[0]
    for i in range(1, n):
        x[i] = (1.0 - lam) * e[i] + lam * x[i - 1]
    return x


def _timeline(cfg, rng):
    shape = 4.0
    durations = np.maximum(rng.gamma(shape, cfg.mean_turn_s / shape, cfg.n_turns), 0.3)
    gaps = 0.05 + rng.exponential(max(cfg.mean_gap_s - 0.05, 1e-3), cfg.n_turns - 1)
    starts = np.empty(cfg.n_turns)
    t = 0.2
    for i in range(cfg.n_turns):
        starts[i] = t
        t += durations[i] + (gaps[i] if i < cfg.n_turns - 1 else 0.0)
    ends = starts + durations
    return np.round(starts, 3), np.round(ends, 3)


# 1/f pinking filter (Kellet-style IIR), accurate to about 0.05 dB above 10 Hz
PINK_B = (0.049922035, -0.095993537, 0.050612699, -0.004408786)
PINK_A = (1.0, -2.494956002, 2.017265875, -0.522189400)


def _pink(n, rng):
    warm = 2048  # discard the filter's start-up transient (slowest pole ~ 425 samples)
    pink = lfilter(PINK_B, PINK_A, rng.standard_normal(n + warm))[warm:]
    return pink / (np.std(pink) + 1e-12)


def _render_turn(f0_st, level_db, duration, base_f0, sr, rng):
    n = int(round(duration * sr))
    t = np.arange(n) / sr
    # gentle declination of 1 semitone across the turn
    contour = f0_st + 0.5 - t / max(duration, 1e-9)
    freq = base_f0 * 2.0 ** (contour / 12.0)
    phase = 2.0 * np.pi * np.cumsum(freq) / sr
    s1, c1 = np.sin(phase), np.cos(phase)
    # sin(2p) and sin(3p) from sin(p), cos(p)
    harmonics = (s1, 2.0 * s1 * c1, s1 * (3.0 - 4.0 * s1 * s1))
    tone = sum(w * h for w, h in zip(HARMONIC_WEIGHTS, harmonics))
    tone /= math.sqrt(sum(w * w for w in HARMONIC_WEIGHTS) / 2.0)  # unit RMS
    tone += 10.0 ** (NOISE_DB / 20.0) * _pink(n, rng)
    fade = min(int(FADE_S * sr), n // 2)
    env = np.ones(n)
    if fade > 0:
        ramp = 0.5 - 0.5 * np.cos(np.pi * np.arange(fade) / fade)
        env[:fade] = ramp
        env[n - fade:] = ramp[::-1]
    return 10.0 ** (level_db / 20.0) * tone * env


def _ar1(n, phi, rng):
    """Stationary unit-variance AR(1) series."""
    e = rng.standard_normal(n) * math.sqrt(1.0 - phi * phi)
    e[0] = rng.standard_normal()
    return lfilter([1.0], [1.0, -phi], e)


def _fau_tables(cfg, duration, rng):
    n = int(math.floor(duration * cfg.fau_rate_hz)) + 1
    ts = np.arange(n) / cfg.fau_rate_hz
    w = math.sqrt(abs(cfg.fau_rho))
    sign = 1.0 if cfg.fau_rho >= 0 else -1.0
    chans = {spk: {} for spk in cfg.speakers}
    for au in AU_IDS:
        shared = _ar1(n, FAU_AR, rng)
        for k, spk in enumerate(cfg.speakers):
            own = _ar1(n, FAU_AR, rng)
            mix = (sign if k == 1 else 1.0) * w * shared + math.sqrt(1.0 - w * w) * own
            chans[spk][au] = np.clip(2.0 + 0.4 * mix, 0.0, 5.0)
    out = {}
    for spk in cfg.speakers:
        valid = rng.random(n) >= cfg.fau_dropout
        header = ",".join(["frame", "timestamp", "success"] + [f"{au}_r" for au in AU_IDS])
        table = np.column_stack([np.arange(n), ts, valid.astype(int)] + [chans[spk][au] for au in AU_IDS])
        fmt = ["%d", "%.3f", "%d"] + ["%.4f"] * len(AU_IDS)
        buf = io.StringIO()
        np.savetxt(buf, table, fmt=fmt, delimiter=",", header=header, comments="")
        out[spk] = buf.getvalue()
    return out


def _survey(cfg, rng):
    rows = []
    for spk in cfg.speakers:
        own = float(np.clip(cfg.success_latent + rng.normal(0.0, 0.05), 0.0, 1.0))
        common = float(np.clip(0.5 * own + 0.5 * rng.uniform(0.2, 0.9), 0.0, 1.0))
        ratings = {}
        for c in ALL_CONSTRUCTS:
            level = own if c in PCS_CONSTRUCTS else common
            top = DEFAULT_SCALES[c]
            frac = float(np.clip(level + rng.normal(0.0, 0.08), 0.0, 1.0))
            ratings[c] = float(round(1 + (top - 1) * frac))
        rows.append(SurveyResponse(cfg.cid, spk, ratings, {c: DEFAULT_SCALES[c] for c in ALL_CONSTRUCTS}))
    return rows


def block_model_surveys(n_conversations=250, seed=0, rho_within=0.7, rho_cross=0.1):
    """Two-block survey cohort: affect constructs vs common-ground constructs.

    Latent Gaussian scores correlate ``rho_within`` inside a block and
    ``rho_cross`` across blocks; each is mapped through the normal CDF onto
    its construct's declared 1..max scale. Two responses per conversation.
    """
    names = list(ALL_CONSTRUCTS)
    affect = np.array([c in PCS_CONSTRUCTS for c in names])
    corr = np.where(affect[:, None] == affect[None, :], rho_within, rho_cross)
    np.fill_diagonal(corr, 1.0)
    rng = _rng(seed, 7)
    latent = rng.standard_normal((2 * n_conversations, len(names))) @ np.linalg.cholesky(corr).T
    frac = ndtr(latent)
    tops = np.array([DEFAULT_SCALES[c] for c in names], dtype=float)
    ratings = np.clip(np.round(1 + (tops - 1) * frac), 1, tops)
    scales = {c: DEFAULT_SCALES[c] for c in names}
    return [
        SurveyResponse(f"c{k // 2:04d}", "AB"[k % 2], dict(zip(names, map(float, row))), scales)
        for k, row in enumerate(ratings)
    ]


def generate(config: SynthConfig) -> SynthBundle:
    """Render one synthetic conversation; a pure function of ``config``."""
    cfg = config.validate()
    sr = cfg.sample_rate
    starts, ends = _timeline(cfg, _rng(cfg.seed, 1))
    pitch = coupled_chain(cfg.n_turns, cfg.coupling_lambda, _rng(cfg.seed, 2))
    level = coupled_chain(cfg.n_turns, cfg.coupling_lambda, _rng(cfg.seed, 3))
    noise_rng = _rng(cfg.seed, 4)
    total = float(ends[-1]) + 0.3
    n = int(round(total * sr))
    tracks = {spk: np.zeros(n) for spk in cfg.speakers} if cfg.include_audio else {}

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["turn_id", "speaker", "start", "stop", "utterance"])
    for i in range(cfg.n_turns):
        k = i % 2
        spk = cfg.speakers[k]
        writer.writerow([i + 1, spk, f"{starts[i]:.3f}", f"{ends[i]:.3f}", f"turn {i + 1}"])
        if not cfg.include_audio:
            continue
        seg = _render_turn(
            cfg.pitch_spread_st * pitch[i],
            cfg.level_db + cfg.level_spread_db * level[i],
            float(ends[i] - starts[i]),
            cfg.base_f0[k],
            sr,
            noise_rng,
        )
        a = int(round(starts[i] * sr))
        tracks[spk][a:a + seg.size] += seg[: max(0, n - a)]

    audio = {spk: write_wav(x, sr) for spk, x in tracks.items()} if cfg.include_audio else {}
    fau = _fau_tables(cfg, total, _rng(cfg.seed, 5)) if cfg.include_fau else {}
    surveys = _survey(cfg, _rng(cfg.seed, 6))
    return SynthBundle(
        config=cfg,
        transcript_csv=buf.getvalue(),
        audio=audio,
        fau=fau,
        surveys=surveys,
        latent={"pitch": pitch.tolist(), "level": level.tolist(),
                "starts": starts.tolist(), "ends": ends.tolist()},
    )


def bundle_seed(master_seed, index):
    return int(np.random.SeedSequence([int(master_seed), int(index)]).generate_state(1, np.uint64)[0])


def write_corpus(bundles, directory, clean=None):
    """Write bundles plus ``manifest.csv`` and ``surveys.csv`` under ``directory``."""
    os.makedirs(directory, exist_ok=True)
    rows = []
    surveys = []
    for b in bundles:
        names = b.write(directory)
        flag = 1 if clean is None else int(clean.get(b.conversation_id, 1))
        rows.append([b.conversation_id, flag, names["transcript"], names["audio_a"],
                     names["audio_b"], names["fau_a"], names["fau_b"]])
        surveys.extend(b.surveys)
    with open(os.path.join(directory, "manifest.csv"), "w", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MANIFEST_COLUMNS)
        writer.writerows(rows)
    with open(os.path.join(directory, "surveys.csv"), "w", encoding="utf-8") as fh:
        fh.write(surveys_to_csv(surveys))
    return os.path.join(directory, "manifest.csv")


HIGH_GROUP = dict(coupling_lambda=0.9, fau_rho=0.6, success_latent=0.92, n_turns=44, mean_gap_s=0.35)
LOW_GROUP = dict(coupling_lambda=0.0, fau_rho=0.0, success_latent=0.2, n_turns=26, mean_gap_s=1.1)


def contrast_corpus(n_per_group=10, master_seed=0, **overrides):
    """Coupled/high-success vs null/low-success bundles, interleaved."""
    bundles = []
    for i in range(n_per_group):
        for tag, params in (("hi", HIGH_GROUP), ("lo", LOW_GROUP)):
            seed = bundle_seed(master_seed, 2 * i + (tag == "lo"))
            cfg = SynthConfig(seed=seed, conversation_id=f"{tag}{i:02d}", **{**params, **overrides})
            bundles.append(generate(cfg))
    return bundles
