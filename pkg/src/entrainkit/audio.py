"""RIFF/WAVE reading and writing plus the windowed-sinc resampler.

The stdlib ``wave`` module only handles integer PCM, and IEEE-float WAVs are
common in the corpora this toolkit reads, so chunks are parsed directly.
"""

from __future__ import annotations

import io
import struct

import numpy as np

from .errors import CorruptHeader, UnsupportedEncoding

TARGET_RATE = 16000
SUPPORTED_RATES = (16000, 44100, 48000)

RESAMPLER_TAPS = 64
RESAMPLER_CUTOFF_HZ = 7600.0
RESAMPLER_BETA = 8.0

_FORMAT_PCM = 1
_FORMAT_FLOAT = 3
_FORMAT_EXTENSIBLE = 0xFFFE


def read_wav(raw: bytes):
    """Decode a WAV container into ``(rate, float64 array of shape (n, channels))``."""
    if len(raw) < 12 or raw[:4] != b"RIFF" or raw[8:12] != b"WAVE":
        raise CorruptHeader("not a RIFF/WAVE container")
    pos = 12
    fmt = None
    data = None
    while pos + 8 <= len(raw):
        cid = raw[pos:pos + 4]
        (size,) = struct.unpack("<I", raw[pos + 4:pos + 8])
        body = raw[pos + 8:pos + 8 + size]
        if cid == b"fmt ":
            if len(body) < 16:
                raise CorruptHeader("fmt chunk too short")
            fmt = struct.unpack("<HHIIHH", body[:16])
            if fmt[0] == _FORMAT_EXTENSIBLE and len(body) >= 26:
                (sub,) = struct.unpack("<H", body[24:26])
                fmt = (sub,) + fmt[1:]
        elif cid == b"data":
            data = body
        pos += 8 + size + (size & 1)
    if fmt is None or data is None:
        raise CorruptHeader("missing fmt or data chunk")
    tag, channels, rate, _, block_align, bits = fmt
    if channels not in (1, 2):
        raise UnsupportedEncoding(f"{channels} channels")
    if rate not in SUPPORTED_RATES:
        raise UnsupportedEncoding(f"sample rate {rate}")
    if tag == _FORMAT_PCM and bits == 16:
        samples = np.frombuffer(data[: len(data) // 2 * 2], dtype="<i2").astype(float) / 32768.0
    elif tag == _FORMAT_FLOAT and bits == 32:
        samples = np.frombuffer(data[: len(data) // 4 * 4], dtype="<f4").astype(float)
    else:
        raise UnsupportedEncoding(f"format tag {tag} with {bits} bits")
    if block_align != channels * bits // 8:
        raise CorruptHeader("block alignment inconsistent with channels and bit depth")
    frames = samples.size // channels
    return rate, samples[: frames * channels].reshape(frames, channels)


def write_wav(samples, rate=TARGET_RATE, encoding="pcm16") -> bytes:
    """Encode a mono or (n, 2) array as a WAV byte string."""
    arr = np.asarray(samples, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    channels = arr.shape[1]
    clipped = np.clip(arr, -1.0, 1.0).reshape(-1)
    if encoding == "pcm16":
        payload = np.round(clipped * 32767.0).astype("<i2").tobytes()
        tag, bits = _FORMAT_PCM, 16
    elif encoding == "float32":
        payload = clipped.astype("<f4").tobytes()
        tag, bits = _FORMAT_FLOAT, 32
    else:
        raise UnsupportedEncoding(encoding)
    block = channels * bits // 8
    buf = io.BytesIO()
    buf.write(b"RIFF")
    buf.write(struct.pack("<I", 36 + len(payload)))
    buf.write(b"WAVE")
    buf.write(b"fmt ")
    buf.write(struct.pack("<IHHIIHH", 16, tag, channels, rate, rate * block, block, bits))
    buf.write(b"data")
    buf.write(struct.pack("<I", len(payload)))
    buf.write(payload)
    return buf.getvalue()


def downmix(frames):
    frames = np.asarray(frames, dtype=float)
    if frames.ndim == 1:
        return frames
    return frames.mean(axis=1)


def resample(x, rate_in, rate_out=TARGET_RATE, taps=RESAMPLER_TAPS,
             cutoff_hz=RESAMPLER_CUTOFF_HZ, beta=RESAMPLER_BETA, chunk=65536):
    """Kaiser-windowed sinc interpolation.

    Weights are renormalized per output sample to unit sum, so DC passes
    unchanged; the operation stays linear in ``x``.
    """
    x = np.asarray(x, dtype=float)
    if rate_in == rate_out:
        return x.copy()
    n_out = int(round(x.size * rate_out / rate_in))
    fc = min(cutoff_hz, 0.5 * min(rate_in, rate_out)) / rate_in  # cycles per input sample
    half = taps // 2
    offsets = np.arange(-half + 1, half + 1)
    out = np.empty(n_out)
    padded = np.concatenate([np.zeros(half), x, np.zeros(half + 1)])
    i0_beta = np.i0(beta)
    for start in range(0, n_out, chunk):
        idx = np.arange(start, min(start + chunk, n_out))
        pos = idx * (rate_in / rate_out)
        base = np.floor(pos).astype(np.int64)
        k = base[:, None] + offsets[None, :]
        dist = pos[:, None] - k
        ratio = np.clip(dist / (half + 1.0), -1.0, 1.0)
        window = np.i0(beta * np.sqrt(1.0 - ratio ** 2)) / i0_beta
        h = 2.0 * fc * np.sinc(2.0 * fc * dist) * window
        h /= h.sum(axis=1, keepdims=True)
        out[idx] = np.sum(padded[k + half] * h, axis=1)
    return out
