"""WAV reading/writing and the standardization entry point (resample,
downmix, loudness normalization)."""

from __future__ import annotations

import math
import os
from fractions import Fraction

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly

from ..errors import DataError
from .loudness import normalize_loudness
from .types import Waveform

_PCM_SCALES = {np.dtype(np.int16): 32768.0, np.dtype(np.int32): 2147483648.0}


def load_wav(path: str | os.PathLike) -> Waveform:
    """Read a WAV file (PCM16/int32/float32/float64) and downmix to mono."""
    if not os.path.exists(path):
        raise DataError(f"audio file not found: {path}")
    try:
        rate, data = wavfile.read(path)
    except Exception as exc:
        raise DataError(f"could not decode {path}: {exc}") from exc
    data = np.asarray(data)
    if data.ndim == 2:
        data = data.mean(axis=1)
    if data.dtype in _PCM_SCALES:
        data = data.astype(np.float64) / _PCM_SCALES[data.dtype]
    elif data.dtype == np.uint8:
        data = (data.astype(np.float64) - 128.0) / 128.0
    else:
        data = data.astype(np.float64)
    return Waveform(data, int(rate))


def save_wav(path: str | os.PathLike, x: Waveform) -> None:
    """Write PCM16 WAV, clipping to [-1, 1]."""
    samples = np.clip(x.samples, -1.0, 1.0)
    wavfile.write(path, x.sample_rate, (samples * 32767.0).astype(np.int16))


def resample(x: Waveform, target_rate: int) -> Waveform:
    if x.sample_rate == target_rate:
        return x
    frac = Fraction(target_rate, x.sample_rate)
    out = resample_poly(x.samples, frac.numerator, frac.denominator)
    return Waveform(out, target_rate)


def resample_by_factor(samples: np.ndarray, factor: float) -> np.ndarray:
    """Resample a raw buffer to ``len * factor`` samples (rational approx)."""
    frac = Fraction(factor).limit_denominator(1000)
    out = resample_poly(samples, frac.numerator, frac.denominator)
    want = int(round(len(samples) * factor))
    if len(out) > want:
        out = out[:want]
    elif len(out) < want:
        out = np.pad(out, (0, want - len(out)))
    return out


def load_and_standardize(
    path: str | os.PathLike, target_rate: int = 16000, target_loudness: float = -27.0
) -> Waveform:
    """Decode, downmix, resample and loudness-normalize an audio file."""
    return standardize(load_wav(path), target_rate, target_loudness)


def standardize(
    x: Waveform, target_rate: int = 16000, target_loudness: float = -27.0
) -> Waveform:
    x = resample(x, target_rate)
    if not np.any(x.samples != 0.0):
        raise DataError("loudness undefined for silent input")
    x = normalize_loudness(x, target_loudness)
    if math.isnan(float(np.max(np.abs(x.samples)))):
        raise DataError("standardization produced non-finite samples")
    return x
