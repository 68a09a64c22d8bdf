"""Spectrograms with a shared frame convention.

Every frame-rate quantity in the pipeline (mel frames, linear-spectrogram
frames, f0 frames, content tokens) uses T = ceil(num_samples / hop) frames,
frame t centered on sample t * hop. That alignment contract is what lets
the variance adapter fuse f0 with content tokens index-by-index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError
from .types import LinearSpectrogram, MelSpectrogram, Waveform

LOG_FLOOR = 1e-10


@dataclass
class SpectrogramConfig:
    sample_rate: int = 16000
    n_fft: int = 1024
    win_length: int = 1024
    hop_length: int = 320
    n_mels: int = 40
    fmin: float = 0.0
    fmax: float | None = None
    floor: float = LOG_FLOOR

    @property
    def hop_ms(self) -> float:
        return 1000.0 * self.hop_length / self.sample_rate


def num_frames(num_samples: int, hop_length: int) -> int:
    return -(-num_samples // hop_length)


def frame_signal(samples: np.ndarray, win_length: int, hop_length: int) -> np.ndarray:
    """Centered frames [T, win_length] with T = ceil(n / hop)."""
    n = samples.size
    if n < win_length:
        raise DataError(f"waveform of {n} samples is shorter than one window ({win_length})")
    t = num_frames(n, hop_length)
    half = win_length // 2
    pad_right = max(0, (t - 1) * hop_length + win_length - half - n)
    padded = np.pad(samples, (half, pad_right))
    starts = hop_length * np.arange(t)
    idx = starts[:, None] + np.arange(win_length)[None, :]
    return padded[idx]


def stft_magnitude(x: Waveform, cfg: SpectrogramConfig) -> np.ndarray:
    frames = frame_signal(x.samples, cfg.win_length, cfg.hop_length)
    window = np.hanning(cfg.win_length)
    return np.abs(np.fft.rfft(frames * window, n=cfg.n_fft, axis=1))


def linear_spectrogram(x: Waveform, cfg: SpectrogramConfig) -> LinearSpectrogram:
    return LinearSpectrogram(frames=stft_magnitude(x, cfg))


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(cfg: SpectrogramConfig) -> np.ndarray:
    """Triangular mel filters [n_mels, n_fft // 2 + 1]."""
    fmax = cfg.fmax if cfg.fmax is not None else cfg.sample_rate / 2.0
    mel_points = np.linspace(hz_to_mel(cfg.fmin), hz_to_mel(fmax), cfg.n_mels + 2)
    hz_points = mel_to_hz(mel_points)
    bins = np.fft.rfftfreq(cfg.n_fft, d=1.0 / cfg.sample_rate)
    fb = np.zeros((cfg.n_mels, bins.size))
    for m in range(cfg.n_mels):
        lo, center, hi = hz_points[m : m + 3]
        rising = (bins - lo) / max(center - lo, 1e-12)
        falling = (hi - bins) / max(hi - center, 1e-12)
        fb[m] = np.clip(np.minimum(rising, falling), 0.0, None)
    return fb


def mel(x: Waveform, cfg: SpectrogramConfig) -> MelSpectrogram:
    """Log power-mel spectrogram (natural log, floored)."""
    power = stft_magnitude(x, cfg) ** 2
    energies = power @ mel_filterbank(cfg).T
    frames = np.log(np.maximum(energies, cfg.floor))
    return MelSpectrogram(frames=frames, hop_ms=cfg.hop_ms, n_mels=cfg.n_mels)
