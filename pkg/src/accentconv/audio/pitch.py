"""Autocorrelation f0 tracking at the content-token frame rate, plus
per-utterance log-f0 normalization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dsp import frame_signal
from .types import F0Contour, Waveform

STD_FLOOR = 1e-4


@dataclass
class PitchConfig:
    fmin: float = 40.0
    fmax: float = 800.0
    win_length: int = 1024
    hop_length: int = 320
    voicing_threshold: float = 0.45
    energy_floor: float = 1e-4


def extract_f0(x: Waveform, cfg: PitchConfig | None = None) -> F0Contour:
    """Raw per-frame f0 in Hz; unvoiced frames carry 0 with voiced=False.

    Frame count equals the content-token frame count for the same waveform
    (shared hop and ceil convention).
    """
    cfg = cfg or PitchConfig()
    sr = x.sample_rate
    frames = frame_signal(x.samples, cfg.win_length, cfg.hop_length)
    frames = frames - frames.mean(axis=1, keepdims=True)
    lag_min = max(2, int(sr / cfg.fmax))
    lag_max = min(cfg.win_length - 2, int(np.ceil(sr / cfg.fmin)))

    # Autocorrelation via rFFT of zero-padded frames.
    n_fft = int(2 ** np.ceil(np.log2(2 * cfg.win_length)))
    spec = np.fft.rfft(frames, n=n_fft, axis=1)
    acf = np.fft.irfft(spec * np.conj(spec), axis=1)[:, : lag_max + 2]

    values = np.zeros(frames.shape[0])
    voiced = np.zeros(frames.shape[0], dtype=bool)
    for t in range(frames.shape[0]):
        r0 = acf[t, 0]
        if r0 < cfg.energy_floor * cfg.win_length:
            continue
        window = acf[t, lag_min : lag_max + 1] / r0
        k = int(np.argmax(window))
        peak = window[k]
        if peak < cfg.voicing_threshold:
            continue
        lag = lag_min + k
        # Parabolic refinement around the peak.
        if 0 < k < window.size - 1:
            a, b, c = window[k - 1], window[k], window[k + 1]
            denom = a - 2 * b + c
            if abs(denom) > 1e-12:
                lag += 0.5 * (a - c) / denom
        values[t] = sr / lag
        voiced[t] = True
    return F0Contour(values=values, voiced=voiced, kind="raw")


def normalize_f0(c: F0Contour) -> F0Contour:
    """Z-score log-f0 over voiced frames; zero (sentinel) elsewhere."""
    if c.kind != "raw":
        raise ValueError("normalize_f0 expects a raw contour")
    voiced = c.voiced.copy()
    if voiced.sum() < 2:
        return F0Contour(
            values=np.zeros_like(c.values), voiced=voiced, kind="normalized", warning=True
        )
    logf0 = np.log(c.values[voiced])
    mean = float(logf0.mean())
    std = max(float(logf0.std()), STD_FLOOR)
    values = np.zeros_like(c.values)
    values[voiced] = (logf0 - mean) / std
    return F0Contour(
        values=values, voiced=voiced, kind="normalized", log_mean=mean, log_std=std
    )


def denormalize_f0(c: F0Contour) -> F0Contour:
    """Invert normalize_f0 using the stored statistics."""
    if c.kind != "normalized":
        raise ValueError("denormalize_f0 expects a normalized contour")
    if c.log_mean is None or c.log_std is None:
        raise ValueError("contour carries no normalization statistics")
    values = np.zeros_like(c.values)
    values[c.voiced] = np.exp(c.values[c.voiced] * c.log_std + c.log_mean)
    return F0Contour(values=values, voiced=c.voiced.copy(), kind="raw")
