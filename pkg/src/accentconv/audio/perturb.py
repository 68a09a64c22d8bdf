"""Timbre perturbation for content-encoder inputs.

Pitch is shifted by resample-and-stretch (phase vocoder), formants by
warping the cepstrally-smoothed spectral envelope along the frequency
axis. Both are pure functions; randomness enters only through the
explicit generator passed to :func:`perturb`.
"""

from __future__ import annotations

import numpy as np

from .io import resample_by_factor
from .types import PerturbConfig, Waveform

_N_FFT = 1024
_HOP = 256


def _stft(samples: np.ndarray) -> np.ndarray:
    window = np.hanning(_N_FFT)
    n = samples.size
    n_frames = max(1, 1 + (n + _N_FFT // 2 * 2 - _N_FFT) // _HOP)
    padded = np.pad(samples, (_N_FFT // 2, _N_FFT // 2 + _HOP))
    idx = _HOP * np.arange(n_frames)[:, None] + np.arange(_N_FFT)[None, :]
    return np.fft.rfft(padded[idx] * window, axis=1)


def _istft(spec: np.ndarray, length: int) -> np.ndarray:
    window = np.hanning(_N_FFT)
    frames = np.fft.irfft(spec, n=_N_FFT, axis=1) * window
    out = np.zeros(spec.shape[0] * _HOP + _N_FFT)
    norm = np.zeros_like(out)
    wsq = window**2
    for t in range(spec.shape[0]):
        out[t * _HOP : t * _HOP + _N_FFT] += frames[t]
        norm[t * _HOP : t * _HOP + _N_FFT] += wsq
    out = out[_N_FFT // 2 :] / np.maximum(norm[_N_FFT // 2 :], 1e-8)
    if out.size < length:
        out = np.pad(out, (0, length - out.size))
    return out[:length]


def time_stretch(samples: np.ndarray, rate: float) -> np.ndarray:
    """Pitch-preserving tempo change: output duration = input / rate."""
    if rate <= 0:
        raise ValueError("rate must be positive")
    spec = _stft(samples)
    n_frames = spec.shape[0]
    steps = np.arange(0, n_frames - 1, rate) if n_frames > 1 else np.array([0.0])
    bin_phase_advance = 2.0 * np.pi * _HOP * np.fft.rfftfreq(_N_FFT)

    mags = np.abs(spec)
    phases = np.angle(spec)
    out = np.zeros((steps.size, spec.shape[1]), dtype=complex)
    acc = phases[0].copy()
    for i, s in enumerate(steps):
        k = int(np.floor(s))
        frac = s - k
        k2 = min(k + 1, n_frames - 1)
        mag = (1.0 - frac) * mags[k] + frac * mags[k2]
        out[i] = mag * np.exp(1j * acc)
        dphi = phases[k2] - phases[k] - bin_phase_advance
        dphi -= 2.0 * np.pi * np.round(dphi / (2.0 * np.pi))
        acc += bin_phase_advance + dphi
    length = int(round(samples.size / rate))
    return _istft(out, length)


def pitch_shift(samples: np.ndarray, sample_rate: int, factor: float) -> np.ndarray:
    """Scale f0 by ``factor`` while keeping duration (within one hop)."""
    if factor == 1.0:
        return samples.copy()
    sped = resample_by_factor(samples, 1.0 / factor)
    out = time_stretch(sped, rate=1.0 / factor)
    if out.size < samples.size:
        out = np.pad(out, (0, samples.size - out.size))
    return out[: samples.size]


def _spectral_envelope(mag: np.ndarray, n_coef: int = 32) -> np.ndarray:
    logmag = np.log(np.maximum(mag, 1e-10))
    ceps = np.fft.irfft(logmag, axis=1)
    lifter = np.zeros(ceps.shape[1])
    lifter[:n_coef] = 1.0
    lifter[-(n_coef - 1) :] = 1.0
    return np.exp(np.fft.rfft(ceps * lifter, axis=1).real)


def formant_shift(samples: np.ndarray, sample_rate: int, factor: float) -> np.ndarray:
    """Warp the spectral envelope by ``factor`` leaving pitch untouched."""
    if factor == 1.0:
        return samples.copy()
    spec = _stft(samples)
    mag = np.abs(spec)
    env = _spectral_envelope(mag)
    excitation = mag / np.maximum(env, 1e-10)
    bins = np.arange(env.shape[1], dtype=np.float64)
    warped = np.empty_like(env)
    src = bins / factor
    src = np.clip(src, 0, env.shape[1] - 1)
    for t in range(env.shape[0]):
        warped[t] = np.interp(src, bins, env[t])
    new_mag = warped * excitation
    phase = np.angle(spec)
    return _istft(new_mag * np.exp(1j * phase), samples.size)


def perturb(x: Waveform, cfg: PerturbConfig, rng: np.random.Generator) -> Waveform:
    """Randomly pitch/formant-perturb a waveform.

    With probability ``cfg.apply_probability`` the sample receives a pitch
    factor in [1 - r_p, 1 + r_p] and a formant factor in [1 - r_f, 1 + r_f]
    (both drawn per call); otherwise it passes through unchanged.
    """
    if rng.random() >= cfg.apply_probability:
        return Waveform(x.samples.copy(), x.sample_rate)
    pitch_factor = 1.0 + rng.uniform(-cfg.pitch_shift_range, cfg.pitch_shift_range)
    formant_factor = 1.0 + rng.uniform(-cfg.formant_shift_range, cfg.formant_shift_range)
    out = pitch_shift(x.samples, x.sample_rate, pitch_factor)
    out = formant_shift(out, x.sample_rate, formant_factor)
    peak = np.max(np.abs(out))
    if peak > 1.0:
        out = out / peak
    return Waveform(out, x.sample_rate)
