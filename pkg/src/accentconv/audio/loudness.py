"""Integrated program loudness (K-weighted, gated) and normalization.

Follows the broadcast measurement recipe: a two-stage K-weighting filter,
mean-square over 400 ms blocks with 75% overlap, an absolute -70 LUFS gate
and a relative -10 LU gate. Mono only.
"""

from __future__ import annotations

import numpy as np
from scipy.signal import lfilter

from ..errors import DataError
from .types import Waveform

BLOCK_SECONDS = 0.400
BLOCK_OVERLAP = 0.75
ABSOLUTE_GATE_LUFS = -70.0
RELATIVE_GATE_LU = -10.0


def _high_shelf(fs: float) -> tuple[np.ndarray, np.ndarray]:
    # Stage-1 shelving prototype: f0 = 1681.97 Hz, +4 dB, Q = 0.7072
    f0, gain_db, q = 1681.974450955533, 3.999843853973347, 0.7071752369554196
    a = 10.0 ** (gain_db / 40.0)
    w0 = 2.0 * np.pi * f0 / fs
    alpha = np.sin(w0) / (2.0 * q)
    cw = np.cos(w0)
    b = np.array(
        [
            a * ((a + 1) + (a - 1) * cw + 2 * np.sqrt(a) * alpha),
            -2 * a * ((a - 1) + (a + 1) * cw),
            a * ((a + 1) + (a - 1) * cw - 2 * np.sqrt(a) * alpha),
        ]
    )
    den = np.array(
        [
            (a + 1) - (a - 1) * cw + 2 * np.sqrt(a) * alpha,
            2 * ((a - 1) - (a + 1) * cw),
            (a + 1) - (a - 1) * cw - 2 * np.sqrt(a) * alpha,
        ]
    )
    return b / den[0], den / den[0]


def _high_pass(fs: float) -> tuple[np.ndarray, np.ndarray]:
    # Stage-2 high-pass prototype: f0 = 38.14 Hz, Q = 0.5003
    f0, q = 38.13547087602444, 0.5003270373238773
    w0 = 2.0 * np.pi * f0 / fs
    alpha = np.sin(w0) / (2.0 * q)
    cw = np.cos(w0)
    b = np.array([(1 + cw) / 2, -(1 + cw), (1 + cw) / 2])
    den = np.array([1 + alpha, -2 * cw, 1 - alpha])
    return b / den[0], den / den[0]


def k_weight(samples: np.ndarray, sample_rate: int) -> np.ndarray:
    """Apply the two-stage K-weighting filter."""
    b1, a1 = _high_shelf(sample_rate)
    b2, a2 = _high_pass(sample_rate)
    return lfilter(b2, a2, lfilter(b1, a1, samples))


def integrated_loudness(x: Waveform) -> float:
    """Gated integrated loudness in LUFS.

    Raises DataError when no block passes the absolute gate (e.g. silence).
    """
    y = k_weight(x.samples, x.sample_rate)
    block = int(round(BLOCK_SECONDS * x.sample_rate))
    hop = int(round(block * (1.0 - BLOCK_OVERLAP)))
    if y.size < block:
        # Short signal: measure over the whole buffer as a single block.
        blocks = y[None, :]
    else:
        n = 1 + (y.size - block) // hop
        idx = np.arange(block)[None, :] + hop * np.arange(n)[:, None]
        blocks = y[idx]
    ms = np.mean(blocks**2, axis=1)
    with np.errstate(divide="ignore"):
        block_loudness = -0.691 + 10.0 * np.log10(ms)
    keep = block_loudness > ABSOLUTE_GATE_LUFS
    if not np.any(keep):
        raise DataError("loudness undefined: no block above the absolute gate")
    rel_threshold = -0.691 + 10.0 * np.log10(np.mean(ms[keep])) + RELATIVE_GATE_LU
    keep &= block_loudness > rel_threshold
    if not np.any(keep):
        raise DataError("loudness undefined: no block above the relative gate")
    return float(-0.691 + 10.0 * np.log10(np.mean(ms[keep])))


def normalize_loudness(
    x: Waveform, target_lufs: float, max_iter: int = 4, tol_db: float = 0.1
) -> Waveform:
    """Scale ``x`` so its integrated loudness hits ``target_lufs``.

    Gating makes measured loudness slightly nonlinear in gain, so the gain
    is refined iteratively. If the required gain would push the peak above
    1.0, the gain is capped to keep the peak at 1.0.
    """
    if not np.any(x.samples != 0.0):
        raise DataError("loudness undefined for all-zero input")
    samples = x.samples.astype(np.float64)
    for _ in range(max_iter):
        measured = integrated_loudness(Waveform(samples, x.sample_rate))
        delta = target_lufs - measured
        if abs(delta) <= tol_db:
            break
        samples = samples * 10.0 ** (delta / 20.0)
    peak = np.max(np.abs(samples))
    if peak > 1.0:
        samples = samples / peak
    return Waveform(samples, x.sample_rate)
