"""Core audio value types."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DataError


@dataclass
class Waveform:
    """Mono audio: float samples in [-1, 1] plus a sample rate in Hz."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64).reshape(-1)
        if self.sample_rate <= 0:
            raise DataError(f"sample rate must be positive, got {self.sample_rate}")
        if self.samples.size == 0:
            raise DataError("waveform is empty")
        if not np.all(np.isfinite(self.samples)):
            raise DataError("waveform contains non-finite samples")

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    def __len__(self) -> int:
        return self.samples.size


@dataclass
class MelSpectrogram:
    """Log-mel energies, frames laid out [T, n_mels]."""

    frames: np.ndarray
    hop_ms: float
    n_mels: int


@dataclass
class LinearSpectrogram:
    """STFT magnitudes, frames laid out [T, n_fft // 2 + 1]."""

    frames: np.ndarray


@dataclass
class F0Contour:
    """Per-frame fundamental frequency with voicing flags.

    ``values`` is Hz when ``kind == "raw"`` and z-scored log-f0 when
    ``kind == "normalized"``. Normalization statistics are stored so the
    transform is invertible; ``warning`` marks contours that could not be
    normalized (fewer than two voiced frames).
    """

    values: np.ndarray
    voiced: np.ndarray
    kind: str = "raw"
    log_mean: float | None = None
    log_std: float | None = None
    warning: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        self.voiced = np.asarray(self.voiced, dtype=bool).reshape(-1)
        if self.values.shape != self.voiced.shape:
            raise DataError("f0 values and voicing flags must share a length")
        if self.kind not in ("raw", "normalized"):
            raise DataError(f"unknown f0 contour kind {self.kind!r}")

    def __len__(self) -> int:
        return self.values.size


@dataclass
class PerturbConfig:
    """Pitch/formant perturbation ranges and the per-sample apply probability."""

    pitch_shift_range: float = 0.20
    formant_shift_range: float = 0.15
    apply_probability: float = 0.50
    seed: int = 0

    def __post_init__(self):
        for name in ("pitch_shift_range", "formant_shift_range"):
            v = getattr(self, name)
            if not (0.0 < v < 1.0):
                raise DataError(f"{name} must lie in (0, 1), got {v}")
        if not (0.0 <= self.apply_probability <= 1.0):
            raise DataError(
                f"apply_probability must lie in [0, 1], got {self.apply_probability}"
            )
