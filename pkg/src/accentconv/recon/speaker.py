"""Frozen speaker-timbre embedding extractors (512-dim, unit norm)."""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass

import numpy as np

from ..audio import PitchConfig, SpectrogramConfig, Waveform, extract_f0, mel
from ..errors import ConfigError, DataError

SPEAKER_DIM = 512


@dataclass
class SpeakerEmbedding:
    vector: np.ndarray
    source: str = ""

    def __post_init__(self):
        self.vector = np.asarray(self.vector, dtype=np.float64).reshape(-1)
        if self.vector.shape[0] != SPEAKER_DIM:
            raise DataError(f"speaker embedding must be {SPEAKER_DIM}-dim")
        norm = np.linalg.norm(self.vector)
        if norm == 0:
            raise DataError("zero speaker embedding")


class SpectralStatsSpeakerEmbedder:
    """Asset-free embedder: long-term spectral and pitch statistics pushed
    through a fixed seeded projection, then L2-normalized.

    Deterministic and parameter-free at runtime, which makes the frozen
    contract trivially checkable.
    """

    def __init__(self, seed: int = 17, n_mels: int = 40):
        self.cfg = SpectrogramConfig(n_mels=n_mels)
        rng = np.random.default_rng(seed)
        feat_dim = 2 * n_mels + 3
        self.projection = rng.standard_normal((SPEAKER_DIM, feat_dim)) / np.sqrt(feat_dim)

    def embed(self, x: Waveform, source: str = "") -> SpeakerEmbedding:
        if x.duration < 1.0:
            raise DataError(
                f"speaker embedding needs at least 1 s of audio, got {x.duration:.2f} s"
            )
        frames = mel(x, self.cfg).frames
        contour = extract_f0(x, PitchConfig())
        voiced = contour.values[contour.voiced]
        if voiced.size:
            f0_stats = [np.log(voiced).mean(), np.log(voiced).std(), voiced.size / len(contour)]
        else:
            f0_stats = [0.0, 0.0, 0.0]
        feats = np.concatenate([frames.mean(axis=0), frames.std(axis=0), f0_stats])
        vec = self.projection @ feats
        vec = vec / np.linalg.norm(vec)
        return SpeakerEmbedding(vector=vec, source=source)

    def checksum(self) -> str:
        return hashlib.sha256(self.projection.tobytes()).hexdigest()


class PretrainedSpeakerEmbedder:
    """Adapter for a locally stored pretrained speaker-verification model."""

    def __init__(self, asset_path: str):
        if not asset_path or not os.path.exists(asset_path):
            raise ConfigError(
                "pretrained speaker embedder asset not found; expected a local "
                f"checkpoint at {asset_path!r}"
            )
        import torch

        self._model = torch.load(asset_path, map_location="cpu", weights_only=False)
        self._model.eval()

    def embed(self, x: Waveform, source: str = "") -> SpeakerEmbedding:
        import torch

        if x.duration < 1.0:
            raise DataError("speaker embedding needs at least 1 s of audio")
        with torch.no_grad():
            out = self._model(torch.from_numpy(x.samples).float().unsqueeze(0))
        vec = out.squeeze(0).numpy()
        vec = vec / np.linalg.norm(vec)
        return SpeakerEmbedding(vector=vec, source=source)

    def checksum(self) -> str:
        import hashlib as h

        import torch

        digest = h.sha256()
        for name, t in sorted(self._model.state_dict().items()):
            digest.update(name.encode())
            digest.update(t.numpy().tobytes())
        return digest.hexdigest()


def build_speaker_embedder(kind: str, **kwargs):
    if kind == "spectral_stats":
        return SpectralStatsSpeakerEmbedder(seed=kwargs.get("seed", 17))
    if kind == "pretrained":
        return PretrainedSpeakerEmbedder(asset_path=kwargs.get("asset_path", ""))
    raise ConfigError(f"unknown speaker embedder kind {kind!r}")


def cosine(a: SpeakerEmbedding, b: SpeakerEmbedding) -> float:
    return float(np.dot(a.vector, b.vector))
