"""Frozen content-feature backbones at the 50 Hz token frame rate.

Two implementations sit behind one interface: a pretrained multilingual
ASR encoder loaded from a local asset, and a tiny frozen convolutional
encoder over log-mel that lets the rest of the stack train and test with
no downloaded weights.
"""

from __future__ import annotations

import hashlib
import os

import numpy as np
import torch
from torch import nn

from ..audio import SpectrogramConfig, Waveform, mel
from ..errors import ConfigError

FRAME_RATE = 50


def parameter_checksum(module: nn.Module) -> str:
    """SHA-256 over all parameters and buffers; detects any weight drift."""
    h = hashlib.sha256()
    for name, t in sorted(module.state_dict().items()):
        h.update(name.encode())
        h.update(t.detach().cpu().numpy().tobytes())
    return h.hexdigest()


class MelConvBackbone(nn.Module):
    """Seeded, frozen conv stack over per-utterance-whitened log-mel.

    The whitening makes features exactly invariant to input rescaling,
    which is what gives amplitude-invariant tokens downstream.
    """

    def __init__(self, dim: int = 64, n_mels: int = 40, seed: int = 0):
        super().__init__()
        self.dim = dim
        self.frame_rate = FRAME_RATE
        self.mel_cfg = SpectrogramConfig(n_mels=n_mels, hop_length=320)
        gen = torch.Generator().manual_seed(seed)
        self.convs = nn.ModuleList(
            [
                nn.Conv1d(n_mels, dim, kernel_size=5, padding=2),
                nn.Conv1d(dim, dim, kernel_size=5, padding=2),
                nn.Conv1d(dim, dim, kernel_size=3, padding=1),
            ]
        )
        for conv in self.convs:
            nn.init.kaiming_uniform_(conv.weight, generator=gen)
            nn.init.zeros_(conv.bias)
        self.requires_grad_(False)
        self.eval()

    def forward(self, mel_frames: torch.Tensor) -> torch.Tensor:
        # mel_frames: [B, T, n_mels], already whitened
        h = mel_frames.transpose(1, 2)
        for conv in self.convs:
            h = torch.nn.functional.gelu(conv(h))
        return h.transpose(1, 2)

    @torch.no_grad()
    def extract(self, x: Waveform) -> torch.Tensor:
        frames = mel(x, self.mel_cfg).frames
        frames = (frames - frames.mean()) / max(frames.std(), 1e-6)
        inp = torch.from_numpy(frames).float().unsqueeze(0)
        return self.forward(inp).squeeze(0)

    def checksum(self) -> str:
        return parameter_checksum(self)


class PretrainedEncoderBackbone:
    """Adapter for a locally stored pretrained ASR encoder (50 Hz frames).

    The asset directory must contain a transformers-format Whisper-style
    encoder. Nothing is downloaded: a missing asset is a configuration
    error naming the expected path.
    """

    def __init__(self, asset_path: str, dim: int = 1024):
        if not asset_path or not os.path.isdir(asset_path):
            raise ConfigError(
                "pretrained content encoder asset not found; expected a local "
                f"transformers checkpoint directory at {asset_path!r}"
            )
        from transformers import WhisperFeatureExtractor, WhisperModel  # lazy

        self.extractor = WhisperFeatureExtractor.from_pretrained(asset_path)
        model = WhisperModel.from_pretrained(asset_path)
        self.encoder = model.get_encoder().eval()
        self.encoder.requires_grad_(False)
        self.dim = dim
        self.frame_rate = FRAME_RATE

    @torch.no_grad()
    def extract(self, x: Waveform) -> torch.Tensor:
        from ..audio import num_frames

        feats = self.extractor(
            x.samples, sampling_rate=x.sample_rate, return_tensors="pt"
        ).input_features
        out = self.encoder(feats).last_hidden_state.squeeze(0)
        t = num_frames(len(x), x.sample_rate // FRAME_RATE)
        return out[:t]

    def checksum(self) -> str:
        return parameter_checksum(self.encoder)


def build_backbone(kind: str, **kwargs):
    if kind == "mel_conv":
        allowed = {k: v for k, v in kwargs.items() if k in ("dim", "n_mels", "seed")}
        return MelConvBackbone(**allowed)
    if kind == "pretrained":
        return PretrainedEncoderBackbone(
            asset_path=kwargs.get("asset_path", ""), dim=kwargs.get("dim", 1024)
        )
    raise ConfigError(f"unknown backbone kind {kind!r}")


def batch_extract(backbone, waveforms: list[Waveform]) -> tuple[torch.Tensor, torch.Tensor]:
    """Pad per-utterance features into [B, T_max, D] plus a length tensor."""
    feats = [backbone.extract(x) for x in waveforms]
    lengths = torch.tensor([f.shape[0] for f in feats], dtype=torch.long)
    out = torch.zeros(len(feats), int(lengths.max()), feats[0].shape[1])
    for i, f in enumerate(feats):
        out[i, : f.shape[0]] = f
    return out, lengths


def length_mask(lengths: torch.Tensor, t_max: int | None = None) -> torch.Tensor:
    t_max = t_max or int(lengths.max())
    return torch.arange(t_max)[None, :] < lengths[:, None]
