"""Differentiable log-mel transform for reconstruction losses.

Shares the filterbank with the numpy analysis path but uses torch STFT so
gradients reach the decoder.
"""

from __future__ import annotations

import torch
from torch import nn

from ..audio.dsp import SpectrogramConfig, mel_filterbank


class TorchMel(nn.Module):
    def __init__(self, cfg: SpectrogramConfig | None = None):
        super().__init__()
        cfg = cfg or SpectrogramConfig()
        self.cfg = cfg
        self.register_buffer("fb", torch.from_numpy(mel_filterbank(cfg)).float())
        self.register_buffer("window", torch.hann_window(cfg.win_length))

    def forward(self, audio: torch.Tensor) -> torch.Tensor:
        """audio: [B, n] or [B, 1, n] -> log power-mel [B, frames, n_mels]."""
        if audio.dim() == 3:
            audio = audio.squeeze(1)
        spec = torch.stft(
            audio,
            n_fft=self.cfg.n_fft,
            hop_length=self.cfg.hop_length,
            win_length=self.cfg.win_length,
            window=self.window,
            center=True,
            return_complex=True,
        )
        power = spec.abs() ** 2
        energies = torch.einsum("bft,mf->btm", power, self.fb)
        return torch.log(torch.clamp(energies, min=self.cfg.floor))
