"""Waveform decoder (upsampling generator) and the multi-period /
multi-scale discriminator pair."""

from __future__ import annotations

import torch
from torch import nn
from torch.nn import functional as F


class ResBlock(nn.Module):
    def __init__(self, channels: int, kernel: int = 3, dilations=(1, 3)):
        super().__init__()
        self.convs = nn.ModuleList(
            [
                nn.Conv1d(
                    channels,
                    channels,
                    kernel,
                    dilation=d,
                    padding=(kernel - 1) * d // 2,
                )
                for d in dilations
            ]
        )

    def forward(self, x):
        for conv in self.convs:
            x = x + conv(F.leaky_relu(x, 0.1))
        return x


def _up_params(rate: int) -> tuple[int, int]:
    # kernel/padding pair that makes ConvTranspose1d output exactly T * rate
    if rate % 2 == 0:
        return 2 * rate, rate // 2
    return 2 * rate + 1, (rate + 1) // 2


class WaveformDecoder(nn.Module):
    """Upsamples latent frames to audio; output length is exactly T * hop."""

    def __init__(
        self,
        z_dim: int = 16,
        base_channels: int = 64,
        rates: tuple[int, ...] = (16, 20),
        spk_dim: int = 512,
        use_speaker: bool = False,
    ):
        super().__init__()
        self.hop = 1
        for r in rates:
            self.hop *= r
        self.use_speaker = use_speaker
        self.pre = nn.Conv1d(z_dim, base_channels, kernel_size=7, padding=3)
        if use_speaker:
            self.spk_proj = nn.Conv1d(spk_dim, base_channels, kernel_size=1)
        ups, blocks = [], []
        ch = base_channels
        for rate in rates:
            kernel, pad = _up_params(rate)
            ups.append(nn.ConvTranspose1d(ch, ch // 2, kernel, stride=rate, padding=pad))
            blocks.append(ResBlock(ch // 2))
            ch //= 2
        self.ups = nn.ModuleList(ups)
        self.blocks = nn.ModuleList(blocks)
        self.post = nn.Conv1d(ch, 1, kernel_size=7, padding=3)

    def forward(self, z: torch.Tensor, spk: torch.Tensor | None = None) -> torch.Tensor:
        """z: [B, z_dim, T] -> audio [B, 1, T * hop]."""
        h = self.pre(z)
        if self.use_speaker and spk is not None:
            h = h + self.spk_proj(spk.unsqueeze(-1))
        for up, block in zip(self.ups, self.blocks):
            h = block(up(F.leaky_relu(h, 0.1)))
        return torch.tanh(self.post(F.leaky_relu(h, 0.1)))


class PeriodDiscriminator(nn.Module):
    def __init__(self, period: int, channels: tuple[int, ...] = (16, 32, 64)):
        super().__init__()
        self.period = period
        convs = []
        in_ch = 1
        for ch in channels:
            convs.append(nn.Conv2d(in_ch, ch, (5, 1), stride=(3, 1), padding=(2, 0)))
            in_ch = ch
        self.convs = nn.ModuleList(convs)
        self.post = nn.Conv2d(in_ch, 1, (3, 1), padding=(1, 0))

    def forward(self, x: torch.Tensor) -> tuple[torch.Tensor, list[torch.Tensor]]:
        b, c, t = x.shape
        if t % self.period:
            pad = self.period - t % self.period
            x = F.pad(x, (0, pad), "reflect")
            t += pad
        x = x.view(b, c, t // self.period, self.period)
        fmaps = []
        for conv in self.convs:
            x = F.leaky_relu(conv(x), 0.1)
            fmaps.append(x)
        out = self.post(x)
        fmaps.append(out)
        return out.flatten(1), fmaps


class ScaleDiscriminator(nn.Module):
    def __init__(self, channels: tuple[int, ...] = (16, 32, 64)):
        super().__init__()
        convs = []
        in_ch = 1
        for i, ch in enumerate(channels):
            convs.append(nn.Conv1d(in_ch, ch, 15 if i == 0 else 11, stride=2, padding=7 if i == 0 else 5))
            in_ch = ch
        self.convs = nn.ModuleList(convs)
        self.post = nn.Conv1d(in_ch, 1, 3, padding=1)

    def forward(self, x: torch.Tensor) -> tuple[torch.Tensor, list[torch.Tensor]]:
        fmaps = []
        for conv in self.convs:
            x = F.leaky_relu(conv(x), 0.1)
            fmaps.append(x)
        out = self.post(x)
        fmaps.append(out)
        return out.flatten(1), fmaps


class MultiDiscriminator(nn.Module):
    """Multi-period plus multi-scale ensemble; returns per-discriminator
    scores and intermediate feature maps."""

    def __init__(self, periods: tuple[int, ...] = (2, 3), n_scales: int = 1):
        super().__init__()
        discs: list[nn.Module] = [PeriodDiscriminator(p) for p in periods]
        discs += [ScaleDiscriminator() for _ in range(n_scales)]
        self.discriminators = nn.ModuleList(discs)

    def forward(self, x: torch.Tensor) -> tuple[list[torch.Tensor], list[list[torch.Tensor]]]:
        scores, fmaps = [], []
        for disc in self.discriminators:
            s, f = disc(x)
            scores.append(s)
            fmaps.append(f)
        return scores, fmaps
