"""Speaker-conditioned coupling flow between posterior and prior spaces.

Stacked affine coupling layers with channel flips in between. The default
configuration is volume preserving (translation-only couplings), matching
the referenced variational TTS recipe; per-layer scales can be enabled,
in which case the accumulated log-determinant is returned alongside.
Final projections are zero-initialized so the transform starts at
identity.
"""

from __future__ import annotations

import torch
from torch import nn


class CouplingLayer(nn.Module):
    def __init__(
        self,
        channels: int,
        hidden: int = 32,
        spk_dim: int = 512,
        mean_only: bool = True,
    ):
        super().__init__()
        assert channels % 2 == 0, "coupling needs an even channel count"
        self.half = channels // 2
        self.mean_only = mean_only
        self.pre = nn.Conv1d(self.half, hidden, kernel_size=5, padding=2)
        self.spk_proj = nn.Conv1d(spk_dim, hidden, kernel_size=1)
        self.mid = nn.Conv1d(hidden, hidden, kernel_size=5, padding=2)
        out_channels = self.half if mean_only else 2 * self.half
        self.post = nn.Conv1d(hidden, out_channels, kernel_size=1)
        nn.init.zeros_(self.post.weight)
        nn.init.zeros_(self.post.bias)

    def _params(self, x1: torch.Tensor, spk: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        h = self.pre(x1) + self.spk_proj(spk.unsqueeze(-1))
        h = torch.nn.functional.gelu(h)
        h = torch.nn.functional.gelu(self.mid(h))
        out = self.post(h)
        if self.mean_only:
            return out, torch.zeros_like(out)
        m, logs = out.chunk(2, dim=1)
        return m, logs

    def forward(
        self, x: torch.Tensor, spk: torch.Tensor, mask: torch.Tensor, inverse: bool = False
    ) -> tuple[torch.Tensor, torch.Tensor]:
        x1, x2 = x[:, : self.half], x[:, self.half :]
        m, logs = self._params(x1, spk)
        if inverse:
            y2 = (x2 - m) * torch.exp(-logs) * mask
            logdet = -(logs * mask).sum(dim=(1, 2))
        else:
            y2 = (m + x2 * torch.exp(logs)) * mask
            logdet = (logs * mask).sum(dim=(1, 2))
        return torch.cat([x1, y2], dim=1), logdet


class SpeakerFlow(nn.Module):
    """x: [B, C, T]; spk: [B, spk_dim]; mask: [B, 1, T] (1 = valid)."""

    def __init__(
        self,
        channels: int = 16,
        n_layers: int = 2,
        hidden: int = 32,
        spk_dim: int = 512,
        mean_only: bool = True,
    ):
        super().__init__()
        self.layers = nn.ModuleList(
            [CouplingLayer(channels, hidden, spk_dim, mean_only) for _ in range(n_layers)]
        )

    def forward(
        self,
        x: torch.Tensor,
        spk: torch.Tensor,
        mask: torch.Tensor | None = None,
        inverse: bool = False,
    ) -> tuple[torch.Tensor, torch.Tensor]:
        if mask is None:
            mask = torch.ones(x.shape[0], 1, x.shape[2], dtype=x.dtype, device=x.device)
        total_logdet = torch.zeros(x.shape[0], dtype=x.dtype, device=x.device)
        layers = reversed(self.layers) if inverse else self.layers
        for layer in layers:
            if inverse:
                x = torch.flip(x, dims=[1])
                x, logdet = layer(x, spk, mask, inverse=True)
            else:
                x, logdet = layer(x, spk, mask, inverse=False)
                x = torch.flip(x, dims=[1])
            total_logdet = total_logdet + logdet
        return x, total_logdet
