"""Reconstruction-side encoders: post-quantization content encoder, the
prosody predictor/fusion pair, and the spectrogram posterior."""

from __future__ import annotations

import torch
from torch import nn

from ..errors import DataError


def _masked(x: torch.Tensor, mask: torch.Tensor | None) -> torch.Tensor:
    if mask is None:
        return x
    return x * mask.unsqueeze(-1).to(x.dtype)


class PostVQEncoder(nn.Module):
    """Re-expands quantized content vectors into decoder-facing features."""

    def __init__(self, latent_dim: int, model_dim: int = 64, n_heads: int = 4, dropout: float = 0.1):
        super().__init__()
        self.conv1 = nn.Conv1d(latent_dim, model_dim, kernel_size=5, padding=2)
        self.conv2 = nn.Conv1d(model_dim, model_dim, kernel_size=5, padding=2)
        layer = nn.TransformerEncoderLayer(
            d_model=model_dim,
            nhead=n_heads,
            dim_feedforward=2 * model_dim,
            dropout=dropout,
            batch_first=True,
            norm_first=True,
        )
        self.transformer = nn.TransformerEncoder(layer, num_layers=1)
        self.to_latent = nn.Linear(model_dim, latent_dim)

    def forward(self, q: torch.Tensor, mask: torch.Tensor | None = None) -> torch.Tensor:
        h = q.transpose(1, 2)
        h = torch.nn.functional.gelu(self.conv1(h))
        h = torch.nn.functional.gelu(self.conv2(h))
        h = h.transpose(1, 2)
        pad = None if mask is None else ~mask
        return _masked(self.transformer(h, src_key_padding_mask=pad), mask)

    def project_latent(self, content: torch.Tensor) -> torch.Tensor:
        """Back-projection used by the content-consistency (VQ) loss."""
        return self.to_latent(content)


class F0Predictor(nn.Module):
    """Predicts normalized per-frame f0 from content + speaker.

    Inputs are detached by the caller during training so this head's loss
    never reaches the upstream pathways.
    """

    def __init__(self, model_dim: int, spk_dim: int = 512, n_heads: int = 4, dropout: float = 0.1):
        super().__init__()
        self.spk_proj = nn.Linear(spk_dim, model_dim)
        self.conv1 = nn.Conv1d(model_dim, model_dim, kernel_size=5, padding=2)
        self.conv2 = nn.Conv1d(model_dim, model_dim, kernel_size=3, padding=1)
        layer = nn.TransformerEncoderLayer(
            d_model=model_dim,
            nhead=n_heads,
            dim_feedforward=2 * model_dim,
            dropout=dropout,
            batch_first=True,
            norm_first=True,
        )
        self.transformer = nn.TransformerEncoder(layer, num_layers=1)
        self.out = nn.Linear(model_dim, 1)

    def forward(
        self, content: torch.Tensor, spk: torch.Tensor, mask: torch.Tensor | None = None
    ) -> torch.Tensor:
        h = content + self.spk_proj(spk).unsqueeze(1)
        h = h.transpose(1, 2)
        h = torch.nn.functional.gelu(self.conv1(h))
        h = torch.nn.functional.gelu(self.conv2(h))
        h = h.transpose(1, 2)
        pad = None if mask is None else ~mask
        h = self.transformer(h, src_key_padding_mask=pad)
        return self.out(h).squeeze(-1)


def bin_f0(values: torch.Tensor, n_bins: int = 32, clip: float = 4.0) -> torch.Tensor:
    """Uniform binning of normalized f0 over [-clip, clip].

    A value exactly on an interior boundary belongs to the higher bin
    (half-open bins); the top edge folds into the last bin.
    """
    width = 2.0 * clip / n_bins
    clipped = torch.clamp(values, -clip, clip)
    bins = torch.floor((clipped + clip) / width).long()
    return torch.clamp(bins, 0, n_bins - 1)


class VarianceFuser(nn.Module):
    """Dual-stream fusion: embedded f0 bins joined with the content stream
    and jointly encoded by transformer layers."""

    def __init__(
        self,
        model_dim: int,
        n_bins: int = 32,
        clip: float = 4.0,
        n_layers: int = 2,
        n_heads: int = 4,
        dropout: float = 0.1,
    ):
        super().__init__()
        self.n_bins = n_bins
        self.clip = clip
        self.f0_embedding = nn.Embedding(n_bins, model_dim)
        self.merge = nn.Linear(2 * model_dim, model_dim)
        layer = nn.TransformerEncoderLayer(
            d_model=model_dim,
            nhead=n_heads,
            dim_feedforward=2 * model_dim,
            dropout=dropout,
            batch_first=True,
            norm_first=True,
        )
        self.transformer = nn.TransformerEncoder(layer, num_layers=n_layers)

    def forward(
        self, content: torch.Tensor, f0_norm: torch.Tensor, mask: torch.Tensor | None = None
    ) -> torch.Tensor:
        if content.shape[1] != f0_norm.shape[1]:
            raise DataError(
                f"content frames ({content.shape[1]}) and f0 frames "
                f"({f0_norm.shape[1]}) must match"
            )
        prosody = self.f0_embedding(bin_f0(f0_norm, self.n_bins, self.clip))
        h = self.merge(torch.cat([content, prosody], dim=-1))
        pad = None if mask is None else ~mask
        return _masked(self.transformer(h, src_key_padding_mask=pad), mask)


class PosteriorEncoder(nn.Module):
    """Linear-spectrogram encoder giving per-frame Gaussian parameters."""

    def __init__(self, spec_dim: int, z_dim: int = 16, hidden: int = 64, n_layers: int = 3):
        super().__init__()
        convs = []
        d = spec_dim
        for _ in range(n_layers):
            convs.append(nn.Conv1d(d, hidden, kernel_size=5, padding=2))
            d = hidden
        self.convs = nn.ModuleList(convs)
        self.out = nn.Conv1d(hidden, 2 * z_dim, kernel_size=1)
        self.z_dim = z_dim

    def forward(
        self, spec: torch.Tensor, mask: torch.Tensor | None = None
    ) -> tuple[torch.Tensor, torch.Tensor]:
        """spec: [B, T, spec_dim] -> (mean, log-variance), each [B, T, z_dim]."""
        h = spec.transpose(1, 2)
        for conv in self.convs:
            h = torch.nn.functional.gelu(conv(h))
        stats = self.out(h).transpose(1, 2)
        mean, logvar = stats.chunk(2, dim=-1)
        return _masked(mean, mask), _masked(logvar, mask)

    def sample(
        self,
        mean: torch.Tensor,
        logvar: torch.Tensor,
        generator: torch.Generator | None = None,
    ) -> torch.Tensor:
        eps = torch.randn(mean.shape, generator=generator, dtype=mean.dtype)
        return mean + torch.exp(0.5 * logvar) * eps
