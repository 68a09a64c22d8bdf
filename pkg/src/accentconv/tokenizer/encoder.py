"""Pre-quantization encoder: conv stack + transformer layers with a
phoneme-label head used by the alignment-free content loss."""

from __future__ import annotations

import torch
from torch import nn


class PreVQEncoder(nn.Module):
    """Maps backbone features [B, T, D_in] to latents [B, T, D_latent].

    The label head reads the pre-quantization latents, so the content
    pressure acts on exactly the representation being discretized.
    """

    def __init__(
        self,
        in_dim: int,
        latent_dim: int = 256,
        hidden_dim: int | None = None,
        n_conv: int = 3,
        n_transformer: int = 4,
        n_heads: int = 4,
        n_labels: int = 8,
        dropout: float = 0.1,
    ):
        super().__init__()
        hidden_dim = hidden_dim or max(latent_dim, 64)
        convs = []
        d = in_dim
        for _ in range(n_conv):
            convs.append(nn.Conv1d(d, hidden_dim, kernel_size=5, padding=2))
            d = hidden_dim
        self.convs = nn.ModuleList(convs)
        layer = nn.TransformerEncoderLayer(
            d_model=hidden_dim,
            nhead=n_heads,
            dim_feedforward=2 * hidden_dim,
            dropout=dropout,
            batch_first=True,
            norm_first=True,
        )
        self.transformer = nn.TransformerEncoder(layer, num_layers=n_transformer)
        self.to_latent = nn.Linear(hidden_dim, latent_dim)
        self.label_head = nn.Linear(latent_dim, n_labels + 1)  # +1 for blank

    def forward(
        self, features: torch.Tensor, mask: torch.Tensor | None = None
    ) -> tuple[torch.Tensor, torch.Tensor]:
        h = features.transpose(1, 2)
        for conv in self.convs:
            h = torch.nn.functional.gelu(conv(h))
        h = h.transpose(1, 2)
        pad_mask = None if mask is None else ~mask
        h = self.transformer(h, src_key_padding_mask=pad_mask)
        latents = self.to_latent(h)
        logits = self.label_head(latents)
        return latents, logits
