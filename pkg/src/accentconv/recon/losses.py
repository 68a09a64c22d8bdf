"""Loss kernels for the reconstruction stage.

The generator objective is a seven-term sum: content-consistency (VQ),
CTC, f0, mel, KL, adversarial, and feature-matching losses. Adversarial
terms use the least-squares formulation; with every sub-discriminator
emitting its optimum score, the generator adversarial loss equals the
number of sub-discriminators (documented closed form).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import torch

from ..errors import NumericalAbort

TERM_NAMES = ("l_vq", "l_ctc", "l_f0", "l_mel", "l_kl", "l_adv", "l_fm")

DEFAULT_WEIGHTS = {
    "l_vq": 1.0,
    "l_ctc": 1.0,
    "l_f0": 1.0,
    "l_mel": 45.0,
    "l_kl": 1.0,
    "l_adv": 1.0,
    "l_fm": 2.0,
}


@dataclass
class LossBreakdown:
    """Raw per-term values plus the configured weights; ``total`` is the
    weighted sum and is what drives the generator optimizer."""

    l_vq: torch.Tensor
    l_ctc: torch.Tensor
    l_f0: torch.Tensor
    l_mel: torch.Tensor
    l_kl: torch.Tensor
    l_adv: torch.Tensor
    l_fm: torch.Tensor
    weights: dict = field(default_factory=lambda: dict(DEFAULT_WEIGHTS))
    total: torch.Tensor = None

    def __post_init__(self):
        for name in TERM_NAMES:
            value = getattr(self, name)
            if not torch.isfinite(value).all():
                raise NumericalAbort(f"non-finite generator loss term: {name}")
        self.total = sum(self.weights[name] * getattr(self, name) for name in TERM_NAMES)

    def scalars(self) -> dict:
        out = {name: float(getattr(self, name)) for name in TERM_NAMES}
        out["total"] = float(self.total)
        return out


def masked_mse(a: torch.Tensor, b: torch.Tensor, mask: torch.Tensor | None = None) -> torch.Tensor:
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {tuple(a.shape)} vs {tuple(b.shape)}")
    sq = (a - b) ** 2
    if mask is None:
        return sq.mean()
    while mask.dim() < sq.dim():
        mask = mask.unsqueeze(-1)
    mask = mask.to(sq.dtype)
    denom = mask.expand_as(sq).sum().clamp(min=1.0)
    return (sq * mask).sum() / denom


def gaussian_kl(
    mean_q: torch.Tensor,
    logvar_q: torch.Tensor,
    mean_p: torch.Tensor,
    logvar_p: torch.Tensor,
) -> torch.Tensor:
    """Closed-form elementwise KL(N_q || N_p) for diagonal Gaussians."""
    return 0.5 * (
        logvar_p
        - logvar_q
        + (torch.exp(logvar_q) + (mean_q - mean_p) ** 2) * torch.exp(-logvar_p)
        - 1.0
    )


def flow_kl(
    z_p: torch.Tensor,
    logvar_q: torch.Tensor,
    mean_p: torch.Tensor,
    logvar_p: torch.Tensor,
    logdet: torch.Tensor,
    mask: torch.Tensor | None = None,
) -> torch.Tensor:
    """Sampled KL between the flow-mapped posterior and the prior.

    All frame tensors are [B, T, C]; ``logdet`` is [B] and contributes
    -logdet per sequence (zero for volume-preserving flows).
    """
    elem = 0.5 * (logvar_p - logvar_q - 1.0) + 0.5 * (z_p - mean_p) ** 2 * torch.exp(
        -logvar_p
    )
    if mask is None:
        total = elem.sum()
        denom = float(elem.numel())
    else:
        m = mask.unsqueeze(-1).to(elem.dtype)
        total = (elem * m).sum()
        denom = float((m.expand_as(elem)).sum().clamp(min=1.0))
    return (total - logdet.sum()) / denom


def discriminator_loss(
    real_scores: list[torch.Tensor], fake_scores: list[torch.Tensor]
) -> torch.Tensor:
    loss = 0.0
    for r, f in zip(real_scores, fake_scores):
        loss = loss + torch.mean((1.0 - r) ** 2) + torch.mean(f**2)
    return loss


def generator_adv_loss(fake_scores: list[torch.Tensor]) -> torch.Tensor:
    loss = 0.0
    for f in fake_scores:
        loss = loss + torch.mean((1.0 - f) ** 2)
    return loss


def feature_matching_loss(
    real_fmaps: list[list[torch.Tensor]], fake_fmaps: list[list[torch.Tensor]]
) -> torch.Tensor:
    loss = 0.0
    for real_layers, fake_layers in zip(real_fmaps, fake_fmaps):
        for r, f in zip(real_layers, fake_layers):
            loss = loss + torch.mean(torch.abs(r.detach() - f))
    return loss


def mel_l1(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    return torch.mean(torch.abs(a - b))
