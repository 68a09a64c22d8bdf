"""Content tokenizer: frozen backbone -> pre-VQ encoder -> EMA quantizer."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np
import torch
from torch import nn

from ..audio import Waveform
from ..errors import DataError
from .encoder import PreVQEncoder
from .features import FRAME_RATE, build_backbone, length_mask
from .vq import EmaVectorQuantizer


@dataclass
class ContentTokenSequence:
    """Frame-rate codebook indices; the pipeline's central currency."""

    ids: np.ndarray
    frame_rate: int = FRAME_RATE

    def __post_init__(self):
        self.ids = np.asarray(self.ids, dtype=np.int64).reshape(-1)

    def __len__(self) -> int:
        return self.ids.size


class ContentTokenizer(nn.Module):
    """Extracts speaker-agnostic discrete content tokens from audio."""

    def __init__(
        self,
        backbone,
        latent_dim: int = 32,
        num_entries: int = 64,
        n_labels: int = 8,
        n_conv: int = 2,
        n_transformer: int = 2,
        n_heads: int = 4,
        dropout: float = 0.1,
        vq_decay: float = 0.99,
        vq_epsilon: float = 1e-5,
        vq_seed: int = 0,
    ):
        super().__init__()
        self.backbone = backbone
        self.encoder = PreVQEncoder(
            in_dim=backbone.dim,
            latent_dim=latent_dim,
            n_conv=n_conv,
            n_transformer=n_transformer,
            n_heads=n_heads,
            n_labels=n_labels,
            dropout=dropout,
        )
        self.vq = EmaVectorQuantizer(
            num_entries=num_entries,
            dim=latent_dim,
            decay=vq_decay,
            epsilon=vq_epsilon,
            seed=vq_seed,
        )
        self.num_entries = num_entries

    def encode_features(
        self, features: torch.Tensor, lengths: torch.Tensor | None = None
    ) -> dict:
        """Run encoder + quantizer on padded features [B, T, D]."""
        mask = None if lengths is None else length_mask(lengths, features.shape[1])
        latents, ctc_logits = self.encoder(features, mask)
        ids, quantized = self.vq(latents, mask=mask)
        return {
            "latents": latents,
            "ctc_logits": ctc_logits,
            "ids": ids,
            "quantized": quantized,
            "mask": mask,
        }

    @torch.no_grad()
    def tokenize(self, x: Waveform) -> ContentTokenSequence:
        """Inference path: no perturbation, no codebook updates."""
        was_training = self.training
        self.eval()
        try:
            features = self.backbone.extract(x).unsqueeze(0)
            out = self.encode_features(features)
        finally:
            self.train(was_training)
        return ContentTokenSequence(ids=out["ids"].squeeze(0).cpu().numpy())

    @torch.no_grad()
    def lookup(self, tokens: ContentTokenSequence) -> torch.Tensor:
        """Codebook entries for a token sequence -> [T, D_latent]."""
        ids = np.asarray(tokens.ids)
        if ids.size == 0:
            raise DataError("empty token sequence")
        if ids.min() < 0 or ids.max() >= self.num_entries:
            raise DataError(
                f"token id out of range [0, {self.num_entries}): "
                f"min={ids.min()} max={ids.max()}"
            )
        return self.vq.entries[torch.from_numpy(ids).long()]


def write_token_dump(path: str | os.PathLike, records: list[dict]) -> None:
    """One JSON line per utterance: {utterance_id, tokens, frame_rate}."""
    with open(path, "w") as fh:
        for rec in records:
            fh.write(
                json.dumps(
                    {
                        "utterance_id": rec["utterance_id"],
                        "tokens": [int(t) for t in rec["tokens"]],
                        "frame_rate": int(rec.get("frame_rate", FRAME_RATE)),
                    }
                )
                + "\n"
            )


def read_token_dump(path: str | os.PathLike) -> list[dict]:
    records = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records
