"""The full token-to-waveform reconstruction system and its training steps.

Assembles content tokenizer, post-quantization encoder, prosody adapter,
posterior/flow/decoder and the discriminator into the two training
operations (generator step with the seven-term loss, discriminator step)
and the inference operation ``reconstruct``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch
from torch import nn

from ..audio import Waveform
from ..errors import DataError, NumericalAbort
from ..tokenizer import ContentTokenizer, ContentTokenSequence, ctc_loss, length_mask
from .flow import SpeakerFlow
from .layers import F0Predictor, PosteriorEncoder, PostVQEncoder, VarianceFuser
from .losses import (
    DEFAULT_WEIGHTS,
    LossBreakdown,
    discriminator_loss,
    feature_matching_loss,
    flow_kl,
    generator_adv_loss,
    masked_mse,
    mel_l1,
)
from .melspec import TorchMel
from .vocoder import MultiDiscriminator, WaveformDecoder


@dataclass
class ReconConfig:
    latent_dim: int = 32
    model_dim: int = 64
    z_dim: int = 16
    spk_dim: int = 512
    f0_bins: int = 32
    f0_clip: float = 4.0
    hop_length: int = 320
    n_fft: int = 1024
    flow_layers: int = 2
    flow_hidden: int = 32
    decoder_rates: tuple = (16, 20)
    decoder_channels: int = 64
    disc_periods: tuple = (2, 3)
    disc_scales: int = 1
    segment_frames: int = 40
    speaker_to_decoder: bool = False
    dropout: float = 0.1
    noise_scale: float = 0.6
    weights: dict = field(default_factory=lambda: dict(DEFAULT_WEIGHTS))


class ReconstructionModel(nn.Module):
    """Generator-side modules (everything except the discriminator)."""

    def __init__(self, cfg: ReconConfig):
        super().__init__()
        self.cfg = cfg
        self.post_vq = PostVQEncoder(cfg.latent_dim, cfg.model_dim, dropout=cfg.dropout)
        self.f0_predictor = F0Predictor(cfg.model_dim, cfg.spk_dim, dropout=cfg.dropout)
        self.fuser = VarianceFuser(
            cfg.model_dim, n_bins=cfg.f0_bins, clip=cfg.f0_clip, dropout=cfg.dropout
        )
        self.prior_proj = nn.Linear(cfg.model_dim, 2 * cfg.z_dim)
        self.posterior = PosteriorEncoder(cfg.n_fft // 2 + 1, cfg.z_dim, hidden=cfg.model_dim)
        self.flow = SpeakerFlow(
            channels=cfg.z_dim,
            n_layers=cfg.flow_layers,
            hidden=cfg.flow_hidden,
            spk_dim=cfg.spk_dim,
        )
        self.decoder = WaveformDecoder(
            cfg.z_dim,
            cfg.decoder_channels,
            cfg.decoder_rates,
            spk_dim=cfg.spk_dim,
            use_speaker=cfg.speaker_to_decoder,
        )
        if self.decoder.hop != cfg.hop_length:
            raise DataError(
                f"decoder rates {cfg.decoder_rates} multiply to {self.decoder.hop}, "
                f"expected hop {cfg.hop_length}"
            )

    def prior(self, fused: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        mean, logvar = self.prior_proj(fused).chunk(2, dim=-1)
        return mean, logvar


class CodeVaeSystem(nn.Module):
    """Tokenizer + reconstruction + discriminator with the training ops."""

    def __init__(self, tokenizer: ContentTokenizer, cfg: ReconConfig):
        super().__init__()
        if tokenizer.vq.dim != cfg.latent_dim:
            raise DataError("tokenizer latent dim must match reconstruction config")
        self.tokenizer = tokenizer
        self.cfg = cfg
        self.generator = ReconstructionModel(cfg)
        self.discriminator = MultiDiscriminator(cfg.disc_periods, cfg.disc_scales)
        self.mel_transform = TorchMel()
        self._slice_gen = torch.Generator().manual_seed(0)

    # -- parameter groups -------------------------------------------------
    def generator_parameters(self):
        trainable = [p for p in self.tokenizer.parameters() if p.requires_grad]
        return trainable + list(self.generator.parameters())

    def discriminator_parameters(self):
        return list(self.discriminator.parameters())

    def f0_predictor_parameters(self):
        return list(self.generator.f0_predictor.parameters())

    # -- forward pieces ----------------------------------------------------
    def _content_path(self, batch: dict) -> dict:
        enc = self.tokenizer.encode_features(batch["features"], batch["lengths"])
        content = self.generator.post_vq(enc["quantized"], enc["mask"])
        return {**enc, "content": content}

    def _slice_segments(self, z: torch.Tensor, lengths: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        """Random per-item frame offsets for fixed-size decoder segments."""
        seg = self.cfg.segment_frames
        offsets = []
        for i in range(z.shape[0]):
            max_start = max(int(lengths[i]) - seg, 0)
            if max_start == 0:
                offsets.append(0)
            else:
                offsets.append(
                    int(torch.randint(0, max_start + 1, (1,), generator=self._slice_gen))
                )
        idx = torch.tensor(offsets, dtype=torch.long)
        sliced = torch.stack(
            [z[i, :, o : o + seg] for i, o in enumerate(offsets)]
        )
        return sliced, idx

    def generator_step(self, batch: dict) -> tuple[LossBreakdown, dict]:
        """Compute the seven-term generator loss on a collated batch.

        Batch keys: features [B,T,Df], lengths [B], labels (list of id
        lists), f0 [B,T], f0_voiced [B,T], spec [B,T,F], audio [B,n],
        audio_lengths [B], spk [B,512].
        """
        cfg = self.cfg
        path = self._content_path(batch)
        mask = path["mask"]
        fmask = mask.float()

        l_ctc = ctc_loss(path["ctc_logits"], batch["labels"], input_lengths=batch["lengths"])

        back = self.generator.post_vq.project_latent(path["content"])
        l_vq = masked_mse(back, path["latents"], mask)

        f0_pred = self.generator.f0_predictor(
            path["content"].detach(), batch["spk"].detach(), mask
        )
        voiced = batch["f0_voiced"].bool() & mask
        l_f0 = masked_mse(f0_pred, batch["f0"], voiced)

        fused = self.generator.fuser(path["content"], batch["f0"], mask)
        m_p, logv_p = self.generator.prior(fused)

        m_q, logv_q = self.generator.posterior(batch["spec"], mask)
        z_q = self.generator.posterior.sample(m_q, logv_q)
        z_q = z_q * fmask.unsqueeze(-1)

        z_p, logdet = self.generator.flow(
            z_q.transpose(1, 2), batch["spk"], fmask.unsqueeze(1)
        )
        l_kl = flow_kl(z_p.transpose(1, 2), logv_q, m_p, logv_p, logdet, mask)

        z_slice, offsets = self._slice_segments(z_q.transpose(1, 2), batch["lengths"])
        y_hat = self.generator.decoder(z_slice, batch["spk"])
        y_true = torch.stack(
            [
                batch["audio"][i, o * cfg.hop_length : (o + cfg.segment_frames) * cfg.hop_length]
                for i, o in enumerate(offsets.tolist())
            ]
        ).unsqueeze(1)

        l_mel = mel_l1(self.mel_transform(y_hat), self.mel_transform(y_true))

        fake_scores, fake_fmaps = self.discriminator(y_hat)
        with torch.no_grad():
            real_scores, real_fmaps = self.discriminator(y_true)
        l_adv = generator_adv_loss(fake_scores)
        l_fm = feature_matching_loss(real_fmaps, fake_fmaps)

        breakdown = LossBreakdown(
            l_vq=l_vq,
            l_ctc=l_ctc,
            l_f0=l_f0,
            l_mel=l_mel,
            l_kl=l_kl,
            l_adv=l_adv,
            l_fm=l_fm,
            weights=dict(cfg.weights),
        )
        artifacts = {"y_hat": y_hat.detach(), "y_true": y_true.detach(), "ids": path["ids"].detach()}
        return breakdown, artifacts

    def discriminator_step(self, batch: dict, y_hat: torch.Tensor | None = None, y_true: torch.Tensor | None = None) -> torch.Tensor:
        """Least-squares discriminator loss; synthesizes fakes if not given."""
        if y_hat is None or y_true is None:
            with torch.no_grad():
                was_training = self.training
                self.eval()  # no codebook updates from the discriminator pass
                try:
                    _, artifacts = self.generator_step(batch)
                finally:
                    self.train(was_training)
            y_hat, y_true = artifacts["y_hat"], artifacts["y_true"]
        fake_scores, _ = self.discriminator(y_hat.detach())
        real_scores, _ = self.discriminator(y_true)
        loss = discriminator_loss(real_scores, fake_scores)
        if not torch.isfinite(loss):
            raise NumericalAbort("non-finite discriminator loss")
        return loss

    # -- inference ---------------------------------------------------------
    @torch.no_grad()
    def reconstruct(
        self,
        tokens: ContentTokenSequence,
        spk_vector: np.ndarray,
        seed: int = 0,
        sample_rate: int = 16000,
    ) -> Waveform:
        """Tokens + speaker embedding -> waveform (deterministic per seed)."""
        was_training = self.training
        self.eval()
        try:
            entries = self.tokenizer.lookup(tokens).unsqueeze(0).float()
            spk = torch.from_numpy(np.asarray(spk_vector)).float().unsqueeze(0)
            content = self.generator.post_vq(entries)
            f0_pred = self.generator.f0_predictor(content, spk)
            fused = self.generator.fuser(content, f0_pred)
            m_p, logv_p = self.generator.prior(fused)
            gen = torch.Generator().manual_seed(seed)
            eps = torch.randn(m_p.shape, generator=gen)
            z_p = m_p + torch.exp(0.5 * logv_p) * eps * self.cfg.noise_scale
            z, _ = self.generator.flow(z_p.transpose(1, 2), spk, inverse=True)
            audio = self.generator.decoder(z, spk)
        finally:
            self.train(was_training)
        samples = audio.squeeze().numpy().astype(np.float64)
        return Waveform(np.clip(samples, -1.0, 1.0), sample_rate)
