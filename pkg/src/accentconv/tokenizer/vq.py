"""Vector quantization with exponential-moving-average codebook updates."""

from __future__ import annotations

import torch
from torch import nn


class EmaVectorQuantizer(nn.Module):
    """Codebook maintained by decayed running counts and vector sums.

    Nearest-neighbor assignment uses squared Euclidean distance with ties
    broken toward the lowest index. The straight-through estimator passes
    gradients from the quantized output directly to the inputs. Entries
    unused for ``dead_steps`` consecutive updates are reseeded from a
    random batch vector (plus a small jitter so entries stay distinct).
    """

    def __init__(
        self,
        num_entries: int = 1024,
        dim: int = 256,
        decay: float = 0.99,
        epsilon: float = 1e-5,
        dead_steps: int = 200,
        dead_threshold: float = 1.0,
        seed: int = 0,
    ):
        super().__init__()
        self.num_entries = num_entries
        self.dim = dim
        self.decay = decay
        self.epsilon = epsilon
        self.dead_steps = dead_steps
        self.dead_threshold = dead_threshold
        self._gen = torch.Generator().manual_seed(seed)
        entries = torch.randn(num_entries, dim, generator=self._gen) * 0.5
        self.register_buffer("entries", entries)
        self.register_buffer("ema_counts", torch.ones(num_entries))
        self.register_buffer("ema_sums", entries.clone())
        self.register_buffer("dead_counter", torch.zeros(num_entries, dtype=torch.long))
        self.register_buffer("step", torch.zeros((), dtype=torch.long))

    def distances(self, flat: torch.Tensor) -> torch.Tensor:
        return (
            flat.pow(2).sum(1, keepdim=True)
            - 2.0 * flat @ self.entries.t()
            + self.entries.pow(2).sum(1)
        )

    def assign(self, flat: torch.Tensor) -> torch.Tensor:
        """Nearest entry per row; ties resolved to the lowest index."""
        d = self.distances(flat)
        min_d = d.min(dim=1, keepdim=True).values
        is_min = d <= min_d + 0.0
        # argmax on a bool->int tensor returns the first maximal position
        return is_min.int().argmax(dim=1)

    def quantize(self, z: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        """ids and straight-through quantized vectors for [..., D] input."""
        flat = z.reshape(-1, self.dim)
        ids = self.assign(flat)
        quantized = self.entries[ids].reshape(z.shape)
        st = z + (quantized - z).detach()
        return ids.reshape(z.shape[:-1]), st

    def forward(self, z: torch.Tensor, mask: torch.Tensor | None = None):
        ids, st = self.quantize(z)
        if self.training:
            flat = z.reshape(-1, self.dim).detach()
            flat_ids = ids.reshape(-1)
            if mask is not None:
                keep = mask.reshape(-1)
                flat, flat_ids = flat[keep], flat_ids[keep]
            self.ema_update(flat, flat_ids)
        return ids, st

    @torch.no_grad()
    def ema_update(self, flat: torch.Tensor, ids: torch.Tensor) -> None:
        one_hot = torch.zeros(flat.shape[0], self.num_entries, dtype=flat.dtype)
        one_hot.scatter_(1, ids.unsqueeze(1), 1.0)
        batch_counts = one_hot.sum(0)
        batch_sums = one_hot.t() @ flat
        self.ema_counts.mul_(self.decay).add_(batch_counts, alpha=1.0 - self.decay)
        self.ema_sums.mul_(self.decay).add_(batch_sums, alpha=1.0 - self.decay)
        self.entries.copy_(self.ema_sums / self._smoothed_counts().unsqueeze(1))
        self.step += 1
        self._revive_dead(flat)

    def _smoothed_counts(self) -> torch.Tensor:
        n = self.ema_counts.sum()
        return (self.ema_counts + self.epsilon) / (n + self.num_entries * self.epsilon) * n

    @torch.no_grad()
    def _revive_dead(self, flat: torch.Tensor) -> None:
        starving = self._smoothed_counts() < self.dead_threshold
        self.dead_counter[:] = torch.where(
            starving, self.dead_counter + 1, torch.zeros_like(self.dead_counter)
        )
        dead = self.dead_counter >= self.dead_steps
        if not bool(dead.any()) or flat.shape[0] == 0:
            return
        for k in torch.nonzero(dead).reshape(-1).tolist():
            pick = int(torch.randint(flat.shape[0], (1,), generator=self._gen))
            jitter = 1e-3 * torch.randn(self.dim, generator=self._gen)
            self.entries[k] = flat[pick] + jitter
            self.ema_counts[k] = 1.0
            self.ema_sums[k] = self.entries[k].clone()
            self.dead_counter[k] = 0

    def checkpoint_state(self) -> dict:
        return {
            "entries": self.entries.clone(),
            "ema_counts": self.ema_counts.clone(),
            "ema_sums": self.ema_sums.clone(),
            "decay": self.decay,
            "epsilon": self.epsilon,
            "step": int(self.step),
        }

    def load_checkpoint_state(self, state: dict) -> None:
        self.entries.copy_(state["entries"])
        self.ema_counts.copy_(state["ema_counts"])
        self.ema_sums.copy_(state["ema_sums"])
        self.decay = float(state["decay"])
        self.epsilon = float(state["epsilon"])
        self.step.fill_(int(state["step"]))
