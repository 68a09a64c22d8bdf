"""Alignment-free sequence loss over monotonic frame-to-label alignments.

Forward-algorithm recursion in log space over the blank-extended label
sequence. Written directly on autograd ops so gradients flow and the
whole computation supports float64 for finite-difference checks.
"""

from __future__ import annotations

import torch

from ..errors import InfeasibleAlignmentError

BLANK_ID = 0
NEG_INF = float("-inf")


def min_frames_for_labels(labels: list[int]) -> int:
    """Shortest frame count that can emit ``labels`` (repeats need a blank)."""
    repeats = sum(1 for i in range(1, len(labels)) if labels[i] == labels[i - 1])
    return len(labels) + repeats


def ctc_item_loss(logits: torch.Tensor, labels: list[int], blank: int = BLANK_ID) -> torch.Tensor:
    """Negative log-probability of all alignments for one [T, C] instance.

    ``logits`` are unnormalized; log-softmax is applied internally.
    """
    t_max = logits.shape[0]
    labels = [int(l) for l in labels]
    if any(l == blank for l in labels):
        raise InfeasibleAlignmentError("label sequence contains the blank id")
    if t_max < min_frames_for_labels(labels):
        raise InfeasibleAlignmentError(
            f"{len(labels)} labels (with repeats) cannot align to {t_max} frames"
        )
    logp = torch.log_softmax(logits, dim=-1)
    ext = [blank]
    for l in labels:
        ext += [l, blank]
    s_len = len(ext)
    ext_t = torch.tensor(ext, dtype=torch.long, device=logits.device)

    # Positions allowed to skip the preceding blank: non-blank and distinct
    # from the symbol two slots back.
    can_skip = torch.zeros(s_len, dtype=torch.bool, device=logits.device)
    for s in range(2, s_len):
        can_skip[s] = ext[s] != blank and ext[s] != ext[s - 2]

    neg = torch.full((1,), NEG_INF, dtype=logp.dtype, device=logits.device)
    alpha = torch.full((s_len,), NEG_INF, dtype=logp.dtype, device=logits.device)
    alpha = alpha.clone()
    alpha[0] = logp[0, blank]
    if s_len > 1:
        alpha[1] = logp[0, ext[1]]
    for t in range(1, t_max):
        stay = alpha
        prev = torch.cat([neg, alpha[:-1]])
        skip = torch.cat([neg, neg, alpha[:-2]])
        skip = torch.where(can_skip, skip, neg.expand(s_len))
        merged = torch.logsumexp(torch.stack([stay, prev, skip]), dim=0)
        alpha = merged + logp[t, ext_t]
    tail = alpha[-1] if s_len == 1 else torch.logsumexp(alpha[-2:], dim=0)
    return -tail


def ctc_loss(
    logits: torch.Tensor,
    labels: list[list[int]],
    input_lengths: torch.Tensor | list[int] | None = None,
    blank: int = BLANK_ID,
    reduction: str = "mean",
) -> torch.Tensor:
    """Batched CTC loss; ``logits`` is [B, T, C] (or [T, C] with one label list).

    Reduction ``mean`` averages per-instance losses over the batch.
    """
    if logits.dim() == 2:
        logits = logits.unsqueeze(0)
        labels = [labels] if labels and isinstance(labels[0], int) else labels
    b = logits.shape[0]
    if input_lengths is None:
        input_lengths = [logits.shape[1]] * b
    losses = [
        ctc_item_loss(logits[i, : int(input_lengths[i])], labels[i], blank=blank)
        for i in range(b)
    ]
    stacked = torch.stack(losses)
    if reduction == "mean":
        return stacked.mean()
    if reduction == "sum":
        return stacked.sum()
    return stacked
