import itertools
import math

import numpy as np
import pytest
import torch

from accentconv.errors import InfeasibleAlignmentError
from accentconv.tokenizer import ctc_item_loss, ctc_loss, min_frames_for_labels


def collapse_path(path, blank=0):
    out = []
    prev = None
    for p in path:
        if p != prev and p != blank:
            out.append(p)
        prev = p
    return tuple(out)


def enumerate_ctc_loss(logits: np.ndarray, labels, blank=0):
    """Brute-force oracle: sum probability over every frame path that
    collapses to the label sequence."""
    t, c = logits.shape
    probs = np.exp(logits - logits.max(axis=1, keepdims=True))
    probs /= probs.sum(axis=1, keepdims=True)
    target = tuple(labels)
    total = 0.0
    for path in itertools.product(range(c), repeat=t):
        if collapse_path(path, blank) == target:
            p = 1.0
            for i, sym in enumerate(path):
                p *= probs[i, sym]
            total += p
    if total == 0.0:
        return math.inf
    return -math.log(total)


class TestCtcExamples:
    def test_two_frames_uniform(self):
        # T=2, alphabet {blank, a}, uniform: P = 3/4 -> loss = -ln(0.75)
        logits = torch.zeros(2, 2)
        loss = ctc_item_loss(logits, [1])
        assert loss.item() == pytest.approx(-math.log(0.75), abs=1e-6)

    def test_certain_single_frame(self):
        logits = torch.tensor([[-1e9, 1e9]])
        assert ctc_item_loss(logits, [1]).item() == pytest.approx(0.0, abs=1e-6)

    def test_random_small_instances_match_enumeration(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            t = int(rng.integers(1, 6))
            c = int(rng.integers(2, 4))
            max_l = min(2, t)
            l = int(rng.integers(1, max_l + 1))
            labels = rng.integers(1, c, size=l).tolist()
            if t < min_frames_for_labels(labels):
                continue
            logits = rng.normal(size=(t, c))
            expected = enumerate_ctc_loss(logits, labels)
            got = ctc_item_loss(torch.tensor(logits), labels).item()
            assert got == pytest.approx(expected, abs=1e-6)

    def test_infeasible_raises(self):
        logits = torch.zeros(2, 3)
        with pytest.raises(InfeasibleAlignmentError):
            ctc_item_loss(logits, [1, 1, 2])
        with pytest.raises(InfeasibleAlignmentError):
            ctc_item_loss(torch.zeros(2, 3), [1, 1])  # repeat needs 3 frames

    def test_blank_in_labels_rejected(self):
        with pytest.raises(InfeasibleAlignmentError):
            ctc_item_loss(torch.zeros(3, 3), [0, 1])

    def test_batch_mean_reduction(self):
        torch.manual_seed(0)
        logits = torch.randn(3, 5, 4, dtype=torch.float64)
        labels = [[1], [2, 3], [1, 2]]
        per = [ctc_item_loss(logits[i], labels[i]).item() for i in range(3)]
        batched = ctc_loss(logits, labels).item()
        assert batched == pytest.approx(float(np.mean(per)), abs=1e-7)

    def test_variable_lengths(self):
        torch.manual_seed(1)
        logits = torch.randn(2, 6, 4, dtype=torch.float64)
        labels = [[1, 2], [3]]
        lengths = [4, 6]
        got = ctc_loss(logits, labels, input_lengths=lengths, reduction="none")
        a = ctc_item_loss(logits[0, :4], [1, 2]).item()
        b = ctc_item_loss(logits[1], [3]).item()
        assert got[0].item() == pytest.approx(a, abs=1e-7)
        assert got[1].item() == pytest.approx(b, abs=1e-7)


class TestCtcGradient:
    def test_gradient_matches_finite_difference(self):
        rng = np.random.default_rng(7)
        logits = torch.tensor(rng.normal(size=(5, 4)), requires_grad=True)
        labels = [1, 2]
        loss = ctc_item_loss(logits, labels)
        loss.backward()
        grad = logits.grad.clone()
        h = 1e-6
        for _ in range(5):
            i = int(rng.integers(5))
            j = int(rng.integers(4))
            with torch.no_grad():
                base = logits.clone()
                up, dn = base.clone(), base.clone()
                up[i, j] += h
                dn[i, j] -= h
            fd = (ctc_item_loss(up, labels) - ctc_item_loss(dn, labels)).item() / (2 * h)
            assert fd == pytest.approx(grad[i, j].item(), rel=1e-3, abs=1e-8)
