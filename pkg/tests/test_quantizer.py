import numpy as np
import pytest
import torch

from accentconv.tokenizer import EmaVectorQuantizer


def make_vq(k=16, dim=4, **kw):
    return EmaVectorQuantizer(num_entries=k, dim=dim, **kw)


class TestAssignment:
    def test_exact_match_row(self):
        vq = make_vq()
        z = vq.entries[7].clone().unsqueeze(0)
        ids, q = vq.quantize(z)
        assert ids.item() == 7
        assert torch.allclose(q, z)

    def test_tie_breaks_to_lowest_index(self):
        vq = make_vq(k=12, dim=2)
        with torch.no_grad():
            vq.entries.zero_()
            vq.entries[3] = torch.tensor([1.0, 0.0])
            vq.entries[9] = torch.tensor([-1.0, 0.0])
            # push everything else far away
            for i in range(12):
                if i not in (3, 9):
                    vq.entries[i] = torch.tensor([100.0, 100.0 + i])
        ids, _ = vq.quantize(torch.tensor([[0.0, 5.0]]))
        assert ids.item() == 3

    def test_matches_exhaustive_scan(self):
        torch.manual_seed(0)
        vq = make_vq(k=16, dim=6)
        z = torch.randn(200, 6)
        ids, _ = vq.quantize(z)
        d = ((z[:, None, :] - vq.entries[None, :, :]) ** 2).sum(-1)
        brute = d.argmin(dim=1)
        assert torch.equal(ids, brute)


class TestStraightThrough:
    def test_gradient_passes_through(self):
        torch.manual_seed(1)
        vq = make_vq(k=8, dim=3)
        z = torch.randn(5, 3, dtype=torch.float64, requires_grad=True)
        vq.double()
        _, q = vq.quantize(z)
        w = torch.randn(3, dtype=torch.float64)
        loss = (q @ w).sum()
        loss.backward()
        q_leaf = vq.entries[vq.assign(z.detach())].clone().requires_grad_(True)
        (q_leaf @ w).sum().backward()
        assert torch.allclose(z.grad, q_leaf.grad, atol=1e-12)


class TestEmaUpdate:
    def test_geometric_convergence_to_constant(self):
        # dead-entry revival disabled so exactly one entry stays assigned
        vq = make_vq(k=4, dim=3, decay=0.99, dead_steps=10**6)
        v = torch.tensor([0.5, -1.0, 2.0])
        batch = v.repeat(32, 1)
        target = vq.assign(batch)[0].item()
        for _ in range(1000):
            ids = vq.assign(batch)
            vq.ema_update(batch, ids)
        assert torch.max(torch.abs(vq.entries[target] - v)).item() < 1e-3

    def test_unassigned_entry_only_decays(self):
        vq = make_vq(k=4, dim=2, decay=0.9)
        before_entry = vq.entries[2].clone()
        before_count = vq.ema_counts[2].item()
        batch = vq.entries[0].clone().unsqueeze(0) + 0.01
        ids = vq.assign(batch)
        assert ids.item() != 2
        vq.ema_update(batch, ids)
        assert vq.ema_counts[2].item() == pytest.approx(0.9 * before_count)
        # sums and counts decay at the same rate, so the entry is unchanged
        # up to the tiny Laplace shift
        assert torch.allclose(vq.entries[2], before_entry, atol=1e-3)

    def test_two_cluster_kmeans_oracle(self):
        from scipy.cluster.vq import kmeans2

        rng = np.random.default_rng(0)
        sigma, gap = 0.1, 0.4
        c0 = np.array([0.0, 0.0])
        c1 = np.array([gap, 0.0])
        data = np.concatenate(
            [
                c0 + sigma * rng.standard_normal((2000, 2)),
                c1 + sigma * rng.standard_normal((2000, 2)),
            ]
        )
        centroids, _ = kmeans2(data, 2, seed=1, minit="++")
        vq = make_vq(k=2, dim=2, decay=0.95, seed=3)
        order = rng.permutation(len(data))
        steps = 0
        for start in range(0, len(data), 64):
            batch = torch.tensor(data[order[start : start + 64]], dtype=torch.float32)
            ids = vq.assign(batch)
            vq.ema_update(batch, ids)
            steps += 1
        assert steps <= 2000
        got = vq.entries.numpy()
        # match entries to centroids by nearest assignment
        for row in got:
            nearest = centroids[np.argmin(((centroids - row) ** 2).sum(1))]
            assert np.linalg.norm(row - nearest) < 0.05

    def test_count_conservation(self):
        torch.manual_seed(2)
        vq = make_vq(k=8, dim=2, decay=0.97)
        expected = vq.ema_counts.sum().item()
        for _ in range(20):
            batch = torch.randn(33, 2)
            ids = vq.assign(batch)
            vq.ema_update(batch, ids)
            expected = 0.97 * expected + 0.03 * 33
            assert vq.ema_counts.sum().item() == pytest.approx(expected, abs=1e-4)

    def test_entries_track_sums_over_smoothed_counts(self):
        torch.manual_seed(3)
        vq = make_vq(k=6, dim=3)
        batch = torch.randn(40, 3)
        vq.ema_update(batch, vq.assign(batch))
        expected = vq.ema_sums / vq._smoothed_counts().unsqueeze(1)
        assert torch.allclose(vq.entries, expected)

    def test_dead_entry_reinit_keeps_entries_distinct(self):
        vq = make_vq(k=6, dim=2, decay=0.5, dead_steps=5, seed=7)
        batch = torch.tensor([[5.0, 5.0], [5.1, 5.0], [4.9, 5.1]])
        for _ in range(40):
            ids = vq.assign(batch)
            vq.ema_update(batch, ids)
        d = ((vq.entries[:, None, :] - vq.entries[None, :, :]) ** 2).sum(-1)
        d += torch.eye(6) * 1e9
        assert d.min().item() > 1e-8
        assert torch.isfinite(vq.entries).all()

    def test_training_forward_updates_eval_does_not(self):
        vq = make_vq(k=4, dim=2)
        z = torch.randn(10, 2)
        vq.eval()
        before = vq.entries.clone()
        vq(z)
        assert torch.equal(vq.entries, before)
        vq.train()
        vq(z)
        assert not torch.equal(vq.entries, before)

    def test_checkpoint_roundtrip(self):
        vq = make_vq(k=4, dim=2)
        batch = torch.randn(16, 2)
        vq.ema_update(batch, vq.assign(batch))
        state = vq.checkpoint_state()
        other = make_vq(k=4, dim=2, seed=99)
        other.load_checkpoint_state(state)
        assert torch.equal(other.entries, vq.entries)
        assert int(other.step) == 1
