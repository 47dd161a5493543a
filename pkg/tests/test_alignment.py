import math

import numpy as np
import pytest
import torch

from mantraseg.alignment import (
    SimilarityMatrix,
    ce_loss,
    predict,
    probabilities,
    similarity,
)
from mantraseg.errors import DimensionMismatch, GroundTruthMasked, ZeroVector


def _sim(rows, t=0.1):
    return SimilarityMatrix(S=torch.tensor(rows, dtype=torch.float64), temperature=t)


def _softmax_oracle(row, t, allowed=None):
    # brute-force evaluation of the temperature softmax over the allowed set
    row = np.asarray(row, dtype=np.float64)
    allowed = np.ones(len(row), bool) if allowed is None else np.asarray(allowed)
    z = np.exp(row[allowed] / t - (row[allowed] / t).max())
    p = np.zeros(len(row))
    p[allowed] = z / z.sum()
    return p


class TestSimilarity:
    def test_identical_unit_vectors(self):
        P = torch.tensor([[1.0, 0.0, 0.0]], dtype=torch.float64)
        assert float(similarity(P, P).S[0, 0]) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal(self):
        P = torch.tensor([[1.0, 0.0]], dtype=torch.float64)
        T = torch.tensor([[0.0, 1.0]], dtype=torch.float64)
        assert float(similarity(P, T).S[0, 0]) == 0.0

    def test_diagonal_pair(self):
        P = torch.tensor([[1.0, 1.0]], dtype=torch.float64)
        T = torch.tensor([[1.0, 0.0]], dtype=torch.float64)
        assert float(similarity(P, T).S[0, 0]) == pytest.approx(math.sqrt(0.5), abs=1e-12)

    def test_zero_vector(self):
        P = torch.tensor([[0.0, 0.0]], dtype=torch.float64)
        T = torch.tensor([[1.0, 0.0]], dtype=torch.float64)
        with pytest.raises(ZeroVector):
            similarity(P, T)
        with pytest.raises(ZeroVector):
            similarity(T, P)

    def test_dim_mismatch(self):
        with pytest.raises(DimensionMismatch):
            similarity(torch.ones(1, 2, dtype=torch.float64), torch.ones(1, 3, dtype=torch.float64))

    def test_scale_invariance(self):
        gen = torch.Generator().manual_seed(0)
        P = torch.randn(5, 4, generator=gen, dtype=torch.float64)
        T = torch.randn(3, 4, generator=gen, dtype=torch.float64)
        a = similarity(P, T).S
        b = similarity(2.5 * P, 0.03 * T).S
        assert torch.allclose(a, b, atol=1e-12, rtol=0)

    def test_range(self):
        gen = torch.Generator().manual_seed(1)
        P = torch.randn(20, 6, generator=gen, dtype=torch.float64)
        T = torch.randn(7, 6, generator=gen, dtype=torch.float64)
        S = similarity(P, T).S
        assert float(S.min()) >= -1.0 - 1e-12
        assert float(S.max()) <= 1.0 + 1e-12


class TestProbabilities:
    def test_symmetric_row(self):
        p = probabilities(_sim([[0.5, 0.5]]), [True, True])
        assert torch.allclose(p, torch.tensor([[0.5, 0.5]], dtype=torch.float64))

    def test_scalar_example(self):
        # exp(8)/(exp(8)+exp(3)) evaluated directly
        p = probabilities(_sim([[0.8, 0.3]]), [True, True])
        expected = _softmax_oracle([0.8, 0.3], 0.1)
        assert float(p[0, 0]) == pytest.approx(expected[0], abs=1e-6)
        assert float(p[0, 0]) == pytest.approx(0.993307, abs=1e-6)

    def test_masked_renormalization(self):
        mask = [True, False, True]
        p = probabilities(_sim([[0.9, 0.2, 0.1]]), mask)
        expected = _softmax_oracle([0.9, 0.2, 0.1], 0.1, mask)
        assert float(p[0, 1]) == 0.0
        np.testing.assert_allclose(p[0].numpy(), expected, atol=1e-12)

    def test_rows_stochastic_masked_zero(self):
        gen = torch.Generator().manual_seed(2)
        S = torch.rand(50, 8, generator=gen, dtype=torch.float64) * 2 - 1
        mask = torch.rand(50, 8, generator=gen) > 0.4
        mask[:, 0] = True
        p = probabilities(SimilarityMatrix(S), mask)
        assert torch.allclose(p.sum(dim=1), torch.ones(50, dtype=torch.float64), atol=1e-9)
        assert (p[~mask] == 0.0).all()

    def test_temperature_limits(self):
        S = torch.tensor([[0.4, 0.1, -0.2]], dtype=torch.float64)
        sharp = probabilities(SimilarityMatrix(S, temperature=1e-3), [True] * 3)
        assert float(sharp[0, 0]) == pytest.approx(1.0, abs=1e-9)
        flat = probabilities(SimilarityMatrix(S, temperature=1e3), [True] * 3)
        assert torch.allclose(flat, torch.full((1, 3), 1 / 3, dtype=torch.float64), atol=1e-3)


class TestCeLoss:
    @pytest.mark.parametrize("n_k", [2, 11, 20])
    def test_uniform_similarity_gives_log_nk(self, n_k):
        S = torch.full((6, n_k + 3), 0.37, dtype=torch.float64)
        mask = torch.zeros(n_k + 3, dtype=torch.bool)
        mask[:n_k] = True
        gt = torch.zeros(6, dtype=torch.int64)
        loss = ce_loss(SimilarityMatrix(S), gt, mask)
        assert float(loss) == pytest.approx(math.log(n_k), abs=1e-6)

    def test_two_class_example(self):
        # -log sigmoid((0.9-0.1)/0.1) evaluated directly
        loss = ce_loss(_sim([[0.9, 0.1]]), torch.tensor([0]), [True, True])
        expected = math.log1p(math.exp(-8.0))
        assert float(loss) == pytest.approx(expected, rel=1e-9)
        assert float(loss) == pytest.approx(3.3540e-4, rel=1e-3)

    def test_gt_masked_out(self):
        with pytest.raises(GroundTruthMasked):
            ce_loss(_sim([[0.9, 0.1]]), torch.tensor([1]), [True, False])

    def test_mean_reduction(self):
        sim = _sim([[0.9, 0.1], [0.1, 0.9]])
        gt = torch.tensor([0, 0])
        l_both = ce_loss(sim, gt, [True, True])
        l_a = ce_loss(_sim([[0.9, 0.1]]), torch.tensor([0]), [True, True])
        l_b = ce_loss(_sim([[0.1, 0.9]]), torch.tensor([0]), [True, True])
        assert float(l_both) == pytest.approx((float(l_a) + float(l_b)) / 2, rel=1e-12)

    def test_masked_union_equals_standalone(self):
        # the per-source masking oracle at module level
        rng = np.random.default_rng(0)
        for _ in range(200):
            n = rng.integers(1, 12)
            c_all = rng.integers(2, 15)
            n_k = rng.integers(1, c_all + 1)
            allowed_idx = rng.choice(c_all, size=n_k, replace=False)
            mask = np.zeros(c_all, dtype=bool)
            mask[allowed_idx] = True
            S = rng.uniform(-1, 1, size=(n, c_all))
            gt_local = rng.integers(0, n_k, size=n)
            gt_union = allowed_idx[gt_local]
            full = ce_loss(
                SimilarityMatrix(torch.from_numpy(S)), torch.from_numpy(gt_union), mask
            )
            standalone = ce_loss(
                SimilarityMatrix(torch.from_numpy(S[:, allowed_idx])),
                torch.from_numpy(gt_local),
                np.ones(n_k, dtype=bool),
            )
            assert abs(float(full) - float(standalone)) < 1e-12

    def test_gradients_match_finite_differences(self):
        gen = torch.Generator().manual_seed(4)
        P = torch.randn(5, 4, generator=gen, dtype=torch.float64, requires_grad=True)
        T = torch.randn(3, 4, generator=gen, dtype=torch.float64, requires_grad=True)
        gt = torch.tensor([0, 1, 2, 0, 1])
        mask = torch.ones(3, dtype=torch.bool)

        def loss_fn():
            return ce_loss(similarity(P, T), gt, mask)

        grads = torch.autograd.grad(loss_fn(), [P, T])
        for tensor, grad in zip([P, T], grads):
            flat = tensor.detach().reshape(-1)
            gflat = grad.reshape(-1)
            for idx in range(flat.numel()):
                h = 1e-6
                with torch.no_grad():
                    flat[idx] += h
                    up = float(loss_fn())
                    flat[idx] -= 2 * h
                    down = float(loss_fn())
                    flat[idx] += h
                numeric = (up - down) / (2 * h)
                denom = max(abs(numeric), abs(float(gflat[idx])), 1e-6)
                assert abs(numeric - float(gflat[idx])) / denom < 1e-4


class TestPredict:
    def test_argmax(self):
        assert int(predict(_sim([[0.2, 0.9, 0.1]]), [True] * 3)[0]) == 1

    def test_tie_breaks_low_index(self):
        assert int(predict(_sim([[0.5, 0.5]]), [True, True])[0]) == 0

    def test_mask_hides_max(self):
        S = [[0.1, 0.9, 0.4]]
        mask = [True, False, True]
        # brute force over the allowed set
        allowed = [i for i, a in enumerate(mask) if a]
        expected = max(allowed, key=lambda i: S[0][i])
        assert int(predict(_sim(S), mask)[0]) == expected == 2
