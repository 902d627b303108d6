import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ovis_toy.gradcheck import check_gradients
from ovis_toy.tensor import Tensor, mean_all, sum_all
from ovis_toy.tokenizer import TokenizerHead, sparsity_stats


def make_head(K=4, d=3, dtype=np.float64):
    head = TokenizerHead(K, d, seed=0, dtype=dtype)
    return head


class TestTokenize:
    def test_zero_weights_give_uniform_tokens(self):
        head = make_head(K=5)
        head.weight.data[:] = 0.0
        reps = Tensor(np.random.default_rng(0).normal(size=(3, 3)), dtype=np.float64)
        out = head.tokenize(reps)
        assert np.allclose(out.data, 0.2)

    def test_reference_projection(self):
        head = make_head(K=3, d=2)
        head.weight.data = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
        out = head.tokenize(Tensor([[1.0, 2.0]], dtype=np.float64))
        assert np.allclose(out.data, [[0.24472847, 0.66524096, 0.09003057]], atol=1e-8)

    def test_scaling_reps_sharpens_toward_argmax(self):
        head = make_head(K=4, d=4)
        rng = np.random.default_rng(1)
        head.weight.data = rng.normal(size=(4, 4))
        r = rng.normal(size=(1, 4))
        mild = head.tokenize(Tensor(r, dtype=np.float64)).data
        sharp = head.tokenize(Tensor(1000.0 * r, dtype=np.float64)).data
        j = np.argmax(mild)
        assert np.argmax(sharp) == j
        assert sharp[0, j] > 0.999

    def test_width_mismatch(self):
        head = make_head(K=4, d=3)
        with pytest.raises(ValueError, match="width"):
            head.tokenize(Tensor(np.zeros((2, 5)), dtype=np.float64))

    @given(st.integers(0, 1000))
    @settings(max_examples=100, deadline=None)
    def test_tokens_lie_on_simplex(self, seed):
        rng = np.random.default_rng(seed)
        head = make_head(K=6, d=4)
        head.weight.data = rng.normal(scale=3.0, size=(6, 4))
        out = head.tokenize(Tensor(rng.normal(scale=5.0, size=(2, 4)), dtype=np.float64)).data
        assert (out >= 0).all()
        assert np.allclose(out.sum(axis=1), 1.0, atol=1e-6)

    def test_positive_scaling_keeps_argmax(self):
        rng = np.random.default_rng(7)
        head = make_head(K=8, d=5)
        head.weight.data = rng.normal(size=(8, 5))
        r = rng.normal(size=(4, 5))
        base = head.tokenize(Tensor(r, dtype=np.float64)).data.argmax(axis=1)
        for alpha in (0.1, 2.0, 17.5):
            scaled = head.tokenize(Tensor(alpha * r, dtype=np.float64)).data.argmax(axis=1)
            assert np.array_equal(scaled, base)

    def test_gradient_wrt_projection(self):
        head = make_head(K=4, d=3)
        rng = np.random.default_rng(3)
        head.weight.data = rng.normal(size=(4, 3))
        reps = Tensor(rng.normal(size=(2, 3)), dtype=np.float64, requires_grad=True)
        w = Tensor(rng.normal(size=(2, 4)), dtype=np.float64)
        from ovis_toy.tensor import mul

        err = check_gradients(lambda: sum_all(mul(head.tokenize(reps), w)),
                              [head.weight, reps])
        assert err < 1e-4


class TestSparsityStats:
    def test_uniform_token_all_above_threshold(self):
        report = sparsity_stats(np.full((1, 4), 0.25), [1e-4])
        assert report.bucket_ratios == [1.0, 0.0]

    def test_one_hot_like_token(self):
        token = np.array([[1.0 - 3e-7, 1e-7, 1e-7, 1e-7]])
        report = sparsity_stats(token, [1e-4, 1e-5, 1e-6])
        assert report.bucket_ratios[0] == pytest.approx(0.25)
        assert report.bucket_ratios[-1] == pytest.approx(0.75)
        assert report.bucket_counts == [1, 0, 0, 3]

    def test_ratios_sum_to_one(self):
        rng = np.random.default_rng(0)
        tokens = rng.dirichlet(np.full(64, 0.05), size=50)
        report = sparsity_stats(tokens, [1e-4, 1e-5, 1e-6])
        assert abs(sum(report.bucket_ratios) - 1.0) < 1e-9

    @given(st.integers(0, 200))
    @settings(max_examples=50, deadline=None)
    def test_counts_match_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        tokens = rng.dirichlet(np.full(16, 0.1), size=5)
        thresholds = [1e-2, 1e-4, 1e-6]
        report = sparsity_stats(tokens, thresholds)
        values = tokens.reshape(-1)
        brute = [int(np.sum(values >= 1e-2)),
                 int(np.sum((values >= 1e-4) & (values < 1e-2))),
                 int(np.sum((values >= 1e-6) & (values < 1e-4))),
                 int(np.sum(values < 1e-6))]
        assert report.bucket_counts == brute

    def test_empty_input_rejected(self):
        with pytest.raises(ValueError):
            sparsity_stats(np.zeros((0, 4)), [1e-4])

    def test_non_monotone_thresholds_rejected(self):
        with pytest.raises(ValueError, match="decreasing"):
            sparsity_stats(np.full((1, 4), 0.25), [1e-6, 1e-4])

    def test_tsv_format(self):
        report = sparsity_stats(np.full((2, 4), 0.25), [1e-4, 1e-5])
        lines = report.as_tsv().strip().split("\n")
        assert len(lines) == 4
        assert lines[1].split("\t")[0] == ">=0.0001"
        assert all(len(line.split("\t")) == 3 for line in lines)
