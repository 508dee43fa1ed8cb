"""Contrastive loss and gradients against naive oracles, attention
variants, patch masking, and the toy trainer."""

from __future__ import annotations

import math

import numpy as np
import pytest

from vtcurate.align import (AlignTrainConfig, EmbeddingBatch, TemperatureParam,
                            TokenLayout, attention, attention_weights,
                            generate_patch_mask, info_nce, info_nce_grad,
                            spatiotemporal_attention, st_attn, train_alignment)
from vtcurate.errors import (DegenerateBatch, LayoutMismatch, RatioOutOfRange,
                             ShapeMismatch, ZeroRow)


def naive_info_nce(v, t, tau):
    """Double-loop reference: explicit cosines, explicit softmaxes."""
    n = len(v)

    def cos(a, b):
        return float(np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b)))

    s = [[cos(v[i], t[j]) for j in range(n)] for i in range(n)]
    loss_v2t = loss_t2v = 0.0
    for i in range(n):
        denom = sum(math.exp(s[i][j] / tau) for j in range(n))
        loss_v2t -= math.log(math.exp(s[i][i] / tau) / denom) / n
        denom = sum(math.exp(s[j][i] / tau) for j in range(n))
        loss_t2v -= math.log(math.exp(s[i][i] / tau) / denom) / n
    return (loss_v2t + loss_t2v) / 2, loss_v2t, loss_t2v


class TestInfoNce:
    def test_single_pair_is_exactly_zero(self):
        tau = TemperatureParam.from_tau(0.07)
        v = np.array([[0.3, -1.2, 0.5]])
        assert info_nce(v, v * 2.0, tau).loss == 0.0

    def test_uniform_two_pair_is_ln2(self):
        tau = TemperatureParam.from_tau(0.31)
        v = np.array([[1.0, 0.0], [1.0, 0.0]])
        t = np.array([[0.0, 1.0], [0.0, 1.0]])
        out = info_nce(v, t, tau)
        assert abs(out.loss - math.log(2)) < 1e-12

    def test_matches_naive_oracle(self):
        rng = np.random.default_rng(123)
        for _ in range(40):
            n = int(rng.integers(2, 9))
            d = int(rng.integers(2, 16))
            v = rng.normal(size=(n, d))
            t = rng.normal(size=(n, d))
            tau = TemperatureParam.from_tau(float(rng.uniform(0.05, 2.0)))
            got = info_nce(v, t, tau)
            want = naive_info_nce(v, t, tau.tau)
            for g, w in zip(got, want):
                assert abs(g - w) <= 1e-10 * max(1.0, abs(w))

    def test_nonnegative(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            v = rng.normal(size=(5, 6))
            t = rng.normal(size=(5, 6))
            assert info_nce(v, t, TemperatureParam()).loss >= 0.0

    def test_symmetry_under_transposed_pairing(self):
        rng = np.random.default_rng(8)
        v = rng.normal(size=(6, 4))
        t = rng.normal(size=(6, 4))
        tau = TemperatureParam()
        assert info_nce(v, t, tau).loss_v2t == \
            pytest.approx(info_nce(t, v, tau).loss_t2v, abs=1e-14)

    def test_errors(self):
        tau = TemperatureParam()
        with pytest.raises(ShapeMismatch):
            info_nce(np.ones((2, 3)), np.ones((3, 3)), tau)
        with pytest.raises(ZeroRow):
            info_nce(np.array([[0.0, 0.0], [1.0, 1.0]]), np.ones((2, 2)), tau)

    def test_embedding_batch_validation(self):
        with pytest.raises(ShapeMismatch):
            EmbeddingBatch(np.ones(3))
        with pytest.raises(ValueError):
            EmbeddingBatch([[np.inf, 1.0]])
        b = EmbeddingBatch([[1.0, 2.0]])
        assert (b.rows, b.dim) == (1, 2)


def finite_diff_check(v, t, tau, h=1e-5, rel=1e-5, abs_floor=1e-8):
    dv, dt, dlt = info_nce_grad(v, t, tau)

    def close(analytic, numeric):
        return abs(analytic - numeric) <= max(abs_floor, rel * abs(numeric))

    for arr, grad in ((v, dv), (t, dt)):
        for idx in np.ndindex(arr.shape):
            orig = arr[idx]
            arr[idx] = orig + h
            up = info_nce(v, t, tau).loss
            arr[idx] = orig - h
            down = info_nce(v, t, tau).loss
            arr[idx] = orig
            if not close(grad[idx], (up - down) / (2 * h)):
                return False
    up = info_nce(v, t, TemperatureParam(tau.log_tau + h)).loss
    down = info_nce(v, t, TemperatureParam(tau.log_tau - h)).loss
    return close(dlt, (up - down) / (2 * h))


class TestInfoNceGrad:
    def test_finite_differences(self):
        rng = np.random.default_rng(42)
        for _ in range(10):
            v = rng.normal(size=(4, 8))
            t = rng.normal(size=(4, 8))
            tau = TemperatureParam.from_tau(float(rng.uniform(0.07, 1.0)))
            assert finite_diff_check(v, t, tau)

    def test_single_pair_gradients_vanish(self):
        v = np.array([[1.0, 2.0]])
        t = np.array([[0.5, -1.0]])
        dv, dt, dlt = info_nce_grad(v, t, TemperatureParam())
        assert np.all(dv == 0.0) and np.all(dt == 0.0) and dlt == 0.0

    def test_gradient_orthogonal_to_row(self):
        rng = np.random.default_rng(9)
        v = rng.normal(size=(5, 7))
        t = rng.normal(size=(5, 7))
        dv, dt, _ = info_nce_grad(v, t, TemperatureParam())
        for arr, grad in ((v, dv), (t, dt)):
            radial = (grad * arr).sum(axis=1)
            assert np.max(np.abs(radial)) < 1e-12


class TestAttention:
    def test_single_key_returns_value_row(self):
        rng = np.random.default_rng(1)
        q = rng.normal(size=(4, 3))
        k = rng.normal(size=(1, 3))
        v = rng.normal(size=(1, 5))
        out = attention(q, k, v)
        assert np.allclose(out, np.tile(v, (4, 1)), atol=1e-15)

    def test_duplicating_keys_and_values_is_invariant(self):
        rng = np.random.default_rng(2)
        q = rng.normal(size=(3, 4))
        k = rng.normal(size=(5, 4))
        v = rng.normal(size=(5, 2))
        base = attention(q, k, v)
        doubled = attention(q, np.vstack([k, k]), np.vstack([v, v]))
        assert np.allclose(base, doubled, atol=1e-12)

    def test_hand_case(self):
        q = np.array([[1.0, 0.0]])
        k = np.array([[1.0, 0.0], [0.0, 1.0]])
        v = np.array([[1.0, 0.0], [0.0, 1.0]])
        w1 = math.exp(1 / math.sqrt(2)) / (math.exp(1 / math.sqrt(2)) + 1)
        out = attention(q, k, v)
        assert out[0, 0] == pytest.approx(w1, abs=1e-12)
        assert out[0, 1] == pytest.approx(1 - w1, abs=1e-12)

    def test_rows_sum_to_one(self):
        rng = np.random.default_rng(3)
        w = attention_weights(rng.normal(size=(6, 5)), rng.normal(size=(9, 5)))
        assert np.max(np.abs(w.sum(axis=1) - 1.0)) < 1e-12

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            attention(np.ones((2, 3)), np.ones((2, 4)), np.ones((2, 2)))
        with pytest.raises(ShapeMismatch):
            attention(np.ones((2, 3)), np.ones((2, 3)), np.ones((3, 2)))


class TestSpatiotemporalAttention:
    def _proj(self, rng, d, dk, dv):
        return (rng.normal(size=(d, dk)), rng.normal(size=(d, dk)),
                rng.normal(size=(d, dv)))

    def test_single_frame_equals_spatial(self):
        rng = np.random.default_rng(4)
        layout = TokenLayout(frames=1, patches=6, dim=3)
        tokens = rng.normal(size=(6, 3))
        wq, wk, wv = self._proj(rng, 3, 4, 2)
        joint = spatiotemporal_attention(tokens, layout, wq, wk, wv)
        spatial = attention(tokens @ wq, tokens @ wk, tokens @ wv)
        assert np.allclose(joint, spatial, atol=1e-15)

    def test_frame_permutation_equivariance(self):
        rng = np.random.default_rng(5)
        layout = TokenLayout(frames=3, patches=2, dim=4)
        tokens = rng.normal(size=(6, 4))
        wq, wk, wv = self._proj(rng, 4, 4, 3)
        base = spatiotemporal_attention(tokens, layout, wq, wk, wv)
        perm = [4, 5, 0, 1, 2, 3]  # rotate frames
        permuted = spatiotemporal_attention(tokens[perm], layout, wq, wk, wv)
        assert np.allclose(base[perm], permuted, atol=1e-12)

    def test_equals_flat_attention(self):
        rng = np.random.default_rng(6)
        layout = TokenLayout(frames=2, patches=2, dim=2, has_cls=True)
        tokens = rng.normal(size=(5, 2))
        wq, wk, wv = self._proj(rng, 2, 3, 2)
        joint = spatiotemporal_attention(tokens, layout, wq, wk, wv)
        assert np.allclose(joint, attention(tokens @ wq, tokens @ wk,
                                            tokens @ wv), atol=1e-15)

    def test_layout_mismatch(self):
        layout = TokenLayout(frames=2, patches=2, dim=3)
        with pytest.raises(LayoutMismatch):
            spatiotemporal_attention(np.ones((5, 3)), layout,
                                     np.ones((3, 3)), np.ones((3, 3)),
                                     np.ones((3, 3)))


def naive_st_attn(frames, wq, wk, wv):
    t_frames, p, _ = frames.shape
    out = np.zeros((t_frames, p, wv.shape[1]))
    for t in range(t_frames):
        prev = frames[t - 1] if t > 0 else frames[t]
        keys = np.vstack([prev, frames[t]]) @ wk
        values = np.vstack([prev, frames[t]]) @ wv
        queries = frames[t] @ wq
        for i in range(p):
            scores = keys @ queries[i] / math.sqrt(wq.shape[1])
            scores -= scores.max()
            w = np.exp(scores)
            w /= w.sum()
            out[t, i] = w @ values
    return out


class TestStAttn:
    def test_duplicate_frames_reduce_to_self_attention(self):
        rng = np.random.default_rng(7)
        frame = rng.normal(size=(4, 3))
        frames = np.stack([frame, frame])
        wq = rng.normal(size=(3, 3))
        wk = rng.normal(size=(3, 3))
        wv = rng.normal(size=(3, 2))
        out = st_attn(frames, wq, wk, wv)
        self_attn = attention(frame @ wq, frame @ wk, frame @ wv)
        assert np.max(np.abs(out[1] - self_attn)) < 1e-12

    def test_first_frame_uses_itself_as_previous(self):
        rng = np.random.default_rng(8)
        frames = rng.normal(size=(1, 5, 4))
        wq = rng.normal(size=(4, 4))
        wk = rng.normal(size=(4, 4))
        wv = rng.normal(size=(4, 3))
        out = st_attn(frames, wq, wk, wv)
        self_attn = attention(frames[0] @ wq, frames[0] @ wk, frames[0] @ wv)
        assert np.max(np.abs(out[0] - self_attn)) < 1e-12

    def test_matches_naive_loop(self):
        rng = np.random.default_rng(9)
        for _ in range(10):
            frames = rng.normal(size=(2, 3, 4))
            wq = rng.normal(size=(4, 5))
            wk = rng.normal(size=(4, 5))
            wv = rng.normal(size=(4, 2))
            got = st_attn(frames, wq, wk, wv)
            want = naive_st_attn(frames, wq, wk, wv)
            assert np.max(np.abs(got - want)) < 1e-10

    def test_bad_shape(self):
        with pytest.raises(ShapeMismatch):
            st_attn(np.ones((2, 3)), np.ones((3, 3)), np.ones((3, 3)),
                    np.ones((3, 3)))


class TestPatchMask:
    def test_zero_ratio_keeps_everything(self):
        layout = TokenLayout(frames=2, patches=5, dim=1)
        assert generate_patch_mask(layout, 0.0, seed=1) == list(range(10))

    def test_half_ratio_with_cls(self):
        layout = TokenLayout(frames=2, patches=5, dim=1, has_cls=True)
        kept = generate_patch_mask(layout, 0.5, seed=3)
        assert len(kept) == 6  # cls + 5 patches
        assert kept[0] == 0
        assert all(1 <= i <= 10 for i in kept[1:])

    def test_exact_keep_counts(self):
        for n in (1, 7, 10, 64, 256):
            layout = TokenLayout(frames=1, patches=n, dim=1)
            for ratio in (0.0, 0.25, 0.5, 0.75, 0.9):
                kept = generate_patch_mask(layout, ratio, seed=n)
                assert len(kept) == round((1 - ratio) * n)

    def test_deterministic_per_seed(self):
        layout = TokenLayout(frames=4, patches=4, dim=1)
        assert generate_patch_mask(layout, 0.5, 11) == \
            generate_patch_mask(layout, 0.5, 11)
        assert generate_patch_mask(layout, 0.5, 11) != \
            generate_patch_mask(layout, 0.5, 12)

    def test_uniform_keep_frequency(self):
        layout = TokenLayout(frames=1, patches=10, dim=1)
        hits = np.zeros(10)
        trials = 10_000
        for seed in range(trials):
            hits[generate_patch_mask(layout, 0.5, seed)] += 1
        freq = hits / trials
        assert np.max(np.abs(freq - 0.5)) < 0.02

    def test_ratio_out_of_range(self):
        layout = TokenLayout(frames=1, patches=4, dim=1)
        with pytest.raises(RatioOutOfRange):
            generate_patch_mask(layout, 1.0, 0)
        with pytest.raises(RatioOutOfRange):
            generate_patch_mask(layout, -0.1, 0)


def correlated_pairs(n=64, d=32, seed=2024, noise=0.1):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(n, d))
    t = v + noise * rng.normal(size=(n, d))
    return v, t


class TestTrainAlignment:
    def test_zero_steps_returns_initialization(self):
        v, t = correlated_pairs()
        r1 = train_alignment(v, t, AlignTrainConfig(steps=0, seed=5))
        r2 = train_alignment(v, t, AlignTrainConfig(steps=0, seed=5))
        assert len(r1.loss_curve) == 1
        assert np.array_equal(r1.w_video, r2.w_video)
        assert r1.log_tau == math.log(0.07)

    def test_initial_loss_near_ln_n(self):
        v, t = correlated_pairs()
        ln_n = math.log(64)
        losses = [train_alignment(v, t, AlignTrainConfig(steps=0, seed=s))
                  .loss_curve[0] for s in range(5)]
        for loss in losses:
            assert abs(loss - ln_n) / ln_n < 0.10

    def test_training_converges(self):
        v, t = correlated_pairs()
        cfg = AlignTrainConfig(steps=500, learning_rate=0.05, seed=0)
        result = train_alignment(v, t, cfg)
        assert result.loss_curve[-1] < 0.5 * math.log(64)

    def test_smoothed_curve_non_increasing(self):
        v, t = correlated_pairs()
        cfg = AlignTrainConfig(steps=300, learning_rate=0.05, seed=1)
        curve = np.array(train_alignment(v, t, cfg).loss_curve)
        smoothed = np.convolve(curve, np.ones(10) / 10, mode="valid")
        assert np.all(np.diff(smoothed) <= 1e-9)

    def test_masked_training_still_learns(self):
        v, t = correlated_pairs()
        cfg = AlignTrainConfig(steps=300, learning_rate=0.05, mask_ratio=0.5,
                               unmasked_tail_fraction=0.1, seed=2)
        result = train_alignment(v, t, cfg)
        assert result.loss_curve[-1] < result.loss_curve[0] / 2

    def test_degenerate_batch(self):
        with pytest.raises(DegenerateBatch):
            train_alignment(np.ones((1, 4)), np.ones((1, 4)),
                            AlignTrainConfig(steps=1))

    def test_mask_ratio_validated(self):
        with pytest.raises(RatioOutOfRange):
            AlignTrainConfig(steps=1, mask_ratio=1.0)

    def test_default_learning_rate_matches_unmasked_phase(self):
        assert AlignTrainConfig(steps=1).learning_rate == 4e-6
