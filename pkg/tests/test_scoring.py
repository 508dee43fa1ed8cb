"""Frame sampling, aesthetic max, cosine-based similarity features."""

from __future__ import annotations

import math

import numpy as np
import pytest

from vtcurate.errors import DimMismatch, EmptyInput, KTooLarge, ZeroVector
from vtcurate.scoring import (SAMPLED_FRAMES, aesthetic_score, clipsim,
                              cosine_similarity, score_clip, umt_sim,
                              uniform_sample_indices)


class TestUniformSampleIndices:
    def test_identity_when_k_equals_n(self):
        assert uniform_sample_indices(8, 8) == [0, 1, 2, 3, 4, 5, 6, 7]

    def test_center_single_sample(self):
        assert uniform_sample_indices(9, 1) == [4]

    def test_four_of_eight(self):
        assert uniform_sample_indices(8, 4) == [1, 3, 5, 7]

    def test_k_too_large(self):
        with pytest.raises(KTooLarge):
            uniform_sample_indices(3, 4)
        with pytest.raises(ValueError):
            uniform_sample_indices(3, 0)

    def test_increasing_in_range_and_reflection(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            n = int(rng.integers(1, 500))
            k = int(rng.integers(1, n + 1))
            idx = uniform_sample_indices(n, k)
            assert all(b > a for a, b in zip(idx, idx[1:]))
            assert all(0 <= i < n for i in idx)
            reflected = sorted(n - 1 - i for i in idx)
            assert all(abs(a - b) <= 1 for a, b in zip(idx, reflected))


class TestAestheticScore:
    def test_maximum(self):
        assert aesthetic_score([3.0, 5.2, 4.1, 4.9]) == 5.2

    def test_single(self):
        assert aesthetic_score([7.25]) == 7.25

    def test_permutation_invariance(self):
        rng = np.random.default_rng(3)
        scores = list(rng.uniform(0, 10, 9))
        expected = aesthetic_score(scores)
        for _ in range(5):
            rng.shuffle(scores)
            assert aesthetic_score(scores) == expected

    def test_result_is_an_input_and_upper_bound(self):
        scores = [1.5, 9.0, 3.25]
        out = aesthetic_score(scores)
        assert out in scores
        assert all(out >= s for s in scores)

    def test_empty(self):
        with pytest.raises(EmptyInput):
            aesthetic_score([])


class TestCosine:
    def test_identical(self):
        assert cosine_similarity([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 1.0

    def test_orthogonal(self):
        assert cosine_similarity([1.0, 0.0], [0.0, 1.0]) == 0.0

    def test_hand_value(self):
        assert cosine_similarity([1.0, 0.0], [1.0, 1.0]) == \
            pytest.approx(0.7071067811865475, abs=1e-12)

    def test_clamped_to_unit_interval(self):
        v = [1e-8, 1.0, 1e8]
        assert -1.0 <= cosine_similarity(v, v) <= 1.0

    def test_errors(self):
        with pytest.raises(ZeroVector):
            cosine_similarity([0.0, 0.0], [1.0, 0.0])
        with pytest.raises(DimMismatch):
            cosine_similarity([1.0], [1.0, 2.0])


class TestUmtSim:
    def test_identical_embeddings(self):
        e = [0.5, 0.5]
        assert umt_sim([e, e, e, e], e) == pytest.approx(1.0, abs=1e-12)

    def test_cancelling_frames_error(self):
        e = np.array([1.0, 2.0])
        with pytest.raises(ZeroVector):
            umt_sim([e, -e], [1.0, 0.0])

    def test_hand_pooling(self):
        frames = [[1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [0.0, 1.0]]
        assert umt_sim(frames, [1.0, 0.0]) == \
            pytest.approx(0.7071067811865475, abs=1e-12)

    def test_scale_invariance(self):
        rng = np.random.default_rng(8)
        frames = rng.normal(size=(4, 6))
        text = rng.normal(size=6)
        base = umt_sim(frames, text)
        assert umt_sim(frames * 37.5, text * 0.001) == pytest.approx(base, abs=1e-12)


class TestClipSim:
    def test_identity(self):
        t = [2.0, 1.0]
        assert clipsim([t, t], t) == pytest.approx(1.0, abs=1e-12)

    def test_half(self):
        assert clipsim([[1.0, 0.0], [0.0, 1.0]], [1.0, 0.0]) == 0.5

    def test_mean_of_known_cosines(self):
        frames = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]]
        assert clipsim(frames, [1.0, 0.0]) == 0.0

    def test_zero_frame_is_error(self):
        with pytest.raises(ZeroVector):
            clipsim([[1.0, 0.0], [0.0, 0.0]], [1.0, 0.0])


class TestScoreClip:
    def test_uses_exactly_four_sampled_frames(self):
        # peak score at a non-sampled index must not leak into the result
        scores = np.ones(8)
        scores[0] = 9.9          # index 0 is not among [1, 3, 5, 7]
        scores[3] = 5.0
        frames = np.tile([1.0, 0.0], (8, 1))
        out = score_clip(scores, frames, [1.0, 0.0])
        assert out.aesthetic == 5.0
        assert out.umt_sim == 1.0

    def test_sampled_count_constant_is_four(self):
        assert SAMPLED_FRAMES == 4

    def test_short_clips_fall_back_to_all_frames(self):
        out = score_clip([4.0, 6.0], [[1.0, 0.0], [1.0, 0.0]], [1.0, 0.0])
        assert out.aesthetic == 6.0

    def test_empty_features_error(self):
        with pytest.raises(EmptyInput):
            score_clip([], np.zeros((0, 2)), [1.0, 0.0])

    def test_count_mismatch_error(self):
        with pytest.raises(DimMismatch):
            score_clip([1.0, 2.0], [[1.0, 0.0]], [1.0, 0.0])

    def test_umt_within_unit_interval(self):
        rng = np.random.default_rng(4)
        for _ in range(30):
            n = int(rng.integers(1, 30))
            out = score_clip(rng.uniform(0, 10, n), rng.normal(size=(n, 5)),
                             rng.normal(size=5))
            assert -1.0 <= out.umt_sim <= 1.0
            assert math.isfinite(out.aesthetic)
