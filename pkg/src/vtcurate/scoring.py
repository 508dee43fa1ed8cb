"""Per-clip computed features: aesthetic score, video-text similarity,
and the per-frame text-similarity average.

Pure math over frame-level scores and embeddings; the external models that
produce those inputs sit behind sidecar files or the shared service
client.  The clip-level aesthetic score is the maximum over four uniformly
sampled frame scores; the video-text similarity pools the same four
frames' embeddings by arithmetic mean before the cosine.
"""

from __future__ import annotations

import numpy as np

from .errors import DimMismatch, EmptyInput, KTooLarge, ZeroVector
from .manifest import ScoreSet

SAMPLED_FRAMES = 4


def uniform_sample_indices(n_frames: int, k: int) -> list[int]:
    """k center-aligned indices: floor((i + 0.5) * n / k), strictly
    increasing within [0, n)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > n_frames:
        raise KTooLarge(f"k={k} exceeds n_frames={n_frames}")
    return [int((i + 0.5) * n_frames // k) for i in range(k)]


def aesthetic_score(frame_scores) -> float:
    scores = np.asarray(frame_scores, dtype=np.float64)
    if scores.size == 0:
        raise EmptyInput("no frame scores")
    if not np.all(np.isfinite(scores)):
        raise ValueError("frame scores must be finite")
    return float(scores.max())


def cosine_similarity(a, b) -> float:
    """Cosine of the angle between two vectors, clamped to [-1, 1] so
    rounding never leaks 1 + eps to downstream quantile logic."""
    va = np.asarray(a, dtype=np.float64)
    vb = np.asarray(b, dtype=np.float64)
    if va.shape != vb.shape or va.ndim != 1:
        raise DimMismatch(f"shapes {va.shape} vs {vb.shape}")
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        raise ZeroVector("cosine undefined for zero vector")
    return float(np.clip(np.dot(va, vb) / (na * nb), -1.0, 1.0))


def umt_sim(frame_embeddings, text_embedding) -> float:
    """Cosine between the mean-pooled frame embedding and the text
    embedding; callers pass the 4 uniformly sampled frames."""
    frames = np.asarray(frame_embeddings, dtype=np.float64)
    if frames.ndim != 2 or frames.shape[0] == 0:
        raise EmptyInput("frame embeddings must be a non-empty matrix")
    return cosine_similarity(frames.mean(axis=0), text_embedding)


def clipsim(per_frame_embeddings, text_embedding) -> float:
    """Mean over frames of frame-text cosine similarity."""
    frames = np.asarray(per_frame_embeddings, dtype=np.float64)
    if frames.ndim != 2 or frames.shape[0] == 0:
        raise EmptyInput("frame embeddings must be a non-empty matrix")
    return float(np.mean([cosine_similarity(f, text_embedding) for f in frames]))


def score_clip(frame_scores, frame_embeddings, text_embedding) -> ScoreSet:
    """Clip-level features from full per-frame inputs.

    Samples ``SAMPLED_FRAMES`` frames uniformly (by position) from the
    given per-frame sequences, takes the max sampled aesthetic score, and
    the pooled-frame/text cosine over the same sampled frames.
    """
    scores = np.asarray(frame_scores, dtype=np.float64)
    frames = np.asarray(frame_embeddings, dtype=np.float64)
    if scores.size == 0 or frames.ndim != 2 or frames.shape[0] == 0:
        raise EmptyInput("clip has no frame features")
    if scores.size != frames.shape[0]:
        raise DimMismatch("frame_scores and frame_embeddings disagree on frame count")
    k = min(SAMPLED_FRAMES, scores.size)
    idx = uniform_sample_indices(scores.size, k)
    return ScoreSet(
        aesthetic=aesthetic_score(scores[idx]),
        umt_sim=umt_sim(frames[idx], text_embedding),
    )
