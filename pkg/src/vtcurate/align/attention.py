"""Attention forwards and random patch masking.

Three attention variants over token matrices:

* plain scaled dot-product attention;
* joint attention over all frames' tokens at once (no per-frame
  factorization), the video-encoder form;
* the sparse causal form where frame t queries keys and values built from
  the concatenation of frame t-1 and frame t (frame 0 uses itself twice,
  which collapses to plain self-attention by softmax duplication
  invariance).

Masking keeps an exact count of patch tokens, uniformly without
replacement per seed; a cls token is never masked.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import LayoutMismatch, RatioOutOfRange, ShapeMismatch


@dataclass(frozen=True)
class TokenLayout:
    frames: int
    patches: int
    dim: int
    has_cls: bool = False

    def __post_init__(self):
        if self.frames < 1 or self.patches < 1 or self.dim < 1:
            raise ValueError("frames, patches, dim must be >= 1")

    @property
    def patch_tokens(self) -> int:
        return self.frames * self.patches

    @property
    def token_count(self) -> int:
        return self.patch_tokens + (1 if self.has_cls else 0)


def attention_weights(q, k) -> np.ndarray:
    """Row-stochastic softmax(Q K^T / sqrt(D)) with max subtraction."""
    mq = np.asarray(q, dtype=np.float64)
    mk = np.asarray(k, dtype=np.float64)
    if mq.ndim != 2 or mk.ndim != 2 or mq.shape[1] != mk.shape[1]:
        raise ShapeMismatch(f"Q {mq.shape} and K {mk.shape} disagree on dim")
    scores = (mq @ mk.T) / np.sqrt(mq.shape[1])
    scores -= scores.max(axis=1, keepdims=True)
    w = np.exp(scores)
    return w / w.sum(axis=1, keepdims=True)


def attention(q, k, v) -> np.ndarray:
    """softmax(Q K^T / sqrt(D)) V."""
    mv = np.asarray(v, dtype=np.float64)
    mk = np.asarray(k, dtype=np.float64)
    if mv.ndim != 2 or mk.shape[0] != mv.shape[0]:
        raise ShapeMismatch(f"K rows {mk.shape} and V rows {mv.shape} differ")
    return attention_weights(q, k) @ mv


def spatiotemporal_attention(tokens, layout: TokenLayout, wq, wk, wv) -> np.ndarray:
    """One joint attention over all T*P (+cls) tokens, no per-frame
    factorization: project, then plain attention on the flat matrix."""
    m = np.asarray(tokens, dtype=np.float64)
    if m.ndim != 2 or m.shape != (layout.token_count, layout.dim):
        raise LayoutMismatch(f"tokens shape {m.shape} does not match layout "
                             f"({layout.token_count}, {layout.dim})")
    return attention(m @ wq, m @ wk, m @ wv)


def st_attn(frames, wq, wk, wv) -> np.ndarray:
    """Sparse causal attention: frame t supplies the queries; keys and
    values come from the 2P-row concatenation of frames max(t-1, 0) and t."""
    f = np.asarray(frames, dtype=np.float64)
    if f.ndim != 3:
        raise ShapeMismatch(f"frames must be T x P x D, got shape {f.shape}")
    t_frames = f.shape[0]
    out = []
    for t in range(t_frames):
        prev = f[max(t - 1, 0)]
        kv_src = np.concatenate([prev, f[t]], axis=0)
        out.append(attention(f[t] @ wq, kv_src @ wk, kv_src @ wv))
    return np.stack(out, axis=0)


def generate_patch_mask(layout: TokenLayout, mask_ratio: float, seed: int) -> list[int]:
    """Kept token indices after random patch masking.

    Exactly round((1 - mask_ratio) * T * P) patch tokens survive, chosen
    uniformly without replacement by the seed; the cls token (index 0 when
    present) is always kept.  Ties in the keep count round half to even.
    """
    if not (0.0 <= mask_ratio < 1.0):
        raise RatioOutOfRange(f"mask_ratio {mask_ratio} outside [0, 1)")
    n_patches = layout.patch_tokens
    n_keep = round((1.0 - mask_ratio) * n_patches)
    rng = np.random.default_rng(seed)
    kept = np.sort(rng.permutation(n_patches)[:n_keep])
    offset = 1 if layout.has_cls else 0
    indices = [int(i) + offset for i in kept]
    if layout.has_cls:
        indices.insert(0, 0)
    return indices
