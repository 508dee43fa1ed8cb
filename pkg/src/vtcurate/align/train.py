"""Toy alignment trainer: gradient descent on the contrastive loss over
linearly projected embedding pairs with a learnable temperature.

Masked steps stand in for patch masking on a full video encoder: each step
zeroes a seeded random subset of the video batch's input dimensions
(independently per sample, exact keep counts), except during the final
unmasked tail of training.  The returned loss curve reports the unmasked
full-input loss after every step, starting at initialization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateBatch, RatioOutOfRange, ShapeMismatch
from ..seeding import split_seed
from .contrastive import (DEFAULT_TAU, TemperatureParam, _as_matrix, info_nce,
                          info_nce_grad)

# Wide enough that freshly projected pairs start near the uniform-softmax
# loss ln N at the default temperature.
DEFAULT_PROJ_DIM = 1024


@dataclass(frozen=True)
class AlignTrainConfig:
    steps: int
    learning_rate: float = 4e-6  # default tuned for the unmasked phase
    mask_ratio: float = 0.0
    unmasked_tail_fraction: float = 0.0
    seed: int = 0
    proj_dim: int = DEFAULT_PROJ_DIM

    def __post_init__(self):
        if self.steps < 0:
            raise ValueError("steps must be >= 0")
        if not (0.0 <= self.mask_ratio < 1.0):
            raise RatioOutOfRange(f"mask_ratio {self.mask_ratio} outside [0, 1)")
        if not (0.0 <= self.unmasked_tail_fraction <= 1.0):
            raise ValueError("unmasked_tail_fraction must lie in [0, 1]")
        if self.proj_dim < 1:
            raise ValueError("proj_dim must be >= 1")


@dataclass
class TrainResult:
    w_video: np.ndarray
    w_text: np.ndarray
    log_tau: float
    loss_curve: list[float]


def _dimension_mask(rows: int, dim: int, mask_ratio: float,
                    rng: np.random.Generator) -> np.ndarray:
    """Per-sample 0/1 mask keeping exactly round((1-ratio)*dim) dims."""
    n_keep = max(1, round((1.0 - mask_ratio) * dim))
    order = np.argsort(rng.random((rows, dim)), axis=1)
    mask = np.zeros((rows, dim))
    np.put_along_axis(mask, order[:, :n_keep], 1.0, axis=1)
    return mask


def train_alignment(v, t, config: AlignTrainConfig) -> TrainResult:
    """Plain gradient descent on the symmetric contrastive loss of
    (v @ Wv, t @ Wt) with learnable log_tau."""
    mv, mt = _as_matrix(v), _as_matrix(t)
    if mv.ndim != 2 or mt.ndim != 2 or mv.shape[0] != mt.shape[0]:
        raise ShapeMismatch(f"paired batches disagree: {mv.shape} vs {mt.shape}")
    if mv.shape[0] < 2:
        raise DegenerateBatch("need at least 2 pairs to train")

    rng = np.random.default_rng(split_seed(config.seed, "align-init"))
    w_video = rng.standard_normal((mv.shape[1], config.proj_dim)) / math.sqrt(mv.shape[1])
    w_text = rng.standard_normal((mt.shape[1], config.proj_dim)) / math.sqrt(mt.shape[1])
    log_tau = math.log(DEFAULT_TAU)

    def unmasked_loss() -> float:
        return info_nce(mv @ w_video, mt @ w_text,
                        TemperatureParam(log_tau)).loss

    unmasked_start = config.steps * (1.0 - config.unmasked_tail_fraction)
    curve = [unmasked_loss()]
    for step in range(config.steps):
        batch_v = mv
        if config.mask_ratio > 0.0 and step < unmasked_start:
            step_rng = np.random.default_rng(
                split_seed(config.seed, "align-mask", str(step)))
            batch_v = mv * _dimension_mask(mv.shape[0], mv.shape[1],
                                           config.mask_ratio, step_rng)
        pv = batch_v @ w_video
        pt = mt @ w_text
        tau = TemperatureParam(log_tau)
        d_pv, d_pt, d_log_tau = info_nce_grad(pv, pt, tau)
        w_video -= config.learning_rate * (batch_v.T @ d_pv)
        w_text -= config.learning_rate * (mt.T @ d_pt)
        log_tau -= config.learning_rate * d_log_tau
        curve.append(unmasked_loss())
    return TrainResult(w_video, w_text, log_tau, curve)
