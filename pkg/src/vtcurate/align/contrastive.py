"""Symmetric contrastive loss over embedding batches.

The loss treats matched (video, text) pairs as positives against all
in-batch negatives.  With S[i][j] the cosine between video row i and text
row j and temperature tau:

    loss_v2t = -(1/N) sum_i log( exp(S[i][i]/tau) / sum_j exp(S[i][j]/tau) )

loss_t2v is the same over columns, and the reported loss is their mean.
Log-sum-exp uses max subtraction, which also makes the N=1 loss exactly
zero and the uniform-similarity N=2 loss exactly ln 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ..errors import ShapeMismatch, ZeroRow

DEFAULT_TAU = 0.07


@dataclass(frozen=True)
class TemperatureParam:
    """Temperature stored as log_tau so tau stays positive by construction."""

    log_tau: float = math.log(DEFAULT_TAU)

    @property
    def tau(self) -> float:
        return math.exp(self.log_tau)

    @classmethod
    def from_tau(cls, tau: float) -> "TemperatureParam":
        if tau <= 0:
            raise ValueError("tau must be > 0")
        return cls(log_tau=math.log(tau))


class EmbeddingBatch:
    """Validated N x D matrix of finite rows."""

    def __init__(self, data):
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ShapeMismatch(f"embedding batch must be 2-D non-empty, "
                                f"got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("embedding batch entries must be finite")
        self.data = arr

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]


class InfoNceLosses(NamedTuple):
    loss: float
    loss_v2t: float
    loss_t2v: float


def _as_matrix(x) -> np.ndarray:
    if isinstance(x, EmbeddingBatch):
        return x.data
    return np.asarray(x, dtype=np.float64)


def _normalized_rows(x: np.ndarray, name: str) -> tuple[np.ndarray, np.ndarray]:
    norms = np.linalg.norm(x, axis=1)
    if np.any(norms == 0.0):
        raise ZeroRow(f"{name} contains an all-zero row")
    return x / norms[:, None], norms


def _paired(v, t) -> tuple[np.ndarray, np.ndarray]:
    mv, mt = _as_matrix(v), _as_matrix(t)
    if mv.ndim != 2 or mt.ndim != 2 or mv.shape != mt.shape:
        raise ShapeMismatch(f"paired batches must share shape, "
                            f"got {mv.shape} vs {mt.shape}")
    return mv, mt


def _logsumexp_rows(logits: np.ndarray) -> np.ndarray:
    m = logits.max(axis=1)
    return m + np.log(np.exp(logits - m[:, None]).sum(axis=1))


def info_nce(v, t, tau: TemperatureParam) -> InfoNceLosses:
    """Symmetric contrastive loss; row i of v pairs with row i of t."""
    mv, mt = _paired(v, t)
    vn, _ = _normalized_rows(mv, "v")
    tn, _ = _normalized_rows(mt, "t")
    logits = (vn @ tn.T) / tau.tau
    diag = np.diag(logits)
    loss_v2t = float(np.mean(_logsumexp_rows(logits) - diag))
    loss_t2v = float(np.mean(_logsumexp_rows(logits.T) - diag))
    return InfoNceLosses((loss_v2t + loss_t2v) / 2.0, loss_v2t, loss_t2v)


def info_nce_grad(v, t, tau: TemperatureParam):
    """Analytic gradients of the symmetric loss.

    Returns (dL/dv, dL/dt, dL/dlog_tau).  The chain rule runs through the
    row normalization, so gradients are orthogonal to their own row
    direction (cosine scale invariance).
    """
    mv, mt = _paired(v, t)
    vn, v_norms = _normalized_rows(mv, "v")
    tn, t_norms = _normalized_rows(mt, "t")
    n = mv.shape[0]
    logits = (vn @ tn.T) / tau.tau

    p = np.exp(logits - _logsumexp_rows(logits)[:, None])        # row softmax
    q = np.exp(logits.T - _logsumexp_rows(logits.T)[:, None]).T  # column softmax
    g = (p + q - 2.0 * np.eye(n)) / (2.0 * n)                    # dloss/dlogits

    d_log_tau = float(-(g * logits).sum())
    d_vn = (g @ tn) / tau.tau
    d_tn = (g.T @ vn) / tau.tau
    dv = (d_vn - (d_vn * vn).sum(axis=1, keepdims=True) * vn) / v_norms[:, None]
    dt = (d_tn - (d_tn * tn).sum(axis=1, keepdims=True) * tn) / t_norms[:, None]
    return dv, dt, d_log_tau
