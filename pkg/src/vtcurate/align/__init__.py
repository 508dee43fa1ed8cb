"""Desk-scale numerics for contrastive video-text alignment."""

from .contrastive import (DEFAULT_TAU, EmbeddingBatch, InfoNceLosses,
                          TemperatureParam, info_nce, info_nce_grad)
from .attention import (TokenLayout, attention, attention_weights,
                        generate_patch_mask, spatiotemporal_attention, st_attn)
from .metrics import avg_top1_top5, recall_at_k, topk_accuracy
from .train import AlignTrainConfig, TrainResult, train_alignment

__all__ = [
    "DEFAULT_TAU", "EmbeddingBatch", "InfoNceLosses", "TemperatureParam",
    "info_nce", "info_nce_grad",
    "TokenLayout", "attention", "attention_weights", "generate_patch_mask",
    "spatiotemporal_attention", "st_attn",
    "avg_top1_top5", "recall_at_k", "topk_accuracy",
    "AlignTrainConfig", "TrainResult", "train_alignment",
]
