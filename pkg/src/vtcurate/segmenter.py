"""Scene-cut detection and clip interval emission.

Works on streams of per-frame signature vectors supplied by an external
extractor (e.g. downsampled color statistics, one value per channel in
[0, 255]).  The content metric is the mean absolute componentwise
difference between consecutive signatures, so it lives on the same
[0, 255] scale as the inputs and the default cut threshold of 27.0.

Everything here is pure and stateless: distinct videos segment in
parallel; one video's stream is scanned sequentially left to right.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyClip, EmptyStream, LengthMismatch

DEFAULT_CUT_THRESHOLD = 27.0


@dataclass(frozen=True)
class FrameSignature:
    """Fixed-length vector of reals in [0, 255] for one frame."""

    frame_index: int
    values: tuple[float, ...]

    def __post_init__(self):
        if self.frame_index < 0:
            raise ValueError("frame_index must be >= 0")
        if any(not (0.0 <= v <= 255.0) for v in self.values):
            raise ValueError("signature values must lie in [0, 255]")


@dataclass(frozen=True)
class SegmenterConfig:
    cut_threshold: float = DEFAULT_CUT_THRESHOLD
    min_scene_frames: int = 15
    min_clip_s: float = 2.0
    still_threshold: float = 1.0
    extreme_threshold: float = 80.0

    def __post_init__(self):
        if not (0.0 <= self.still_threshold < self.cut_threshold
                < self.extreme_threshold <= 255.0):
            raise ValueError(
                "thresholds must satisfy 0 <= still < cut < extreme <= 255")
        if self.min_scene_frames < 1:
            raise ValueError("min_scene_frames must be >= 1")


class Verdict(enum.Enum):
    KEEP = "keep"
    REJECT_STILL = "reject_still"
    REJECT_EXTREME = "reject_extreme"
    REJECT_SHORT = "reject_short"


@dataclass(frozen=True)
class Interval:
    start_s: float
    end_s: float
    verdict: Verdict


def content_delta(a: FrameSignature, b: FrameSignature) -> float:
    """Mean absolute componentwise difference; symmetric, in [0, 255]."""
    if len(a.values) != len(b.values):
        raise LengthMismatch(
            f"signature lengths differ: {len(a.values)} vs {len(b.values)}")
    va = np.asarray(a.values, dtype=np.float64)
    vb = np.asarray(b.values, dtype=np.float64)
    return float(np.mean(np.abs(va - vb)))


def detect_cuts(deltas: Sequence[float], config: SegmenterConfig) -> list[int]:
    """Single left-to-right scan for cut frames.

    ``deltas[i]`` is the content delta between frames i and i+1; a delta
    above ``cut_threshold`` proposes a cut at frame i+1 (the first frame of
    the new scene).  A proposed cut closer than ``min_scene_frames`` to the
    previously admitted cut is suppressed: the earlier cut wins.
    """
    cuts: list[int] = []
    for i, d in enumerate(deltas):
        if d > config.cut_threshold:
            cut = i + 1
            if not cuts or cut - cuts[-1] >= config.min_scene_frames:
                cuts.append(cut)
    return cuts


def classify_dynamics(clip_deltas: Sequence[float],
                      config: SegmenterConfig) -> Verdict:
    """Reject clips whose interior motion is still or extreme."""
    if len(clip_deltas) == 0:
        raise EmptyClip("no interior deltas for clip")
    mean = float(np.mean(np.asarray(clip_deltas, dtype=np.float64)))
    if mean < config.still_threshold:
        return Verdict.REJECT_STILL
    if mean > config.extreme_threshold:
        return Verdict.REJECT_EXTREME
    return Verdict.KEEP


def segment_video(signatures: Iterable[FrameSignature], fps: float,
                  config: SegmenterConfig | None = None) -> list[Interval]:
    """Partition a frame stream into verdict-carrying intervals.

    The returned intervals tile [0, n/fps) exactly: cut frames become
    boundaries, intervals shorter than ``min_clip_s`` are marked
    REJECT_SHORT, all others carry the dynamics verdict of their interior
    deltas.  Nothing is dropped silently.
    """
    if fps <= 0:
        raise ValueError("fps must be > 0")
    config = config or SegmenterConfig()
    deltas: list[float] = []
    prev: FrameSignature | None = None
    n = 0
    for sig in signatures:
        if prev is not None:
            deltas.append(content_delta(prev, sig))
        prev = sig
        n += 1
    if n == 0:
        raise EmptyStream("signature stream is empty")

    boundaries = [0] + detect_cuts(deltas, config) + [n]
    intervals: list[Interval] = []
    for lo, hi in zip(boundaries, boundaries[1:]):
        start_s = lo / fps
        end_s = hi / fps
        if end_s - start_s < config.min_clip_s:
            verdict = Verdict.REJECT_SHORT
        else:
            interior = deltas[lo:hi - 1]
            if not interior:
                # single-frame interval passing the duration gate: no motion
                verdict = Verdict.REJECT_STILL
            else:
                verdict = classify_dynamics(interior, config)
        intervals.append(Interval(start_s, end_s, verdict))
    return intervals
