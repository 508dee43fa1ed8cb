"""Training-subset construction: uniform random, diversity-weighted (DIV),
and similarity-filtered (FLT) sampling.

Every sampler is a pure function of (input set, n, seed, params).  Draws
are keyed per clip by hashing (seed, clip_id) — see
:mod:`vtcurate.seeding` — so selection is independent of input order and
stable across parallel shards.  Without-replacement weighted sampling uses
the exponential-race method: each clip gets key -ln(u)/w and the n
smallest keys win, which realizes selection probabilities proportional to
the weights.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import (EmptyInput, MissingScore, MissingVideo,
                     NonpositiveDuration)
from .manifest import ClipRecord
from .seeding import unit_fraction


class Strategy(enum.Enum):
    RANDOM = "random"
    DIV = "div"
    FLT = "flt"


DEFAULT_TOP_FRACTION = 0.30


@dataclass(frozen=True)
class SubsetSpec:
    strategy: Strategy
    n: int
    seed: int
    top_fraction: float = DEFAULT_TOP_FRACTION

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("n must be >= 0")
        if not (0.0 < self.top_fraction <= 1.0):
            raise ValueError("top_fraction must lie in (0, 1]")


def _by_clip_id(clips) -> list[ClipRecord]:
    return sorted(clips, key=lambda c: c.clip_id)


def sample_random(clips: Sequence[ClipRecord], n: int, seed: int) -> list[ClipRecord]:
    """Uniform sample without replacement; all clips when n >= |clips|."""
    if n <= 0:
        return []
    if n >= len(clips):
        return _by_clip_id(clips)
    keyed = sorted(clips, key=lambda c: unit_fraction(seed, "random", c.clip_id))
    return _by_clip_id(keyed[:n])


def div_weights(clips: Sequence[ClipRecord],
                videos: Mapping[str, float]) -> dict[str, float]:
    """Weight each clip by the reciprocal of its source video's duration,
    so clips from longer videos are proportionally less likely."""
    weights: dict[str, float] = {}
    for clip in clips:
        duration = videos.get(clip.video_id)
        if duration is None:
            raise MissingVideo(f"clip {clip.clip_id}: video {clip.video_id} "
                               "not in duration map")
        if duration <= 0:
            raise NonpositiveDuration(
                f"video {clip.video_id}: duration {duration}")
        weights[clip.clip_id] = 1.0 / duration
    return weights


def sample_div(clips: Sequence[ClipRecord], n: int, seed: int,
               videos: Mapping[str, float]) -> list[ClipRecord]:
    """Two-phase diversity sampling.

    Phase 1 covers distinct source videos first: videos are visited in an
    order randomized by the seed, and each contributes the clip nearest
    its temporal middle (ties to the earlier clip).  Phase 2 fills the
    remaining budget by weighted sampling without replacement over the
    leftover clips, weight 1/duration via :func:`div_weights`.
    """
    weights = div_weights(clips, videos)
    if n <= 0:
        return []

    by_video: dict[str, list[ClipRecord]] = {}
    for clip in clips:
        by_video.setdefault(clip.video_id, []).append(clip)

    video_order = sorted(by_video,
                         key=lambda vid: unit_fraction(seed, "div-video", vid))
    selected: list[ClipRecord] = []
    chosen_ids: set[str] = set()
    for vid in video_order:
        if len(selected) >= n:
            break
        middle = videos[vid] / 2.0
        rep = min(by_video[vid],
                  key=lambda c: (abs((c.start_s + c.end_s) / 2.0 - middle),
                                 c.start_s))
        selected.append(rep)
        chosen_ids.add(rep.clip_id)

    remaining = n - len(selected)
    if remaining > 0:
        pool = [c for c in clips if c.clip_id not in chosen_ids]
        pool.sort(key=lambda c: -math.log(unit_fraction(seed, "div-race", c.clip_id))
                  / weights[c.clip_id])
        selected.extend(pool[:remaining])
    return _by_clip_id(selected)


def quantile_threshold(scores: Sequence[float], top_fraction: float) -> float:
    """Smallest score keeping at least ceil(top_fraction * N) values at or
    above it, with that kept count minimal; callers include all ties."""
    if len(scores) == 0:
        raise EmptyInput("no scores")
    if not (0.0 < top_fraction <= 1.0):
        raise ValueError("top_fraction must lie in (0, 1]")
    product = top_fraction * len(scores)
    nearest = round(product)
    m = nearest if abs(product - nearest) < 1e-9 else math.ceil(product)
    m = max(1, m)
    return sorted(scores, reverse=True)[m - 1]


def sample_flt(clips: Sequence[ClipRecord], n: int, seed: int,
               videos: Mapping[str, float],
               top_fraction: float = DEFAULT_TOP_FRACTION) -> list[ClipRecord]:
    """DIV sampling restricted to clips whose similarity score ranks in the
    top fraction; the filter is hard — no below-threshold clip can appear
    even when the budget exceeds the filtered pool."""
    for clip in clips:
        if clip.scores is None:
            raise MissingScore(f"clip {clip.clip_id} has no scores")
    threshold = quantile_threshold([c.scores.umt_sim for c in clips], top_fraction)
    pool = [c for c in clips if c.scores.umt_sim >= threshold]
    return sample_div(pool, n, seed, videos)
