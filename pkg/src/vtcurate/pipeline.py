"""Stage cores for the pipeline: each takes parsed records plus stage
parameters and returns the new records or artifact content.  Stages never
mutate their inputs, so any stage can run against a hand-built manifest.
"""

from __future__ import annotations

from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .captioning import (CaptionPlan, CaptionServices, apply_caption,
                         caption_clip, frame_refs)
from .errors import ValidationFailed
from .interleave import (InterleavedSequence, SequenceFormat, build_format_a,
                         build_format_b, build_format_c, sequence_to_line)
from .manifest import (ClipRecord, Record, VideoRecord, collection_violations,
                       make_clip_id, ms_round, with_asr_text)
from .sampling import Strategy, SubsetSpec, sample_div, sample_flt, sample_random
from .scoring import score_clip
from .segmenter import FrameSignature, SegmenterConfig, Verdict, segment_video
from .stats import corpus_report


def split_records(records: Iterable[Record]):
    videos: list[VideoRecord] = []
    clips: list[ClipRecord] = []
    for r in records:
        (videos if isinstance(r, VideoRecord) else clips).append(r)
    return videos, clips


def clips_for_video(video: VideoRecord, frames: np.ndarray,
                    config: SegmenterConfig) -> list[ClipRecord]:
    """Kept clips of one video, times quantized to the millisecond grid,
    transcripts attached."""
    signatures = (FrameSignature(i, tuple(row)) for i, row in enumerate(frames))
    clips = []
    for interval in segment_video(signatures, video.fps, config):
        if interval.verdict is not Verdict.KEEP:
            continue
        start = ms_round(interval.start_s)
        end = ms_round(min(interval.end_s, video.duration_s))
        clip = ClipRecord(
            clip_id=make_clip_id(video.video_id, start),
            video_id=video.video_id,
            start_s=start,
            end_s=end,
        )
        clips.append(with_asr_text(clip, video))
    return clips


def segment_stage(records: Sequence[Record],
                  read_stream: Callable[[str], tuple[float, np.ndarray]],
                  config: SegmenterConfig,
                  collection_gate: bool = False) -> list[Record]:
    """Video manifest in, video+clip manifest out."""
    videos, clips = split_records(records)
    if clips:
        raise ValidationFailed("segment expects a manifest of video records",
                               offenders=[c.clip_id for c in clips[:10]])
    if collection_gate:
        videos = [v for v in videos if not collection_violations(v)]
    videos = sorted(videos, key=lambda v: v.video_id)
    out: list[Record] = list(videos)
    new_clips: list[ClipRecord] = []
    for video in videos:
        fps, frames = read_stream(video.video_id)
        if abs(fps - video.fps) > 1e-9:
            raise ValidationFailed(
                f"signature stream fps {fps} disagrees with manifest fps "
                f"{video.fps} for video {video.video_id}")
        new_clips.extend(clips_for_video(video, frames, config))
    out.extend(sorted(new_clips, key=lambda c: c.clip_id))
    return out


def caption_stage(records: Sequence[Record], services: CaptionServices,
                  plan: CaptionPlan) -> list[Record]:
    videos, clips = split_records(records)
    by_id = {v.video_id: v for v in videos}
    missing = [c.clip_id for c in clips if c.video_id not in by_id]
    if missing:
        raise ValidationFailed("clips reference videos absent from manifest",
                               offenders=missing[:10])
    out: list[Record] = list(videos)
    for clip in clips:
        video = by_id[clip.video_id]
        first = round(clip.start_s * video.fps)
        n = round(clip.end_s * video.fps) - first
        refs = frame_refs(clip.video_id, first, max(1, n))
        ms = caption_clip(clip, refs, services, plan, video.fps)
        out.append(apply_caption(clip, ms, plan))
    return out


def score_stage(records: Sequence[Record],
                features: Mapping[str, dict]) -> list[Record]:
    from dataclasses import replace

    videos, clips = split_records(records)
    missing = [c.clip_id for c in clips if c.clip_id not in features]
    if missing:
        raise ValidationFailed("feature sidecar is missing clips",
                               offenders=missing[:10])
    out: list[Record] = list(videos)
    for clip in clips:
        entry = features[clip.clip_id]
        scores = score_clip(entry["frame_scores"], entry["frame_embeddings"],
                            entry["text_embedding"])
        out.append(replace(clip, scores=scores))
    return out


def sample_stage(records: Sequence[Record], spec: SubsetSpec) -> list[Record]:
    """Subset manifest: the sampled clips plus their parent videos."""
    videos, clips = split_records(records)
    durations = {v.video_id: v.duration_s for v in videos}
    if spec.strategy is Strategy.RANDOM:
        subset = sample_random(clips, spec.n, spec.seed)
    elif spec.strategy is Strategy.DIV:
        subset = sample_div(clips, spec.n, spec.seed, durations)
    else:
        subset = sample_flt(clips, spec.n, spec.seed, durations,
                            spec.top_fraction)
    kept_videos = {c.video_id for c in subset}
    out: list[Record] = [v for v in sorted(videos, key=lambda v: v.video_id)
                         if v.video_id in kept_videos]
    out.extend(subset)
    return out


def interleave_stage(records: Sequence[Record], fmt: SequenceFormat,
                     drop_prob: float, seed: int) -> list[str]:
    """One serialized sequence per line.

    Formats A and B give one sequence per video; format C pairs adjacent
    videos in id order (an odd leftover video is skipped).
    """
    _, clips = split_records(records)
    by_video: dict[str, list[ClipRecord]] = {}
    for clip in clips:
        by_video.setdefault(clip.video_id, []).append(clip)
    ordered_ids = sorted(by_video)
    sequences: list[InterleavedSequence] = []
    if fmt is SequenceFormat.B:
        sequences = [build_format_b(by_video[vid], drop_prob, seed)
                     for vid in ordered_ids]
    else:
        items = [build_format_a(by_video[vid], drop_prob, seed)
                 for vid in ordered_ids]
        if fmt is SequenceFormat.A:
            sequences = items
        else:
            for first, second in zip(items[::2], items[1::2]):
                sequences.append(build_format_c(first, second))
    return [sequence_to_line(s) for s in sequences]


def stats_stage(records: Sequence[Record], tagger=None) -> dict:
    return corpus_report(records, tagger)
