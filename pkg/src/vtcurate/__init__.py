"""Deterministic video-text corpus curation engine."""

__version__ = "0.1.0"

from .manifest import (AsrSegment, ClipRecord, MultiscaleCaption, ScoreSet,
                       VideoRecord, make_clip_id, overlap_asr,
                       parse_manifest_line, serialize_record)
from .segmenter import (FrameSignature, SegmenterConfig, Verdict,
                        classify_dynamics, content_delta, detect_cuts,
                        segment_video)

__all__ = [
    "AsrSegment", "ClipRecord", "MultiscaleCaption", "ScoreSet",
    "VideoRecord", "make_clip_id", "overlap_asr", "parse_manifest_line",
    "serialize_record",
    "FrameSignature", "SegmenterConfig", "Verdict", "classify_dynamics",
    "content_delta", "detect_cuts", "segment_video",
]
