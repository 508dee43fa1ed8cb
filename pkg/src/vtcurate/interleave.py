"""Interleaved video-text sequences for in-context training.

Three layouts over one video's temporally ordered clips:

* format A — each clip's video reference followed by its caption, with the
  reference (never the text) independently dropped at ``drop_prob`` to
  enrich the text context;
* format B — format A plus each clip's transcript text right after its
  caption, when non-empty;
* format C — two format-A items from different videos concatenated into a
  two-video sequence.

Drop draws are keyed by (seed, clip_id), not list position, so editing the
clip list never reshuffles the surviving references, and formats A and B
agree on drops under equal seeds.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Sequence, Union

from .errors import EmptyClipList, MixedVideos, SameVideo, WrongInputFormat
from .manifest import ClipRecord
from .seeding import unit_fraction

DEFAULT_DROP_PROB = 0.3


class TextKind(enum.Enum):
    CAPTION = "caption"
    ASR = "asr"


class SequenceFormat(enum.Enum):
    A = "a"
    B = "b"
    C = "c"


@dataclass(frozen=True)
class VideoRef:
    clip_id: str


@dataclass(frozen=True)
class Text:
    text: str
    kind: TextKind


Element = Union[VideoRef, Text]


@dataclass(frozen=True)
class InterleavedSequence:
    elements: tuple[Element, ...]
    source_video_ids: tuple[str, ...]
    format: SequenceFormat
    seed: int


def _ordered_clips(clips: Sequence[ClipRecord]) -> list[ClipRecord]:
    if not clips:
        raise EmptyClipList("no clips to interleave")
    video_ids = {c.video_id for c in clips}
    if len(video_ids) > 1:
        raise MixedVideos(f"clips span videos {sorted(video_ids)}")
    return sorted(clips, key=lambda c: c.start_s)


def keep_video_ref(clip_id: str, drop_prob: float, seed: int) -> bool:
    """Independent per-clip draw; the reference survives with probability
    1 - drop_prob."""
    return unit_fraction(seed, "interleave-drop", clip_id) >= drop_prob


def _build(clips: Sequence[ClipRecord], drop_prob: float, seed: int,
           with_asr: bool) -> InterleavedSequence:
    if not (0.0 <= drop_prob <= 1.0):
        raise ValueError("drop_prob must lie in [0, 1]")
    ordered = _ordered_clips(clips)
    elements: list[Element] = []
    for clip in ordered:
        if keep_video_ref(clip.clip_id, drop_prob, seed):
            elements.append(VideoRef(clip.clip_id))
        elements.append(Text(clip.caption, TextKind.CAPTION))
        if with_asr and clip.asr_text:
            elements.append(Text(clip.asr_text, TextKind.ASR))
    return InterleavedSequence(
        elements=tuple(elements),
        source_video_ids=(ordered[0].video_id,),
        format=SequenceFormat.B if with_asr else SequenceFormat.A,
        seed=seed,
    )


def build_format_a(clips: Sequence[ClipRecord],
                   drop_prob: float = DEFAULT_DROP_PROB,
                   seed: int = 0) -> InterleavedSequence:
    """Clips and captions in temporal order; every caption is emitted, each
    video reference survives an independent seeded draw."""
    return _build(clips, drop_prob, seed, with_asr=False)


def build_format_b(clips: Sequence[ClipRecord],
                   drop_prob: float = DEFAULT_DROP_PROB,
                   seed: int = 0) -> InterleavedSequence:
    """Format A with each clip's transcript appended after its caption;
    drop decisions are identical to format A under the same seed."""
    return _build(clips, drop_prob, seed, with_asr=True)


def build_format_c(item1: InterleavedSequence,
                   item2: InterleavedSequence) -> InterleavedSequence:
    """Concatenate two format-A items from different videos into one
    two-video sequence; the seed of the first item carries over."""
    for item in (item1, item2):
        if item.format is not SequenceFormat.A:
            raise WrongInputFormat(f"format C needs format-A inputs, "
                                   f"got {item.format.value}")
    if set(item1.source_video_ids) & set(item2.source_video_ids):
        raise SameVideo("format C requires items from different videos")
    return InterleavedSequence(
        elements=item1.elements + item2.elements,
        source_video_ids=item1.source_video_ids + item2.source_video_ids,
        format=SequenceFormat.C,
        seed=item1.seed,
    )


# --- line serialization -------------------------------------------------------

def sequence_to_line(seq: InterleavedSequence) -> str:
    """One sequence per line: tagged elements, texts quoted, machine-parseable.

    The format is not written out — it is recoverable from the content
    (two source videos means C, any transcript element means B, else A) —
    so a format-B sequence whose clips have no transcripts serializes
    byte-identically to its format-A counterpart.
    """
    elements = []
    for el in seq.elements:
        if isinstance(el, VideoRef):
            elements.append(["video", el.clip_id])
        else:
            elements.append([el.kind.value, el.text])
    return json.dumps({
        "source_video_ids": list(seq.source_video_ids),
        "seed": seq.seed,
        "elements": elements,
    }, ensure_ascii=False, separators=(",", ":"))


def _infer_format(elements: Sequence[Element], n_videos: int) -> SequenceFormat:
    if n_videos == 2:
        return SequenceFormat.C
    if any(isinstance(el, Text) and el.kind is TextKind.ASR for el in elements):
        return SequenceFormat.B
    return SequenceFormat.A


def sequence_from_line(line: str) -> InterleavedSequence:
    obj = json.loads(line)
    elements: list[Element] = []
    for tag, value in obj["elements"]:
        if tag == "video":
            elements.append(VideoRef(value))
        else:
            elements.append(Text(value, TextKind(tag)))
    return InterleavedSequence(
        elements=tuple(elements),
        source_video_ids=tuple(obj["source_video_ids"]),
        format=_infer_format(elements, len(obj["source_video_ids"])),
        seed=obj["seed"],
    )
