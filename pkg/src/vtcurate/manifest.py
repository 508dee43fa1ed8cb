"""Domain records and the line-delimited manifest format.

A manifest is UTF-8 text, LF line endings, one JSON object per line.  The
first line is a header record ``{"type":"header","schema_version":1}``;
every following line is a video or clip record.  Records are immutable
values; parsing and serialization are pure functions safe to call from any
number of workers.

Canonical serialization rules (what :func:`serialize_record` emits and what
byte-exact round-trips are guaranteed for):

* known fields in the documented order below, optional fields omitted when
  empty or absent;
* all time fields (``duration_s``, ``start_s``, ``end_s``, ASR segment
  bounds) as decimals with exactly three fractional digits (millisecond
  precision);
* every other number in shortest round-trip decimal form;
* compact separators, no ASCII escaping of non-ASCII text;
* unknown fields preserved after the known ones, in their original order,
  re-encoded with the same compact JSON conventions.

Field order, video records::

    type, video_id, duration_s, fps, resolution, category, language, title,
    asr_segments

Field order, clip records (matches stage enrichment order, so each stage
only appends)::

    type, clip_id, video_id, start_s, end_s, asr_text, caption, multiscale,
    scores
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Union

from .errors import InvalidRecord, MalformedLine, ValidationFailed

SCHEMA_VERSION = 1

# Collection gate bounds: videos are admitted when their duration lies in
# [10 s, 30 min] and their vertical resolution in [360, 720] pixels.
COLLECT_MIN_DURATION_S = 10.0
COLLECT_MAX_DURATION_S = 1800.0
COLLECT_MIN_HEIGHT = 360
COLLECT_MAX_HEIGHT = 720

_TIME_GRID_TOL = 1e-6


def ms_round(seconds: float) -> float:
    """Quantize a time to the millisecond grid used by the manifest."""
    return round(seconds * 1000.0) / 1000.0


def _on_ms_grid(seconds: float) -> bool:
    return abs(seconds * 1000.0 - round(seconds * 1000.0)) <= _TIME_GRID_TOL


def make_clip_id(video_id: str, start_s: float) -> str:
    """Deterministic clip id: equal (video_id, start_s) yield equal ids
    across processes. Fixed-width milliseconds keep ids of one video in
    temporal order under lexicographic sort."""
    return f"{video_id}:{round(start_s * 1000.0):010d}"


@dataclass(frozen=True)
class AsrSegment:
    start_s: float
    end_s: float
    text: str


@dataclass(frozen=True)
class MultiscaleCaption:
    """Captions at both scales: per-frame fine captions plus their summary,
    and a single caption of the middle frame."""

    fine_frame_captions: tuple[tuple[int, str], ...] = ()
    fine_summary: str = ""
    coarse_caption: str = ""

    def violations(self) -> list[str]:
        out = []
        indices = [i for i, _ in self.fine_frame_captions]
        if any(b <= a for a, b in zip(indices, indices[1:])):
            out.append("fine frame indices not strictly increasing")
        if bool(self.fine_summary) != bool(self.fine_frame_captions):
            out.append("fine_summary must be empty iff fine_frame_captions is empty")
        return out


@dataclass(frozen=True)
class ScoreSet:
    """Computed per-clip features: aesthetic score and video-text cosine."""

    aesthetic: float
    umt_sim: float

    def violations(self) -> list[str]:
        out = []
        if not math.isfinite(self.aesthetic):
            out.append("aesthetic not finite")
        if not math.isfinite(self.umt_sim) or abs(self.umt_sim) > 1.0 + 1e-9:
            out.append("umt_sim outside [-1, 1]")
        return out


@dataclass(frozen=True)
class VideoRecord:
    video_id: str
    duration_s: float
    fps: float
    resolution: tuple[int, int]  # (width, height)
    category: str = ""
    language: str = ""
    title: str = ""
    asr_segments: tuple[AsrSegment, ...] = ()
    extra: tuple[tuple[str, object], ...] = field(default=(), compare=True)

    def violations(self) -> list[str]:
        out = []
        if not self.video_id:
            out.append("video_id empty")
        if not (math.isfinite(self.duration_s) and self.duration_s > 0):
            out.append("duration_s must be > 0")
        if not (math.isfinite(self.fps) and self.fps > 0):
            out.append("fps must be > 0")
        w, h = self.resolution
        if w <= 0 or h <= 0:
            out.append("resolution must be positive")
        if not _on_ms_grid(self.duration_s):
            out.append("duration_s not millisecond-quantized")
        prev = -math.inf
        for seg in self.asr_segments:
            if seg.start_s < prev:
                out.append("asr_segments not ordered by start_s")
                break
            prev = seg.start_s
        for seg in self.asr_segments:
            if not (seg.start_s < seg.end_s):
                out.append("asr segment interval ordering")
                break
        if any(seg.end_s > self.duration_s + 1e-9 for seg in self.asr_segments):
            out.append("asr segment exceeds video duration")
        if any(not (_on_ms_grid(s.start_s) and _on_ms_grid(s.end_s))
               for s in self.asr_segments):
            out.append("asr segment times not millisecond-quantized")
        return out


@dataclass(frozen=True)
class ClipRecord:
    """One segmented clip; the unit flowing through every pipeline stage.

    ``caption`` and ``asr_text`` use empty string for "absent";
    ``multiscale`` and ``scores`` use None.
    """

    clip_id: str
    video_id: str
    start_s: float
    end_s: float
    asr_text: str = ""
    caption: str = ""
    multiscale: MultiscaleCaption | None = None
    scores: ScoreSet | None = None
    extra: tuple[tuple[str, object], ...] = field(default=(), compare=True)

    def violations(self) -> list[str]:
        out = []
        if not self.clip_id:
            out.append("clip_id empty")
        if not self.video_id:
            out.append("video_id empty")
        if not (math.isfinite(self.start_s) and math.isfinite(self.end_s)):
            out.append("interval not finite")
        elif not (0.0 <= self.start_s < self.end_s):
            out.append("interval ordering")
        if math.isfinite(self.start_s) and math.isfinite(self.end_s):
            if not (_on_ms_grid(self.start_s) and _on_ms_grid(self.end_s)):
                out.append("times not millisecond-quantized")
        if self.clip_id and self.video_id and math.isfinite(self.start_s):
            if self.clip_id != make_clip_id(self.video_id, self.start_s):
                out.append("clip_id inconsistent with (video_id, start_s)")
        if self.multiscale is not None:
            out.extend(self.multiscale.violations())
        if self.scores is not None:
            out.extend(self.scores.violations())
        return out


Record = Union[VideoRecord, ClipRecord]


def collection_violations(video: VideoRecord) -> list[str]:
    """Collection-gate checks (applied only when gating is enabled):
    duration within [10 s, 30 min], height within [360, 720] pixels."""
    out = []
    if not (COLLECT_MIN_DURATION_S <= video.duration_s <= COLLECT_MAX_DURATION_S):
        out.append("duration outside collection bounds [10s, 1800s]")
    height = video.resolution[1]
    if not (COLLECT_MIN_HEIGHT <= height <= COLLECT_MAX_HEIGHT):
        out.append("resolution outside collection bounds [360p, 720p]")
    return out


def check_clip_disjointness(clips: Iterable[ClipRecord]) -> list[str]:
    """Verify pairwise-disjoint intervals per video in O(n log n)."""
    by_video: dict[str, list[ClipRecord]] = {}
    for c in clips:
        by_video.setdefault(c.video_id, []).append(c)
    out = []
    for vid, group in by_video.items():
        group.sort(key=lambda c: c.start_s)
        for a, b in zip(group, group[1:]):
            if b.start_s < a.end_s - 1e-9:
                out.append(f"overlapping clips in video {vid}: "
                           f"{a.clip_id} and {b.clip_id}")
    return out


# --- ASR overlap -------------------------------------------------------------

def overlap_asr(clip: ClipRecord, segments: Iterable[AsrSegment]) -> str:
    """Concatenate (single-space joined) texts of all segments intersecting
    [start_s, end_s) with positive measure, in temporal order.  Touching
    endpoints do not count as overlap."""
    texts = [seg.text for seg in segments
             if max(seg.start_s, clip.start_s) < min(seg.end_s, clip.end_s)]
    return " ".join(texts)


# --- serialization ------------------------------------------------------------

def _fmt_time(x: float) -> str:
    return f"{x:.3f}"


def _fmt_json(value: object) -> str:
    return json.dumps(value, ensure_ascii=False, separators=(",", ":"))


def _fmt_str(s: str) -> str:
    return json.dumps(s, ensure_ascii=False)


def serialize_record(record: Record) -> str:
    """Serialize one record to its canonical single-line form.

    Deterministic: two calls on equal records produce identical bytes, and
    ``parse_manifest_line(serialize_record(r)) == r`` for any valid record.
    """
    bad = record.violations()
    if bad:
        raise InvalidRecord(bad)
    parts: list[str] = []
    if isinstance(record, VideoRecord):
        parts.append('"type":"video"')
        parts.append(f'"video_id":{_fmt_str(record.video_id)}')
        parts.append(f'"duration_s":{_fmt_time(record.duration_s)}')
        parts.append(f'"fps":{_fmt_json(float(record.fps))}')
        parts.append(f'"resolution":[{record.resolution[0]},{record.resolution[1]}]')
        parts.append(f'"category":{_fmt_str(record.category)}')
        parts.append(f'"language":{_fmt_str(record.language)}')
        parts.append(f'"title":{_fmt_str(record.title)}')
        segs = ",".join(
            f"[{_fmt_time(s.start_s)},{_fmt_time(s.end_s)},{_fmt_str(s.text)}]"
            for s in record.asr_segments)
        parts.append(f'"asr_segments":[{segs}]')
    else:
        parts.append('"type":"clip"')
        parts.append(f'"clip_id":{_fmt_str(record.clip_id)}')
        parts.append(f'"video_id":{_fmt_str(record.video_id)}')
        parts.append(f'"start_s":{_fmt_time(record.start_s)}')
        parts.append(f'"end_s":{_fmt_time(record.end_s)}')
        if record.asr_text:
            parts.append(f'"asr_text":{_fmt_str(record.asr_text)}')
        if record.caption:
            parts.append(f'"caption":{_fmt_str(record.caption)}')
        if record.multiscale is not None:
            ms = record.multiscale
            fine = ",".join(f"[{i},{_fmt_str(t)}]" for i, t in ms.fine_frame_captions)
            parts.append('"multiscale":{'
                         f'"fine_frame_captions":[{fine}],'
                         f'"fine_summary":{_fmt_str(ms.fine_summary)},'
                         f'"coarse_caption":{_fmt_str(ms.coarse_caption)}'
                         "}")
        if record.scores is not None:
            parts.append('"scores":{'
                         f'"aesthetic":{_fmt_json(float(record.scores.aesthetic))},'
                         f'"umt_sim":{_fmt_json(float(record.scores.umt_sim))}'
                         "}")
    for key, value in record.extra:
        parts.append(f"{_fmt_str(key)}:{_fmt_json(value)}")
    return "{" + ",".join(parts) + "}"


_VIDEO_KEYS = ("type", "video_id", "duration_s", "fps", "resolution",
               "category", "language", "title", "asr_segments")
_CLIP_KEYS = ("type", "clip_id", "video_id", "start_s", "end_s",
              "asr_text", "caption", "multiscale", "scores")


def _as_float(obj: dict, key: str, problems: list[str]) -> float:
    v = obj.get(key)
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        problems.append(f"{key} missing or not a number")
        return math.nan
    return float(v)


def _as_str(obj: dict, key: str, problems: list[str], required: bool = True) -> str:
    v = obj.get(key, "")
    if not isinstance(v, str):
        problems.append(f"{key} not a string")
        return ""
    if required and not v:
        problems.append(f"{key} missing or empty")
    return v


def parse_manifest_line(line: str) -> Record:
    """Parse one manifest line into a validated record.

    Raises :class:`MalformedLine` when the line is not one JSON object with a
    known type, :class:`InvalidRecord` (listing every violated invariant)
    when it parses but fails validation.
    """
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as e:
        raise MalformedLine(f"not valid JSON: {e}") from None
    if not isinstance(obj, dict):
        raise MalformedLine("manifest line is not a JSON object")
    kind = obj.get("type")
    if kind == "video":
        return _parse_video(obj)
    if kind == "clip":
        return _parse_clip(obj)
    if kind == "header":
        raise MalformedLine("header record is not a data record")
    raise MalformedLine(f"unknown record type: {kind!r}")


def _parse_video(obj: dict) -> VideoRecord:
    problems: list[str] = []
    video_id = _as_str(obj, "video_id", problems)
    duration = _as_float(obj, "duration_s", problems)
    fps = _as_float(obj, "fps", problems)
    res = obj.get("resolution")
    if (not isinstance(res, list) or len(res) != 2
            or not all(isinstance(x, int) and not isinstance(x, bool) for x in res)):
        problems.append("resolution must be [width, height] integers")
        res = [0, 0]
    segs: list[AsrSegment] = []
    raw_segs = obj.get("asr_segments", [])
    if not isinstance(raw_segs, list):
        problems.append("asr_segments must be a list")
        raw_segs = []
    for i, seg in enumerate(raw_segs):
        if (not isinstance(seg, list) or len(seg) != 3
                or not all(isinstance(seg[j], (int, float)) for j in (0, 1))
                or not isinstance(seg[2], str)):
            problems.append(f"asr_segments[{i}] must be [start_s, end_s, text]")
            continue
        segs.append(AsrSegment(float(seg[0]), float(seg[1]), seg[2]))
    if problems:
        raise InvalidRecord(problems)
    rec = VideoRecord(
        video_id=video_id,
        duration_s=duration,
        fps=fps,
        resolution=(res[0], res[1]),
        category=_as_str(obj, "category", problems, required=False),
        language=_as_str(obj, "language", problems, required=False),
        title=_as_str(obj, "title", problems, required=False),
        asr_segments=tuple(segs),
        extra=tuple((k, v) for k, v in obj.items() if k not in _VIDEO_KEYS),
    )
    bad = rec.violations()
    if bad:
        raise InvalidRecord(bad)
    return rec


def _parse_clip(obj: dict) -> ClipRecord:
    problems: list[str] = []
    clip_id = _as_str(obj, "clip_id", problems)
    video_id = _as_str(obj, "video_id", problems)
    start_s = _as_float(obj, "start_s", problems)
    end_s = _as_float(obj, "end_s", problems)
    multiscale = None
    raw_ms = obj.get("multiscale")
    if raw_ms is not None:
        if not isinstance(raw_ms, dict):
            problems.append("multiscale must be an object")
        else:
            fine: list[tuple[int, str]] = []
            for i, item in enumerate(raw_ms.get("fine_frame_captions", [])):
                if (not isinstance(item, list) or len(item) != 2
                        or not isinstance(item[0], int) or not isinstance(item[1], str)):
                    problems.append(f"multiscale.fine_frame_captions[{i}] malformed")
                    continue
                fine.append((item[0], item[1]))
            multiscale = MultiscaleCaption(
                fine_frame_captions=tuple(fine),
                fine_summary=str(raw_ms.get("fine_summary", "")),
                coarse_caption=str(raw_ms.get("coarse_caption", "")),
            )
    scores = None
    raw_scores = obj.get("scores")
    if raw_scores is not None:
        if not isinstance(raw_scores, dict):
            problems.append("scores must be an object")
        else:
            scores = ScoreSet(
                aesthetic=_as_float(raw_scores, "aesthetic", problems),
                umt_sim=_as_float(raw_scores, "umt_sim", problems),
            )
    if problems:
        raise InvalidRecord(problems)
    rec = ClipRecord(
        clip_id=clip_id,
        video_id=video_id,
        start_s=start_s,
        end_s=end_s,
        asr_text=_as_str(obj, "asr_text", problems, required=False),
        caption=_as_str(obj, "caption", problems, required=False),
        multiscale=multiscale,
        scores=scores,
        extra=tuple((k, v) for k, v in obj.items() if k not in _CLIP_KEYS),
    )
    bad = rec.violations()
    if bad:
        raise InvalidRecord(bad)
    return rec


# --- whole-manifest IO --------------------------------------------------------

def header_line(schema_version: int = SCHEMA_VERSION) -> str:
    return f'{{"type":"header","schema_version":{schema_version}}}'


def iter_manifest(lines: Iterable[str]) -> Iterator[Record]:
    """Yield records from manifest lines, validating the leading header."""
    it = iter(lines)
    try:
        first = next(it)
    except StopIteration:
        raise ValidationFailed("empty manifest: missing header") from None
    try:
        head = json.loads(first)
    except json.JSONDecodeError:
        raise MalformedLine("manifest header is not valid JSON") from None
    if not isinstance(head, dict) or head.get("type") != "header":
        raise ValidationFailed("first manifest line must be the header record")
    if head.get("schema_version") != SCHEMA_VERSION:
        raise ValidationFailed(
            f"unsupported schema_version {head.get('schema_version')!r}; "
            f"this engine reads version {SCHEMA_VERSION}")
    for line in it:
        stripped = line.rstrip("\n")
        if stripped:
            yield parse_manifest_line(stripped)


def read_manifest(path) -> list[Record]:
    with open(path, encoding="utf-8") as f:
        return list(iter_manifest(f))


def manifest_text(records: Iterable[Record]) -> str:
    lines = [header_line()]
    lines.extend(serialize_record(r) for r in records)
    return "\n".join(lines) + "\n"


def with_asr_text(clip: ClipRecord, video: VideoRecord) -> ClipRecord:
    """Attach the overlapping transcript of the parent video to a clip."""
    return replace(clip, asr_text=overlap_asr(clip, video.asr_segments))
