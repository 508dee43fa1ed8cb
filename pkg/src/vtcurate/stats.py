"""Corpus statistics: histograms, verb counting, shard-mergeable reports.

The reporter runs as a shard-parallel map with an associative merge:
histograms add, verb sets union (the partial carries the set, not the
count, so merging never double-counts), token tallies add.  Everything is
order-invariant.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Protocol, Sequence

from .errors import BadEdges
from .manifest import ClipRecord, Record, VideoRecord

REPORT_VERSION = 1

_NON_ALPHA = re.compile(r"[^a-zA-Z]+")


def tokenize(text: str) -> list[str]:
    """Lowercase tokens split on non-alphabetic characters."""
    return [t for t in _NON_ALPHA.split(text.lower()) if t]


class Tag(enum.Enum):
    VERB = "Verb"
    OTHER = "Other"


class PosTagger(Protocol):
    def tag(self, word: str) -> Tag: ...


def _load_lexicon() -> frozenset[str]:
    text = (resources.files("vtcurate.assets") / "verbs.txt") \
        .read_text(encoding="utf-8")
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


class LexiconTagger:
    """Deterministic built-in tagger: shipped base-verb list plus suffix
    stripping (-s, -es, -ed, -ing, with final-consonant doubling and
    dropped-e handling) back to a lexicon entry."""

    def __init__(self, lexicon: frozenset[str] | None = None):
        self._lex = lexicon if lexicon is not None else _load_lexicon()

    def _stem_hits(self, stem: str) -> bool:
        if stem in self._lex:
            return True
        if len(stem) >= 2 and stem[-1] == stem[-2] and stem[:-1] in self._lex:
            return True  # running -> runn -> run
        return (stem + "e") in self._lex  # dancing -> danc -> dance

    def tag(self, word: str) -> Tag:
        w = word.lower()
        if w in self._lex:
            return Tag.VERB
        if w.endswith("ing") and len(w) > 4 and self._stem_hits(w[:-3]):
            return Tag.VERB
        if w.endswith("ed") and len(w) > 3 and self._stem_hits(w[:-2]):
            return Tag.VERB
        if w.endswith("es") and len(w) > 3 and w[:-2] in self._lex:
            return Tag.VERB
        if w.endswith("s") and len(w) > 2 and w[:-1] in self._lex:
            return Tag.VERB
        return Tag.OTHER


class ServiceTagger:
    """Adapter tagging words through an external service speaking the
    shared wire contract (mode "tag")."""

    def __init__(self, client):
        self._client = client
        self._cache: dict[str, Tag] = {}

    def tag(self, word: str) -> Tag:
        w = word.lower()
        if w not in self._cache:
            out = self._client.call({"mode": "tag", "inputs": [w]})["outputs"][0]
            self._cache[w] = Tag.VERB if out == Tag.VERB.value else Tag.OTHER
        return self._cache[w]


# --- histograms ----------------------------------------------------------------

@dataclass
class Histogram:
    """Counts over half-open bins [e_i, e_{i+1}), last bin closed; values
    outside [first, last] tally in ``below`` / ``above``."""

    edges: tuple[float, ...]
    counts: list[int]
    below: int = 0
    above: int = 0

    def add(self, other: "Histogram") -> "Histogram":
        if self.edges != other.edges:
            raise BadEdges("cannot merge histograms with different edges")
        return Histogram(self.edges,
                         [a + b for a, b in zip(self.counts, other.counts)],
                         self.below + other.below, self.above + other.above)


def histogram(values: Iterable[float], edges: Sequence[float]) -> Histogram:
    edges = tuple(float(e) for e in edges)
    if len(edges) < 2 or any(b <= a for a, b in zip(edges, edges[1:])):
        raise BadEdges(f"edges must be >= 2 and strictly ascending: {edges}")
    counts = [0] * (len(edges) - 1)
    below = above = 0
    for v in values:
        if v < edges[0]:
            below += 1
        elif v > edges[-1]:
            above += 1
        elif v == edges[-1]:
            counts[-1] += 1  # last bin is closed
        else:
            lo, hi = 0, len(edges) - 1
            while hi - lo > 1:  # rightmost edge <= v
                mid = (lo + hi) // 2
                if edges[mid] <= v:
                    lo = mid
                else:
                    hi = mid
            counts[lo] += 1
    return Histogram(edges, counts, below, above)


def count_unique_verbs(captions: Iterable[str], tagger: PosTagger) -> int:
    """Distinct lowercase tokens tagged Verb across all captions."""
    return len(unique_verbs(captions, tagger))


def unique_verbs(captions: Iterable[str], tagger: PosTagger) -> set[str]:
    verbs: set[str] = set()
    for caption in captions:
        for token in tokenize(caption):
            if token not in verbs and tagger.tag(token) is Tag.VERB:
                verbs.add(token)
    return verbs


# --- corpus report ---------------------------------------------------------------

DURATION_EDGES = (0.0, 10.0, 20.0, 30.0)
CAPTION_LEN_EDGES = (0.0, 10.0, 20.0)
AESTHETIC_EDGES = tuple(float(i) for i in range(11))
UMT_EDGES = tuple(i / 10.0 for i in range(-10, 11))


def _empty_partial() -> "ReportPartial":
    return ReportPartial(
        durations=histogram([], DURATION_EDGES),
        caption_lengths=histogram([], CAPTION_LEN_EDGES),
        aesthetics=histogram([], AESTHETIC_EDGES),
        umt_sims=histogram([], UMT_EDGES),
    )


@dataclass
class ReportPartial:
    """Mergeable per-shard accumulation."""

    durations: Histogram
    caption_lengths: Histogram
    aesthetics: Histogram
    umt_sims: Histogram
    n_videos: int = 0
    n_clips: int = 0
    n_scored: int = 0
    verbs: set[str] = field(default_factory=set)
    caption_word_counts: dict[str, int] = field(default_factory=dict)
    asr_tokens_by_language: dict[str, int] = field(default_factory=dict)

    def merge(self, other: "ReportPartial") -> "ReportPartial":
        merged = ReportPartial(
            durations=self.durations.add(other.durations),
            caption_lengths=self.caption_lengths.add(other.caption_lengths),
            aesthetics=self.aesthetics.add(other.aesthetics),
            umt_sims=self.umt_sims.add(other.umt_sims),
            n_videos=self.n_videos + other.n_videos,
            n_clips=self.n_clips + other.n_clips,
            n_scored=self.n_scored + other.n_scored,
            verbs=self.verbs | other.verbs,
        )
        for src in (self.caption_word_counts, other.caption_word_counts):
            for w, c in src.items():
                merged.caption_word_counts[w] = merged.caption_word_counts.get(w, 0) + c
        for src in (self.asr_tokens_by_language, other.asr_tokens_by_language):
            for lang, c in src.items():
                merged.asr_tokens_by_language[lang] = \
                    merged.asr_tokens_by_language.get(lang, 0) + c
        return merged


def collect_partial(records: Iterable[Record],
                    tagger: PosTagger | None = None) -> ReportPartial:
    tagger = tagger or LexiconTagger()
    partial = _empty_partial()
    languages: dict[str, str] = {}
    clips: list[ClipRecord] = []
    for rec in records:
        if isinstance(rec, VideoRecord):
            partial.n_videos += 1
            languages[rec.video_id] = rec.language or "unknown"
        else:
            clips.append(rec)
    durations, caption_lengths, aesthetics, umts = [], [], [], []
    for clip in clips:
        partial.n_clips += 1
        durations.append(clip.end_s - clip.start_s)
        caption_lengths.append(len(clip.caption.split()))
        if clip.scores is not None:
            partial.n_scored += 1
            aesthetics.append(clip.scores.aesthetic)
            umts.append(clip.scores.umt_sim)
        for token in tokenize(clip.caption):
            partial.caption_word_counts[token] = \
                partial.caption_word_counts.get(token, 0) + 1
        if clip.asr_text:
            lang = languages.get(clip.video_id, "unknown")
            partial.asr_tokens_by_language[lang] = \
                partial.asr_tokens_by_language.get(lang, 0) + len(clip.asr_text.split())
    partial.durations = partial.durations.add(histogram(durations, DURATION_EDGES))
    partial.caption_lengths = partial.caption_lengths.add(
        histogram(caption_lengths, CAPTION_LEN_EDGES))
    partial.aesthetics = partial.aesthetics.add(histogram(aesthetics, AESTHETIC_EDGES))
    partial.umt_sims = partial.umt_sims.add(histogram(umts, UMT_EDGES))
    partial.verbs |= unique_verbs((c.caption for c in clips), tagger)
    return partial


def _hist_dict(h: Histogram, overflow_label: str | None = None) -> dict:
    out = {"edges": list(h.edges), "counts": list(h.counts),
           "below": h.below, "above": h.above}
    if overflow_label:
        out["overflow_bucket"] = overflow_label
    return out


def finalize_report(partial: ReportPartial, top_words: int = 50) -> dict:
    ranked = sorted(partial.caption_word_counts.items(),
                    key=lambda kv: (-kv[1], kv[0]))[:top_words]
    return {
        "report_version": REPORT_VERSION,
        "videos": partial.n_videos,
        "clips": partial.n_clips,
        "clips_scored": partial.n_scored,
        "clip_duration_s": _hist_dict(partial.durations, "30+"),
        "caption_words": _hist_dict(partial.caption_lengths, "20+"),
        "aesthetic": _hist_dict(partial.aesthetics),
        "umt_sim": _hist_dict(partial.umt_sims),
        "unique_verbs": len(partial.verbs),
        "caption_word_frequencies": [[w, c] for w, c in ranked],
        "asr_tokens_by_language": dict(sorted(partial.asr_tokens_by_language.items())),
    }


def corpus_report(records: Iterable[Record],
                  tagger: PosTagger | None = None) -> dict:
    """Single-shot report over one record stream."""
    return finalize_report(collect_partial(records, tagger))


def render_text_report(report: dict) -> str:
    """Human-readable rendering of the JSON report."""
    lines = [f"corpus report v{report['report_version']}",
             f"videos: {report['videos']}  clips: {report['clips']} "
             f"(scored: {report['clips_scored']})"]
    for key in ("clip_duration_s", "caption_words", "aesthetic", "umt_sim"):
        h = report[key]
        lines.append(f"{key}: edges={h['edges']} counts={h['counts']} "
                     f"below={h['below']} above={h['above']}")
    lines.append(f"unique verbs: {report['unique_verbs']}")
    lines.append("top caption words: "
                 + ", ".join(f"{w}({c})" for w, c in
                             report["caption_word_frequencies"][:15]))
    lines.append("asr tokens by language: "
                 + ", ".join(f"{lang}={c}" for lang, c in
                             report["asr_tokens_by_language"].items()))
    return "\n".join(lines) + "\n"
