"""Multiscale caption orchestration.

Each clip gets captions at two scales: frame-by-frame captions at a low
rate, synthesized into one summary by a text service, plus a single
caption of the clip's middle frame.  The three model services are external
and reached through :class:`~vtcurate.services.ServiceClient`; frame
inputs are opaque references ("<video_id>@<frame_index>"), never pixels.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from importlib import resources
from typing import Sequence

from .errors import PartialResult, ServiceError
from .manifest import ClipRecord, MultiscaleCaption
from .seeding import split_seed
from .services import CaptionServiceSpec, ServiceClient, Transport


def default_summarize_prompt() -> str:
    return (resources.files("vtcurate.assets") / "summarize_prompt.txt") \
        .read_text(encoding="utf-8").strip()


class CanonicalSource(enum.Enum):
    FINE_SUMMARY = "fine_summary"
    COARSE = "coarse"


@dataclass(frozen=True)
class CaptionPlan:
    """How a clip is captioned: the fine-scale sampling rate and which
    scale supplies the clip's canonical caption."""

    fine_fps: float = 1.0
    canonical_source: CanonicalSource = CanonicalSource.FINE_SUMMARY
    summarize_prompt: str = ""

    def __post_init__(self):
        if self.fine_fps <= 0:
            raise ValueError("fine_fps must be > 0")


def fine_frame_indices(n_frames: int, clip_fps: float, fine_fps: float) -> list[int]:
    """Frame indices sampled at ``fine_fps`` from a clip of ``n_frames``
    frames recorded at ``clip_fps``: floor(j * clip_fps / fine_fps) for
    j = 0, 1, ... while below ``n_frames``, deduplicated so the result is
    strictly increasing.  Index 0 is always included."""
    if n_frames < 1:
        raise ValueError("n_frames must be >= 1")
    if clip_fps <= 0 or fine_fps <= 0:
        raise ValueError("rates must be > 0")
    out: list[int] = []
    j = 0
    while True:
        idx = math.floor(j * clip_fps / fine_fps)
        if idx >= n_frames:
            break
        if not out or idx > out[-1]:
            out.append(idx)
        j += 1
    return out


def middle_frame_index(n_frames: int) -> int:
    if n_frames < 1:
        raise ValueError("n_frames must be >= 1")
    return n_frames // 2


class CaptionServices:
    """The three clients a captioning run needs."""

    def __init__(self, fine_captioner: ServiceClient, summarizer: ServiceClient,
                 coarse_captioner: ServiceClient):
        self.fine_captioner = fine_captioner
        self.summarizer = summarizer
        self.coarse_captioner = coarse_captioner

    @classmethod
    def from_specs(cls, fine: CaptionServiceSpec, summarizer: CaptionServiceSpec,
                   coarse: CaptionServiceSpec) -> "CaptionServices":
        return cls(ServiceClient(fine, resolve_transport(fine)),
                   ServiceClient(summarizer, resolve_transport(summarizer)),
                   ServiceClient(coarse, resolve_transport(coarse)))


def resolve_transport(spec: CaptionServiceSpec) -> Transport | None:
    """Endpoints with the ``stub:`` scheme get the built-in deterministic
    stub; anything else goes over HTTP."""
    if spec.endpoint.startswith("stub:"):
        return builtin_stub_transport(spec.endpoint)
    return None


_STUB_PHRASES = (
    "a man walking through a bright room",
    "a woman cooking at a kitchen counter",
    "two people talking near a window",
    "a dog running across a grassy field",
    "a car driving down a city street",
    "a child drawing at a wooden table",
    "people dancing on a small stage",
    "a boat moving slowly along a river",
    "a crowd watching a street performer",
    "someone typing on a laptop in an office",
    "a cyclist riding past tall buildings",
    "hands cutting vegetables on a board",
)


def builtin_stub_transport(name: str) -> Transport:
    """Deterministic in-process service for offline runs: frame captions
    are a pure function of (stub name, frame reference); summaries join
    the distinct inputs in order."""

    def serve(payload: dict) -> dict:
        mode = payload.get("mode")
        inputs = payload.get("inputs", [])
        if mode == "frame":
            outputs = [_STUB_PHRASES[split_seed(0, "stub", name, ref)
                                     % len(_STUB_PHRASES)]
                       for ref in inputs]
        elif mode == "summarize":
            seen: list[str] = []
            for text in inputs:
                if text not in seen:
                    seen.append(text)
            outputs = ["; ".join(seen)]
        else:
            raise ServiceError(f"stub {name}: unsupported mode {mode!r}")
        return {"outputs": outputs, "model_id": name}

    return serve


def frame_refs(video_id: str, first_frame: int, n_frames: int) -> list[str]:
    """Opaque frame references for a clip's frames in the source video."""
    return [f"{video_id}@{first_frame + i}" for i in range(n_frames)]


def caption_clip(clip: ClipRecord, frames: Sequence[str], services: CaptionServices,
                 plan: CaptionPlan, clip_fps: float) -> MultiscaleCaption:
    """Caption one clip at both scales.

    ``frames`` are the clip's frame references in order at ``clip_fps``.
    Fine-frame requests go out concurrently (bounded by the fine service's
    ``max_in_flight``) and are assembled in index order regardless of
    completion order.  When any scale fails permanently, the successful
    pieces travel on the raised :class:`PartialResult` so a re-run only
    needs the missing scales.  Re-captioning an already-captioned clip is
    a no-op returning the stored result.
    """
    if clip.multiscale is not None:
        return clip.multiscale
    if not frames:
        raise ValueError("frames must be non-empty")

    failed: dict[str, Exception] = {}
    indices = fine_frame_indices(len(frames), clip_fps, plan.fine_fps)

    fine_captions: list[tuple[int, str]] = []
    with ThreadPoolExecutor(max_workers=max(1, len(indices))) as pool:
        futures = [pool.submit(services.fine_captioner.call,
                               {"mode": "frame", "inputs": [frames[i]]})
                   for i in indices]
        coarse_future = pool.submit(
            services.coarse_captioner.call,
            {"mode": "frame", "inputs": [frames[middle_frame_index(len(frames))]]})
        try:
            for i, fut in zip(indices, futures):
                fine_captions.append((i, fut.result()["outputs"][0]))
        except ServiceError as e:
            failed["fine"] = e
            fine_captions = []
            for fut in futures:
                fut.cancel()
        try:
            coarse_caption = coarse_future.result()["outputs"][0]
        except ServiceError as e:
            failed["coarse"] = e
            coarse_caption = ""

    fine_summary = ""
    if fine_captions:
        payload = {"mode": "summarize",
                   "inputs": [text for _, text in fine_captions]}
        if plan.summarize_prompt:
            payload["prompt"] = plan.summarize_prompt
        try:
            fine_summary = services.summarizer.call(payload)["outputs"][0]
        except ServiceError as e:
            failed["summary"] = e

    if failed:
        raise PartialResult(
            failed,
            fine_frame_captions=fine_captions,
            fine_summary=fine_summary,
            coarse_caption=coarse_caption,
        )
    return MultiscaleCaption(
        fine_frame_captions=tuple(fine_captions),
        fine_summary=fine_summary,
        coarse_caption=coarse_caption,
    )


def canonical_caption(ms: MultiscaleCaption, plan: CaptionPlan) -> str:
    """Pick the clip's single caption; the fine summary wins by default,
    with the coarse caption as fallback when the fine scale is absent."""
    if plan.canonical_source is CanonicalSource.COARSE:
        return ms.coarse_caption
    return ms.fine_summary or ms.coarse_caption


def apply_caption(clip: ClipRecord, ms: MultiscaleCaption,
                  plan: CaptionPlan) -> ClipRecord:
    return replace(clip, multiscale=ms, caption=canonical_caption(ms, plan))
