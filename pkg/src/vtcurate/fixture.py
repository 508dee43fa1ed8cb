"""Synthetic end-to-end fixture: a small corpus of videos with planted
scene structure, transcripts, signature streams, and a feature sidecar for
the clips that default segmentation yields.

Everything derives from one seed through the documented split function, so
two generations with equal arguments are byte-identical.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from . import fileio
from .manifest import AsrSegment, VideoRecord, manifest_text, ms_round
from .pipeline import clips_for_video
from .seeding import split_seed
from .segmenter import SegmenterConfig

CATEGORIES = ("news", "gaming", "music", "sports", "travel", "food",
              "education", "comedy", "film", "tech", "fashion", "animals",
              "autos", "diy", "science", "vlog")
LANGUAGES = ("en", "zh", "ko", "de", "fr", "ja")
RESOLUTIONS = ((1280, 720), (960, 540), (640, 360))
FPS_POOL = (10.0, 20.0, 25.0, 30.0)

_ASR_WORDS = ("we could leave the lights up til january have i known you "
              "twenty seconds or years take me out and home my lover devils "
              "roll dice angels eyes oh yeah baby night day love heart time "
              "feel good morning city river road").split()


def _scene_frames(rng: np.random.Generator, style: str, base: np.ndarray,
                  n: int, dim: int) -> np.ndarray:
    if style == "still":
        noise = rng.uniform(-0.5, 0.5, size=(n, dim))
        frames = base + noise
    elif style == "extreme":
        swing = rng.uniform(80.0, 100.0, size=(n, dim))
        signs = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)[:, None]
        frames = base + signs * swing
    else:
        frames = base + rng.uniform(-6.0, 6.0, size=(n, dim))
    return np.clip(frames, 0.0, 255.0)


def _make_video_stream(rng: np.random.Generator, fps: float, dim: int = 4):
    n_scenes = int(rng.integers(2, 7))
    styles = rng.choice(["normal", "normal", "normal", "normal", "still",
                         "extreme"], size=n_scenes)
    base = rng.uniform(20.0, 235.0, size=dim)
    chunks = []
    for style in styles:
        length_s = float(rng.uniform(1.0, 14.0))
        n = max(1, int(length_s * fps))
        if style == "extreme":
            base = rng.uniform(100.0, 155.0, size=dim)
        chunks.append(_scene_frames(rng, style, base, n, dim))
        # next scene starts far enough away to trip the cut threshold
        step = rng.uniform(45.0, 120.0, size=dim) * rng.choice([-1.0, 1.0], size=dim)
        base = np.clip(base + step, 10.0, 245.0)
    return np.concatenate(chunks, axis=0)


def _make_asr(rng: np.random.Generator, duration: float) -> tuple[AsrSegment, ...]:
    segments = []
    t = float(rng.uniform(0.0, 2.0))
    for _ in range(int(rng.integers(2, 8))):
        start = ms_round(t)
        length = float(rng.uniform(1.5, 8.0))
        end = ms_round(min(t + length, duration))
        if end - start < 0.5 or end > duration:
            break
        words = rng.choice(_ASR_WORDS, size=int(rng.integers(4, 10)))
        text = " ".join(words)
        if rng.random() < 0.5:
            text = f"♪ {text} ♪"
        segments.append(AsrSegment(start, end, text))
        t = end + float(rng.uniform(0.2, 3.0))
        if t >= duration - 1.0:
            break
    return tuple(segments)


def make_videos(n_videos: int, seed: int):
    """Returns (video records, {video_id: frame matrix})."""
    videos, streams = [], {}
    for i in range(n_videos):
        vid = f"v{i:03d}"
        rng = np.random.default_rng(split_seed(seed, "fixture-video", vid))
        fps = float(rng.choice(FPS_POOL))
        frames = _make_video_stream(rng, fps)
        duration = ms_round(len(frames) / fps)
        videos.append(VideoRecord(
            video_id=vid,
            duration_s=duration,
            fps=fps,
            resolution=RESOLUTIONS[int(rng.integers(len(RESOLUTIONS)))],
            category=str(rng.choice(CATEGORIES)),
            language=str(rng.choice(LANGUAGES)),
            title=f"sample {vid}",
            asr_segments=_make_asr(rng, duration),
        ))
        streams[vid] = frames
    return videos, streams


def make_features(videos, streams, seed: int,
                  config: SegmenterConfig, dim: int = 8) -> dict[str, dict]:
    """Per-frame scores/embeddings for every clip default segmentation
    keeps, with text embeddings correlated to the pooled frame embedding
    at a per-clip strength so similarity scores spread out."""
    features: dict[str, dict] = {}
    for video in videos:
        for clip in clips_for_video(video, streams[video.video_id], config):
            rng = np.random.default_rng(split_seed(seed, "fixture-feat", clip.clip_id))
            n = max(1, round((clip.end_s - clip.start_s) * video.fps))
            base = rng.normal(0.0, 1.0, size=dim)
            frame_emb = base + rng.normal(0.0, 0.15, size=(n, dim))
            noise_scale = float(rng.uniform(0.1, 1.5))
            text_emb = base + rng.normal(0.0, noise_scale, size=dim)
            features[clip.clip_id] = {
                "frame_scores": [float(x) for x in rng.uniform(2.0, 8.5, size=n)],
                "frame_embeddings": [[float(x) for x in row] for row in frame_emb],
                "text_embedding": [float(x) for x in text_emb],
            }
    return features


def generate_fixture(out_dir, n_videos: int = 20, seed: int = 7,
                     config: SegmenterConfig | None = None) -> dict[str, Path]:
    """Write manifest, signature streams, and feature sidecar under
    ``out_dir``; returns the paths."""
    out = Path(out_dir)
    config = config or SegmenterConfig()
    videos, streams = make_videos(n_videos, seed)
    manifest_path = out / "videos.jsonl"
    fileio.atomic_write_text(manifest_path, manifest_text(videos))
    sig_dir = out / "sigs"
    for video in videos:
        fileio.write_signatures(sig_dir, video.video_id, video.fps,
                                streams[video.video_id].tolist())
    features_path = out / "features.jsonl"
    fileio.write_features(features_path,
                          make_features(videos, streams, seed, config))
    return {"manifest": manifest_path, "signatures": sig_dir,
            "features": features_path}
