from __future__ import annotations

from pathlib import Path

import pytest

from vtcurate.manifest import ClipRecord, make_clip_id

GOLDEN_DIR = Path(__file__).parent / "golden"


@pytest.fixture
def golden_dir() -> Path:
    return GOLDEN_DIR


def make_clip(video_id: str, start_s: float, end_s: float, **kw) -> ClipRecord:
    return ClipRecord(clip_id=make_clip_id(video_id, start_s),
                      video_id=video_id, start_s=start_s, end_s=end_s, **kw)
