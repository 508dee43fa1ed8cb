"""On-disk formats adjacent to the manifest, and crash-safe writing.

* signature stream: one text file per video, ``<video_id>.sig``; header
  line ``<vector_length> <fps>``, then one line of space-separated values
  per frame.
* feature sidecar: JSON lines keyed by clip_id, carrying per-frame
  aesthetic scores, per-frame embeddings, and the caption text embedding.
* matrix file: header line ``<rows> <cols>`` then one row per line,
  shortest round-trip decimals; a pairs file is two matrix blocks back to
  back with equal row counts.

All writers go through :func:`atomic_write_text`: content lands under a
temporary name in the target directory and is renamed into place, so a
killed run never leaves a partial file under the final name.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .errors import MissingInput


def atomic_write_text(path, content: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".tmp.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            f.write(content)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# --- signature streams ---------------------------------------------------------

def signature_path(directory, video_id: str) -> Path:
    return Path(directory) / f"{video_id}.sig"


def write_signatures(directory, video_id: str, fps: float,
                     frames: Sequence[Sequence[float]]) -> None:
    dim = len(frames[0]) if frames else 0
    lines = [f"{dim} {fps!r}"]
    for values in frames:
        lines.append(" ".join(repr(float(v)) for v in values))
    atomic_write_text(signature_path(directory, video_id), "\n".join(lines) + "\n")


def read_signatures(directory, video_id: str) -> tuple[float, np.ndarray]:
    """Returns (fps, frames matrix of shape n_frames x dim)."""
    path = signature_path(directory, video_id)
    if not path.exists():
        raise MissingInput(f"no signature stream for video {video_id} at {path}")
    with open(path, encoding="utf-8") as f:
        header = f.readline().split()
        if len(header) != 2:
            raise MissingInput(f"bad signature header in {path}")
        dim, fps = int(header[0]), float(header[1])
        rows = [line.split() for line in f if line.strip()]
    frames = np.array([[float(x) for x in row] for row in rows], dtype=np.float64)
    if frames.size and frames.shape[1] != dim:
        raise MissingInput(f"signature width disagrees with header in {path}")
    return fps, frames


# --- feature sidecars ------------------------------------------------------------

def write_features(path, features: dict[str, dict]) -> None:
    """``features`` maps clip_id to {"frame_scores": [...],
    "frame_embeddings": [[...]], "text_embedding": [...]}."""
    lines = []
    for clip_id in sorted(features):
        entry = {"clip_id": clip_id, **features[clip_id]}
        lines.append(json.dumps(entry, ensure_ascii=False, separators=(",", ":")))
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_features(path) -> dict[str, dict]:
    if not Path(path).exists():
        raise MissingInput(f"feature sidecar not found: {path}")
    out: dict[str, dict] = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            entry = json.loads(line)
            out[entry.pop("clip_id")] = entry
    return out


# --- matrix files -----------------------------------------------------------------

def format_matrix(matrix) -> str:
    m = np.asarray(matrix, dtype=np.float64)
    lines = [f"{m.shape[0]} {m.shape[1]}"]
    for row in m:
        lines.append(" ".join(repr(float(x)) for x in row))
    return "\n".join(lines) + "\n"


def write_matrix(path, matrix) -> None:
    atomic_write_text(path, format_matrix(matrix))


def _read_matrix_block(lines: Iterator[str], path) -> np.ndarray:
    try:
        header = next(lines).split()
        rows, cols = int(header[0]), int(header[1])
    except (StopIteration, IndexError, ValueError):
        raise MissingInput(f"bad matrix header in {path}") from None
    data = []
    for _ in range(rows):
        try:
            row = [float(x) for x in next(lines).split()]
        except StopIteration:
            raise MissingInput(f"truncated matrix in {path}") from None
        if len(row) != cols:
            raise MissingInput(f"matrix row width mismatch in {path}")
        data.append(row)
    return np.array(data, dtype=np.float64).reshape(rows, cols)


def read_matrix(path) -> np.ndarray:
    if not Path(path).exists():
        raise MissingInput(f"matrix file not found: {path}")
    with open(path, encoding="utf-8") as f:
        lines = (line for line in f if line.strip())
        return _read_matrix_block(lines, path)


def write_pairs(path, v, t) -> None:
    atomic_write_text(path, format_matrix(v) + format_matrix(t))


def read_pairs(path) -> tuple[np.ndarray, np.ndarray]:
    if not Path(path).exists():
        raise MissingInput(f"pairs file not found: {path}")
    with open(path, encoding="utf-8") as f:
        lines = (line for line in f if line.strip())
        v = _read_matrix_block(lines, path)
        t = _read_matrix_block(lines, path)
    if v.shape[0] != t.shape[0]:
        raise MissingInput(f"pairs blocks disagree on rows in {path}")
    return v, t
