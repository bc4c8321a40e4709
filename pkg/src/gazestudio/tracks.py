"""Gaze-track domain types, JSONL parsing, and step-length extraction.

A track on disk is a pair of files: ``<name>.gaze.jsonl`` (one JSON object
per line: ``{"t_ms": <number>, "x": <number>, "y": <number>}``) and
``<name>.meta.json`` (image/reader ids, the reader's grade decision, and the
image dimensions). Coordinates are image-space pixels; timestamps are
milliseconds since session start.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import (
    BadGrade,
    EmptyTrack,
    InsufficientData,
    MalformedLine,
    NonMonotonicTime,
)

GRADE_NORMAL = 0
GRADE_MAX = 4

DEFAULT_CAPTURE_SIZE = 800  # on-screen display size the readers see


def validate_grade(value) -> int:
    """Return ``value`` as an int grade in 0..4, else raise BadGrade."""
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise BadGrade(f"grade must be an integer in [0, {GRADE_MAX}], got {value!r}")
    grade = int(value)
    if not GRADE_NORMAL <= grade <= GRADE_MAX:
        raise BadGrade(f"grade {grade} outside [0, {GRADE_MAX}]")
    return grade


@dataclass(frozen=True)
class GazeSample:
    """One gaze observation: time in ms, image-space pixel coordinates."""

    t: float
    x: float
    y: float


@dataclass
class GazeTrack:
    """One reading of one image: time-sorted samples plus the reader's decision."""

    samples: list[GazeSample]
    image_id: str = ""
    reader_id: str = ""
    decision: int = GRADE_NORMAL
    image_width: int = DEFAULT_CAPTURE_SIZE
    image_height: int = DEFAULT_CAPTURE_SIZE
    nominal_rate_hz: float = 90.0

    def __len__(self) -> int:
        return len(self.samples)

    def xy(self) -> np.ndarray:
        """Sample coordinates as an (n, 2) float array."""
        return np.array([(s.x, s.y) for s in self.samples], dtype=float).reshape(-1, 2)

    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.samples], dtype=float)


@dataclass
class StepSeries:
    """Euclidean distances between consecutive samples, in pixels."""

    steps: np.ndarray

    def __post_init__(self):
        self.steps = np.asarray(self.steps, dtype=float)

    def __len__(self) -> int:
        return len(self.steps)


def step_lengths(track: GazeTrack) -> StepSeries:
    """Distances between adjacent gaze points; needs at least two samples."""
    if len(track.samples) < 2:
        raise InsufficientData("need at least 2 samples to form step lengths")
    pts = track.xy()
    return StepSeries(steps=np.hypot(np.diff(pts[:, 0]), np.diff(pts[:, 1])))


_REQUIRED_META = ("image_id", "reader_id", "decision", "image_width", "image_height")


def _require_number(obj: dict, key: str, line_no: int) -> float:
    value = obj.get(key)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise MalformedLine(line_no, f"field {key!r} must be a number")
    value = float(value)
    if not math.isfinite(value):
        raise MalformedLine(line_no, f"field {key!r} must be finite")
    return value


def parse_track(raw_bytes: bytes, meta: dict, sort: bool = True) -> GazeTrack:
    """Parse a JSONL gaze log against its metadata sidecar.

    Samples are clamped into the image rectangle and (by default) stably
    sorted by timestamp. Duplicate or regressing timestamps that sorting
    cannot repair raise NonMonotonicTime.
    """
    for key in _REQUIRED_META:
        if key not in meta:
            raise KeyError(f"track metadata missing {key!r}")
    width = int(meta["image_width"])
    height = int(meta["image_height"])
    if width <= 0 or height <= 0:
        raise ValueError("image dimensions must be positive")
    decision = validate_grade(meta["decision"])

    samples: list[GazeSample] = []
    for line_no, line in enumerate(raw_bytes.decode("utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedLine(line_no, f"invalid JSON: {exc.msg}") from exc
        if not isinstance(obj, dict):
            raise MalformedLine(line_no, "expected a JSON object")
        t = _require_number(obj, "t_ms", line_no)
        if t < 0:
            raise MalformedLine(line_no, "t_ms must be non-negative")
        x = _require_number(obj, "x", line_no)
        y = _require_number(obj, "y", line_no)
        samples.append(
            GazeSample(t=t, x=min(max(x, 0.0), float(width)), y=min(max(y, 0.0), float(height)))
        )
    if not samples:
        raise EmptyTrack("gaze log contains no samples")
    if sort:
        samples.sort(key=lambda s: s.t)
    times = [s.t for s in samples]
    for prev, cur in zip(times, times[1:]):
        if cur <= prev:
            raise NonMonotonicTime(f"timestamps not strictly increasing at t={cur}")
    return GazeTrack(
        samples=samples,
        image_id=str(meta["image_id"]),
        reader_id=str(meta["reader_id"]),
        decision=decision,
        image_width=width,
        image_height=height,
        nominal_rate_hz=float(meta.get("nominal_rate_hz", 90.0)),
    )


def serialize_track(track: GazeTrack) -> tuple[bytes, dict]:
    """Inverse of parse_track: JSONL bytes plus the metadata dict."""
    lines = [json.dumps({"t_ms": s.t, "x": s.x, "y": s.y}) for s in track.samples]
    body = ("\n".join(lines) + "\n").encode("utf-8") if lines else b""
    meta = {
        "image_id": track.image_id,
        "reader_id": track.reader_id,
        "decision": track.decision,
        "image_width": track.image_width,
        "image_height": track.image_height,
        "nominal_rate_hz": track.nominal_rate_hz,
    }
    return body, meta


def meta_path_for(jsonl_path: Path | str) -> Path:
    """Sidecar path convention: <name>.gaze.jsonl -> <name>.meta.json."""
    path = Path(jsonl_path)
    name = path.name
    if name.endswith(".gaze.jsonl"):
        return path.with_name(name[: -len(".gaze.jsonl")] + ".meta.json")
    return path.with_name(path.stem + ".meta.json")


def save_track(track: GazeTrack, jsonl_path: Path | str, meta_path: Path | str | None = None) -> None:
    jsonl_path = Path(jsonl_path)
    meta_path = Path(meta_path) if meta_path is not None else meta_path_for(jsonl_path)
    body, meta = serialize_track(track)
    jsonl_path.write_bytes(body)
    meta_path.write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")


def load_track(jsonl_path: Path | str, meta_path: Path | str | None = None, sort: bool = True) -> GazeTrack:
    jsonl_path = Path(jsonl_path)
    meta_path = Path(meta_path) if meta_path is not None else meta_path_for(jsonl_path)
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    return parse_track(jsonl_path.read_bytes(), meta, sort=sort)


def filtered_copy(track: GazeTrack, keep: np.ndarray) -> GazeTrack:
    """Track with only the samples where ``keep`` is true, order preserved."""
    kept = [s for s, k in zip(track.samples, keep) if k]
    return replace(track, samples=kept)
