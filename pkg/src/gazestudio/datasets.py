"""Synthetic lesion benchmark with planted gaze tracks, plus manifest I/O.

Images are smooth noise backgrounds with a grade-dependent bright blob
(grade 0 carries none); severity is ordinal in blob size times contrast.
Tracks alternate saccade runs (heavy-tailed steps roaming the image) with
fixation runs (tight jitter around the lesion, or around random spots on
grade-0 images). Ground-truth per-sample fixation labels are written next to
every track as a parallel JSONL of booleans.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image
from scipy.ndimage import gaussian_filter

from .attention_maps import BBox
from .errors import BadGrade, MissingFile, StorageError
from .tracks import GazeSample, GazeTrack, save_track, validate_grade

SPLITS = ("train", "val", "test")


@dataclass(frozen=True)
class SynthConfig:
    image_size: int = 128
    n_train: int = 200
    n_val: int = 100
    n_test: int = 200
    n_classes: int = 5
    lesion_amplitude: tuple = (0.0, 0.35, 0.50, 0.65, 0.80)  # per grade
    lesion_sigma_frac: tuple = (0.0, 0.050, 0.068, 0.086, 0.105)  # x image_size
    background_level: float = 0.38
    background_contrast: float = 0.05
    background_smooth_frac: float = 0.0625
    track_duration_s: float = 10.0
    nominal_rate_hz: float = 90.0
    run_length: tuple = (80, 160)  # samples per saccade/fixation run
    fixation_clusters: int = 3
    fixation_jitter: float = 2.0  # px
    saccade_model: str = "powerlaw"  # or "gaussian"
    saccade_step_min: float = 8.0
    saccade_step_max: float = 100.0
    gaussian_step_mean: float = 50.0
    gaussian_step_std: float = 15.0
    seed: int = 0

    def __post_init__(self):
        if self.image_size <= 0 or min(self.n_train, self.n_val, self.n_test) < 0:
            raise ValueError("sizes must be positive")
        if self.saccade_model not in ("powerlaw", "gaussian"):
            raise ValueError(f"unknown saccade model {self.saccade_model!r}")


@dataclass
class ManifestEntry:
    image_id: str
    image_path: str
    grade: int
    boxes: list = field(default_factory=list)
    gaze_track_paths: list = field(default_factory=list)


@dataclass
class Manifest:
    entries: list
    splits: dict = field(default_factory=dict)
    root: Path | None = field(default=None, compare=False)

    def entry(self, image_id: str) -> ManifestEntry:
        for e in self.entries:
            if e.image_id == image_id:
                return e
        raise KeyError(image_id)

    def entries_for(self, split: str) -> list:
        ids = set(self.splits.get(split, ()))
        return [e for e in self.entries if e.image_id in ids]

    def resolve(self, rel_path: str) -> Path:
        return (self.root / rel_path) if self.root else Path(rel_path)


def sample_truncated_power_law(rng: np.random.Generator, s_min: float, s_max: float, size: int) -> np.ndarray:
    """Inverse-CDF draws from the normalized s^-2 density truncated to [s_min, s_max]."""
    gamma_star = 1.0 / (1.0 / s_min - 1.0 / s_max)
    u = rng.random(size)
    return 1.0 / (1.0 / s_min - u / gamma_star)


def _synth_image(rng: np.random.Generator, cfg: SynthConfig, grade: int):
    """Returns (image in [0,1], lesion center or None, BBox or None)."""
    size = cfg.image_size
    noise = rng.standard_normal((size, size))
    bg = gaussian_filter(noise, sigma=size * cfg.background_smooth_frac)
    bg = cfg.background_level + cfg.background_contrast * bg / max(bg.std(), 1e-9)
    if grade == 0:
        return np.clip(bg, 0.0, 1.0), None, None
    amp = cfg.lesion_amplitude[grade]
    sigma = cfg.lesion_sigma_frac[grade] * size
    half = 2.5 * sigma
    margin = half + 3.0 * cfg.fixation_jitter + 2.0
    cx = rng.uniform(margin, size - margin)
    cy = rng.uniform(margin, size - margin)
    yy, xx = np.mgrid[0:size, 0:size]
    blob = amp * np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2.0 * sigma * sigma))
    image = np.clip(bg + blob, 0.0, 1.0)
    box = BBox(x=cx - half, y=cy - half, w=2.0 * half, h=2.0 * half)
    return image, (cx, cy), box


def _saccade_positions(rng, cfg: SynthConfig, start: np.ndarray, count: int) -> np.ndarray:
    """Roaming walk; step lengths from the configured law, direction uniform."""
    size = float(cfg.image_size)
    pos = start.copy()
    out = np.empty((count, 2))
    for i in range(count):
        for _ in range(100):
            if cfg.saccade_model == "powerlaw":
                length = float(
                    sample_truncated_power_law(rng, cfg.saccade_step_min, cfg.saccade_step_max, 1)[0]
                )
            else:
                length = float(
                    np.clip(rng.normal(cfg.gaussian_step_mean, cfg.gaussian_step_std),
                            cfg.saccade_step_min, cfg.saccade_step_max)
                )
            theta = rng.uniform(0.0, 2.0 * math.pi)
            cand = pos + length * np.array([math.cos(theta), math.sin(theta)])
            if 0.0 <= cand[0] <= size and 0.0 <= cand[1] <= size:
                pos = cand
                break
        else:
            pos = np.clip(pos + (np.array([size / 2, size / 2]) - pos) * 0.5, 0.0, size)
        out[i] = pos
    return out


def _fixation_positions(rng, cfg: SynthConfig, center: np.ndarray, count: int) -> np.ndarray:
    """Tight jitter; every sample stays within 3x jitter of ``center``."""
    jitter = cfg.fixation_jitter
    offsets = rng.normal(0.0, jitter, size=(count, 2))
    norms = np.linalg.norm(offsets, axis=1, keepdims=True)
    cap = 2.0 * jitter
    too_far = norms[:, 0] > cap
    offsets[too_far] *= cap / norms[too_far]
    pts = center + offsets
    return np.clip(pts, 0.0, float(cfg.image_size))


def _synth_track(rng, cfg: SynthConfig, image_id: str, grade: int, lesion_center):
    """Alternating saccade/fixation runs plus per-sample fixation labels."""
    size = float(cfg.image_size)
    n_samples = int(round(cfg.track_duration_s * cfg.nominal_rate_hz))
    lo, hi = cfg.run_length

    margin = 3.0 * cfg.fixation_jitter + 2.0
    clusters = []
    for _ in range(max(1, cfg.fixation_clusters)):
        if lesion_center is not None:
            offset = rng.normal(0.0, cfg.fixation_jitter / 2.0, size=2)
            norm = np.linalg.norm(offset)
            if norm > cfg.fixation_jitter:
                offset *= cfg.fixation_jitter / norm
            clusters.append(np.asarray(lesion_center) + offset)
        else:
            clusters.append(rng.uniform(margin, size - margin, size=2))

    positions = []
    labels = []
    pos = rng.uniform(0.1 * size, 0.9 * size, size=2)
    fixating = False
    cluster_idx = 0
    while len(positions) < n_samples:
        run = int(rng.integers(lo, hi + 1))
        run = min(run, n_samples - len(positions))
        if fixating:
            pts = _fixation_positions(rng, cfg, clusters[cluster_idx % len(clusters)], run)
            cluster_idx += 1
        else:
            pts = _saccade_positions(rng, cfg, pos, run)
        positions.extend(pts)
        labels.extend([fixating] * run)
        pos = pts[-1].copy()
        fixating = not fixating

    dt = 1000.0 / cfg.nominal_rate_hz
    jitter = rng.uniform(0.0, 0.4 * dt, size=n_samples)
    samples = [
        GazeSample(t=i * dt + jitter[i], x=float(p[0]), y=float(p[1]))
        for i, p in enumerate(positions)
    ]
    track = GazeTrack(
        samples=samples,
        image_id=image_id,
        reader_id="synthetic",
        decision=grade,
        image_width=cfg.image_size,
        image_height=cfg.image_size,
        nominal_rate_hz=cfg.nominal_rate_hz,
    )
    return track, np.array(labels, dtype=bool)


def labels_path_for(track_path: Path | str) -> Path:
    path = Path(track_path)
    name = path.name
    if name.endswith(".gaze.jsonl"):
        return path.with_name(name[: -len(".gaze.jsonl")] + ".labels.jsonl")
    return path.with_name(path.stem + ".labels.jsonl")


def save_fixation_labels(labels: np.ndarray, path) -> None:
    Path(path).write_text("".join("true\n" if b else "false\n" for b in labels), encoding="utf-8")


def load_fixation_labels(path) -> np.ndarray:
    lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln.strip()]
    return np.array([json.loads(ln) for ln in lines], dtype=bool)


def generate(cfg: SynthConfig, out_dir: Path | str) -> Manifest:
    """Write the full corpus (images, tracks, labels, manifest) under out_dir."""
    out = Path(out_dir)
    try:
        (out / "images").mkdir(parents=True, exist_ok=True)
        (out / "tracks").mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise StorageError(f"cannot create corpus directories under {out}") from exc

    rng = np.random.default_rng(cfg.seed)
    entries = []
    splits = {}
    counts = {"train": cfg.n_train, "val": cfg.n_val, "test": cfg.n_test}
    try:
        for split in SPLITS:
            ids = []
            for i in range(counts[split]):
                grade = i % cfg.n_classes
                image_id = f"{split}{i:04d}"
                image, center, box = _synth_image(rng, cfg, grade)
                img_rel = f"images/{image_id}.png"
                Image.fromarray(np.floor(image * 255.0 + 0.5).astype(np.uint8), mode="L").save(
                    out / img_rel
                )
                track, labels = _synth_track(rng, cfg, image_id, grade, center)
                track_rel = f"tracks/{image_id}.gaze.jsonl"
                save_track(track, out / track_rel)
                save_fixation_labels(labels, labels_path_for(out / track_rel))
                entries.append(
                    ManifestEntry(
                        image_id=image_id,
                        image_path=img_rel,
                        grade=grade,
                        boxes=[box] if box is not None else [],
                        gaze_track_paths=[track_rel],
                    )
                )
                ids.append(image_id)
            splits[split] = ids
    except OSError as exc:
        raise StorageError(f"failed writing corpus files under {out}") from exc

    manifest = Manifest(entries=entries, splits=splits, root=out)
    save_manifest(manifest, out / "manifest.json")
    return manifest


def save_manifest(manifest: Manifest, path: Path | str) -> None:
    payload = {
        "splits": manifest.splits,
        "entries": [
            {
                "image_id": e.image_id,
                "image_path": e.image_path,
                "grade": e.grade,
                "boxes": [{"x": b.x, "y": b.y, "w": b.w, "h": b.h} for b in e.boxes],
                "gaze_track_paths": list(e.gaze_track_paths),
            }
            for e in manifest.entries
        ],
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def load_manifest(path: Path | str, check_files: bool = True) -> Manifest:
    path = Path(path)
    payload = json.loads(path.read_text(encoding="utf-8"))
    root = path.parent
    entries = []
    for rec in payload.get("entries", []):
        try:
            grade = validate_grade(rec["grade"])
        except BadGrade as exc:
            raise BadGrade(f"entry {rec.get('image_id')!r}: {exc}") from exc
        entry = ManifestEntry(
            image_id=rec["image_id"],
            image_path=rec["image_path"],
            grade=grade,
            boxes=[BBox(**b) for b in rec.get("boxes", [])],
            gaze_track_paths=list(rec.get("gaze_track_paths", [])),
        )
        if check_files:
            for rel in [entry.image_path, *entry.gaze_track_paths]:
                if not (root / rel).exists():
                    raise MissingFile(f"entry {entry.image_id!r} references missing file {rel}")
        entries.append(entry)
    return Manifest(entries=entries, splits=dict(payload.get("splits", {})), root=root)


def load_image(path) -> np.ndarray:
    """8-bit grayscale PNG to a float grid in [0, 1]."""
    with Image.open(path) as img:
        return np.asarray(img.convert("L"), dtype=float) / 255.0
