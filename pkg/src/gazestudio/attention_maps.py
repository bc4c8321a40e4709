"""Attention-map rendering, pooling, IoU scoring, and the GAMAP1 binary format.

Gaze maps are Gaussian mixtures over fixation points, truncated at a fixed
kernel radius and normalized so the maximum equals 1. Bounding-box maps are
binary. Both live on row-major (height, width) grids and can be pooled down
to the classifier's feature geometry.
"""
from __future__ import annotations

import io
import math
import struct
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .errors import EmptyUnion, InvalidBox

GAMAP_MAGIC = b"GAMAP1"
GRID_SIZE = 16  # network attention geometry


@dataclass
class AttentionMap:
    """Dense non-negative grid over image space, row-major."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise ValueError("attention map must be a 2-D grid")
        self.values = v

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class KernelConfig:
    """Gaussian kernel used to splat fixation points (pixels)."""

    radius: float = 99.0
    sigma: float = 30.2

    def __post_init__(self):
        if self.radius < 1:
            raise ValueError("kernel radius must be >= 1 px")
        if self.sigma <= 0:
            raise ValueError("kernel sigma must be positive")


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box: top-left corner plus extent, in pixels."""

    x: float
    y: float
    w: float
    h: float


def scaled_kernel(image_size: int, base: KernelConfig | None = None) -> KernelConfig:
    """Kernel rescaled from the 800-px capture geometry to another image size."""
    base = base or KernelConfig()
    scale = image_size / 800.0
    return KernelConfig(radius=max(2.0, base.radius * scale), sigma=max(0.5, base.sigma * scale))


def render_gaze_map(points, width: int, height: int, cfg: KernelConfig | None = None) -> AttentionMap:
    """Accumulate a truncated Gaussian per point, then divide by the grid maximum.

    An empty point list yields an all-zero map (normalization skipped).
    """
    cfg = cfg or KernelConfig()
    if width <= 0 or height <= 0:
        raise ValueError("map dimensions must be positive")
    grid = np.zeros((height, width), dtype=float)
    radius = float(cfg.radius)
    two_sigma_sq = 2.0 * cfg.sigma * cfg.sigma
    r_sq = radius * radius
    for px, py in np.asarray(list(points), dtype=float).reshape(-1, 2):
        x0 = max(0, math.ceil(px - radius))
        x1 = min(width - 1, math.floor(px + radius))
        y0 = max(0, math.ceil(py - radius))
        y1 = min(height - 1, math.floor(py + radius))
        if x0 > x1 or y0 > y1:
            continue
        dx = np.arange(x0, x1 + 1, dtype=float) - px
        dy = np.arange(y0, y1 + 1, dtype=float) - py
        dist_sq = dy[:, None] ** 2 + dx[None, :] ** 2
        kernel = np.exp(-dist_sq / two_sigma_sq)
        kernel[dist_sq > r_sq] = 0.0
        grid[y0 : y1 + 1, x0 : x1 + 1] += kernel
    peak = grid.max()
    if peak > 0:
        grid /= peak
    return AttentionMap(values=grid)


def _box_mask(boxes, width: int, height: int) -> np.ndarray:
    mask = np.zeros((height, width), dtype=bool)
    for box in boxes:
        if not (box.w > 0 and box.h > 0):
            raise InvalidBox(f"degenerate box {box}")
        x0 = max(0, math.ceil(box.x))
        x1 = min(width, math.ceil(box.x + box.w))
        y0 = max(0, math.ceil(box.y))
        y1 = min(height, math.ceil(box.y + box.h))
        if x0 >= x1 or y0 >= y1:
            raise InvalidBox(f"box {box} lies outside the {width}x{height} image")
        mask[y0:y1, x0:x1] = True
    return mask


def bbox_map(boxes, width: int, height: int) -> AttentionMap:
    """Binary map: 1.0 inside the union of boxes, 0.0 outside."""
    return AttentionMap(values=_box_mask(boxes, width, height).astype(float))


def _overlap_matrix(n_in: int, n_out: int) -> np.ndarray:
    """Rows are area-weighted averaging coefficients from n_in cells to n_out."""
    scale = n_in / n_out
    mat = np.zeros((n_out, n_in), dtype=float)
    for out in range(n_out):
        lo, hi = out * scale, (out + 1) * scale
        for cell in range(int(math.floor(lo)), min(int(math.ceil(hi)), n_in)):
            mat[out, cell] = min(hi, cell + 1) - max(lo, cell)
        mat[out] /= scale
    return mat


def _area_average(values: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    h, w = values.shape
    if h % out_h == 0 and w % out_w == 0:
        return values.reshape(out_h, h // out_h, out_w, w // out_w).mean(axis=(1, 3))
    return _overlap_matrix(h, out_h) @ values @ _overlap_matrix(w, out_w).T


def downsample(amap: AttentionMap, out_w: int = GRID_SIZE, out_h: int = GRID_SIZE) -> AttentionMap:
    """Area-average pooling to the target grid, then re-max-normalize."""
    pooled = _area_average(amap.values, out_h, out_w)
    peak = pooled.max()
    if peak > 0:
        pooled = pooled / peak
    return AttentionMap(values=pooled)


def upsample_nearest(values: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Nearest-neighbor resize of a small grid to image space."""
    v = np.asarray(values, dtype=float)
    rows = (np.arange(out_h) * v.shape[0]) // out_h
    cols = (np.arange(out_w) * v.shape[1]) // out_w
    return v[np.ix_(rows, cols)]


def iou(amap: AttentionMap, boxes, level: float = 0.5) -> float:
    """IoU between the map thresholded at level*max and the union of boxes."""
    values = amap.values
    peak = float(values.max()) if values.size else 0.0
    if peak > 0:
        detected = values >= level * peak
    else:
        detected = np.zeros(values.shape, dtype=bool)
    box_mask = (
        _box_mask(boxes, amap.width, amap.height) if boxes else np.zeros(values.shape, dtype=bool)
    )
    union = np.count_nonzero(detected | box_mask)
    if union == 0:
        raise EmptyUnion("both the detected region and the boxes are empty")
    return float(np.count_nonzero(detected & box_mask) / union)


def gamap_bytes(amap: AttentionMap) -> bytes:
    """Serialize to GAMAP1: magic, u32 width, u32 height, f32 row-major grid."""
    h, w = amap.values.shape
    return GAMAP_MAGIC + struct.pack("<II", w, h) + amap.values.astype("<f4").tobytes(order="C")


def parse_gamap(data: bytes) -> AttentionMap:
    if data[: len(GAMAP_MAGIC)] != GAMAP_MAGIC:
        raise ValueError("not a GAMAP1 payload")
    w, h = struct.unpack_from("<II", data, len(GAMAP_MAGIC))
    expected = len(GAMAP_MAGIC) + 8 + 4 * w * h
    if len(data) != expected:
        raise ValueError(f"GAMAP1 payload has {len(data)} bytes, expected {expected}")
    values = np.frombuffer(data, dtype="<f4", offset=len(GAMAP_MAGIC) + 8).reshape(h, w)
    return AttentionMap(values=values.astype(float))


def save_gamap(amap: AttentionMap, path) -> None:
    with open(path, "wb") as fh:
        fh.write(gamap_bytes(amap))


def load_gamap(path) -> AttentionMap:
    with open(path, "rb") as fh:
        return parse_gamap(fh.read())


def png_bytes(amap: AttentionMap) -> bytes:
    """8-bit grayscale view: value*255 rounded half-up."""
    v = np.clip(amap.values, 0.0, 1.0)
    img = Image.fromarray(np.floor(v * 255.0 + 0.5).astype(np.uint8), mode="L")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()
