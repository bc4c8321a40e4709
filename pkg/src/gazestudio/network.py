"""Classifier head with online class-activation maps and the consistency loss.

The backbone is a fixed, seeded bank of 5x5 filters producing a 16x16 feature
grid; the trainable surface is the shared fully-connected weights W (which
both score classes through global average pooling and assemble the per-class
attention maps) plus a single uncertainty parameter u = log(sigma^2) that
scales the attention-consistency penalty. All gradients are closed-form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BadClass, BadGeometry, EmptyDataset, ShapeMismatch

GRID = 16
NORM_EPS = 1e-8
U_MIN, U_MAX = -6.0, 6.0


@dataclass
class FilterBank:
    """Fixed random filters standing in for a conv backbone; never trained."""

    seed: int
    channels: int = 64
    kernel_size: int = 5
    gain: float = 150.0
    filters: np.ndarray = field(default=None, repr=False, compare=False)


_MEAN_CHANNEL_SCALE = 0.02  # puts the brightness channel on the texture channels' scale


def make_filter_bank(
    seed: int, channels: int = 64, kernel_size: int = 5, gain: float = 1500.0
) -> FilterBank:
    """Seeded zero-mean contrast filters plus one averaging (brightness) filter.

    The gain sets the filter norm so rectified activations land near unit
    scale on [0, 1] images. The last channel is a uniform averaging filter:
    without it every pooled feature vector is nearly proportional to one
    contrast ray, which a bias-free classifier head cannot split into grades.
    Identical seeds give identical banks.
    """
    rng = np.random.default_rng(seed)
    filters = rng.standard_normal((channels, kernel_size, kernel_size))
    filters -= filters.mean(axis=(1, 2), keepdims=True)
    filters *= gain / np.linalg.norm(filters.reshape(channels, -1), axis=1)[:, None, None]
    filters[-1] = gain * _MEAN_CHANNEL_SCALE / (kernel_size * kernel_size)
    return FilterBank(
        seed=seed, channels=channels, kernel_size=kernel_size, gain=gain, filters=filters
    )


@dataclass
class FeatureStack:
    """Rectified activations, shape (channels, GRID, GRID)."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 3:
            raise ShapeMismatch("feature stack must be (channels, x, y)")
        self.values = v

    @property
    def channels(self) -> int:
        return self.values.shape[0]


@dataclass
class ClassifierParams:
    """Shared FC weights (n_classes, channels) and u = log(sigma^2)."""

    weights: np.ndarray
    u: float = 0.0

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.ndim != 2:
            raise ShapeMismatch("weights must be (n_classes, channels)")
        self.u = float(np.clip(self.u, U_MIN, U_MAX))

    @property
    def n_classes(self) -> int:
        return self.weights.shape[0]


@dataclass
class CamOutput:
    """Scores, softmax probabilities, and all per-class attention maps."""

    scores: np.ndarray
    probs: np.ndarray
    cams: np.ndarray


@dataclass
class TrainConfig:
    """Optimization settings; adaptive-moment updates with the usual defaults."""

    lambda_ac: float = 1.0
    learning_rate: float = 1e-3
    batch_size: int = 32
    epochs: int = 30
    seed: int = 0
    n_classes: int = 5
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    use_true_class_cam: bool = False


@dataclass
class Example:
    """One image's precomputed features plus labels and optional supervision."""

    image_id: str
    features: np.ndarray
    grade: int
    gaze_map: np.ndarray | None = None
    boxes: tuple = ()
    image_width: int = 0
    image_height: int = 0


def extract_features(image: np.ndarray, bank: FilterBank) -> FeatureStack:
    """Strided 5x5 convolutions rectified onto a GRID x GRID grid."""
    img = np.asarray(image, dtype=float)
    if img.ndim != 2:
        raise BadGeometry("expected a 2-D grayscale image")
    h, w = img.shape
    if h % GRID or w % GRID:
        raise BadGeometry(f"image dimensions must be multiples of {GRID}, got {h}x{w}")
    sy, sx = h // GRID, w // GRID
    k = bank.kernel_size
    if (GRID - 1) * sy + k > h or (GRID - 1) * sx + k > w:
        raise BadGeometry(f"{k}x{k} filters do not fit the {GRID}x{GRID} stride grid on {h}x{w}")
    windows = np.lib.stride_tricks.sliding_window_view(img, (k, k))[::sy, ::sx][:GRID, :GRID]
    acts = np.einsum("xyij,kij->kxy", windows, bank.filters, optimize=True)
    return FeatureStack(values=np.maximum(acts, 0.0))


def global_average_pool(values: np.ndarray) -> np.ndarray:
    """Spatial mean per channel (or of a single map)."""
    v = np.asarray(values, dtype=float)
    if v.ndim == 2:
        return v.mean()
    return v.reshape(v.shape[0], -1).mean(axis=1)


def softmax(scores: np.ndarray) -> np.ndarray:
    z = scores - np.max(scores)
    e = np.exp(z)
    return e / e.sum()


def class_scores(f: FeatureStack, params: ClassifierParams) -> tuple[np.ndarray, np.ndarray]:
    """Scores via GAP then the shared FC weights; probabilities via softmax."""
    if params.weights.shape[1] != f.channels:
        raise ShapeMismatch(
            f"weights expect {params.weights.shape[1]} channels, features have {f.channels}"
        )
    pooled = global_average_pool(f.values)
    scores = params.weights @ pooled
    return scores, softmax(scores)


def cam(f: FeatureStack, params: ClassifierParams, c: int) -> np.ndarray:
    """Class attention map: the weights' channel-weighted sum of feature maps."""
    if not 0 <= c < params.n_classes:
        raise BadClass(f"class {c} outside 0..{params.n_classes - 1}")
    if params.weights.shape[1] != f.channels:
        raise ShapeMismatch("weights/features channel mismatch")
    return np.tensordot(params.weights[c], f.values, axes=1)


def forward_cams(f: FeatureStack, params: ClassifierParams) -> CamOutput:
    scores, probs = class_scores(f, params)
    cams = np.tensordot(params.weights, f.values, axes=1)
    return CamOutput(scores=scores, probs=probs, cams=cams)


def normalize_attention(values: np.ndarray) -> np.ndarray:
    """Rectify then divide by (max + eps); all-zero maps stay all-zero."""
    r = np.maximum(np.asarray(values, dtype=float), 0.0)
    return r / (r.max() + NORM_EPS)


def mse_consistency(a_norm: np.ndarray, g16: np.ndarray) -> float:
    """Mean squared difference between two same-shape attention grids."""
    a = np.asarray(a_norm, dtype=float)
    g = np.asarray(g16, dtype=float)
    if a.shape != g.shape:
        raise ShapeMismatch(f"attention grids disagree: {a.shape} vs {g.shape}")
    diff = a - g
    return float(np.mean(diff * diff))


def ac_loss(a_norm: np.ndarray, g16: np.ndarray, u: float) -> float:
    """Uncertainty-weighted consistency: 0.5*exp(-u)*mse + u/2, u = log(sigma^2)."""
    if not U_MIN <= u <= U_MAX:
        raise ValueError(f"u must lie in [{U_MIN}, {U_MAX}]")
    return 0.5 * math.exp(-u) * mse_consistency(a_norm, g16) + 0.5 * u


def _batch_pass(batch, params: ClassifierParams, cfg: TrainConfig, want_grads: bool):
    """Shared forward (and optionally backward) pass over one batch.

    Returns (loss, ce, ac, dW, du). The AC term averages over the samples
    that carry gaze maps; samples without gaze contribute cross-entropy only.
    """
    if not batch:
        raise EmptyDataset("empty batch")
    W = params.weights
    u = params.u
    n_batch = len(batch)
    n_gaze = sum(1 for ex in batch if ex.gaze_map is not None)
    dW = np.zeros_like(W) if want_grads else None
    du = 0.0
    ce_sum = 0.0
    ac_sum = 0.0
    exp_neg_u = math.exp(-u)

    for ex in batch:
        f = np.asarray(ex.features, dtype=float)
        flat = f.reshape(f.shape[0], -1)
        pooled = flat.mean(axis=1)
        scores = W @ pooled
        shifted = scores - scores.max()
        exps = np.exp(shifted)
        z = exps.sum()
        ce_sum += float(np.log(z) - shifted[ex.grade])
        if want_grads:
            d_scores = exps / z
            d_scores[ex.grade] -= 1.0
            dW += np.outer(d_scores / n_batch, pooled)

        if ex.gaze_map is not None and cfg.lambda_ac > 0:
            c = ex.grade if cfg.use_true_class_cam else int(np.argmax(scores))
            a = W[c] @ flat
            r = np.maximum(a, 0.0)
            peak_idx = int(np.argmax(r))
            scale = r[peak_idx] + NORM_EPS
            norm = r / scale
            diff = norm - np.asarray(ex.gaze_map, dtype=float).reshape(-1)
            msq = float(np.mean(diff * diff))
            ac_sum += 0.5 * exp_neg_u * msq + 0.5 * u
            if want_grads:
                d_norm = (cfg.lambda_ac * exp_neg_u / n_gaze) * diff / diff.size
                d_r = d_norm / scale
                d_r[peak_idx] -= float(np.dot(d_norm, r)) / (scale * scale)
                d_a = np.where(a > 0.0, d_r, 0.0)
                dW[c] += flat @ d_a
                du += cfg.lambda_ac * (0.5 - 0.5 * exp_neg_u * msq) / n_gaze

    ce = ce_sum / n_batch
    ac = ac_sum / n_gaze if (n_gaze and cfg.lambda_ac > 0) else 0.0
    loss = ce + cfg.lambda_ac * ac
    return loss, ce, ac, dW, du


def total_loss(batch, params: ClassifierParams, cfg: TrainConfig) -> float:
    """Mean cross-entropy plus lambda_ac times the mean consistency loss."""
    return _batch_pass(batch, params, cfg, want_grads=False)[0]


def loss_components(batch, params: ClassifierParams, cfg: TrainConfig) -> tuple[float, float, float]:
    loss, ce, ac, _, _ = _batch_pass(batch, params, cfg, want_grads=False)
    return loss, ce, ac


def gradients(batch, params: ClassifierParams, cfg: TrainConfig) -> tuple[np.ndarray, float]:
    """Closed-form (dL/dW, dL/du) for the same loss total_loss computes."""
    _, _, _, dW, du = _batch_pass(batch, params, cfg, want_grads=True)
    return dW, du
