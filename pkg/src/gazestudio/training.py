"""Training loop, evaluation metrics, the Welch t-test, and checkpoint I/O."""
from __future__ import annotations

import base64
import csv
import json
import math
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np
from scipy.special import stdtr

from .attention_maps import AttentionMap, iou, upsample_nearest
from .errors import EmptyDataset, EmptyUnion, InsufficientData
from .network import (
    U_MAX,
    U_MIN,
    ClassifierParams,
    FilterBank,
    TrainConfig,
    _batch_pass,
    cam,
    class_scores,
    FeatureStack,
    make_filter_bank,
    normalize_attention,
)

CHECKPOINT_FORMAT = "gazestudio-checkpoint-v1"
HISTORY_FIELDS = ("epoch", "split", "acc", "mae", "ce", "ac")


@dataclass
class EpochStats:
    epoch: int
    split: str
    acc: float
    mae: float
    ce: float
    ac: float


@dataclass
class EvalResult:
    acc: float
    mae: float
    confusion: np.ndarray  # rows: true grade, cols: predicted grade
    mean_iou: float | None
    abs_errors: np.ndarray
    n: int


def predict_grades(params: ClassifierParams, examples) -> np.ndarray:
    preds = np.empty(len(examples), dtype=int)
    for i, ex in enumerate(examples):
        scores, _ = class_scores(FeatureStack(values=ex.features), params)
        preds[i] = int(np.argmax(scores))
    return preds


def _split_stats(epoch: int, split: str, examples, params, cfg) -> EpochStats:
    _, ce, ac = _loss_parts(examples, params, cfg)
    preds = predict_grades(params, examples)
    truths = np.array([ex.grade for ex in examples])
    return EpochStats(
        epoch=epoch,
        split=split,
        acc=float(np.mean(preds == truths)),
        mae=float(np.mean(np.abs(preds - truths))),
        ce=ce,
        ac=ac,
    )


def _loss_parts(examples, params, cfg):
    loss, ce, ac, _, _ = _batch_pass(list(examples), params, cfg, want_grads=False)
    return loss, ce, ac


def train(train_set, gaze_maps, cfg: TrainConfig, val_set=()) -> tuple[ClassifierParams, list[EpochStats]]:
    """Adam on (W, u); deterministic given cfg.seed.

    ``gaze_maps`` maps image ids to 16x16 grids; training examples whose id
    appears there get the consistency term, everything else is
    cross-entropy only.
    """
    train_set = list(train_set)
    if not train_set:
        raise EmptyDataset("training set is empty")
    examples = [replace(ex, gaze_map=gaze_maps.get(ex.image_id, ex.gaze_map)) for ex in train_set]
    val_examples = list(val_set)
    channels = examples[0].features.shape[0]

    rng = np.random.default_rng(cfg.seed)
    params = ClassifierParams(
        weights=1e-3 * rng.standard_normal((cfg.n_classes, channels)), u=0.0
    )
    m_w = np.zeros_like(params.weights)
    v_w = np.zeros_like(params.weights)
    m_u = 0.0
    v_u = 0.0
    step = 0
    history: list[EpochStats] = []

    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(len(examples))
        for start in range(0, len(examples), cfg.batch_size):
            batch = [examples[i] for i in order[start : start + cfg.batch_size]]
            _, _, _, d_w, d_u = _batch_pass(batch, params, cfg, want_grads=True)
            step += 1
            bias1 = 1.0 - cfg.beta1 ** step
            bias2 = 1.0 - cfg.beta2 ** step
            m_w = cfg.beta1 * m_w + (1.0 - cfg.beta1) * d_w
            v_w = cfg.beta2 * v_w + (1.0 - cfg.beta2) * d_w * d_w
            params.weights -= cfg.learning_rate * (m_w / bias1) / (np.sqrt(v_w / bias2) + cfg.adam_eps)
            m_u = cfg.beta1 * m_u + (1.0 - cfg.beta1) * d_u
            v_u = cfg.beta2 * v_u + (1.0 - cfg.beta2) * d_u * d_u
            params.u = float(
                np.clip(
                    params.u - cfg.learning_rate * (m_u / bias1) / (math.sqrt(v_u / bias2) + cfg.adam_eps),
                    U_MIN,
                    U_MAX,
                )
            )
        history.append(_split_stats(epoch, "train", examples, params, cfg))
        if val_examples:
            history.append(_split_stats(epoch, "val", val_examples, params, cfg))
    return params, history


def evaluate(params: ClassifierParams, test_set, iou_level: float = 0.5) -> EvalResult:
    """Accuracy, MAE, confusion counts, and mean predicted-class attention IoU.

    The IoU averages over samples that carry bounding boxes; the predicted
    class's attention map is normalized and nearest-neighbor upsampled to
    image space before thresholding.
    """
    test_set = list(test_set)
    if not test_set:
        raise EmptyDataset("evaluation set is empty")
    n_classes = params.n_classes
    confusion = np.zeros((n_classes, n_classes), dtype=int)
    abs_errors = np.empty(len(test_set), dtype=float)
    ious = []
    for i, ex in enumerate(test_set):
        stack = FeatureStack(values=ex.features)
        scores, _ = class_scores(stack, params)
        pred = int(np.argmax(scores))
        confusion[ex.grade, pred] += 1
        abs_errors[i] = abs(pred - ex.grade)
        if ex.boxes and ex.image_width > 0 and ex.image_height > 0:
            attn = normalize_attention(cam(stack, params, pred))
            full = upsample_nearest(attn, ex.image_height, ex.image_width)
            try:
                ious.append(iou(AttentionMap(values=full), list(ex.boxes), level=iou_level))
            except EmptyUnion:
                continue
    n = len(test_set)
    return EvalResult(
        acc=float(np.trace(confusion) / n),
        mae=float(abs_errors.mean()),
        confusion=confusion,
        mean_iou=float(np.mean(ious)) if ious else None,
        abs_errors=abs_errors,
        n=n,
    )


def welch_t_test(errors_a, errors_b) -> tuple[float, float]:
    """Welch's unequal-variance two-sided t-test on two error samples."""
    a = np.asarray(errors_a, dtype=float)
    b = np.asarray(errors_b, dtype=float)
    if a.size < 2 or b.size < 2:
        raise InsufficientData("need at least 2 observations per group")
    var_a = a.var(ddof=1)
    var_b = b.var(ddof=1)
    se_sq = var_a / a.size + var_b / b.size
    diff = a.mean() - b.mean()
    if se_sq == 0.0:
        return (0.0, 1.0) if diff == 0.0 else (math.copysign(math.inf, diff), 0.0)
    t = diff / math.sqrt(se_sq)
    df = se_sq * se_sq / (
        (var_a / a.size) ** 2 / (a.size - 1) + (var_b / b.size) ** 2 / (b.size - 1)
    )
    p = 2.0 * float(stdtr(df, -abs(t)))
    return float(t), p


def write_history_csv(path, history) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(HISTORY_FIELDS)
        for row in history:
            writer.writerow([row.epoch, row.split, row.acc, row.mae, row.ce, row.ac])


def read_history_csv(path) -> list[EpochStats]:
    out = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            out.append(
                EpochStats(
                    epoch=int(rec["epoch"]),
                    split=rec["split"],
                    acc=float(rec["acc"]),
                    mae=float(rec["mae"]),
                    ce=float(rec["ce"]),
                    ac=float(rec["ac"]),
                )
            )
    return out


def _encode_f32(arr: np.ndarray) -> str:
    return base64.b64encode(arr.astype("<f4").tobytes(order="C")).decode("ascii")


def _decode_f32(data: str, shape) -> np.ndarray:
    raw = base64.b64decode(data.encode("ascii"))
    return np.frombuffer(raw, dtype="<f4").reshape(shape).astype(float)


def save_checkpoint(path, params: ClassifierParams, bank: FilterBank, cfg: TrainConfig) -> None:
    payload = {
        "format": CHECKPOINT_FORMAT,
        "weights": {"shape": list(params.weights.shape), "data": _encode_f32(params.weights)},
        "u": params.u,
        "filter_bank": {
            "seed": bank.seed,
            "channels": bank.channels,
            "kernel_size": bank.kernel_size,
            "gain": bank.gain,
        },
        "config": asdict(cfg),
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def load_checkpoint(path) -> tuple[ClassifierParams, FilterBank, TrainConfig]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"unrecognized checkpoint format {payload.get('format')!r}")
    weights = _decode_f32(payload["weights"]["data"], payload["weights"]["shape"])
    params = ClassifierParams(weights=weights, u=float(payload["u"]))
    fb = payload["filter_bank"]
    bank = make_filter_bank(
        int(fb["seed"]), int(fb["channels"]), int(fb["kernel_size"]), float(fb.get("gain", 1500.0))
    )
    cfg = TrainConfig(**payload["config"])
    return params, bank, cfg
