"""Attention-level model: power-law step fits, sliding windows, fixation filtering.

Step lengths inside a window are binned on a log-spaced grid and their
empirical density is fitted to gamma * s^-2 by least squares. Compact steps
pile density into the small-s bins, which the s^-2 weighting rewards, so
fixation windows score high gamma and saccade windows score low. The decision
threshold is the mean window gamma over healthy (grade-0) readings.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateSteps,
    InsufficientData,
    MismatchedSeries,
    NoValidWindows,
    TrackTooShort,
)
from .tracks import GazeTrack, StepSeries, filtered_copy, step_lengths

DEFAULT_WINDOW = 60  # samples; 0.67 s at the 90 Hz nominal rate
DEFAULT_STRIDE = 1
MIN_FIT_STEPS = 8


@dataclass(frozen=True)
class PowerLawFitConfig:
    """Histogram geometry for the least-squares power-law fit."""

    s_min: float = 1.0
    s_max: float = 400.0
    n_bins: int = 24

    def __post_init__(self):
        if not 0 < self.s_min < self.s_max:
            raise ValueError("require 0 < s_min < s_max")
        if self.n_bins < 4:
            raise ValueError("need at least 4 bins")

    def bin_edges(self) -> np.ndarray:
        return np.geomspace(self.s_min, self.s_max, self.n_bins + 1)


@dataclass
class AttentionLevelSeries:
    """Per-window gamma values along a track, keyed by window-center sample index."""

    window_width: int
    stride: int
    gammas: list[tuple[int, float]]
    threshold: float | None = None

    def centers(self) -> np.ndarray:
        return np.array([c for c, _ in self.gammas], dtype=int)

    def values(self) -> np.ndarray:
        return np.array([g for _, g in self.gammas], dtype=float)


@dataclass
class FixationMask:
    """Per-sample keep decision for one track."""

    keep: np.ndarray

    def __post_init__(self):
        self.keep = np.asarray(self.keep, dtype=bool)

    def kept_fraction(self) -> float:
        return float(np.mean(self.keep)) if self.keep.size else 0.0


def _fit_geometry(cfg: PowerLawFitConfig):
    edges = cfg.bin_edges()
    centers = np.sqrt(edges[:-1] * edges[1:])  # geometric bin centers
    widths = np.diff(edges)
    inv_sq = centers ** -2.0
    denom = float(np.sum(centers ** -4.0))
    return edges, widths, inv_sq, denom


def _gamma_from_counts(counts, total, widths, inv_sq, denom) -> float:
    density = counts / (total * widths)
    return float(np.dot(density, inv_sq) / denom)


def _usable_steps(steps: np.ndarray, cfg: PowerLawFitConfig) -> np.ndarray:
    s = np.asarray(steps, dtype=float)
    s = np.where(s == 0.0, cfg.s_min, s)  # zero motion counts as the smallest step
    return s[(s >= cfg.s_min) & (s <= cfg.s_max)]


def fit_gamma(steps: StepSeries | np.ndarray, cfg: PowerLawFitConfig | None = None) -> float:
    """Least-squares coefficient of density(s) ~ gamma * s^-2 on log-spaced bins."""
    cfg = cfg or PowerLawFitConfig()
    raw = steps.steps if isinstance(steps, StepSeries) else steps
    s = _usable_steps(raw, cfg)
    if s.size < MIN_FIT_STEPS:
        raise InsufficientData(
            f"need >= {MIN_FIT_STEPS} steps in [{cfg.s_min}, {cfg.s_max}], got {s.size}"
        )
    edges, widths, inv_sq, denom = _fit_geometry(cfg)
    counts, _ = np.histogram(s, bins=edges)
    if np.count_nonzero(counts) < 2:
        raise DegenerateSteps("all usable steps fall into a single bin")
    return _gamma_from_counts(counts, s.size, widths, inv_sq, denom)


def _bin_indices(steps: np.ndarray, cfg: PowerLawFitConfig, edges: np.ndarray):
    """Replicates np.histogram bin assignment: left-closed bins, last bin closed."""
    s = np.where(steps == 0.0, cfg.s_min, steps)
    idx = np.searchsorted(edges, s, side="right") - 1
    idx[s == edges[-1]] = cfg.n_bins - 1
    in_range = (s >= edges[0]) & (s <= edges[-1])
    return idx, in_range


def attention_levels(
    track: GazeTrack,
    cfg: PowerLawFitConfig | None = None,
    window: int = DEFAULT_WINDOW,
    stride: int = DEFAULT_STRIDE,
) -> AttentionLevelSeries:
    """Gamma for every stride-spaced window of ``window`` consecutive samples.

    Windows whose steps cannot be fitted inherit the previous window's gamma;
    the first window must fit or its error propagates.
    """
    cfg = cfg or PowerLawFitConfig()
    if stride < 1:
        raise ValueError("stride must be >= 1")
    n = len(track.samples)
    if n < window + 1:
        raise TrackTooShort(f"need >= {window + 1} samples for window {window}, got {n}")

    steps = step_lengths(track).steps
    edges, widths, inv_sq, denom = _fit_geometry(cfg)
    idx, in_range = _bin_indices(steps, cfg, edges)

    # Cumulative per-bin counts so each window's histogram is two row lookups.
    occupancy = np.zeros((steps.size + 1, cfg.n_bins), dtype=np.int64)
    rows = np.nonzero(in_range)[0]
    occupancy[rows + 1, idx[rows]] = 1
    cum = np.cumsum(occupancy, axis=0)

    steps_per_window = window - 1
    gammas: list[tuple[int, float]] = []
    prev: float | None = None
    for pos in range(0, n - window + 1, stride):
        counts = cum[pos + steps_per_window] - cum[pos]
        total = int(counts.sum())
        if total < MIN_FIT_STEPS or np.count_nonzero(counts) < 2:
            if prev is None:
                if total < MIN_FIT_STEPS:
                    raise InsufficientData("first window has too few usable steps")
                raise DegenerateSteps("first window occupies a single bin")
            gamma = prev
        else:
            gamma = _gamma_from_counts(counts, total, widths, inv_sq, denom)
        gammas.append((pos + window // 2, gamma))
        prev = gamma
    return AttentionLevelSeries(window_width=window, stride=stride, gammas=gammas)


def pool_threshold(series_list) -> float:
    """Arithmetic mean of all window gammas pooled across series."""
    pool = [g for series in series_list for _, g in series.gammas]
    if not pool:
        raise NoValidWindows("no window gammas to pool")
    return float(np.mean(pool))


def calibrate_threshold(
    healthy_tracks,
    cfg: PowerLawFitConfig | None = None,
    window: int = DEFAULT_WINDOW,
    stride: int = DEFAULT_STRIDE,
) -> float:
    """Mean window gamma over all healthy readings; tracks that fit no window are skipped."""
    series_list = []
    for track in healthy_tracks:
        try:
            series_list.append(attention_levels(track, cfg, window=window, stride=stride))
        except (TrackTooShort, InsufficientData, DegenerateSteps):
            continue
    if not series_list:
        raise NoValidWindows("no healthy track yielded a valid window")
    return pool_threshold(series_list)


def filter_fixations(
    track: GazeTrack, levels: AttentionLevelSeries, gamma_th: float
) -> tuple[FixationMask, GazeTrack]:
    """Keep samples whose (nearest) centered window has gamma above the threshold."""
    n = len(track.samples)
    window, stride = levels.window_width, levels.stride
    if n >= window + 1:
        expected = [pos + window // 2 for pos in range(0, n - window + 1, stride)]
    else:
        expected = []
    got = [c for c, _ in levels.gammas]
    if not got or got != expected:
        raise MismatchedSeries("attention-level series does not match the track's window grid")

    values = levels.values()
    first_center = got[0]
    nearest = np.rint((np.arange(n) - first_center) / stride).astype(int)
    nearest = np.clip(nearest, 0, len(values) - 1)
    keep = values[nearest] > gamma_th
    return FixationMask(keep=keep), filtered_copy(track, keep)
