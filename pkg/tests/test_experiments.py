import numpy as np
import pytest

from gazestudio.datasets import SynthConfig, generate
from gazestudio.experiments import (
    benchmark_train_config,
    build_gaze_maps,
    localization_improvement,
    pick_supervised_ids,
    prepare_examples,
    segmentation_scores,
)
from gazestudio.network import make_filter_bank
from gazestudio.segmentation import calibrate_threshold
from gazestudio.tracks import load_track


@pytest.fixture(scope="module")
def small_corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("exp_corpus")
    return generate(SynthConfig(n_train=40, n_val=10, n_test=10, seed=55), out)


def test_segmentation_scores_smoke(small_corpus):
    scores = segmentation_scores(small_corpus, n_calibration=8)
    assert scores["n_tracks"] >= 30
    assert scores["precision"] > 0.8
    assert scores["recall"] > 0.8


def test_segmentation_robust_to_off_model_saccades(tmp_path):
    # gaussian-step saccades are outside the fitted power-law family
    manifest = generate(
        SynthConfig(n_train=40, n_val=0, n_test=0, saccade_model="gaussian", seed=66),
        tmp_path / "gauss",
    )
    scores = segmentation_scores(manifest, n_calibration=8)
    assert scores["precision"] > 0.8
    assert scores["recall"] > 0.8


def test_localization_direction_smoke(small_corpus):
    result = localization_improvement(small_corpus, n_calibration=8)
    assert len(result["raw_ious"]) >= 30
    assert result["filtered_ious"].mean() > result["raw_ious"].mean()


def test_prepare_examples_carries_boxes_and_dims(small_corpus):
    bank = make_filter_bank(seed=3, channels=16)
    examples = prepare_examples(small_corpus, "val", bank)
    assert len(examples) == 10
    for ex in examples:
        assert ex.features.shape == (16, 16, 16)
        assert ex.image_width == ex.image_height == 128
        if ex.grade > 0:
            assert ex.boxes


def test_pick_supervised_ids_balanced(small_corpus):
    picked = pick_supervised_ids(small_corpus, "train", 16)
    assert len(picked) == 16
    grades = [small_corpus.entry(i).grade for i in picked]
    counts = np.bincount(grades, minlength=5)
    assert counts[0] == 0
    assert counts[1:].max() - counts[1:].min() <= 1


def test_build_gaze_maps_are_normalized_grids(small_corpus):
    healthy = [load_track(small_corpus.resolve(e.gaze_track_paths[0]))
               for e in small_corpus.entries_for("train") if e.grade == 0]
    gamma_th = calibrate_threshold(healthy)
    ids = pick_supervised_ids(small_corpus, "train", 8)
    maps = build_gaze_maps(small_corpus, ids, gamma_th)
    assert maps
    for g in maps.values():
        assert g.shape == (16, 16)
        assert g.max() == pytest.approx(1.0)
        assert g.min() >= 0.0


def test_benchmark_train_config_overrides():
    cfg = benchmark_train_config(seed=9, lambda_ac=0.0)
    assert cfg.learning_rate == 1e-2
    assert cfg.epochs == 300
    assert cfg.seed == 9
    assert cfg.lambda_ac == 0.0
