import json

import numpy as np
import pytest

from gazestudio.attention_maps import load_gamap
from gazestudio.cli import main
from gazestudio.datasets import SynthConfig, generate, load_manifest
from gazestudio.experiments import prepare_examples
from gazestudio.network import ClassifierParams, make_filter_bank, TrainConfig
from gazestudio.tracks import load_track
from gazestudio.training import read_history_csv, save_checkpoint


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli_corpus")
    manifest = generate(SynthConfig(n_train=10, n_val=5, n_test=5, track_duration_s=3.0, seed=77), out)
    return out, manifest


class TestGenerate:
    def test_writes_manifest(self, tmp_path):
        rc = main(["generate", "--out", str(tmp_path / "c"), "--seed", "1",
                   "--n-train", "4", "--n-val", "2", "--n-test", "2"])
        assert rc == 0
        manifest = load_manifest(tmp_path / "c" / "manifest.json")
        assert len(manifest.entries) == 8


class TestSegment:
    def test_report_and_filtered_track(self, corpus, tmp_path):
        out, manifest = corpus
        entry = next(e for e in manifest.entries if e.grade >= 1)
        track_path = out / entry.gaze_track_paths[0]
        out_track = tmp_path / "filtered.gaze.jsonl"
        out_report = tmp_path / "report.json"
        rc = main(["segment", "--track", str(track_path), "--healthy-dir", str(out / "tracks"),
                   "--out-track", str(out_track), "--out-report", str(out_report)])
        assert rc == 0
        report = json.loads(out_report.read_text())
        assert report["gamma_th"] > 0
        assert 0.0 < report["kept_fraction"] <= 1.0
        assert report["window"] == 60 and report["stride"] == 1
        assert all(isinstance(c, int) and g > 0 for c, g in report["gamma_series"])
        filtered = load_track(out_track)
        assert 0 < len(filtered) <= len(load_track(track_path))

    def test_missing_track_exits_2(self, corpus, tmp_path):
        out, _ = corpus
        rc = main(["segment", "--track", str(tmp_path / "ghost.gaze.jsonl"),
                   "--healthy-dir", str(out / "tracks")])
        assert rc == 2


class TestRender:
    def test_gamap_file_matches_meta_dims(self, corpus, tmp_path):
        out, manifest = corpus
        entry = manifest.entries[0]
        track_path = out / entry.gaze_track_paths[0]
        target = tmp_path / "g.gamap"
        png = tmp_path / "g.png"
        rc = main(["render", "--track", str(track_path), "--out", str(target),
                   "--radius", "30", "--sigma", "9", "--png", str(png)])
        assert rc == 0
        amap = load_gamap(target)
        assert (amap.width, amap.height) == (128, 128)
        assert amap.values.max() == pytest.approx(1.0, abs=1e-6)
        assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


class TestTrainEvaluate:
    def test_train_writes_checkpoint_and_history(self, corpus, tmp_path):
        out, _ = corpus
        cfg = {
            "manifest": str(out / "manifest.json"),
            "n_gaze": 4,
            "lambda_ac": 1.0,
            "epochs": 3,
            "learning_rate": 0.01,
            "seed": 0,
            "feature_channels": 16,
            "filter_seed": 5,
            "out_checkpoint": "ckpt.json",
            "out_history": "history.csv",
        }
        cfg_path = tmp_path / "train.json"
        cfg_path.write_text(json.dumps(cfg))
        rc = main(["train", "--config", str(cfg_path)])
        assert rc == 0
        history = read_history_csv(tmp_path / "history.csv")
        assert len(history) == 3 * 2  # train + val rows per epoch
        assert (tmp_path / "ckpt.json").exists()

        rc = main(["evaluate", "--checkpoint", str(tmp_path / "ckpt.json"),
                   "--manifest", str(out / "manifest.json"), "--split", "test"])
        assert rc == 0

    def test_evaluate_all_correct_fixture_prints_acc_one(self, corpus, tmp_path, capsys):
        out, manifest = corpus
        bank = make_filter_bank(seed=5, channels=16)
        examples = prepare_examples(manifest, "test", bank)
        # template rows guarantee correct nearest-template predictions
        pooled = {}
        for ex in examples:
            pooled.setdefault(ex.grade, ex.features.reshape(16, -1).mean(axis=1))
        weights = np.stack([pooled[c] / np.linalg.norm(pooled[c]) for c in range(5)])
        ckpt = tmp_path / "perfect.json"
        save_checkpoint(ckpt, ClassifierParams(weights=weights), bank, TrainConfig())
        rc = main(["evaluate", "--checkpoint", str(ckpt), "--manifest", str(out / "manifest.json"),
                   "--split", "test"])
        assert rc == 0
        out_text = capsys.readouterr().out
        assert "ACC=1.000" in out_text
        assert "MAE=0.000" in out_text

    def test_bad_checkpoint_exits_2(self, corpus, tmp_path):
        out, _ = corpus
        bad = tmp_path / "bad.json"
        bad.write_text("{}")
        rc = main(["evaluate", "--checkpoint", str(bad), "--manifest", str(out / "manifest.json")])
        assert rc == 2


class TestUsage:
    def test_unknown_command_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2

    def test_missing_required_flag(self):
        with pytest.raises(SystemExit) as exc:
            main(["render", "--out", "x.gamap"])
        assert exc.value.code == 2
