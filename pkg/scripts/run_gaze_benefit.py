#!/usr/bin/env python3
"""Train the classifier with and without gaze supervision and compare.

Generates (or reuses) a synthetic corpus, runs both arms over several seeds,
and prints per-seed metrics plus medians: test ACC/MAE, predicted-class
attention IoU against lesion boxes, and the final train-vs-val accuracy gap.
"""
import argparse
from pathlib import Path

import numpy as np

from gazestudio.datasets import SynthConfig, generate, load_manifest
from gazestudio.experiments import benchmark_train_config, run_gaze_benefit


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--corpus", type=Path, default=Path("benchmark_corpus"),
                        help="corpus dir; generated here if no manifest exists")
    parser.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    parser.add_argument("--n-gaze", type=int, default=100)
    parser.add_argument("--epochs", type=int, default=300)
    parser.add_argument("--learning-rate", type=float, default=1e-2)
    parser.add_argument("--corpus-seed", type=int, default=2002)
    args = parser.parse_args()

    manifest_path = args.corpus / "manifest.json"
    if manifest_path.exists():
        manifest = load_manifest(manifest_path)
        print(f"using existing corpus at {args.corpus}")
    else:
        print(f"generating corpus at {args.corpus} ...")
        manifest = generate(
            SynthConfig(n_train=200, n_val=100, n_test=200, seed=args.corpus_seed), args.corpus
        )

    cfg = benchmark_train_config(epochs=args.epochs, learning_rate=args.learning_rate)
    results = run_gaze_benefit(manifest, seeds=tuple(args.seeds), n_gaze=args.n_gaze,
                               base_cfg=cfg, n_calibration=40)

    print(f"\n{'arm':14s} {'seed':>4s} {'ACC':>6s} {'MAE':>6s} {'IoU':>6s} {'gap':>7s}")
    for arm in ("with_gaze", "without_gaze"):
        for r in results[arm]:
            print(f"{arm:14s} {r.seed:4d} {r.test_acc:6.3f} {r.test_mae:6.3f} "
                  f"{r.test_iou:6.3f} {r.overfit_gap:+7.3f}")
    for arm in ("with_gaze", "without_gaze"):
        rs = results[arm]
        print(f"median {arm:14s} ACC {np.median([r.test_acc for r in rs]):.3f}  "
              f"MAE {np.median([r.test_mae for r in rs]):.3f}  "
              f"IoU {np.median([r.test_iou for r in rs]):.3f}  "
              f"gap {np.median([r.overfit_gap for r in rs]):+.3f}")


if __name__ == "__main__":
    main()
