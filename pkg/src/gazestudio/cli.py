"""Command-line entry points: generate | segment | render | train | evaluate | serve."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .attention_maps import KernelConfig, png_bytes, render_gaze_map, save_gamap
from .datasets import SynthConfig, generate, load_manifest
from .errors import GazeStudioError
from .experiments import (
    build_gaze_maps,
    pick_supervised_ids,
    prepare_examples,
)
from .network import TrainConfig, make_filter_bank
from .segmentation import (
    DEFAULT_STRIDE,
    DEFAULT_WINDOW,
    PowerLawFitConfig,
    attention_levels,
    calibrate_threshold,
    filter_fixations,
)
from .tracks import load_track, meta_path_for, parse_track, save_track
from .training import (
    evaluate,
    load_checkpoint,
    save_checkpoint,
    train,
    write_history_csv,
)

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_VALIDATION = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gazestudio", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic benchmark corpus")
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-train", type=int, default=200)
    p.add_argument("--n-val", type=int, default=100)
    p.add_argument("--n-test", type=int, default=200)
    p.add_argument("--image-size", type=int, default=128)
    p.add_argument("--saccade-model", choices=("powerlaw", "gaussian"), default="powerlaw")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("segment", help="fixation-filter one track against healthy calibration")
    p.add_argument("--track", required=True, type=Path, help="<name>.gaze.jsonl")
    p.add_argument("--healthy-dir", required=True, type=Path)
    p.add_argument("--window", type=int, default=DEFAULT_WINDOW)
    p.add_argument("--stride", type=int, default=DEFAULT_STRIDE)
    p.add_argument("--s-min", type=float, default=1.0)
    p.add_argument("--s-max", type=float, default=400.0)
    p.add_argument("--n-bins", type=int, default=24)
    p.add_argument("--out-track", type=Path, default=None)
    p.add_argument("--out-report", type=Path, default=None)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("render", help="render a track's gaze attention map to GAMAP1")
    p.add_argument("--track", required=True, type=Path)
    p.add_argument("--meta", type=Path, default=None)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--radius", type=float, default=None, help="kernel truncation radius px")
    p.add_argument("--sigma", type=float, default=None, help="kernel sigma px")
    p.add_argument("--png", type=Path, default=None, help="also write an 8-bit grayscale view")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("train", help="train the attention-consistency classifier")
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a checkpoint on a manifest split")
    p.add_argument("--checkpoint", required=True, type=Path)
    p.add_argument("--manifest", required=True, type=Path)
    p.add_argument("--split", default="test")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("serve", help="run the session-recording HTTP service")
    p.add_argument("--config", type=Path, default=None)
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)
    p.set_defaults(func=cmd_serve)

    return parser


def cmd_generate(args) -> int:
    cfg = SynthConfig(
        image_size=args.image_size,
        n_train=args.n_train,
        n_val=args.n_val,
        n_test=args.n_test,
        saccade_model=args.saccade_model,
        seed=args.seed,
    )
    manifest = generate(cfg, args.out)
    print(f"wrote {len(manifest.entries)} entries to {args.out / 'manifest.json'}")
    return EXIT_OK


def _healthy_tracks_from_dir(directory: Path):
    tracks = []
    for path in sorted(directory.glob("*.gaze.jsonl")):
        track = load_track(path)
        if track.decision == 0:
            tracks.append(track)
    return tracks


def cmd_segment(args) -> int:
    fit_cfg = PowerLawFitConfig(s_min=args.s_min, s_max=args.s_max, n_bins=args.n_bins)
    track = load_track(args.track)
    healthy = _healthy_tracks_from_dir(args.healthy_dir)
    if not healthy:
        raise GazeStudioError(f"no grade-0 tracks found under {args.healthy_dir}")
    gamma_th = calibrate_threshold(healthy, fit_cfg, window=args.window, stride=args.stride)
    series = attention_levels(track, fit_cfg, window=args.window, stride=args.stride)
    series.threshold = gamma_th
    mask, kept = filter_fixations(track, series, gamma_th)

    stem = args.track.name.removesuffix(".gaze.jsonl")
    out_track = args.out_track or args.track.with_name(f"{stem}.filtered.gaze.jsonl")
    out_report = args.out_report or args.track.with_name(f"{stem}.segment.json")
    save_track(kept, out_track)
    report = {
        "gamma_th": gamma_th,
        "kept_fraction": mask.kept_fraction(),
        "window": args.window,
        "stride": args.stride,
        "gamma_series": [[c, g] for c, g in series.gammas],
    }
    out_report.write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    print(f"gamma_th={gamma_th:.6g} kept_fraction={mask.kept_fraction():.3f}")
    print(f"wrote {out_track} and {out_report}")
    return EXIT_OK


def cmd_render(args) -> int:
    meta_path = args.meta or meta_path_for(args.track)
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    track = parse_track(args.track.read_bytes(), meta)
    kernel = KernelConfig()
    if args.radius is not None or args.sigma is not None:
        kernel = KernelConfig(
            radius=args.radius if args.radius is not None else kernel.radius,
            sigma=args.sigma if args.sigma is not None else kernel.sigma,
        )
    amap = render_gaze_map(track.xy(), track.image_width, track.image_height, kernel)
    save_gamap(amap, args.out)
    if args.png:
        args.png.write_bytes(png_bytes(amap))
    print(f"wrote {args.out} ({track.image_width}x{track.image_height})")
    return EXIT_OK


def cmd_train(args) -> int:
    settings = json.loads(args.config.read_text(encoding="utf-8"))
    manifest_path = Path(settings["manifest"])
    if not manifest_path.is_absolute():
        manifest_path = args.config.parent / manifest_path
    manifest = load_manifest(manifest_path)

    cfg = TrainConfig(
        lambda_ac=float(settings.get("lambda_ac", 1.0)),
        learning_rate=float(settings.get("learning_rate", 1e-3)),
        batch_size=int(settings.get("batch_size", 32)),
        epochs=int(settings.get("epochs", 30)),
        seed=int(settings.get("seed", 0)) if args.seed is None else args.seed,
        use_true_class_cam=bool(settings.get("use_true_class_cam", False)),
    )
    bank = make_filter_bank(
        seed=int(settings.get("filter_seed", 7)), channels=int(settings.get("feature_channels", 64))
    )
    train_set = prepare_examples(manifest, settings.get("train_split", "train"), bank)
    val_set = prepare_examples(manifest, settings.get("val_split", "val"), bank)

    gaze_maps = {}
    n_gaze = int(settings.get("n_gaze", 0))
    if cfg.lambda_ac > 0 and n_gaze > 0:
        healthy = _healthy_tracks_for_split(manifest, settings.get("train_split", "train"))
        gamma_th = calibrate_threshold(healthy)
        kernel = None
        if "kernel" in settings:
            kernel = KernelConfig(**settings["kernel"])
        supervised = pick_supervised_ids(manifest, settings.get("train_split", "train"), n_gaze)
        gaze_maps = build_gaze_maps(manifest, supervised, gamma_th, kernel)

    params, history = train(train_set, gaze_maps, cfg, val_set)

    out_ckpt = Path(settings.get("out_checkpoint", "checkpoint.json"))
    out_hist = Path(settings.get("out_history", "history.csv"))
    if not out_ckpt.is_absolute():
        out_ckpt = args.config.parent / out_ckpt
    if not out_hist.is_absolute():
        out_hist = args.config.parent / out_hist
    save_checkpoint(out_ckpt, params, bank, cfg)
    write_history_csv(out_hist, history)
    final = [h for h in history if h.split == ("val" if val_set else "train")][-1]
    print(f"trained {cfg.epochs} epochs; final {final.split} ACC={final.acc:.3f} MAE={final.mae:.3f}")
    print(f"wrote {out_ckpt} and {out_hist}")
    return EXIT_OK


def _healthy_tracks_for_split(manifest, split):
    from .experiments import corpus_tracks

    split_ids = set(manifest.splits.get(split, ()))
    return [t for e, t, _ in corpus_tracks(manifest, grades={0}) if e.image_id in split_ids]


def cmd_evaluate(args) -> int:
    params, bank, _ = load_checkpoint(args.checkpoint)
    manifest = load_manifest(args.manifest)
    examples = prepare_examples(manifest, args.split, bank)
    result = evaluate(params, examples)
    iou_txt = f"{result.mean_iou:.3f}" if result.mean_iou is not None else "n/a"
    print(f"ACC={result.acc:.3f} MAE={result.mae:.3f} mean_attention_IoU={iou_txt} n={result.n}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app, load_service_config, resolve_config_path

    config_path = resolve_config_path(str(args.config) if args.config else None)
    config = load_service_config(config_path)
    host = args.host or config.host
    port = args.port if args.port is not None else config.port
    uvicorn.run(create_app(config), host=host, port=port)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except GazeStudioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
