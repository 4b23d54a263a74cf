"""Command-line front end: detect, eval, phantom, bench.

Exit codes: 0 ok, 1 unexpected failure, 2 bad arguments, 3 missing file,
4 dimension mismatch, 5 bad config, 6 unreadable slice, 7 missing ground
truth, 8 empty manifest.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import report, stackio
from .config import ConfigError, RunConfig, field_types, load_config
from .evaluate import (MissingTruthError, StackAnalysis, ablation_table, min_size_sweep,
                       score_masks, summary_csv)
from .phantom import PhantomConfig, generate
from .pipeline import detect_volume

log = logging.getLogger("wmidetect")

EXIT_CONFIG = 5
EXIT_MISSING_TRUTH = 7

# single-thread targets for a 96x112 slice, and the 2x budget used by bench
TARGET_COARSE_MS = 210.0
TARGET_FINE_MS = 6.0
TARGET_VOLUME_S = 41.5
BENCH_SLACK = 2.0


def add_config_flags(parser: argparse.ArgumentParser) -> None:
    """One flag per RunConfig key; defaults are None so only given flags override."""
    parser.add_argument("--config", help="key=value config file")
    for name, kind in field_types().items():
        flag = "--" + name.replace("_", "-")
        if kind is bool:
            parser.add_argument(flag, dest=name, action=argparse.BooleanOptionalAction, default=None)
        else:
            parser.add_argument(flag, dest=name, type=kind, default=None, metavar=name.upper())


def config_from_args(args) -> RunConfig:
    overrides = {name: getattr(args, name, None) for name in field_types()}
    return load_config(args.config, **overrides)


def _r(v: float) -> float:
    return round(float(v), 6)


def _candidate_json(c) -> dict:
    return {"centroid": [_r(c.centroid[0]), _r(c.centroid[1])], "size": int(c.size),
            "mean_dp": _r(c.mean_dp)}


def run_summary(manifest, cfg: RunConfig, result) -> dict:
    """Deterministic run summary; wall-clock timings live in timing.json."""
    slices = []
    for i, (co, fi) in enumerate(zip(result.coarse, result.fine.per_slice)):
        row = {"slice_index": i, "file": manifest.slices[i].name, "status": co.status,
               "candidates": [_candidate_json(c) for c in co.candidates],
               "confirmed": [_candidate_json(c) for c in fi.confirmed]}
        if co.stats is not None:
            row["wm_median"] = _r(co.stats.median)
            row["wm_mad"] = _r(co.stats.mad)
        slices.append(row)
    return {
        "stack_id": manifest.stack_id,
        "slice_count": len(result.coarse),
        "validated": result.fine.validated,
        "confirmed_total": sum(len(s.confirmed) for s in result.fine.per_slice),
        "recovered": [{"slice_index": r.slice_index, "centroid": [_r(r.centroid[0]), _r(r.centroid[1])]}
                      for r in result.fine.recovered],
        "config": dataclasses.asdict(cfg.replace(threads=1, out="")),
        "slices": slices,
    }


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def cmd_detect(args) -> int:
    cfg = config_from_args(args)
    manifest = stackio.parse_manifest(args.manifest)
    stack = stackio.load_stack(manifest)
    result = detect_volume(stack.slices, cfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    for i, img in enumerate(stack.slices):
        confirmed = result.confirmed_mask(i)
        stackio.write_pgm(out / f"slice_{i:04d}_candidates.pgm", result.candidate_mask(i))
        stackio.write_pgm(out / f"slice_{i:04d}_confirmed.pgm", confirmed)
        if cfg.overlays:
            stackio.write_overlay(out / f"slice_{i:04d}_overlay.ppm", img, confirmed)
    _write_json(out / "summary.json", run_summary(manifest, cfg, result))
    timing = result.timings.as_dict()
    _write_json(out / "timing.json", timing)
    print(f"{len(stack.slices)} slices, {sum(len(s.confirmed) for s in result.fine.per_slice)} confirmed "
          f"objects; coarse {timing['coarse_ms_per_slice']:.1f} ms/slice, "
          f"fine {timing['fine_ms_per_slice']:.2f} ms/slice -> {out}")
    return 0


def _pred_path(pred_dir: Path, i: int, truth: Path | None) -> Path:
    if truth is not None and (pred_dir / truth.name).exists():
        return pred_dir / truth.name
    return pred_dir / f"slice_{i:04d}_confirmed.pgm"


def cmd_eval(args) -> int:
    cfg = config_from_args(args)
    manifest = stackio.parse_manifest(args.manifest)
    stack = stackio.load_stack(manifest, require_truth=True)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)

    analysis = StackAnalysis(stack.slices, stack.truths, cfg)
    if args.pred:
        pred_dir = Path(args.pred)
        preds = []
        for i, t in enumerate(manifest.truths):
            p = stackio.read_mask(_pred_path(pred_dir, i, t))
            if p.shape != stack.shape:
                raise stackio.DimensionMismatchError(f"prediction {i} does not match slice size")
            preds.append(p)
        main = score_masks(preds, stack.truths, analysis.brains, "pred")
    else:
        main = analysis.report("both" if cfg.size_constraint and cfg.distance_constraint else
                               "size" if cfg.size_constraint else
                               "distance" if cfg.distance_constraint else "none")
    (out / "metrics.csv").write_text(main.to_csv())
    sys.stdout.write(main.to_csv())

    if args.ablation:
        reps = ablation_table(analysis)
        text = summary_csv(reps)
        (out / "ablation.csv").write_text(text)
        report.metrics_bars(reps, out / "ablation.png", "constraint ablation")
        sys.stdout.write("\n" + text)
    if args.min_size_sweep:
        reps = min_size_sweep(analysis)
        text = summary_csv(reps, trend=True)
        (out / "min_size_sweep.csv").write_text(text)
        report.sweep_lines(reps, out / "min_size_sweep.png")
        sys.stdout.write("\n" + text)
    return 0


def phantom_config_from_args(args) -> PhantomConfig:
    return PhantomConfig(width=args.width, height=args.height, slice_count=args.slices,
                         rng_seed=args.seed, noise_sigma=args.noise_sigma,
                         ventricle_shape=args.ventricle_shape, lesion_count=args.lesions,
                         decoy_count=args.decoys, skull=not args.no_skull)


def cmd_phantom(args) -> int:
    try:
        stack = generate(phantom_config_from_args(args))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    path = stackio.write_stack(stack, args.out, stack_id=f"phantom-{args.seed}")
    print(f"wrote {len(stack)} slices, {len(stack.lesions)} lesions, {len(stack.decoys)} decoys -> {path}")
    return 0


def cmd_bench(args) -> int:
    cfg = config_from_args(args)
    pcfg = PhantomConfig(slice_count=args.slices, rng_seed=args.phantom_seed)
    stack = generate(pcfg)
    t0 = time.perf_counter()
    result = detect_volume(stack.slices, cfg)
    wall = time.perf_counter() - t0
    timing = result.timings.as_dict()
    timing["wall_s"] = round(wall, 3)
    timing["threads"] = cfg.threads
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "timing.json", timing)
    report.timing_bars(timing, out / "timing.png")

    scale = args.slices / 192
    checks = [
        ("coarse ms/slice", timing["coarse_ms_per_slice"], TARGET_COARSE_MS),
        ("fine ms/slice", timing["fine_ms_per_slice"], TARGET_FINE_MS),
        ("volume s", wall, TARGET_VOLUME_S * scale),
    ]
    ok = True
    for name, actual, target in checks:
        passed = actual <= BENCH_SLACK * target
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'}  {name}: {actual:.3f} (target {target:.3f}, "
              f"limit {BENCH_SLACK * target:.3f})")
    return 0 if ok or not args.strict else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wmidetect",
                                     description="White-matter hyperintensity detection on slice stacks")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="run coarse + fine detection on a manifest")
    p.add_argument("manifest")
    add_config_flags(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("eval", help="score detections against ground truth")
    p.add_argument("manifest")
    p.add_argument("--pred", help="directory of predicted masks instead of running detection")
    p.add_argument("--ablation", action="store_true", help="also emit the four-mode constraint table")
    p.add_argument("--min-size-sweep", action="store_true", help="also emit the minimum-size sweep")
    add_config_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("phantom", help="generate a synthetic stack with ground truth")
    p.add_argument("out")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--slices", type=int, default=12)
    p.add_argument("--width", type=int, default=96)
    p.add_argument("--height", type=int, default=112)
    p.add_argument("--lesions", type=int, default=3)
    p.add_argument("--decoys", type=int, default=5)
    p.add_argument("--noise-sigma", type=float, default=0.8)
    p.add_argument("--ventricle-shape", choices=("simple", "lobed"), default="simple")
    p.add_argument("--no-skull", action="store_true")
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("bench", help="time the pipeline on a phantom volume")
    p.add_argument("--slices", type=int, default=192)
    p.add_argument("--phantom-seed", type=int, default=0)
    p.add_argument("--strict", action="store_true", help="exit 1 when a timing exceeds twice its target")
    add_config_flags(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except stackio.StackError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MissingTruthError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING_TRUTH


if __name__ == "__main__":
    sys.exit(main())
