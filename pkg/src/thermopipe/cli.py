"""Command-line entry point: calibrate / correct / synth / evaluate / bench / dataset-stats.

Exit codes: 0 success, 1 domain error, 2 usage error. Reports go to --out
or stdout as JSON; human diagnostics go to stderr. Every subcommand is
reproducible: the same inputs and --seed produce byte-identical reports
(bench wall-clock timing fields are measurements and the one exception).
Set THERMOPIPE_LOG=debug|info|warning for verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import shlex
import sys
from pathlib import Path

import numpy as np

from . import bench as bench_mod
from . import dataset as dataset_mod
from . import detectors as det_mod
from . import frames as frames_mod
from . import metrics as metrics_mod
from . import nuc as nuc_mod
from . import pipeline as pipeline_mod
from . import synth as synth_mod

log = logging.getLogger("thermopipe")

_DOMAIN_ERRORS = (
    ValueError,
    OSError,
    KeyError,
    nuc_mod.CalibrationError,
    pipeline_mod.PipelineError,
    det_mod.DetectorError,
    dataset_mod.AnnotationError,
    bench_mod.BenchError,
)


class UsageError(Exception):
    """Bad command line; maps to exit code 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2); raise instead
        raise UsageError(message)


def _unit_interval(text: str) -> float:
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"{value} outside [0, 1]")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"{value} must be >= 1")
    return value


def _nonneg_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"{value} must be >= 0")
    return value


def build_parser() -> _Parser:
    parser = _Parser(prog="thermopipe", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("synth", parents=[], help="generate a synthetic sensor corpus")
    p.add_argument("--out", required=True, help="output corpus directory")
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.add_argument("--width", type=_positive_int, default=160)
    p.add_argument("--height", type=_positive_int, default=120)
    p.add_argument("--gain-range", nargs=2, type=float, default=(0.8, 1.2), metavar=("LO", "HI"))
    p.add_argument("--offset-range", nargs=2, type=float, default=(-200.0, 200.0), metavar=("LO", "HI"))
    p.add_argument("--bad-count", type=_nonneg_int, default=10)
    p.add_argument("--noise-sigma", type=float, default=5.0)
    p.add_argument("--ref-frames", type=_positive_int, default=8, help="frames per reference stack")
    p.add_argument("--cold-temp", type=float, default=20.0)
    p.add_argument("--hot-temp", type=float, default=40.0)
    p.add_argument("--scenes", type=_nonneg_int, default=12)
    p.add_argument("--report", help="write the synth report JSON here instead of stdout")

    p = sub.add_parser("calibrate", help="build a two-point calibration from reference stacks")
    p.add_argument("--cold", required=True, help="directory of cold reference frames")
    p.add_argument("--hot", required=True, help="directory of hot reference frames")
    p.add_argument("--cold-temp", type=float, default=20.0)
    p.add_argument("--hot-temp", type=float, default=40.0)
    p.add_argument("--select", type=_positive_int, help="keep only the N most uniform frames per stack")
    p.add_argument("--dead-threshold", type=float, default=nuc_mod.DEAD_RESPONSE_THRESHOLD)
    p.add_argument("--gain-min", type=float, default=nuc_mod.GAIN_BOUNDS[0])
    p.add_argument("--gain-max", type=float, default=nuc_mod.GAIN_BOUNDS[1])
    p.add_argument("--max-bad-fraction", type=_unit_interval, default=nuc_mod.MAX_BAD_FRACTION)
    p.add_argument("--validate", help="directory of a held-out uniform stack to score after correction")
    p.add_argument("--out", required=True, help="calibration JSON path (binary sidecar sits next to it)")
    p.add_argument("--report", help="write the calibration report JSON here instead of stdout")

    p = sub.add_parser("correct", help="run the correction pipeline over a frame directory")
    p.add_argument("--frames", required=True, help="directory of raw 16-bit frames")
    p.add_argument("--calibration", help="calibration JSON from `calibrate`")
    p.add_argument("--config", help="pipeline config JSON (overrides the individual flags)")
    p.add_argument("--out", required=True, help="output directory for corrected/display frames")
    p.add_argument("--agc-low", type=float, default=1.0)
    p.add_argument("--agc-high", type=float, default=99.0)
    p.add_argument("--bpr-threshold", type=float, default=pipeline_mod.BPR_THRESHOLD_ADU)
    p.add_argument("--bpr-confirm", type=_positive_int, default=pipeline_mod.BPR_CONFIRM_FRAMES)
    p.add_argument("--td-mode", choices=("windowed", "exponential"), default="windowed")
    p.add_argument("--td-window", type=_positive_int, default=pipeline_mod.TD_WINDOW)
    p.add_argument("--td-alpha", type=float, default=0.5)
    p.add_argument("--gain-map", help=".npy flat-field map to apply in the gain stage")
    p.add_argument(
        "--disable-stage",
        action="append",
        default=[],
        choices=("nuc", "gain", "bpr", "td"),
        help="turn a stage off (repeatable); order is fixed either way",
    )
    p.add_argument("--report", help="write the correction report JSON here instead of stdout")

    p = sub.add_parser("evaluate", help="run a detector over a dataset and score it")
    p.add_argument("--dataset", required=True, help="dataset root (images/ + labels/)")
    p.add_argument(
        "--detector",
        action="append",
        required=True,
        help="'stub' or an adapter command line; repeat for ensemble members",
    )
    p.add_argument("--conf", type=_unit_interval, default=0.2)
    p.add_argument("--iou", type=_unit_interval, default=0.4)
    p.add_argument("--strategy", choices=("na", "tta", "ensemble"), default="na")
    p.add_argument("--fusion-iou", type=_unit_interval, default=det_mod.DEFAULT_FUSION_IOU)
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.add_argument("--stub-drop", type=_unit_interval, default=0.0)
    p.add_argument("--stub-jitter", type=float, default=0.0)
    p.add_argument("--stub-conf", type=_unit_interval, default=0.9)
    p.add_argument("--threshold-grid", action="store_true",
                   help="evaluate the standard (conf, IoU) grid in one run")
    p.add_argument("--ap-mode", choices=metrics_mod.AP_MODES, default="all-point")
    p.add_argument("--timeout", type=float, default=det_mod.DEFAULT_ADAPTER_TIMEOUT)
    p.add_argument("--csv", action="store_true", help="emit a CSV row next to the JSON report")
    p.add_argument("--out", help="write the report JSON here instead of stdout")

    p = sub.add_parser("bench", help="measure detector FPS and latency percentiles")
    p.add_argument("--frames", required=True, help="directory of frames or a dataset root")
    p.add_argument("--detector", action="append", required=True)
    p.add_argument("--strategy", choices=("na", "tta", "ensemble"), default="na")
    p.add_argument("--conf", type=_unit_interval, default=0.2)
    p.add_argument("--iou", type=_unit_interval, default=0.4)
    p.add_argument("--fusion-iou", type=_unit_interval, default=det_mod.DEFAULT_FUSION_IOU)
    p.add_argument("--warmup", type=_nonneg_int, default=bench_mod.DEFAULT_WARMUP)
    p.add_argument("--limit", type=_positive_int, help="benchmark at most N frames")
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.add_argument("--stub-drop", type=_unit_interval, default=0.0)
    p.add_argument("--stub-jitter", type=float, default=0.0)
    p.add_argument("--stub-conf", type=_unit_interval, default=0.9)
    p.add_argument("--thermal", help="thermal-zone snapshot file to attach")
    p.add_argument("--warn-temp", type=float, default=bench_mod.DEFAULT_WARN_C)
    p.add_argument("--critical-temp", type=float, default=bench_mod.DEFAULT_CRITICAL_C)
    p.add_argument("--baseline", help="baseline BenchReport JSON for the speedup ratio")
    p.add_argument("--timeout", type=float, default=det_mod.DEFAULT_ADAPTER_TIMEOUT)
    p.add_argument("--csv", action="store_true")
    p.add_argument("--out", help="write the report JSON here instead of stdout")

    p = sub.add_parser("dataset-stats", help="per-class and per-tag corpus statistics")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", help="write the stats JSON here instead of stdout")

    return parser


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    return build_parser().parse_args(argv)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _json_doc(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _load_frame_dir(path: Path) -> list[frames_mod.RawFrame]:
    files = sorted(
        p for p in path.iterdir() if p.suffix.lower() in dataset_mod.IMAGE_SUFFIXES
    )
    if not files:
        raise ValueError(f"no frames found in {path}")
    return [frames_mod.load_frame_16(p, frame_index=i) for i, p in enumerate(files)]


# ---------------------------------------------------------------------------
# synth


def _cmd_synth(args) -> int:
    out = Path(args.out).resolve()
    sensor = synth_mod.make_sensor(
        seed=args.seed,
        width=args.width,
        height=args.height,
        gain_range=tuple(args.gain_range),
        offset_range=tuple(args.offset_range),
        bad_count=args.bad_count,
        noise_sigma=args.noise_sigma,
    )
    (out / "refs" / "cold").mkdir(parents=True, exist_ok=True)
    (out / "refs" / "hot").mkdir(parents=True, exist_ok=True)
    (out / "images").mkdir(parents=True, exist_ok=True)
    (out / "labels").mkdir(parents=True, exist_ok=True)
    k = args.ref_frames
    for i in range(k):
        cold = synth_mod.uniform_frame(sensor, args.cold_temp, frame_index=i)
        hot = synth_mod.uniform_frame(sensor, args.hot_temp, frame_index=k + i)
        frames_mod.store_frame_16(cold, out / "refs" / "cold" / f"ref_{i:03d}.pgm")
        frames_mod.store_frame_16(hot, out / "refs" / "hot" / f"ref_{i:03d}.pgm")
    scene_rng = np.random.Generator(
        np.random.Philox(key=np.array([args.seed, 2**62], dtype=np.uint64))
    )
    tags = {}
    tag_cycle = ("day", "evening", "night")
    total_objects = 0
    for s in range(args.scenes):
        n_objects = int(scene_rng.integers(0, 5))
        objects = []
        for _ in range(n_objects):
            box = dataset_mod.GroundTruthBox(
                class_id=int(scene_rng.integers(0, len(dataset_mod.DEFAULT_CLASS_NAMES))),
                cx=float(scene_rng.uniform(0.15, 0.85)),
                cy=float(scene_rng.uniform(0.15, 0.85)),
                w=float(scene_rng.uniform(0.08, 0.30)),
                h=float(scene_rng.uniform(0.08, 0.30)),
            )
            objects.append(
                synth_mod.SceneObject(
                    box=box, apparent_temperature=float(scene_rng.uniform(30.0, 45.0))
                )
            )
        total_objects += n_objects
        frame, truths = synth_mod.scene_frame(
            sensor, objects, background_temperature=20.0, frame_index=1000 + s
        )
        stem = f"scene_{s:03d}"
        frames_mod.store_frame_16(frame, out / "images" / f"{stem}.pgm")
        dataset_mod.write_label_file(truths, out / "labels" / f"{stem}.txt")
        tags[stem] = tag_cycle[s % 3]
    (out / "tags.json").write_text(
        json.dumps(tags, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    truth_doc = {
        "seed": args.seed,
        "width": args.width,
        "height": args.height,
        "gain_range": list(args.gain_range),
        "offset_range": list(args.offset_range),
        "noise_sigma": args.noise_sigma,
        "bad_pixels": [
            {"x": bp.x, "y": bp.y, "mode": bp.mode} for bp in sensor.bad_pixels
        ],
        "response_model": {
            "base_offset_adu": synth_mod.BASE_OFFSET_ADU,
            "adu_per_degree": synth_mod.ADU_PER_DEGREE,
            "domain_c": list(synth_mod.TEMPERATURE_DOMAIN),
        },
        "rng": "philox4x64 keyed by (seed, stream)",
    }
    (out / "sensor_truth.json").write_text(_json_doc(truth_doc), encoding="utf-8")
    report = {
        "command": "synth",
        "seed": args.seed,
        "geometry": [args.width, args.height],
        "reference_frames_per_stack": k,
        "reference_temperatures_c": [args.cold_temp, args.hot_temp],
        "scene_frames": args.scenes,
        "objects": total_objects,
        "bad_pixels": args.bad_count,
    }
    _emit(_json_doc(report), args.report)
    return 0


# ---------------------------------------------------------------------------
# calibrate


def _cmd_calibrate(args) -> int:
    cold_frames = _load_frame_dir(Path(args.cold).resolve())
    hot_frames = _load_frame_dir(Path(args.hot).resolve())
    if args.select:
        cold_frames = nuc_mod.select_references(cold_frames, min(args.select, len(cold_frames)))
        hot_frames = nuc_mod.select_references(hot_frames, min(args.select, len(hot_frames)))
    cal = nuc_mod.build_two_point(
        nuc_mod.ReferenceStack(tuple(cold_frames), args.cold_temp),
        nuc_mod.ReferenceStack(tuple(hot_frames), args.hot_temp),
        dead_response_threshold=args.dead_threshold,
        gain_bounds=(args.gain_min, args.gain_max),
        max_bad_fraction=args.max_bad_fraction,
    )
    out = Path(args.out).resolve()
    out.parent.mkdir(parents=True, exist_ok=True)
    nuc_mod.save_calibration(cal, out)
    report = {
        "command": "calibrate",
        "geometry": [cal.width, cal.height],
        "reference_temperatures_c": [cal.t_cold, cal.t_hot],
        "targets_adu": [cal.target_cold, cal.target_hot],
        "bad_count": int(cal.bad_mask.sum()),
        "bad_fraction": cal.bad_fraction,
        "gain_mean": float(cal.gain.mean()),
        "frames_used": [len(cold_frames), len(hot_frames)],
    }
    if args.validate:
        stack = _load_frame_dir(Path(args.validate).resolve())
        live = ~cal.bad_mask  # bad pixels pass raw through NUC; repair is downstream
        residuals = []
        trimmed = []
        for f in stack:
            values = nuc_mod.apply_nuc(cal, f).values[live]
            mean = float(values.mean())
            residuals.append(float(values.std()) / mean if mean else float("inf"))
            # Defective pixels the two-point screen cannot catch (erratic
            # responders) are repaired downstream, not here; the trimmed CV
            # scores the affine population.
            lo, hi = np.percentile(values, [1.0, 99.0])
            core = values[(values >= lo) & (values <= hi)]
            trimmed.append(float(core.std() / core.mean()) if core.mean() else float("inf"))
        report["validation_uniformity"] = {
            "frames": len(stack),
            "mean_cv": float(np.mean(residuals)),
            "worst_cv": float(np.max(residuals)),
            "worst_cv_trimmed": float(np.max(trimmed)),
        }
    _emit(_json_doc(report), args.report)
    return 0


# ---------------------------------------------------------------------------
# correct


def _cmd_correct(args) -> int:
    if args.config:
        config = pipeline_mod.load_pipeline_config(Path(args.config).resolve())
    else:
        if not args.calibration:
            raise UsageError("correct needs --calibration (or a --config file)")
        toggles = pipeline_mod.StageToggles(
            nuc="nuc" not in args.disable_stage,
            gain="gain" not in args.disable_stage,
            bpr="bpr" not in args.disable_stage,
            td="td" not in args.disable_stage,
        )
        gain_map = None
        if args.gain_map:
            gain_map = pipeline_mod.GainMap(values=np.load(Path(args.gain_map).resolve()))
        config = pipeline_mod.PipelineConfig(
            calibration=nuc_mod.load_calibration(Path(args.calibration).resolve()),
            agc=pipeline_mod.AgcParams(args.agc_low, args.agc_high),
            bpr=pipeline_mod.BprConfig(args.bpr_threshold, args.bpr_confirm),
            td=pipeline_mod.TdConfig(args.td_mode, args.td_window, args.td_alpha),
            stages=toggles,
            gain_map=gain_map,
        )
    frames_dir = Path(args.frames).resolve()
    raw_frames = _load_frame_dir(frames_dir)
    names = sorted(
        p.stem for p in frames_dir.iterdir() if p.suffix.lower() in dataset_mod.IMAGE_SUFFIXES
    )
    out = Path(args.out).resolve()
    (out / "corrected").mkdir(parents=True, exist_ok=True)
    (out / "display").mkdir(parents=True, exist_ok=True)
    per_frame = []
    for name, (corrected, display) in zip(
        names, pipeline_mod.run_pipeline(config, raw_frames)
    ):
        frames_mod.store_frame_16(corrected, out / "corrected" / f"{name}.pgm")
        frames_mod.store_frame_8(display, out / "display" / f"{name}.pgm")
        stats = frames_mod.frame_stats(corrected)
        per_frame.append(
            {"frame": name, "mean": stats.mean, "stddev": stats.stddev}
        )
    report = {
        "command": "correct",
        "frames": len(per_frame),
        "stages": {
            "nuc": config.stages.nuc,
            "gain": config.stages.gain and config.gain_map is not None,
            "bpr": config.stages.bpr,
            "td": config.stages.td,
        },
        "per_frame": per_frame,
    }
    _emit(_json_doc(report), args.report)
    return 0


# ---------------------------------------------------------------------------
# evaluate / bench share detector construction


def _make_detectors(args) -> list:
    detectors = []
    for i, spec_text in enumerate(args.detector):
        if spec_text == "stub":
            spec = det_mod.StubSpec(
                seed=args.seed + i,
                drop_rate=args.stub_drop,
                jitter=args.stub_jitter,
                confidence=(args.stub_conf, args.stub_conf),
            )
            detectors.append(det_mod.StubDetector(spec, name=f"stub-{i}"))
        else:
            detectors.append(
                det_mod.ExternalDetector(
                    det_mod.ExternalSpec(
                        command=tuple(shlex.split(spec_text)), timeout=args.timeout
                    )
                )
            )
    return detectors


def _strategy_runner(args, detectors):
    if args.strategy == "ensemble":
        cfg = det_mod.EnsembleConfig(fusion_iou=args.fusion_iou)
        return lambda ref, conf: det_mod.infer_ensemble(detectors, ref, conf, cfg)
    if len(detectors) != 1:
        raise UsageError(
            f"strategy '{args.strategy}' takes exactly one --detector "
            f"(got {len(detectors)}); use --strategy ensemble for several"
        )
    if args.strategy == "tta":
        cfg = det_mod.TtaConfig(fusion_iou=args.fusion_iou)
        return lambda ref, conf: det_mod.infer_tta(detectors[0], ref, conf, cfg)
    return lambda ref, conf: det_mod.infer_na(detectors[0], ref, conf, args.fusion_iou)


def _close_detectors(detectors) -> None:
    for d in detectors:
        close = getattr(d, "close", None)
        if close:
            close()


def _cmd_evaluate(args) -> int:
    ds = dataset_mod.load_dataset(Path(args.dataset).resolve())
    if not ds.samples:
        raise ValueError(f"dataset under {args.dataset} has no images")
    detectors = _make_detectors(args)
    runner = _strategy_runner(args, detectors)
    configs = (
        list(metrics_mod.THRESHOLD_GRID)
        if args.threshold_grid
        else [metrics_mod.EvalConfig(args.conf, args.iou)]
    )
    # Detector calls are threshold-independent here: run once at the lowest
    # cutoff, then filter per config inside evaluate.
    min_conf = min(c.conf_threshold for c in configs)
    try:
        per_image = [
            runner(
                det_mod.ImageRef(
                    image_id=s.image_path.stem, path=s.image_path, truths=s.truths
                ),
                min_conf,
            )
            for s in ds.samples
        ]
    finally:
        _close_detectors(detectors)
    reports = [
        metrics_mod.evaluate(per_image, ds, cfg, ap_mode=args.ap_mode) for cfg in configs
    ]
    if args.threshold_grid:
        doc = {"command": "evaluate", "grid": [r.to_dict() for r in reports]}
    else:
        doc = {"command": "evaluate", **reports[0].to_dict()}
    text = _json_doc(doc)
    if args.csv:
        rows = [metrics_mod.CSV_HEADER] + [r.csv_row() for r in reports]
        text += "\n".join(rows) + "\n"
    _emit(text, args.out)
    return 0


def _cmd_bench(args) -> int:
    root = Path(args.frames).resolve()
    if (root / "images").is_dir():
        ds = dataset_mod.load_dataset(root)
        refs = [
            det_mod.ImageRef(image_id=s.image_path.stem, path=s.image_path, truths=s.truths)
            for s in ds.samples
        ]
    else:
        files = sorted(
            p for p in root.iterdir() if p.suffix.lower() in dataset_mod.IMAGE_SUFFIXES
        )
        refs = [det_mod.ImageRef(image_id=p.stem, path=p) for p in files]
    if args.limit:
        refs = refs[: args.limit]
    if not refs:
        raise ValueError(f"no frames found under {root}")
    detectors = _make_detectors(args)
    runner = _strategy_runner(args, detectors)
    try:
        report = bench_mod.measure_fps(
            lambda ref: runner(ref, args.conf), refs, warmup=args.warmup
        )
    finally:
        _close_detectors(detectors)
    doc = {"command": "bench", **report.to_dict()}
    if args.baseline:
        baseline = bench_mod.BenchReport.from_dict(
            json.loads(Path(args.baseline).read_text(encoding="utf-8"))
        )
        doc["speedup_vs_baseline"] = bench_mod.compare_speedup(report, baseline)
    if args.thermal:
        readings = bench_mod.parse_thermal_zones(
            Path(args.thermal).read_text(encoding="utf-8")
        )
        limits = {"default": bench_mod.ZoneLimits(args.warn_temp, args.critical_temp)}
        status = bench_mod.throttle_check(readings, limits)
        doc["thermal"] = [
            {"zone": r.zone, "temperature_c": r.temperature_c} for r in readings
        ]
        doc["throttle"] = status.to_dict()
    text = _json_doc(doc)
    if args.csv:
        text += f"{metrics_mod.CSV_HEADER}\n,,,{report.fps_exact:.2f}\n"
    _emit(text, args.out)
    return 0


def _cmd_dataset_stats(args) -> int:
    ds = dataset_mod.load_dataset(Path(args.dataset).resolve())
    stats = dataset_mod.dataset_stats(ds)
    doc = {
        "command": "dataset-stats",
        "frame_count": stats.frame_count,
        "class_counts": stats.class_counts,
        "tag_frame_counts": stats.tag_frame_counts,
        "tag_percentages": stats.tag_percentages,
    }
    _emit(_json_doc(doc), args.out)
    return 0


_HANDLERS = {
    "synth": _cmd_synth,
    "calibrate": _cmd_calibrate,
    "correct": _cmd_correct,
    "evaluate": _cmd_evaluate,
    "bench": _cmd_bench,
    "dataset-stats": _cmd_dataset_stats,
}


def execute(args: argparse.Namespace) -> int:
    return _HANDLERS[args.command](args)


def _configure_logging(verbosity: int) -> None:
    env_level = os.environ.get("THERMOPIPE_LOG", "").upper()
    if env_level:
        level = getattr(logging, env_level, logging.WARNING)
    else:
        level = {0: logging.WARNING, 1: logging.INFO}.get(verbosity, logging.DEBUG)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(message)s")


def main(argv: list[str] | None = None) -> int:
    try:
        args = parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print("run 'thermopipe --help' for usage", file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help and friends
        return int(exc.code or 0)
    _configure_logging(args.verbose)
    try:
        return execute(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except _DOMAIN_ERRORS as exc:
        log.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
