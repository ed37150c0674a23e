#!/usr/bin/env python3
"""Measure the FPS cost of the three inference strategies on a stub detector.

TTA runs one detector pass per augmentation, so its throughput drops by
roughly the augmentation count; an ensemble pays one pass per member.
Usage: python scripts/bench_strategies.py
"""

from thermopipe.bench import compare_speedup, measure_fps
from thermopipe.dataset import GroundTruthBox
from thermopipe.detectors import (
    EnsembleConfig,
    ImageRef,
    StubDetector,
    StubSpec,
    TtaConfig,
    infer_ensemble,
    infer_na,
    infer_tta,
)

CASES = [
    ImageRef(
        image_id=f"frame-{k}",
        truths=(
            GroundTruthBox(k % 6, 0.3, 0.4, 0.2, 0.2),
            GroundTruthBox((k + 1) % 6, 0.7, 0.6, 0.15, 0.15),
        ),
    )
    for k in range(200)
]


def time_strategy(label, runner):
    report = measure_fps(runner, CASES, warmup=10)
    print(f"{label:>10}: {report.fps_exact:>10.0f} fps "
          f"(p50 {report.latency_p50_ms:.3f} ms, p99 {report.latency_p99_ms:.3f} ms)")
    return report


def main() -> None:
    detector = StubDetector(StubSpec(seed=1, drop_rate=0.1, jitter=0.01))
    members = [StubDetector(StubSpec(seed=s, jitter=0.01), name=f"m{s}") for s in (1, 2)]
    na = time_strategy("NA", lambda ref: infer_na(detector, ref, 0.2))
    tta = time_strategy("TTA", lambda ref: infer_tta(detector, ref, 0.2, TtaConfig()))
    time_strategy(
        "ensemble",
        lambda ref: infer_ensemble(members, ref, 0.2, EnsembleConfig()),
    )
    print(f"NA over TTA speedup: {compare_speedup(na, tta):.2f}x "
          f"({len(TtaConfig().augmentations)} augmentations)")


if __name__ == "__main__":
    main()
