"""Thermal-imaging perception toolkit.

Raw-to-detection pipeline for uncooled LWIR sensors: shutterless two-point
non-uniformity calibration, gain/bad-pixel/temporal corrections, YOLO-format
dataset handling, pluggable detector inference (plain, test-time-augmented,
or ensembled), mAP evaluation, and FPS/thermal benchmarking -- with a
synthetic-sensor oracle that makes every stage verifiable at desk scale.
"""

__version__ = "0.1.0"
