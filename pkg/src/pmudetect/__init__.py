"""Detect cyber-attacks in PMU telemetry: Attack / Natural / NoEvent classification."""

from pmudetect.data import (
    ClassLabel,
    MeasurementTable,
    SampleSpec,
    load_csv,
    merge,
    stratified_sample,
    write_csv,
)

__version__ = "0.1.0"

__all__ = [
    "ClassLabel",
    "MeasurementTable",
    "SampleSpec",
    "load_csv",
    "merge",
    "stratified_sample",
    "write_csv",
]
