"""Flight-control benchmark: models, requirement catalog, contracts,
pinned verdicts, and random drivers for the observers."""

from . import blocks
from .loader import (
    Benchmark,
    BenchmarkError,
    COMPOSITIONAL_IDS,
    DriverRun,
    ExpectedClass,
    MODEL_FILES,
    NOT_MODELED_IDS,
    PropertySpec,
    benchmark_source,
    driver_harness,
    load_benchmark,
    load_expected,
    run_driver,
    sample_step,
)

__all__ = [
    "Benchmark",
    "BenchmarkError",
    "COMPOSITIONAL_IDS",
    "DriverRun",
    "ExpectedClass",
    "MODEL_FILES",
    "NOT_MODELED_IDS",
    "PropertySpec",
    "benchmark_source",
    "blocks",
    "driver_harness",
    "load_benchmark",
    "load_expected",
    "run_driver",
    "sample_step",
]
