"""Benchmark harness: synthetic workloads, random programs, and suites."""

from .progen import generate_corpus, generate_program
from .suites import (BenchReport, SUITES, SWEEP_STEPS, run_suite,
                     sweep_partition_ratio)
from .synth import (SyntheticSpec, WORKLOADS, generate_synthetic,
                    untrusted_indices)

__all__ = [
    "BenchReport",
    "SUITES",
    "SWEEP_STEPS",
    "SyntheticSpec",
    "WORKLOADS",
    "generate_corpus",
    "generate_program",
    "generate_synthetic",
    "run_suite",
    "sweep_partition_ratio",
    "untrusted_indices",
]
