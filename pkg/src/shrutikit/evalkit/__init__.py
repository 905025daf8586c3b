"""Metrics, baselines, statistics and the benchmark runner."""

from .baselines import nearest_cent_baseline, random_baseline
from .bench import (
    BenchmarkConfig,
    BenchmarkResult,
    EvalRecord,
    load_config,
    preset_names,
    run_benchmark,
    write_outputs,
)
from .metrics import avg_pitch_error, shruti_accuracy
from .stats import AggregateStats, Summary, aggregate_stats, anova_f, cohens_d

__all__ = [
    "AggregateStats", "BenchmarkConfig", "BenchmarkResult", "EvalRecord", "Summary",
    "aggregate_stats", "anova_f", "avg_pitch_error", "cohens_d", "load_config",
    "nearest_cent_baseline", "preset_names", "random_baseline", "run_benchmark",
    "shruti_accuracy", "write_outputs",
]
