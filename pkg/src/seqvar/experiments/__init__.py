"""Experiment harness: configuration, replication engine, runners and CLI."""

from .config import BenchConfig, Config, dump_config, load_config, parse_config, write_config
from .csvio import write_csv
from .runners import (
    BenchResult,
    run_bvm_experiment,
    run_contraction_experiment,
    run_gaussian_bias_sweep,
    run_inconsistency_experiment,
    run_table1_bench,
)

__all__ = [
    "BenchConfig", "BenchResult", "Config", "dump_config", "load_config", "parse_config", "write_config",
    "write_csv", "run_table1_bench", "run_bvm_experiment", "run_inconsistency_experiment",
    "run_contraction_experiment", "run_gaussian_bias_sweep",
]
