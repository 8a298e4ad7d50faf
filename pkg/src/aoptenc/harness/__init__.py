"""Configuration, studies and command line interface."""
from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .output import StudyOutput, read_csv, read_meta, write_csv, write_meta
from .studies import (
    STUDIES,
    run_counter_audit,
    run_forward,
    run_gn_robustness,
    run_gradcheck,
    run_map,
    run_random_vs_optimal,
    run_sweep1d,
    run_trace_effect,
    run_variability,
)

__all__ = [
    "ConfigError", "ExperimentConfig", "load_config", "parse_config", "StudyOutput", "read_csv", "read_meta",
    "write_csv", "write_meta", "STUDIES", "run_counter_audit", "run_forward", "run_gn_robustness",
    "run_gradcheck", "run_map", "run_random_vs_optimal", "run_sweep1d", "run_trace_effect", "run_variability",
]
