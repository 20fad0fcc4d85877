"""Experiment harness: configuration, data, and the end-to-end pipeline."""

from .config import ConfigError, DomainSpec, ExperimentConfig, GaussianSpec, config_from_dict, load_config
from .data import (
    DataIOError,
    LabelError,
    ParseError,
    SyntheticData,
    generate_synthetic,
    load_csv,
    load_distribution,
    save_dataset,
    save_distribution,
    trial_seed,
)
from .pipeline import METHODS, PipelineResult, emit_results, run_pipeline, run_sweep, summarize
