from .config import ConfigReader, dump_config, load_config, parse_config, read_controls, write_controls
from .dataset import DatasetSpec, build_synthetic_dataset, load_dataset, save_dataset
from .experiment import (
    ExperimentConfig,
    ExperimentRecord,
    SeedRun,
    experiment_config_from,
    make_encoder,
    run_experiment,
)
from .stats import CorrelationCell, correlate_cell, correlate_table, pearson, write_correlation_csv

__all__ = [
    "ConfigReader", "CorrelationCell", "DatasetSpec", "ExperimentConfig", "ExperimentRecord", "SeedRun",
    "build_synthetic_dataset", "correlate_cell", "correlate_table", "dump_config", "experiment_config_from",
    "load_config", "load_dataset", "make_encoder", "parse_config", "pearson", "read_controls", "run_experiment",
    "save_dataset", "write_controls", "write_correlation_csv",
]
