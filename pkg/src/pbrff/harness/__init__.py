"""Command-line experiment harness."""

from pbrff.harness.config import ConfigError, ExperimentConfig, make_config, read_config_file
from pbrff.harness.experiments import (
    run_greedy_curves,
    run_landmarks_table,
    run_toy_landmarks,
    select_sigma,
)
