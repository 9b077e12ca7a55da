"""Batched and collaborative multi-armed bandit simulation with lower-bound analytics."""

from .batched import (
    GLOBAL_CAP,
    PER_ARM_GRID,
    BatchConfig,
    BatchRun,
    analytic_regret_bound,
    analytic_round_bound,
    batch_grid,
    run_batched_mab,
)
from .collab import CollabConfig, CollabRun, reduce_batched_to_collab, round_ratio_certificate, run_no_comm_baseline
from .core import Arm, Instance, RngStream, Transcript, expected_regret, regret_of_transcript, sample_reward
from .harness import ExperimentConfig, load_config, run_experiment
from .kernels import BACKEND

__all__ = [
    "GLOBAL_CAP",
    "PER_ARM_GRID",
    "BACKEND",
    "Arm",
    "BatchConfig",
    "BatchRun",
    "CollabConfig",
    "CollabRun",
    "ExperimentConfig",
    "Instance",
    "RngStream",
    "Transcript",
    "analytic_regret_bound",
    "analytic_round_bound",
    "batch_grid",
    "expected_regret",
    "load_config",
    "reduce_batched_to_collab",
    "regret_of_transcript",
    "round_ratio_certificate",
    "run_batched_mab",
    "run_experiment",
    "run_no_comm_baseline",
    "sample_reward",
]
