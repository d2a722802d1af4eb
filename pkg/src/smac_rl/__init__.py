"""Natural-policy-gradient actor-critic with a damped rank-1 Sherman-Morrison Fisher inverse."""

from .advantage import GaeOutput, RolloutBatch, compute_gae, gae_bruteforce_oracle
from .fisher import (FisherPrecond, FvpBatch, assumption_diagnostics, batch_mean_score,
                     cg_solve, dense_sm_oracle, empirical_fvp, sm_inverse_apply, smac_direction)
from .harness import ExperimentSpec, ablation_batch_size, emit_plots, run_experiment
from .net import Mlp, MlpSpec
from .optim import adam_step, cg_npg_step, sgd_step, smac_step
from .policy import CategoricalPolicy, GaussianPolicy
from .trainer import AgentConfig, RunRecord, paper_config, train

__all__ = [
    "AgentConfig",
    "CategoricalPolicy",
    "ExperimentSpec",
    "FisherPrecond",
    "FvpBatch",
    "GaeOutput",
    "GaussianPolicy",
    "Mlp",
    "MlpSpec",
    "RolloutBatch",
    "RunRecord",
    "ablation_batch_size",
    "adam_step",
    "assumption_diagnostics",
    "batch_mean_score",
    "cg_npg_step",
    "cg_solve",
    "compute_gae",
    "dense_sm_oracle",
    "emit_plots",
    "empirical_fvp",
    "gae_bruteforce_oracle",
    "paper_config",
    "run_experiment",
    "sgd_step",
    "sm_inverse_apply",
    "smac_direction",
    "smac_step",
    "train",
]

__version__ = "0.1.0"
