"""Meta-prior-regulated variational RNN: dataset synthesis, training,
prior regeneration, classification and dyadic interaction."""

from pvrnn._core import (
    Trainer,
    bc_ratio,
    build_dataset,
    chance_rate,
    classify,
    divergence_step,
    forward_kinematics,
    free_energy_rollout,
    kl_gauss,
    make_primitive,
    mirror,
    prior_regeneration,
    run_interaction,
    sample_pfsm,
    sync_rate,
)

__all__ = [
    "Trainer",
    "bc_ratio",
    "build_dataset",
    "chance_rate",
    "classify",
    "divergence_step",
    "forward_kinematics",
    "free_energy_rollout",
    "kl_gauss",
    "make_primitive",
    "mirror",
    "prior_regeneration",
    "run_interaction",
    "sample_pfsm",
    "sync_rate",
]
