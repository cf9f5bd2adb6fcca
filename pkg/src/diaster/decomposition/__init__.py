from .batch import TrajectoryBatch
from .cuts import sample_cut_points, sample_cut_sets, validate_cuts
from .losses import (
    cut_loss,
    diaster_return_loss,
    diaster_step_loss,
    multicut_return_loss,
    pack_segments,
    rrd_loss,
    rudder_loss,
    sample_subsequences,
    segment_sums,
    step_loss,
    step_targets,
)
from .methods import (
    METHOD_TAGS,
    Diaster,
    DiasterNoStep,
    Episodic,
    Ircr,
    MethodParams,
    Redistribution,
    ReturnStats,
    Rrd,
    RudderLite,
    make_method,
)
from .models import AdditivePsi, ConstantPsi, StepRewardModel, SubTrajRewardModel, one_hot_pairs
from .oracle import exact_step_reward_oracle, stationary_proxy_reward, step_reward_table

__all__ = [
    "METHOD_TAGS",
    "AdditivePsi",
    "ConstantPsi",
    "Diaster",
    "DiasterNoStep",
    "Episodic",
    "Ircr",
    "MethodParams",
    "Redistribution",
    "ReturnStats",
    "Rrd",
    "RudderLite",
    "StepRewardModel",
    "SubTrajRewardModel",
    "TrajectoryBatch",
    "cut_loss",
    "diaster_return_loss",
    "diaster_step_loss",
    "exact_step_reward_oracle",
    "make_method",
    "multicut_return_loss",
    "one_hot_pairs",
    "pack_segments",
    "rrd_loss",
    "rudder_loss",
    "sample_cut_points",
    "sample_cut_sets",
    "sample_subsequences",
    "segment_sums",
    "stationary_proxy_reward",
    "step_loss",
    "step_reward_table",
    "step_targets",
    "validate_cuts",
]
