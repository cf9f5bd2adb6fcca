from .buffer import ReplayBuffer, TransitionSample
from .dqn import NeuralQAgent, dqn_update
from .evaluation import as_policy, evaluate_policy, rollout_returns
from .loop import METRICS_SCHEMA, TrainState, bootstrap_stops, make_agent, relabel_sample, train_loop
from .tabular import EpsilonSchedule, QTable, greedy_action, q_update

__all__ = [
    "METRICS_SCHEMA",
    "EpsilonSchedule",
    "NeuralQAgent",
    "QTable",
    "ReplayBuffer",
    "TrainState",
    "TransitionSample",
    "as_policy",
    "bootstrap_stops",
    "dqn_update",
    "evaluate_policy",
    "greedy_action",
    "make_agent",
    "q_update",
    "relabel_sample",
    "rollout_returns",
    "train_loop",
]
