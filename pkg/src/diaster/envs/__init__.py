from .builders import LEFT, MOVES, RIGHT, GridLayout, chain, key_door, make_env, random_mdp, umaze
from .mdp import EnumeratedMDP, EnvInstance, EpisodeError, Trajectory
from .oracle import (
    DEFAULT_CAP,
    Enumeration,
    EnumerationCapError,
    UndefinedStateError,
    discounted_q,
    enumerate_trajectories,
    expected_return,
    greedy_policy,
    occupancies,
    optimal_q,
    optimal_return,
    policy_at,
    policy_q,
    state_occupancy,
    uniform_policy,
)
from .specfile import SCHEMA, EnvSpecError, dump_env_spec, env_from_spec, parse_env_spec

__all__ = [
    "DEFAULT_CAP",
    "LEFT",
    "MOVES",
    "RIGHT",
    "SCHEMA",
    "EnumeratedMDP",
    "Enumeration",
    "EnumerationCapError",
    "EnvInstance",
    "EnvSpecError",
    "EpisodeError",
    "GridLayout",
    "Trajectory",
    "UndefinedStateError",
    "chain",
    "discounted_q",
    "dump_env_spec",
    "enumerate_trajectories",
    "env_from_spec",
    "expected_return",
    "greedy_policy",
    "key_door",
    "make_env",
    "occupancies",
    "optimal_q",
    "optimal_return",
    "parse_env_spec",
    "policy_at",
    "policy_q",
    "random_mdp",
    "state_occupancy",
    "umaze",
    "uniform_policy",
]
