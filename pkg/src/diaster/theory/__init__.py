from .battery import BatterySummary, RandomInstance, instance_reports, random_instance, run_battery
from .checks import (
    ExactInstance,
    TheoremReport,
    argmax_sets,
    check_lemma_argmax,
    check_lemma_policy_gradient,
    check_qhat_offset,
    check_theorem1,
    check_theorem3,
    score_weighted_gradient,
    softmax_policy,
)
from .fixtures import fixture_names, load_fixture, run_fixture

__all__ = [
    "BatterySummary",
    "ExactInstance",
    "RandomInstance",
    "TheoremReport",
    "argmax_sets",
    "check_lemma_argmax",
    "check_lemma_policy_gradient",
    "check_qhat_offset",
    "check_theorem1",
    "check_theorem3",
    "fixture_names",
    "instance_reports",
    "load_fixture",
    "random_instance",
    "run_battery",
    "run_fixture",
    "score_weighted_gradient",
    "softmax_policy",
]
