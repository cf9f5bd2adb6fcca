"""Shipped check instances with a known outcome, mostly negative controls."""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

import numpy as np

from ..decomposition import AdditivePsi
from ..envs import random_mdp
from .checks import (
    ExactInstance,
    TheoremReport,
    check_lemma_argmax,
    check_lemma_policy_gradient,
    softmax_policy,
)


def fixture_names() -> list[str]:
    root = resources.files(__package__) / "fixtures"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_fixture(name_or_path: str | Path) -> dict:
    path = Path(name_or_path)
    if path.suffix == ".json" and path.exists():
        return json.loads(path.read_text())
    res = resources.files(__package__) / "fixtures" / f"{name_or_path}.json"
    if not res.is_file():
        raise FileNotFoundError(f"no fixture {name_or_path!r}; known: {', '.join(fixture_names())}")
    return json.loads(res.read_text())


def _instance(spec: dict):
    rng = np.random.default_rng(spec["seed"])
    mdp = random_mdp(spec["n_states"], spec["n_actions"], spec["horizon"], rng)
    theta = rng.normal(size=(spec["n_states"], spec["n_actions"]))
    return mdp, theta


def run_fixture(name_or_path: str | Path) -> tuple[TheoremReport, bool]:
    """Evaluate a fixture; returns the report and the outcome it should have."""
    fx = load_fixture(name_or_path)
    check, expect = fx["check"], bool(fx["expect_pass"])
    desc = {"fixture": str(name_or_path)}
    if check == "lemma_argmax":
        q = np.asarray(fx["q"], dtype=np.float64)
        same = check_lemma_argmax(q, fx["delta"])
        return TheoremReport("lemma_argmax", desc, float(same), 1.0, 0.0 if same else 1.0, 0.0), expect
    if check == "lemma_policy_gradient":
        mdp, theta = _instance(fx["instance"])
        pi = softmax_policy(theta)
        q = ExactInstance(mdp, pi, AdditivePsi(mdp.hidden_reward)).q
        rep = check_lemma_policy_gradient(mdp, theta, q, np.asarray(fx["delta"]), fx["tol"])
        rep.instance = desc
        return rep, expect
    if check == "qhat_offset":
        mdp, theta = _instance(fx["instance"])
        psi = AdditivePsi(mdp.hidden_reward + np.asarray(fx["psi_bias"], dtype=np.float64))
        # no return correction: the scorer's own full-trajectory value is used
        rep = ExactInstance(mdp, softmax_policy(theta), psi, description=desc).qhat_offset(
            fx["tol"], return_corrected=False)
        return rep, expect
    raise ValueError(f"fixture {name_or_path!r}: unknown check {check!r}")
