"""Experiment configuration: one flat YAML mapping.

Schema ``diaster.config/1``. ``env`` is either an inline environment mapping
(see :mod:`diaster.envs.specfile`) or a path to such a YAML file, resolved
relative to the config file. Every other key is listed in
:class:`ExperimentConfig` with its default.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .decomposition import METHOD_TAGS, MethodParams
from .envs import EnvInstance, env_from_spec, parse_env_spec

SCHEMA = "diaster.config/1"
AGENTS = ("tabular", "dqn")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    env: Any
    method: str = "diaster"
    agent: str = "tabular"
    # decomposition
    m: int = 1
    k: int = 4
    psi_hidden: int = 64
    phi_hidden: tuple[int, ...] = (64, 64)
    cut_low: int = 1
    state_only: bool = False
    time_feature: bool = False
    step_sampling: str = "one"
    lr: float = 3e-4
    # agent
    gamma: float = 0.99
    q_lr: float = 0.1
    q_hidden: tuple[int, ...] = (64, 64)
    tau: float = 0.005
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_fraction: float = 0.2
    timeout_bootstrap: bool = True
    # data
    batches_per_episode: int = 4
    batch_size: int = 256
    traj_batch_size: int | None = None
    buffer_capacity: int = 10**6
    # run
    n_episodes: int = 3000
    eval_interval: int = 1000
    eval_episodes: int = 10
    smoothing_window: int = 5
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    output_dir: str = "runs"
    name: str | None = None
    base_dir: str | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.phi_hidden = tuple(int(h) for h in self.phi_hidden)
        self.q_hidden = tuple(int(h) for h in self.q_hidden)
        self.seeds = tuple(int(s) for s in self.seeds)

    # -- derived ----------------------------------------------------------------
    def env_spec(self) -> dict:
        if isinstance(self.env, (str, Path)):
            path = Path(self.env)
            if not path.is_absolute() and self.base_dir is not None:
                path = Path(self.base_dir) / path
            if not path.exists():
                raise ConfigError(f"env: file {str(path)!r} does not exist")
            return parse_env_spec(path)
        return parse_env_spec(self.env)

    def make_env(self, seed: int) -> EnvInstance:
        return env_from_spec(self.env_spec(), seed=seed)

    def method_params(self) -> MethodParams:
        return MethodParams(
            m=self.m, k=self.k, psi_hidden=self.psi_hidden, phi_hidden=self.phi_hidden, lr=self.lr,
            cut_low=self.cut_low, state_only=self.state_only, time_feature=self.time_feature,
            step_sampling=self.step_sampling,
        )

    @property
    def run_name(self) -> str:
        return self.name or f"{self.method}_m{self.m}"

    # -- validation ---------------------------------------------------------------
    def validate(self) -> "ExperimentConfig":
        try:
            env = self.make_env(0)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"env: {exc}") from exc
        T = env.horizon

        def need(ok: bool, key: str, msg: str):
            if not ok:
                raise ConfigError(f"{key}: {msg} (got {getattr(self, key)!r})")

        need(self.method in METHOD_TAGS, "method", f"must be one of {', '.join(METHOD_TAGS)}")
        need(self.agent in AGENTS, "agent", f"must be one of {', '.join(AGENTS)}")
        need(0 <= self.m <= T - 1, "m", f"must lie in [0, T-1] = [0, {T - 1}]")
        need(self.k >= 1, "k", "must be at least 1")
        need(self.cut_low in (0, 1), "cut_low", "must be 0 or 1")
        need(self.step_sampling in ("one", "all"), "step_sampling", "must be 'one' or 'all'")
        need(self.psi_hidden >= 1, "psi_hidden", "must be positive")
        need(all(h >= 1 for h in self.phi_hidden), "phi_hidden", "sizes must be positive")
        need(all(h >= 1 for h in self.q_hidden), "q_hidden", "sizes must be positive")
        need(self.lr > 0, "lr", "must be positive")
        need(0.0 < self.gamma <= 1.0, "gamma", "must lie in (0, 1]")
        need(0.0 < self.q_lr <= 1.0, "q_lr", "must lie in (0, 1]")
        need(0.0 < self.tau <= 1.0, "tau", "must lie in (0, 1]")
        need(0.0 <= self.eps_end <= 1.0, "eps_end", "must lie in [0, 1]")
        need(0.0 <= self.eps_start <= 1.0, "eps_start", "must lie in [0, 1]")
        need(0.0 < self.eps_fraction <= 1.0, "eps_fraction", "must lie in (0, 1]")
        need(self.batches_per_episode >= 0, "batches_per_episode", "must be nonnegative")
        need(self.batch_size >= 1, "batch_size", "must be at least 1")
        need(self.traj_batch_size is None or self.traj_batch_size >= 1, "traj_batch_size", "must be at least 1")
        need(self.buffer_capacity >= T, "buffer_capacity", f"must hold at least one episode ({T})")
        need(self.n_episodes >= 1, "n_episodes", "must be at least 1")
        need(self.eval_interval >= 1, "eval_interval", "must be at least 1")
        need(self.eval_episodes >= 1, "eval_episodes", "must be at least 1")
        need(self.smoothing_window >= 1, "smoothing_window", "must be at least 1")
        need(len(self.seeds) >= 1, "seeds", "need at least one seed")
        return self

    # -- serialisation --------------------------------------------------------------
    def to_dict(self) -> dict:
        out = {"schema": SCHEMA}
        for f in dataclasses.fields(self):
            if f.name == "base_dir":
                continue
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = list(value)
            if isinstance(value, Path):
                value = str(value)
            out[f.name] = value
        return out

    @classmethod
    def from_dict(cls, data: dict, base_dir: str | Path | None = None) -> "ExperimentConfig":
        data = dict(data)
        schema = data.pop("schema", SCHEMA)
        if schema != SCHEMA:
            raise ConfigError(f"schema: unsupported {schema!r}, expected {SCHEMA!r}")
        known = {f.name for f in dataclasses.fields(cls)} - {"base_dir"}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
        if "env" not in data:
            raise ConfigError("env: required key missing")
        cfg = cls(**data, base_dir=None if base_dir is None else str(base_dir))
        return cfg.validate()

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes).validate()


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    with open(path) as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping at the top level")
    return ExperimentConfig.from_dict(data, base_dir=path.parent)


def save_config(cfg: ExperimentConfig, path: str | Path) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(cfg.to_dict(), fh, sort_keys=True)
