"""YAML environment descriptions.

Schema ``diaster.env/1``::

    schema: diaster.env/1          # optional, checked when present
    kind: chain | key_door_grid | point_maze_grid | custom
    seed: 0                        # optional
    # builder keyword arguments, e.g. length/horizon for chain
    horizon: 8
    # custom only: explicit tables
    transition: [[[...]]]          # S x A x S
    hidden_reward: [[...]]         # S x A
    initial_dist: [...]            # S
    terminal: [...]                # optional, S booleans
"""

from __future__ import annotations

import inspect
from pathlib import Path
from typing import Any, Mapping

import yaml

from . import builders
from .mdp import EnumeratedMDP, EnvInstance

SCHEMA = "diaster.env/1"

_BUILDERS = {
    "chain": builders.chain,
    "key_door_grid": builders.key_door,
    "point_maze_grid": builders.umaze,
    "custom": EnumeratedMDP,
}


class EnvSpecError(ValueError):
    pass


def _allowed_keys(kind: str) -> set[str]:
    return set(inspect.signature(_BUILDERS[kind]).parameters) - {"name"}


def parse_env_spec(spec: Mapping[str, Any] | str | Path) -> dict[str, Any]:
    """Validate a spec (mapping or YAML path) and return a normalised copy."""
    if isinstance(spec, (str, Path)):
        with open(spec) as fh:
            spec = yaml.safe_load(fh)
    if not isinstance(spec, Mapping):
        raise EnvSpecError("environment spec must be a mapping")
    spec = dict(spec)
    schema = spec.pop("schema", SCHEMA)
    if schema != SCHEMA:
        raise EnvSpecError(f"unsupported env schema {schema!r}, expected {SCHEMA!r}")
    if "kind" not in spec:
        raise EnvSpecError("environment spec needs a 'kind'")
    kind = builders.KIND_ALIASES.get(spec["kind"], spec["kind"])
    if kind not in _BUILDERS:
        raise EnvSpecError(f"unknown environment kind {spec['kind']!r}")
    spec["kind"] = kind
    unknown = set(spec) - {"kind", "seed"} - _allowed_keys(kind)
    if unknown:
        raise EnvSpecError(f"unknown keys for {kind}: {', '.join(sorted(unknown))}")
    return spec


def env_from_spec(spec: Mapping[str, Any] | str | Path, seed: int | None = None) -> EnvInstance:
    spec = parse_env_spec(spec)
    kind = spec.pop("kind")
    spec_seed = spec.pop("seed", 0)
    return builders.make_env(kind, seed=spec_seed if seed is None else seed, **spec)


def dump_env_spec(spec: Mapping[str, Any], path: str | Path) -> None:
    spec = {"schema": SCHEMA, **parse_env_spec(spec)}
    with open(path, "w") as fh:
        yaml.safe_dump(spec, fh, sort_keys=True)
