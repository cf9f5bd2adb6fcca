"""Seeded runs, sweeps and the files they leave behind.

Layout under the output root (``DIASTER_OUTPUT_ROOT`` overrides the
config's ``output_dir``)::

    index.tsv                      one row per finished (run, seed)
    <run>/config.yaml              the validated config
    <run>/seed<k>.metrics.jsonl    one record per evaluation point
    <run>/seed<k>.ckpt.npz         final model parameters

Metrics records follow schema ``diaster.metrics/1``: keys ``schema``,
``method``, ``seed``, ``eval_point``, ``env_step``, ``wall_step``,
``episode``, ``mean_return``, ``decomp_loss``, ``step_loss``, ``td_loss``.
Losses are null when no update of that kind happened. Lines are written
with sorted keys and flushed one at a time.
"""

from __future__ import annotations

import fcntl
import itertools
import json
import os
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..config import ExperimentConfig, save_config
from ..nn import Tensor, save_checkpoint
from ..rl import TrainState, train_loop

INDEX_COLUMNS = ("run", "method", "m", "seed", "status", "final_return", "best_smoothed", "records", "metrics", "error")


def output_root(cfg: ExperimentConfig) -> Path:
    root = os.environ.get("DIASTER_OUTPUT_ROOT") or cfg.output_dir
    path = Path(root)
    if not path.is_absolute() and cfg.base_dir is not None and "DIASTER_OUTPUT_ROOT" not in os.environ:
        path = Path(cfg.base_dir) / path
    return path


def default_workers() -> int:
    value = os.environ.get("DIASTER_THREADS", "1")
    try:
        return max(1, int(value))
    except ValueError:
        raise ValueError(f"DIASTER_THREADS must be an integer, got {value!r}") from None


def smoothed(values, window: int) -> np.ndarray:
    """Trailing moving average; the first points average what exists so far."""
    x = np.asarray(values, dtype=np.float64)
    if len(x) == 0:
        return x
    c = np.concatenate([[0.0], np.cumsum(x)])
    idx = np.arange(1, len(x) + 1)
    lo = np.maximum(idx - window, 0)
    return (c[idx] - c[lo]) / (idx - lo)


def metrics_path(run_dir: Path, seed: int) -> Path:
    return run_dir / f"seed{seed}.metrics.jsonl"


def checkpoint_path(run_dir: Path, seed: int) -> Path:
    return run_dir / f"seed{seed}.ckpt.npz"


def encode_record(rec: dict) -> str:
    return json.dumps(rec, sort_keys=True)


def read_metrics(path: str | Path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


@dataclass
class SeedResult:
    run: str
    method: str
    m: int
    seed: int
    status: str
    final_return: float = float("nan")
    best_smoothed: float = float("nan")
    records: int = 0
    metrics: str = ""
    error: str = ""

    def row(self) -> list[str]:
        return [str(getattr(self, c)) for c in INDEX_COLUMNS]


def _state_params(state: TrainState) -> dict[str, np.ndarray]:
    params = {k: v.data for k, v in state.method.parameters().items()}
    agent = state.agent
    if hasattr(agent, "q"):
        params["agent.q"] = agent.q
    if hasattr(agent, "online"):
        params.update({f"agent.{k}": v.data for k, v in agent.online.parameters("online.").items()})
        params.update({f"agent.{k}": v.data for k, v in agent.target.parameters("target.").items()})
    return {k: np.asarray(v.data if isinstance(v, Tensor) else v) for k, v in params.items()}


def run_seed(cfg: ExperimentConfig, seed: int, run_dir: str | Path) -> SeedResult:
    """Train one seed, streaming metrics to disk. Exceptions become a failed result."""
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    mpath = metrics_path(run_dir, seed)
    result = SeedResult(cfg.run_name, cfg.method, cfg.m, seed, "ok", metrics=str(mpath.name))
    returns = []
    state = TrainState(None, None, None)
    try:
        with open(mpath, "w") as fh:
            for rec in train_loop(cfg, seed, state):
                fh.write(encode_record(rec) + "\n")
                fh.flush()
                returns.append(rec["mean_return"])
        manifest = {"method": cfg.method, "m": cfg.m, "seed": seed, "episode": state.episode,
                    "env_step": state.env_step, "agent": cfg.agent}
        save_checkpoint(checkpoint_path(run_dir, seed), _state_params(state), manifest)
    except Exception as exc:  # noqa: BLE001 - one seed's crash must not stop the others
        result.status = "failed"
        result.error = f"{type(exc).__name__}: {exc}".replace("\t", " ").replace("\n", " ")
        (run_dir / f"seed{seed}.error.txt").write_text(traceback.format_exc())
    result.records = len(returns)
    if returns:
        sm = smoothed(returns, cfg.smoothing_window)
        result.final_return = float(sm[-1])
        result.best_smoothed = float(sm.max())
    return result


def append_index(root: Path, results: list[SeedResult]) -> None:
    """Append rows to ``index.tsv`` under an exclusive lock; writes the header once."""
    root.mkdir(parents=True, exist_ok=True)
    path = root / "index.tsv"
    with open(path, "a") as fh:
        fcntl.flock(fh, fcntl.LOCK_EX)
        try:
            if fh.tell() == 0:
                fh.write("\t".join(INDEX_COLUMNS) + "\n")
            for r in results:
                fh.write("\t".join(r.row()) + "\n")
            fh.flush()
        finally:
            fcntl.flock(fh, fcntl.LOCK_UN)


def _run_seed_job(args):
    cfg, seed, run_dir = args
    return run_seed(cfg, seed, run_dir)


def run_config(cfg: ExperimentConfig, seeds=None, workers: int | None = None,
               root: str | Path | None = None) -> list[SeedResult]:
    """Run every seed of ``cfg``; only this (parent) process writes the index."""
    cfg.validate()
    root = Path(root) if root is not None else output_root(cfg)
    run_dir = root / cfg.run_name
    run_dir.mkdir(parents=True, exist_ok=True)
    save_config(cfg, run_dir / "config.yaml")
    seeds = list(cfg.seeds if seeds is None else seeds)
    workers = default_workers() if workers is None else workers
    jobs = [(cfg, s, run_dir) for s in seeds]
    results = []
    if workers <= 1 or len(jobs) <= 1:
        for job in jobs:
            res = _run_seed_job(job)
            append_index(root, [res])
            results.append(res)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for res in pool.map(_run_seed_job, jobs):
                append_index(root, [res])
                results.append(res)
    return results


def parse_vary(items) -> dict[str, list]:
    """``["m=0,1,5", "method=diaster,rrd"]`` -> ``{"m": [0, 1, 5], "method": [...]}``."""
    import yaml

    out: dict[str, list] = {}
    for item in items:
        key, sep, values = item.partition("=")
        key = key.strip()
        if not sep or not key or not values.strip():
            raise ValueError(f"--vary expects key=v1,v2,..., got {item!r}")
        out[key] = [yaml.safe_load(v.strip()) for v in values.split(",")]
    return out


def sweep_configs(cfg: ExperimentConfig, vary: dict[str, list]) -> list[ExperimentConfig]:
    """One config per point of the grid, named ``<base>_<key><value>...``."""
    keys = list(vary)
    base = cfg.name or "sweep"
    out = []
    for combo in itertools.product(*(vary[k] for k in keys)):
        changes = dict(zip(keys, combo))
        suffix = "_".join(f"{k}{v}" for k, v in changes.items())
        out.append(cfg.replace(**changes, name=f"{base}_{suffix}"))
    return out


def run_sweep(cfg: ExperimentConfig, vary: dict[str, list], workers: int | None = None,
              root: str | Path | None = None) -> list[SeedResult]:
    results = []
    for sub in sweep_configs(cfg, vary):
        results.extend(run_config(sub, workers=workers, root=root))
    return results
