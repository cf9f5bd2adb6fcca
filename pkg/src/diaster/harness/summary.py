"""Across-seed tables from metrics files.

``summary.tsv`` has one row per (run, eval_point) over the union of
evaluation points seen in the directory. Columns: ``run``, ``method``,
``eval_point``, ``env_step`` (mean over the seeds present), ``n_seeds``,
``mean_return``, ``stderr``. A point some seeds lack is averaged over the
seeds that have it; a point no seed of a run has is written with
``n_seeds`` 0 and empty value cells.

``final.tsv`` has one row per run: the smoothed final return of each seed
(trailing mean over the config's ``smoothing_window``), then its mean and
standard error across seeds.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .runner import read_metrics, smoothed

SUMMARY_COLUMNS = ("run", "method", "eval_point", "env_step", "n_seeds", "mean_return", "stderr")
FINAL_COLUMNS = ("run", "method", "n_seeds", "final_mean", "final_stderr", "per_seed")


def mean_stderr(values) -> tuple[float, float]:
    """Mean and sqrt(sum (x - mean)^2 / (n (n - 1))); the error is 0 for n = 1."""
    x = np.asarray(values, dtype=np.float64)
    n = len(x)
    if n == 0:
        return math.nan, math.nan
    m = float(x.mean())
    if n == 1:
        return m, 0.0
    return m, float(np.sqrt(np.sum((x - m) ** 2) / (n * (n - 1))))


@dataclass
class RunMetrics:
    name: str
    method: str
    window: int
    seeds: dict  # seed -> list of records

    def final_returns(self) -> dict[int, float]:
        out = {}
        for seed, recs in sorted(self.seeds.items()):
            if recs:
                out[seed] = float(smoothed([r["mean_return"] for r in recs], self.window)[-1])
        return out


def collect_runs(directory: str | Path) -> list[RunMetrics]:
    """Every run directory (holding ``seed*.metrics.jsonl``) at or below ``directory``."""
    directory = Path(directory)
    groups: dict[Path, list[Path]] = defaultdict(list)
    for path in sorted(directory.rglob("seed*.metrics.jsonl")):
        groups[path.parent].append(path)
    runs = []
    for run_dir, files in sorted(groups.items()):
        window, method = 5, None
        cfg_path = run_dir / "config.yaml"
        if cfg_path.exists():
            cfg = yaml.safe_load(cfg_path.read_text()) or {}
            window = int(cfg.get("smoothing_window", window))
            method = cfg.get("method")
        seeds = {}
        for f in files:
            recs = read_metrics(f)
            seed = recs[0]["seed"] if recs else int(f.name[4:].split(".")[0])
            seeds[seed] = recs
            method = method or (recs[0]["method"] if recs else "")
        runs.append(RunMetrics(run_dir.name, method or "", window, seeds))
    return runs


def summary_rows(runs: list[RunMetrics]) -> list[list]:
    points = sorted({r["eval_point"] for run in runs for recs in run.seeds.values() for r in recs})
    rows = []
    for run in runs:
        by_point = defaultdict(list)
        for recs in run.seeds.values():
            for r in recs:
                by_point[r["eval_point"]].append(r)
        for p in points:
            recs = by_point.get(p, [])
            if not recs:
                rows.append([run.name, run.method, p, "", 0, "", ""])
                continue
            m, se = mean_stderr([r["mean_return"] for r in recs])
            env_step = float(np.mean([r["env_step"] for r in recs]))
            rows.append([run.name, run.method, p, env_step, len(recs), m, se])
    return rows


def final_rows(runs: list[RunMetrics]) -> list[list]:
    rows = []
    for run in runs:
        finals = run.final_returns()
        m, se = mean_stderr(list(finals.values()))
        per_seed = ",".join(f"{s}:{v:.6g}" for s, v in finals.items())
        rows.append([run.name, run.method, len(finals), m, se, per_seed])
    return rows


def _write_tsv(path: Path, columns, rows) -> None:
    with open(path, "w") as fh:
        fh.write("\t".join(columns) + "\n")
        for row in rows:
            fh.write("\t".join(_cell(v) for v in row) + "\n")


def _cell(v) -> str:
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    return str(v)


def summarize(directory: str | Path) -> tuple[Path, Path]:
    """Write ``summary.tsv`` and ``final.tsv`` into ``directory``; returns their paths."""
    directory = Path(directory)
    runs = collect_runs(directory)
    if not runs:
        raise FileNotFoundError(f"no metrics files under {directory}")
    summary, final = directory / "summary.tsv", directory / "final.tsv"
    _write_tsv(summary, SUMMARY_COLUMNS, summary_rows(runs))
    _write_tsv(final, FINAL_COLUMNS, final_rows(runs))
    return summary, final
