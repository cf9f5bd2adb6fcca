from .gradsuite import LOSSES, gradient_suite, loss_closure
from .runner import (
    INDEX_COLUMNS,
    SeedResult,
    output_root,
    parse_vary,
    read_metrics,
    run_config,
    run_seed,
    run_sweep,
    smoothed,
    sweep_configs,
)
from .summary import FINAL_COLUMNS, SUMMARY_COLUMNS, collect_runs, mean_stderr, summarize

__all__ = [
    "FINAL_COLUMNS",
    "INDEX_COLUMNS",
    "LOSSES",
    "SUMMARY_COLUMNS",
    "SeedResult",
    "collect_runs",
    "gradient_suite",
    "loss_closure",
    "mean_stderr",
    "output_root",
    "parse_vary",
    "read_metrics",
    "run_config",
    "run_seed",
    "run_sweep",
    "smoothed",
    "summarize",
    "sweep_configs",
]
