from __future__ import annotations

import argparse
import sys

from ..config import ConfigError, load_config


def _seeds(text: str) -> list[int]:
    return [int(s) for s in text.split(",") if s.strip()]


def cmd_run(args) -> int:
    from .runner import run_config

    cfg = load_config(args.config)
    results = run_config(cfg, seeds=args.seeds, workers=args.workers, root=args.output)
    for r in results:
        print(f"{r.run}\tseed {r.seed}\t{r.status}\tfinal {r.final_return:.4g}\tbest {r.best_smoothed:.4g}"
              + (f"\t{r.error}" if r.error else ""))
    return 0 if all(r.status == "ok" for r in results) else 1


def cmd_sweep(args) -> int:
    from .runner import parse_vary, run_config, sweep_configs

    cfg = load_config(args.config)
    configs = sweep_configs(cfg, parse_vary(args.vary))
    failed = False
    for sub in configs:
        for r in run_config(sub, seeds=args.seeds, workers=args.workers, root=args.output):
            failed |= r.status != "ok"
            print(f"{r.run}\tseed {r.seed}\t{r.status}\tfinal {r.final_return:.4g}")
    return 1 if failed else 0


def cmd_summarize(args) -> int:
    from .summary import summarize

    summary, final = summarize(args.directory)
    print(final.read_text(), end="")
    print(f"wrote {summary} and {final}")
    return 0


def cmd_verify_theory(args) -> int:
    from ..theory import fixture_names, run_battery, run_fixture

    summary = run_battery(args.instances, seed=args.seed, tol=args.tol, out=args.out)
    for line in summary.lines():
        print(line)
    controls_ok = True
    for name in fixture_names():
        rep, expected = run_fixture(name)
        ok = rep.passed == expected
        controls_ok &= ok
        print(f"fixture {name:32s} gap {rep.gap:.3g}  {'as expected' if ok else 'UNEXPECTED'}"
              f" ({'pass' if expected else 'fail'} expected)")
    return 0 if summary.ok and controls_ok else 1


def cmd_grad_check(args) -> int:
    from .gradsuite import LOSSES, gradient_suite

    errors = gradient_suite(range(args.seeds), args.losses or LOSSES)
    worst = 0.0
    for name, errs in errors.items():
        worst = max(worst, max(errs))
        print(f"{name:16s} max relative error {max(errs):.3e} over {len(errs)} seeds")
    return 0 if worst < args.tol else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="diaster", description="Return decomposition experiments and exact checks.")
    sub = p.add_subparsers(dest="command", required=True)

    def add_run_args(sp):
        sp.add_argument("config", help="experiment YAML file")
        sp.add_argument("--seeds", type=_seeds, default=None, help="comma-separated seeds (default: from config)")
        sp.add_argument("--workers", type=int, default=None, help="parallel seed workers (default: DIASTER_THREADS or 1)")
        sp.add_argument("--output", default=None, help="output root (default: DIASTER_OUTPUT_ROOT or config output_dir)")

    sp = sub.add_parser("run", help="train every seed of one config")
    add_run_args(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("sweep", help="run a grid of configs")
    add_run_args(sp)
    sp.add_argument("--vary", action="append", required=True, metavar="KEY=V1,V2,...")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("summarize", help="mean and standard error tables across seeds")
    sp.add_argument("directory")
    sp.set_defaults(func=cmd_summarize)

    sp = sub.add_parser("verify-theory", help="exact checks on random enumerable MDPs")
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.add_argument("--instances", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default=None, help="write one JSON line per check here")
    sp.set_defaults(func=cmd_verify_theory)

    sp = sub.add_parser("grad-check", help="finite-difference check of every loss")
    sp.add_argument("--seeds", type=int, default=10)
    sp.add_argument("--tol", type=float, default=1e-4)
    sp.add_argument("--losses", nargs="*", default=None)
    sp.set_defaults(func=cmd_grad_check)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"diaster {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
