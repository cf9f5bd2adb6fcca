import json

import numpy as np
import pytest
import yaml

from diaster.config import ConfigError, ExperimentConfig, load_config, save_config
from diaster.harness import (
    INDEX_COLUMNS,
    collect_runs,
    gradient_suite,
    mean_stderr,
    output_root,
    parse_vary,
    read_metrics,
    run_config,
    run_seed,
    smoothed,
    summarize,
    sweep_configs,
)
from diaster.harness import runner
from diaster.harness.cli import main
from diaster.nn import load_checkpoint

TINY = dict(env={"kind": "chain", "length": 4}, n_episodes=12, batch_size=8, traj_batch_size=4,
            batches_per_episode=1, psi_hidden=4, phi_hidden=(4,), eval_interval=10, eval_episodes=2,
            seeds=(0, 1))


def tiny(**kw) -> ExperimentConfig:
    return ExperimentConfig(**{**TINY, **kw}).validate()


def write_yaml(path, data):
    path.write_text(yaml.safe_dump(data))
    return path


# -- config --------------------------------------------------------------------------
def test_defaults_follow_reported_hyperparameters():
    cfg = ExperimentConfig(env={"kind": "chain"})
    assert (cfg.lr, cfg.gamma, cfg.tau, cfg.buffer_capacity, cfg.batch_size) == (3e-4, 0.99, 0.005, 10**6, 256)
    assert (cfg.m, cfg.batches_per_episode, cfg.eval_episodes) == (1, 4, 10)
    assert (cfg.eps_start, cfg.eps_end, cfg.eps_fraction) == (1.0, 0.05, 0.2)


def test_config_roundtrip(tmp_path):
    cfg = tiny(method="rrd", k=3)
    save_config(cfg, tmp_path / "c.yaml")
    assert load_config(tmp_path / "c.yaml") == cfg


@pytest.mark.parametrize("bad,key", [
    ({"m": 4}, "m"),
    ({"method": "sac"}, "method"),
    ({"gamma": 0.0}, "gamma"),
    ({"step_sampling": "some"}, "step_sampling"),
    ({"buffer_capacity": 2}, "buffer_capacity"),
])
def test_invalid_values_name_the_key(bad, key):
    with pytest.raises(ConfigError, match=key):
        tiny(**bad)


def test_unknown_keys_and_schema_rejected(tmp_path):
    with pytest.raises(ConfigError, match="unknown"):
        load_config(write_yaml(tmp_path / "a.yaml", {"env": {"kind": "chain"}, "learning_rate": 1}))
    with pytest.raises(ConfigError, match="schema"):
        load_config(write_yaml(tmp_path / "b.yaml", {"env": {"kind": "chain"}, "schema": "other/9"}))
    with pytest.raises(ConfigError, match="env"):
        load_config(write_yaml(tmp_path / "c.yaml", {"method": "diaster"}))


def test_env_file_resolved_next_to_config(tmp_path):
    write_yaml(tmp_path / "env.yaml", {"kind": "chain", "length": 5})
    cfg = load_config(write_yaml(tmp_path / "c.yaml", {"env": "env.yaml"}))
    assert cfg.make_env(0).n_states == 5
    with pytest.raises(ConfigError, match="does not exist"):
        load_config(write_yaml(tmp_path / "d.yaml", {"env": "missing.yaml"}))


def test_output_root_resolution(tmp_path, monkeypatch):
    monkeypatch.delenv("DIASTER_OUTPUT_ROOT", raising=False)
    cfg = load_config(write_yaml(tmp_path / "c.yaml", {"env": {"kind": "chain"}, "output_dir": "out"}))
    assert output_root(cfg) == tmp_path / "out"
    monkeypatch.setenv("DIASTER_OUTPUT_ROOT", str(tmp_path / "elsewhere"))
    assert output_root(cfg) == tmp_path / "elsewhere"


def test_worker_count_from_environment(monkeypatch):
    monkeypatch.setenv("DIASTER_THREADS", "3")
    assert runner.default_workers() == 3
    monkeypatch.setenv("DIASTER_THREADS", "many")
    with pytest.raises(ValueError):
        runner.default_workers()


# -- runs ------------------------------------------------------------------------------
def test_smoothed_trailing_mean():
    assert smoothed([1, 3, 5, 7], 2).tolist() == [1, 2, 4, 6]
    assert len(smoothed([], 3)) == 0


def test_run_layout_and_index(tmp_path):
    results = run_config(tiny(name="t"), root=tmp_path, workers=1)
    assert [r.status for r in results] == ["ok", "ok"]
    run_dir = tmp_path / "t"
    assert (run_dir / "config.yaml").exists()
    for seed in (0, 1):
        recs = read_metrics(run_dir / f"seed{seed}.metrics.jsonl")
        assert recs and all(r["schema"] == "diaster.metrics/1" and r["seed"] == seed for r in recs)
        params, manifest = load_checkpoint(run_dir / f"seed{seed}.ckpt.npz")
        assert manifest["seed"] == seed and "agent.q" in params
    lines = (tmp_path / "index.tsv").read_text().splitlines()
    assert lines[0].split("\t") == list(INDEX_COLUMNS)
    assert len(lines) == 3
    run_config(tiny(name="t"), seeds=[2], root=tmp_path, workers=1)
    assert len((tmp_path / "index.tsv").read_text().splitlines()) == 4


def test_reruns_are_byte_identical(tmp_path):
    cfg = tiny(name="r", seeds=(5,))
    run_config(cfg, root=tmp_path / "a", workers=1)
    run_config(cfg, root=tmp_path / "b", workers=1)
    a = (tmp_path / "a" / "r" / "seed5.metrics.jsonl").read_bytes()
    b = (tmp_path / "b" / "r" / "seed5.metrics.jsonl").read_bytes()
    assert a == b and len(a) > 0


def test_parallel_workers_match_serial(tmp_path):
    cfg = tiny(name="p")
    run_config(cfg, root=tmp_path / "serial", workers=1)
    run_config(cfg, root=tmp_path / "par", workers=2)
    for seed in (0, 1):
        name = f"p/seed{seed}.metrics.jsonl"
        assert (tmp_path / "serial" / name).read_bytes() == (tmp_path / "par" / name).read_bytes()


def test_crashing_seed_is_recorded_not_raised(tmp_path, monkeypatch):
    def boom(cfg, seed, state=None):
        yield {"mean_return": 0.5}
        raise RuntimeError("diverged")

    monkeypatch.setattr(runner, "train_loop", boom)
    res = run_seed(tiny(), 0, tmp_path)
    assert res.status == "failed" and "diverged" in res.error
    assert res.records == 1 and res.final_return == 0.5
    assert "RuntimeError" in (tmp_path / "seed0.error.txt").read_text()


def test_sweep_names_and_grid(tmp_path):
    vary = parse_vary(["m=0,2", "method=diaster,rrd"])
    assert vary == {"m": [0, 2], "method": ["diaster", "rrd"]}
    configs = sweep_configs(tiny(name="base", seeds=(0,)), vary)
    assert [c.run_name for c in configs] == ["base_m0_methoddiaster", "base_m0_methodrrd",
                                             "base_m2_methoddiaster", "base_m2_methodrrd"]
    with pytest.raises(ValueError):
        parse_vary(["m"])
    with pytest.raises(ConfigError):
        sweep_configs(tiny(), {"m": [9]})


# -- summaries -----------------------------------------------------------------------------
def test_mean_stderr():
    assert mean_stderr([1.0, 3.0]) == (2.0, 1.0)
    assert mean_stderr([4.0]) == (4.0, 0.0)
    assert all(np.isnan(mean_stderr([])))


def _fake_run(root, name, per_seed, window=1):
    d = root / name
    d.mkdir(parents=True)
    (d / "config.yaml").write_text(yaml.safe_dump({"method": "diaster", "smoothing_window": window}))
    for seed, returns in per_seed.items():
        with open(d / f"seed{seed}.metrics.jsonl", "w") as fh:
            for p, r in returns:
                fh.write(json.dumps({"seed": seed, "method": "diaster", "eval_point": p, "env_step": 10 * p,
                                     "mean_return": r}) + "\n")


def test_summarize_tables(tmp_path):
    _fake_run(tmp_path, "a", {0: [(0, 0.0), (1, 1.0)], 1: [(0, 0.0), (1, 3.0)]})
    _fake_run(tmp_path, "b", {0: [(0, 5.0)]})
    summary, final = summarize(tmp_path)
    rows = [line.split("\t") for line in summary.read_text().splitlines()]
    header, body = rows[0], {(r[0], r[2]): dict(zip(rows[0], r)) for r in rows[1:]}
    assert header[:3] == ["run", "method", "eval_point"]
    assert float(body[("a", "1")]["mean_return"]) == 2.0
    assert float(body[("a", "1")]["stderr"]) == 1.0
    assert body[("b", "1")]["n_seeds"] == "0" and body[("b", "1")]["mean_return"] == ""
    fin = {r.split("\t")[0]: r.split("\t") for r in final.read_text().splitlines()[1:]}
    assert float(fin["a"][3]) == 2.0 and float(fin["b"][4]) == 0.0
    assert [r.name for r in collect_runs(tmp_path)] == ["a", "b"]


def test_summarize_empty_directory(tmp_path):
    with pytest.raises(FileNotFoundError):
        summarize(tmp_path)


# -- command line ----------------------------------------------------------------------------
def test_cli_run_and_summarize(tmp_path, capsys):
    cfg = write_yaml(tmp_path / "c.yaml", {**TINY, "env": TINY["env"], "phi_hidden": [4], "seeds": [0],
                                           "name": "cli"})
    assert main(["run", str(cfg), "--output", str(tmp_path / "out")]) == 0
    assert "cli\tseed 0\tok" in capsys.readouterr().out
    assert main(["sweep", str(cfg), "--output", str(tmp_path / "sw"), "--vary", "m=0,1"]) == 0
    assert (tmp_path / "sw" / "cli_m0").is_dir() and (tmp_path / "sw" / "cli_m1").is_dir()
    assert main(["summarize", str(tmp_path / "out")]) == 0
    assert (tmp_path / "out" / "summary.tsv").exists()


def test_cli_bad_input_exit_code(tmp_path, capsys):
    assert main(["run", str(tmp_path / "none.yaml")]) == 2
    bad = write_yaml(tmp_path / "bad.yaml", {"env": {"kind": "chain"}, "m": 99})
    assert main(["run", str(bad)]) == 2
    assert "m:" in capsys.readouterr().err


def test_cli_grad_check(capsys):
    assert main(["grad-check", "--seeds", "2"]) == 0
    out = capsys.readouterr().out
    assert "diaster_return" in out and "td" in out


def test_cli_verify_theory_small(tmp_path, capsys):
    out = tmp_path / "checks.jsonl"
    code = main(["verify-theory", "--instances", "2", "--out", str(out)])
    text = capsys.readouterr().out
    assert "fixture lemma_action_offset" in text
    assert code == (0 if "0 unexpected" in text else 1)
    assert all("expected_pass" in json.loads(line) for line in out.read_text().splitlines())


def test_gradient_suite_small():
    errs = gradient_suite(range(2))
    assert set(errs) == {"diaster_return", "diaster_step", "rrd", "rudder_lite", "td"}
    assert max(max(v) for v in errs.values()) < 1e-4
