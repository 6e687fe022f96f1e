import json
import os

import pytest

from crossings import cli


def run(argv):
    return cli.main(argv)


def test_list(capsys):
    assert run(["--list"]) == 0
    out = capsys.readouterr().out
    assert "stationarity" in out and "hopf_ratio" in out


def test_missing_config_file(capsys):
    assert run(["--config", "/nonexistent/x.toml"]) == 2
    assert "config error" in capsys.readouterr().err


def test_missing_law_field(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text('seed = 1\n[[experiment]]\nkind = "stationarity"\nn_samples = 10\n')
    assert run(["--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "law" in capsys.readouterr().err


def test_missing_seed(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text('[[experiment]]\nkind = "exact_identities"\n'
                   "n_instances = 2\nn_states = 4\n")
    assert run(["--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "seed" in capsys.readouterr().err


def test_unknown_kind(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text('seed = 1\n[[experiment]]\nkind = "warp_drive"\n')
    assert run(["--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "warp_drive" in capsys.readouterr().err


def test_config_run_and_outputs(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text(
        "seed = 42\n"
        "[[experiment]]\n"
        'kind = "exact_identities"\n'
        "n_instances = 5\nn_states = 5\n"
        "[[experiment]]\n"
        'kind = "finite_identities"\n'
        '[experiment.chain]\n'
        'p = [["0", "1", "0"], ["0", "0", "1"], ["1", "0", "0"]]\n'
        "partition = [1, 2]\n")
    out = tmp_path / "o"
    assert run(["--config", str(cfg), "--out", str(out)]) == 0
    lines = open(out / "report.jsonl").read().strip().splitlines()
    header = json.loads(lines[0])
    assert header["master_seed"] == 42
    assert len(header["config_sha256"]) == 64
    records = [json.loads(l) for l in lines[1:]]
    assert len(records) == 20
    assert all(r["verdict"] == "pass" for r in records)
    assert (out / "summary.txt").exists()


def test_failing_experiment_exits_one(tmp_path):
    cfg = tmp_path / "c.toml"
    # an impossibly tight tolerance forces a clean failure
    cfg.write_text(
        "seed = 7\n"
        "[[experiment]]\n"
        'kind = "lln_overshoots"\n'
        'law = { kind = "lattice", entries = [[-1, "2/3"], [2, "1/3"]] }\n'
        "n_crossings = 500\nstart = 0.0\ntolerance = 1e-9\n")
    assert run(["--config", str(cfg), "--out", str(tmp_path / "o")]) == 1


def test_seed_flag_overrides_config(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text(
        "seed = 1\n"
        "[[experiment]]\n"
        'kind = "lln_overshoots"\n'
        'law = { kind = "lattice", entries = [[-1, "1/2"], [1, "1/2"]] }\n'
        "n_crossings = 500\nstart = 0.0\ntolerance = 0.2\n")
    out1, out2, out3 = (tmp_path / x for x in ("o1", "o2", "o3"))
    run(["--config", str(cfg), "--out", str(out1)])
    run(["--config", str(cfg), "--out", str(out2), "--seed", "99"])
    run(["--config", str(cfg), "--out", str(out3), "--seed", "99"])

    def stat(p):
        recs = [json.loads(l) for l in open(p / "report.jsonl").read().splitlines()[1:]]
        return recs[0]["sizes"]["steps_used"]

    assert stat(out2) == stat(out3)
    assert stat(out1) != stat(out2)


def test_thread_count_does_not_change_verdicts(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text(
        "seed = 5\n"
        "[[experiment]]\n"
        'kind = "exact_identities"\nn_instances = 3\nn_states = 4\n'
        "[[experiment]]\n"
        'kind = "lln_overshoots"\n'
        'law = { kind = "lattice", entries = [[-1, "1/2"], [1, "1/2"]] }\n'
        "n_crossings = 400\nstart = 0.0\ntolerance = 0.2\n"
        "[[experiment]]\n"
        'kind = "cross_oracle"\nn_chains = 2\nn_states = 4\nn_events = 4000\n')

    def stats(out, threads):
        run(["--config", str(cfg), "--out", str(out), "--threads", str(threads)])
        recs = [json.loads(l) for l in open(out / "report.jsonl").read().splitlines()[1:]]
        return [(r["name"], r["statistic"], r["verdict"]) for r in recs]

    assert stats(tmp_path / "t1", 1) == stats(tmp_path / "t4", 4)


def test_env_var_output_dir(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "envout"))
    monkeypatch.chdir(tmp_path)
    cfg = tmp_path / "c.toml"
    cfg.write_text(
        "seed = 3\n[[experiment]]\n"
        'kind = "exact_identities"\nn_instances = 2\nn_states = 4\n')
    assert run(["--config", str(cfg)]) == 0
    assert (tmp_path / "envout" / "report.jsonl").exists()


def test_suite_exact(tmp_path):
    assert run(["suite", "exact", "--seed", "11", "--out", str(tmp_path / "s")]) == 0


def test_suite_requires_seed(tmp_path, capsys):
    assert run(["suite", "exact", "--out", str(tmp_path / "s")]) == 2
    assert "seed" in capsys.readouterr().err


def test_unknown_suite(tmp_path, capsys):
    assert run(["suite", "everything", "--seed", "1",
                "--out", str(tmp_path / "s")]) == 2


def test_clt_curve_csv_written(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text(
        "seed = 8\n[[experiment]]\n"
        'kind = "clt_level_crossings"\n'
        'law = { kind = "lattice", entries = [[-1, "1/2"], [1, "1/2"]] }\n'
        "n_steps = 2000\nn_replicas = 500\nstart = 0.0\n"
        "tolerance = 0.2\nmean_tolerance = 0.2\n")
    out = tmp_path / "o"
    run(["--config", str(cfg), "--out", str(out)])
    curves = [p for p in os.listdir(out) if p.startswith("clt_curve")]
    assert len(curves) == 1
    body = open(out / curves[0]).read().splitlines()
    assert body[1] == "y,empirical_cdf,target_cdf"
