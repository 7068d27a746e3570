import csv
import json
import shutil
import subprocess
import sys

import pytest

from sketchstep.cli import format_value, main, run_experiment
from sketchstep.config import (
    EXPERIMENTS,
    SCHEMAS,
    ConfigError,
    ExperimentConfig,
    config_hash,
    default_config,
    parse_config,
    serialize_config,
)

TINY = {
    "conditioning": "p = 20\nn = 30\nm_grid = 4, 8\ntrials = 2\n",
    "rho": "p = 40\nm_grid = 5, 10\ntrials = 2\n",
    "biasvar": "n = 24\np = 20\nomega_grid = 1.0\nm_grid = 5, 20\ngamma_draws = 4\nrhs_draws = 24\n",
    "mse-scaling": "p = 6\nm = 3\nq_grid = 1, 2\ndt_grid = 0.05, 0.025\nhorizon = 0.1\nreplicates = 4\ndt_for_q = 0.05\n",
    "pde": (
        "hidden_layers = 1\nhidden_width = 4\ncollocation = 24\nnum_steps = 5\ndt = 0.01\nreplicates = 2\n"
        "alphas = 1e-3, 1e-1\nsketch_m = 3\nfit_iters = 20\nfit_points = 50\nreference_size = 16\n"
        "test_points = 10\ntest_times = 3\n"
    ),
}


def tiny_text(name, seed=3, out="results"):
    return f"[experiment]\nname = {name}\nseed = {seed}\noutput_dir = {out}\n\n[{name}]\n{TINY[name]}"


# --- config ---------------------------------------------------------------------

@pytest.mark.parametrize("name", EXPERIMENTS)
def test_round_trip_is_identity(name):
    cfg = parse_config(tiny_text(name))
    again = parse_config(serialize_config(cfg))
    assert again == cfg
    assert serialize_config(again) == serialize_config(cfg)
    assert parse_config(serialize_config(default_config(name))) == default_config(name)


def test_defaults_fill_missing_keys():
    cfg = parse_config("[experiment]\nname = rho\n")
    assert cfg.params == {k: v for k, (_, v) in SCHEMAS["rho"].items()}
    assert cfg.seed == 0 and cfg.output_dir == "results"


def test_unknown_keys_and_sections_are_errors():
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config("[experiment]\nname = rho\n[rho]\ntrails = 3\n")
    with pytest.raises(ConfigError, match="unknown sections"):
        parse_config("[experiment]\nname = rho\n[biasvar]\nn = 3\n")
    with pytest.raises(ConfigError, match="unknown keys"):
        parse_config("[experiment]\nname = rho\ncolour = red\n")
    with pytest.raises(ConfigError):
        ExperimentConfig("rho", params={"bogus": 1})


def test_type_and_range_errors():
    with pytest.raises(ConfigError, match="expected int"):
        parse_config("[experiment]\nname = rho\n[rho]\ntrials = many\n")
    with pytest.raises(ConfigError):
        parse_config("[experiment]\nname = rho\n[rho]\nm_grid = 600\n")
    with pytest.raises(ConfigError):
        parse_config("[experiment]\nname = pde\n[pde]\nmethods = none, magic\n")
    with pytest.raises(ConfigError, match="malformed"):
        parse_config("not an ini file")


def test_command_must_match_config():
    with pytest.raises(ConfigError, match="command"):
        parse_config(tiny_text("rho"), "biasvar")
    assert parse_config("[rho]\ntrials = 2\n", "rho").experiment == "rho"


def test_hash_tracks_content():
    a = parse_config(tiny_text("rho"))
    b = parse_config(tiny_text("rho", seed=4))
    assert config_hash(a) == config_hash(parse_config(serialize_config(a)))
    assert config_hash(a) != config_hash(b)


def test_format_value():
    import numpy as np

    assert format_value(np.float64(0.1)) == "0.1"
    assert format_value(float("nan")) == "nan"
    assert format_value(np.int64(3)) == "3"
    assert format_value(True) == "1"
    assert format_value("haar") == "haar"


# --- experiments through the CLI -------------------------------------------------------

def read_table(path):
    with open(path) as fh:
        comment = fh.readline()
        return comment, list(csv.reader(fh))


@pytest.mark.parametrize("name", EXPERIMENTS)
def test_rerun_gives_identical_rows(name, tmp_path):
    cfg = parse_config(tiny_text(name, out=str(tmp_path)))
    first = run_experiment(cfg, stamp="a")
    second = run_experiment(cfg, stamp="b")
    assert len(first) == len(second) >= 1
    for p1, p2 in zip(first, second):
        c1, t1 = read_table(p1)
        c2, t2 = read_table(p2)
        assert c1 == c2 and c1.startswith(f"# experiment={name} config_hash={config_hash(cfg)} seed=3")
        if p1.endswith("_timing.csv"):
            assert t1[0] == t2[0] and len(t1) == len(t2)
        else:
            assert t1 == t2
            assert len(t1) > 1


def test_pde_tables_have_expected_methods(tmp_path):
    cfg = parse_config(tiny_text("pde", out=str(tmp_path)))
    main_path, summary_path, timing_path = run_experiment(cfg, stamp="x")
    _, rows = read_table(summary_path)
    header, body = rows[0], rows[1:]
    labels = {(r[header.index("method")], r[header.index("param")]) for r in body}
    assert {m for m, _ in labels} == {"none", "sketch", "tikhonov"}
    assert (tmp_path / "checkpoints").is_dir()


def test_main_writes_paths(tmp_path, capsys):
    cfg_path = tmp_path / "rho.ini"
    cfg_path.write_text(tiny_text("rho", out=str(tmp_path / "out")))
    assert main(["rho", "--config", str(cfg_path), "--seed", "9"]) == 0
    printed = capsys.readouterr().out.strip().splitlines()
    assert len(printed) == 1
    comment, _ = read_table(printed[0])
    assert "seed=9" in comment


def test_main_config_error_line(tmp_path, capsys):
    cfg_path = tmp_path / "bad.ini"
    cfg_path.write_text("[experiment]\nname = rho\n[rho]\ntrails = 2\n")
    assert main(["rho", "--config", str(cfg_path)]) == 2
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["status"] == "error" and err["type"] == "ConfigError" and "trails" in err["message"]
    assert main(["biasvar", "--config", str(tmp_path / "missing.ini")]) == 2


def test_main_usage_error(capsys):
    assert main(["rho"]) == 2
    err = capsys.readouterr().err.strip().splitlines()[-1]
    assert json.loads(err)["type"] == "UsageError"


def test_init_config_prints_parseable_defaults(capsys):
    assert main(["init-config", "pde"]) == 0
    assert parse_config(capsys.readouterr().out) == default_config("pde")


@pytest.mark.parametrize("command", [[sys.executable, "-m", "sketchstep"], ["sketchstep"]])
def test_console_script_runs(command, tmp_path):
    if command == ["sketchstep"] and shutil.which("sketchstep") is None:
        pytest.skip("console script not installed")
    cfg_path = tmp_path / "c.ini"
    cfg_path.write_text(tiny_text("conditioning", out=str(tmp_path)))
    proc = subprocess.run(command + ["conditioning", "--config", str(cfg_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    _, rows = read_table(proc.stdout.strip())
    assert rows[0][:3] == ["law", "m", "gamma"]
    bad = subprocess.run(command + ["rho", "--config", str(tmp_path / "nope.ini")], capture_output=True, text=True)
    assert bad.returncode == 2
    assert json.loads(bad.stderr.strip())["status"] == "error"
