import csv
import json
from pathlib import Path

import numpy as np
import pytest

from gcqkit.cli import main, parse_data
from gcqkit.experiments import ExperimentConfig, load_config, parse_config, run_experiment

ROOT = Path(__file__).resolve().parents[1]


def test_parse_config_and_comments():
    cfg = parse_config("""
        # comment
        experiment = example1   # trailing comment
        alpha = 0.5
        beta = 0.5
        gamma = 3
        N = 8, 16, 32
    """)
    assert cfg.N == [8, 16, 32]
    assert cfg.params["alpha"] == 0.5 and cfg.tableau == "radau2"


@pytest.mark.parametrize("text", [
    "experiment = example1\nalpha = 0.5\nN =",
    "experiment = example1\nalpha = 0.5\nN = 16, 8",
    "experiment = example7\nN = 8",
    "alpha = 0.5\nN = 8",
    "experiment = example1\nalpha 0.5\nN = 8",
    "experiment = example1\ntableau = euler\nN = 8",
    "experiment = custom\nalpha = 0.5\nN = 8",
])
def test_invalid_configs(text):
    with pytest.raises(ValueError):
        parse_config(text)


def test_empty_sweep():
    with pytest.raises(ValueError):
        ExperimentConfig(experiment="example1", N=[])


@pytest.mark.parametrize("example", ["example1", "example2-ka", "example2-kb", "example3", "example4", "example5"])
def test_every_example_has_a_config(example):
    configs = [load_config(p) for p in (ROOT / "experiments").glob("*.cfg")]
    assert any(c.experiment == example for c in configs)


def test_run_experiment_outputs_and_reproducibility(tmp_path):
    text = f"""
        experiment = example1
        alpha = 0.5
        beta = 0.5
        gamma = 3
        N = 8, 16
        engine = fast
        out = {tmp_path}/e1
    """
    first = run_experiment(parse_config(text))
    blobs = {p.name: p.read_bytes() for p in first.files if p.suffix == ".csv"}
    second = run_experiment(parse_config(text))
    for p in second.files:
        if p.suffix == ".csv":
            assert p.read_bytes() == blobs[p.name]
    rows = list(csv.reader((tmp_path / "e1_errors.csv").open()))
    assert rows[0] == ["N", "tau_max", "max_err", "eoc"]
    assert rows[1][3] == "" and float(rows[2][3]) > 2
    lines = (tmp_path / "e1_diagnostics.jsonl").read_text().splitlines()
    assert [json.loads(l)["N"] for l in lines] == [8, 16]


def test_parse_data():
    f, p = parse_data("t^0.5")
    assert p.beta == 0.5 and f(4.0) == pytest.approx(2.0)
    f, p = parse_data("2*t^1.5")
    assert p.coefficient == 2.0
    f, p = parse_data("3")
    assert p.beta == 0.0 and f(7.0) == 3.0
    f, p = parse_data("sin(t)")
    assert p is None
    with pytest.raises(ValueError):
        parse_data("t**2 + 1")


@pytest.mark.parametrize("engine", ["direct", "fast"])
def test_cli_convolve(tmp_path, engine, capsys):
    out = tmp_path / "result.csv"
    code = main([
        "convolve", "--kernel", "fracint:alpha=0.5", "--mesh", "graded:T=1,N=32,gamma=6",
        "--tableau", "radau2", "--data", "t^0.5", "--engine", engine, "--out", str(out),
    ])
    assert code == 0
    rows = list(csv.DictReader(out.open()))
    assert list(rows[0]) == ["n", "t_n", "u_n", "exact", "abs_error"]
    assert len(rows) == 32
    assert max(float(r["abs_error"]) for r in rows) < 1e-3
    if engine == "fast":
        log = [json.loads(l) for l in out.with_suffix(".jsonl").read_text().splitlines()]
        assert set(log[0]) == {"step", "nq_loc", "nq_his", "wall_ns"}


def test_cli_solvers(tmp_path):
    assert main(["fode", "--mesh", "twosing:T=1,N=32,sigma=0.28,g1=6,g2=3.3", "--out", str(tmp_path / "f")]) == 0
    assert main(["subdiffusion", "--mesh", "graded:T=1,N=4,gamma=6", "--J", "8", "--out", str(tmp_path / "s")]) == 0
    assert main(["westervelt", "--mesh", "graded:T=2,N=4,gamma=3", "--J", "16", "--out", str(tmp_path / "w")]) == 0
    for name in ("f", "s", "w"):
        assert (tmp_path / f"{name}_solution.csv").exists()
        assert (tmp_path / f"{name}_errors.csv").exists()
        assert (tmp_path / f"{name}_diagnostics.jsonl").exists()


def test_cli_run_and_errors(tmp_path, capsys, monkeypatch):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("experiment = example2-kb\nalpha = 0.4\nbeta = 0.6\nN = 8, 16\n")
    monkeypatch.setenv("GCQ_THREADS", "2")
    assert main(["run", str(cfg), "--out", str(tmp_path / "kb")]) == 0
    assert "N=16" in capsys.readouterr().out
    assert main(["convolve", "--kernel", "fracint:alpha=1.5", "--mesh", "uniform:N=4"]) == 1
    assert "error" in capsys.readouterr().err


def test_seed_flag(tmp_path):
    main(["--seed", "3", "convolve", "--kernel", "kb:alpha=0.4", "--mesh", "uniform:N=4",
          "--out", str(tmp_path / "x.csv")])
    a = np.random.random()
    np.random.seed(3)
    assert a == np.random.random()
