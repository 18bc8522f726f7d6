import pytest

from connintervals.cli import KEYS, load_header, run


def body(path):
    return [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]


def header(path):
    return [ln for ln in path.read_text().splitlines() if ln.startswith("#")]


TINY_FIG2 = ["--replicas", "6", "--L", "4", "--M", "1", "--set", "limit.n_S_grid=0,2",
             "--set", "limit.statistics=f1,f2"]


def test_missing_config_names_path(tmp_path, capsys):
    missing = tmp_path / "nope.cfg"
    assert run(["estimate-theta", "--config", str(missing)]) == 2
    assert str(missing) in capsys.readouterr().err


def test_unknown_key_rejected(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("graph.intensity = 2.0\nbogus.key = 3\n")
    assert run(["estimate-theta", "--config", str(cfg)]) == 2
    assert "bogus.key" in capsys.readouterr().err


def test_bad_config_line(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("graph.intensity 2.0\n")
    assert run(["estimate-theta", "--config", str(cfg)]) == 2
    assert "c.cfg:1" in capsys.readouterr().err


def test_unknown_subcommand(capsys):
    assert run(["frobnicate"]) == 2
    assert "unknown subcommand" in capsys.readouterr().err


def test_subcritical_intensity_refused(tmp_path, capsys):
    out = tmp_path / "o.csv"
    assert run(["figure2", "--intensity", "1.2", "-o", str(out)] + TINY_FIG2) == 2
    assert "critical intensity" in capsys.readouterr().err
    assert not out.exists()


def test_theta_runs_below_threshold(tmp_path):
    # the box probability itself is defined at any intensity
    out = tmp_path / "t.csv"
    assert run(["estimate-theta", "--intensity", "0.5", "--L", "4", "--replicas", "20",
                "-o", str(out)]) == 0
    assert body(out)[0] == "parameter,estimate,std_error,replicas"


def test_figure2_is_bit_reproducible(tmp_path, monkeypatch):
    outs = []
    for name in ("a", "b"):
        d = tmp_path / name
        d.mkdir()
        monkeypatch.chdir(d)
        assert run(["figure2"] + TINY_FIG2) == 0
        outs.append((d / "figure2.csv").read_bytes())
    assert outs[0] == outs[1]


def test_results_independent_of_workers(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(["figure2", "--workers", "1", "-o", str(a)] + TINY_FIG2) == 0
    assert run(["figure2", "--workers", "2", "-o", str(b)] + TINY_FIG2) == 0
    assert body(a) == body(b)


def test_header_records_every_key(tmp_path):
    out = tmp_path / "o.csv"
    assert run(["estimate-theta", "--L", "4", "--replicas", "10", "--seed", "7",
                "-o", str(out)]) == 0
    sub, raw = load_header(out)
    assert sub == "estimate-theta"
    assert set(raw) == set(KEYS)
    assert raw["run.seed"] == "7"
    assert raw["percolation.L"] == "4.0"


def test_rerun_reproduces(tmp_path):
    first, second = tmp_path / "1.csv", tmp_path / "2.csv"
    assert run(["estimate-theta", "--L", "4", "--replicas", "30", "--seed", "3",
                "-o", str(first)]) == 0
    assert run(["estimate-theta", "--rerun", str(first), "-o", str(second)]) == 0
    assert body(first) == body(second)


def test_precedence(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("percolation.L = 6\nrun.replicas = 10\n")
    out = tmp_path / "o.csv"
    assert run(["estimate-theta", "--config", str(cfg), "--set", "percolation.L=8",
                "--L", "4", "-o", str(out)]) == 0
    _, raw = load_header(out)
    assert raw["percolation.L"] == "4.0"
    assert raw["run.replicas"] == "10"
    assert run(["estimate-theta", "--config", str(cfg), "--set", "percolation.L=8",
                "-o", str(out)]) == 0
    assert load_header(out)[1]["percolation.L"] == "8.0"


def test_bad_value(capsys):
    assert run(["estimate-theta", "--set", "percolation.L=abc"]) == 2
    assert "percolation.L" in capsys.readouterr().err


@pytest.mark.parametrize("sub", ["limit-dense", "limit-sparse", "limit-critical"])
def test_limit_commands_run(tmp_path, sub):
    out = tmp_path / "o.csv"
    args = [sub, "--replicas", "4", "--L", "4", "--M", "1", "--set", "limit.statistics=f1",
            "--set", "limit.critical_steps=10", "-o", str(out)]
    assert run(args) == 0
    assert len(body(out)) >= 2


def test_interval_measure_runs(tmp_path):
    out = tmp_path / "o.csv"
    assert run(["interval-measure", "--replicas", "2", "--T", "5", "--k", "4", "--mu", "2.9",
                "--set", "timeline.window=12", "--set", "timeline.sink_intensity=0.1",
                "-o", str(out)]) == 0
    assert any(ln.startswith("# result f1") for ln in header(out))
