import csv
import math

import pytest

from spinbound import cli
from spinbound.cli import main, summary_path


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_bound_row(tmp_path):
    out = tmp_path / "b.csv"
    assert main(["bound", "--R", "256", "--output", str(out)]) == 0
    head, row = _rows(out)
    assert head == ["delta_star", "exponent_C", "logF", "closed_form"]
    ds, C, logF, cf = map(float, row)
    assert 0 < ds < 0.01 and C > 0 and logF < 0 and cf > 0
    assert summary_path(out).read_text().startswith("# spinbound run record")


def test_lemmas_pass(tmp_path):
    out = tmp_path / "l.csv"
    assert main(["lemmas", "--k-max", "200", "--output", str(out)]) == 0
    rows = _rows(out)[1:]
    assert rows and all(r[-1] == "1" for r in rows)


def test_unknown_flag_exit_2(capsys):
    assert main(["mc", "--bogus", "1"]) == 2


def test_unknown_config_key_exit_2(tmp_path, capsys):
    p = tmp_path / "c.txt"
    p.write_text("subcommand=mc\nwarp_factor=9\n")
    assert main(["mc", "--config", str(p)]) == 2
    assert "warp_factor" in capsys.readouterr().err


def test_mismatched_config_subcommand(tmp_path):
    p = tmp_path / "c.txt"
    p.write_text("subcommand=resist\n")
    assert main(["mc", "--config", str(p)]) == 2


def test_bad_value_exit_2(tmp_path):
    assert main(["mc", "--beta", "-1", "--output", str(tmp_path / "m.csv")]) == 2


def test_non_finite_exit_3(tmp_path, monkeypatch):
    monkeypatch.setitem(cli.RUNNERS, "lemmas", lambda p, s: (["a"], [[math.nan]], []))
    out = tmp_path / "n.csv"
    assert main(["lemmas", "--output", str(out)]) == 3
    assert not out.exists()


def test_perc_replay_identical(tmp_path, capsys):
    out = tmp_path / "p.csv"
    args = ["perc", "--M", "16", "--replicas", "300", "--r-ks", "2,4,8", "--k-max", "6", "--rho", "0.2",
            "--seed", "11", "--output", str(out)]
    assert main(args) == 0
    capsys.readouterr()
    assert main(["replay", str(summary_path(out))]) == 0
    assert "replay identical" in capsys.readouterr().out
    assert (tmp_path / "p.replay.csv").read_bytes() == out.read_bytes()
    assert main(["replay", str(summary_path(out)), "--seed", "12"]) == 0
    assert "differs" in capsys.readouterr().out


@pytest.mark.parametrize("workers", [1, 2])
def test_resist_replay_across_workers(tmp_path, workers, capsys):
    base = ["resist", "--M", "16", "--x-list", "2,4", "--replicas", "4", "--c-tilde", "0.3",
            "--chunk", "2", "--seed", "5"]
    ref = tmp_path / "r1.csv"
    assert main(base + ["--workers", "1", "--output", str(ref)]) == 0
    out = tmp_path / "rw.csv"
    assert main(base + ["--workers", str(workers), "--output", str(out)]) == 0
    assert out.read_bytes() == ref.read_bytes()


def test_mc_small(tmp_path):
    out = tmp_path / "m.csv"
    assert main(["mc", "--M", "4", "--x-list", "1,2", "--sweeps", "640", "--cutoff", "2",
                 "--output", str(out)]) == 0
    rows = _rows(out)[1:]
    assert [r[0] for r in rows] == ["1", "2"]
    assert all(abs(float(r[1])) <= 1 for r in rows)


def test_version_mismatch_refused(tmp_path, capsys):
    out = tmp_path / "l.csv"
    assert main(["lemmas", "--k-max", "20", "--output", str(out)]) == 0
    s = summary_path(out)
    s.write_text(s.read_text().replace(f"# version: {cli.__version__}", "# version: 0.0.1"))
    assert main(["replay", str(s)]) == 2
    assert "refusing" in capsys.readouterr().err
