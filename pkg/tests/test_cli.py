import shutil

import pytest

from viscostab import cli
from viscostab import io

SHORT = "model.kind = {kind}\ngrid.nx = 12\ngrid.ny = 12\nrun.t_end = 0.5\nrun.output_every = 20\n"


@pytest.fixture(scope="module")
def runs(tmp_path_factory):
    root = tmp_path_factory.mktemp("runs")
    for kind in ("oldroyd-b", "giesekus"):
        cfg = root / f"{kind}.txt"
        cfg.write_text(SHORT.format(kind=kind))
        code = cli.main(["simulate", "--config", str(cfg), "--out", str(root / "out" / kind), "--audit-samples", "500"])
        assert code == 0
    return root


def test_simulate_outputs(runs):
    out = runs / "out" / "oldroyd-b"
    for name in ("config.txt", "trajectory.csv", "decay.txt", "audit.txt", "checks.txt", "theta.csv", "B_xy.csv"):
        assert (out / name).exists(), name
    tab = io.read_table(out / "trajectory.csv")
    for col in ("t", "v_th", "v_mech", "v_neq", "zeta_int", "min_eig_B", "max_speed", "min_theta", "max_theta"):
        assert col in tab
    assert "y_th_mn[0.35:0.6]" in tab and "v_th_m[0.5]" in tab


def test_simulate_is_bit_identical(runs, tmp_path):
    cfg = runs / "oldroyd-b.txt"
    assert cli.main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "again"), "--audit-samples", "500"]) == 0
    a = (runs / "out" / "oldroyd-b" / "trajectory.csv").read_bytes()
    assert (tmp_path / "again" / "trajectory.csv").read_bytes() == a


def test_decay_fit(runs, capsys):
    traj = runs / "out" / "oldroyd-b" / "trajectory.csv"
    assert cli.main(["decay-fit", "--trajectory", str(traj)]) == 0
    assert "passed = true" in capsys.readouterr().out
    # an impossible rate is an assertion failure, not a usage error
    assert cli.main(["decay-fit", "--trajectory", str(traj), "--cmech", "50"]) == 1
    assert cli.main(["decay-fit", "--trajectory", str(traj), "--cmech", "fast"]) == 2


def test_report(runs, capsys):
    assert cli.main(["report", str(runs / "out")]) == 0
    text = capsys.readouterr().out
    assert "oldroyd-b" in text and "giesekus" in text
    lines = (runs / "out" / "summary.csv").read_text().splitlines()
    assert len(lines) == 3


def test_report_errors(runs, tmp_path, capsys):
    assert cli.main(["report", str(tmp_path)]) == 2
    assert "trajectory.csv" in capsys.readouterr().err
    bad = tmp_path / "bad"
    shutil.copytree(runs / "out" / "oldroyd-b", bad / "run")
    p = bad / "run" / "trajectory.csv"
    lines = p.read_text().splitlines()
    lines[3] = lines[3].replace(",", ";", 2)
    p.write_text("\n".join(lines) + "\n")
    assert cli.main(["report", str(bad)]) == 2
    assert "trajectory.csv:4" in capsys.readouterr().err


def test_audit_subcommand(tmp_path, capsys):
    assert cli.main(["audit", "--model", "giesekus", "--alpha", "0.5", "--samples", "2000", "--out", str(tmp_path)]) == 0
    assert "F-stability.margin" in capsys.readouterr().out
    assert list(tmp_path.glob("audit_*_worst.csv"))
    assert cli.main(["audit", "--model", "giesekus", "--alpha", "1.2"]) == 2
    assert cli.main(["audit", "--model", "oldroyd-b", "--eig-lo", "5", "--eig-hi", "1"]) == 2


def test_steady_subcommand(tmp_path, capsys):
    cfg = tmp_path / "c.txt"
    cfg.write_text("model.kind = oldroyd-b\ngrid.nx = 8\ngrid.ny = 8\n")
    assert cli.main(["steady", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    assert "maximum_principle = true" in capsys.readouterr().out
    _, g = io.read_raster(tmp_path / "theta_hat.csv")
    assert g.nx == 8


def test_usage_errors(tmp_path):
    with pytest.raises(SystemExit) as info:
        cli.main(["simulate"])
    assert info.value.code == 2
    cfg = tmp_path / "c.txt"
    cfg.write_text("model.kind = fene-p\nmodel.b = 2.5\n")
    assert cli.main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
