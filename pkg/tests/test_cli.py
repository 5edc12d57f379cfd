import pytest
from click.testing import CliRunner

from spinmac.cli import main


@pytest.fixture
def runner():
    return CliRunner()


def _kv(text):
    out = {}
    for line in text.splitlines():
        if " = " in line:
            k, v = line.lstrip("# ").split(" = ", 1)
            out[k] = v
    return out


def _matrix(path, rows):
    path.write_text(f"{len(rows)}\n" + "".join(" ".join(map(str, r)) + "\n" for r in rows))
    return str(path)


@pytest.mark.parametrize("cmd", [[], ["transfer-curve"], ["matmul"], ["report"], ["calibrate"]])
def test_help(runner, cmd):
    r = runner.invoke(main, cmd + ["--help"])
    assert r.exit_code == 0
    assert "Usage" in r.output


def test_transfer_curve_analytic(runner, tmp_path):
    out = tmp_path / "g.csv"
    r = runner.invoke(main, ["transfer-curve", "--out", str(out)])
    assert r.exit_code == 0, r.output
    s = _kv(r.output)
    assert float(s["kappa_linearized_per_kohm_v"]) == pytest.approx(-0.95, abs=0.05)
    lines = out.read_text().splitlines()
    assert lines[0] == "# source = analytic"
    assert len([ln for ln in lines if not ln.startswith("#")]) == 42


def test_transfer_curve_sllg_reproducible(runner, tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("sllg.trajectories_count = 3\nsllg.t_max_ns = 5\n"
                   "transfer.vg_start_v = -0.40\ntransfer.vg_stop_v = -0.20\n"
                   "transfer.vg_step_mv = 10\n")
    outs = []
    for name in ("a.csv", "b.csv"):
        p = tmp_path / name
        r = runner.invoke(main, ["transfer-curve", "--config", str(cfg), "--source", "sllg",
                                 "--seed", "11", "--out", str(p), "--threads", "2"])
        assert r.exit_code == 0, r.output
        outs.append(p.read_bytes())
    assert outs[0] == outs[1]
    assert b"# seed = 11" in outs[0]


def test_missing_config(runner, tmp_path):
    p = tmp_path / "nope.cfg"
    r = runner.invoke(main, ["report", "--config", str(p)])
    assert r.exit_code != 0
    assert str(p) in r.output


def test_unknown_key_diagnostic(runner, tmp_path):
    p = tmp_path / "bad.cfg"
    p.write_text("magnet.temperature_k = 300\nmagnet.colour = blue\n")
    r = runner.invoke(main, ["calibrate", "--config", str(p)])
    assert r.exit_code != 0
    assert f"{p}:2" in r.output and "unknown key" in r.output


def test_matmul_ideal_exact(runner, tmp_path):
    rows = [[1, 2, 3, 4], [5, 6, 7, 8], [9, 10, 11, 12], [12, 11, 10, 9]]
    a = _matrix(tmp_path / "a.txt", rows)
    out = tmp_path / "r.csv"
    r = runner.invoke(main, ["matmul", a, a, "--fidelity", "ideal", "--no-noise",
                             "--seed", "1", "--out", str(out)])
    assert r.exit_code == 0, r.output
    assert float(_kv(r.output)["error_rate"]) == 0.0
    assert out.read_text().startswith("# seed = 1\n")


def test_matmul_seed_sweep(runner, tmp_path):
    a = _matrix(tmp_path / "a.txt", [[3, 4], [5, 6]])
    out = tmp_path / "s.csv"
    r = runner.invoke(main, ["matmul", a, a, "--seed", "1", "--seed", "2", "--out", str(out)])
    assert r.exit_code == 0, r.output
    lines = out.read_text().splitlines()
    assert lines[0].startswith("seed,") and len(lines) == 3


def test_matmul_rejects_large(runner, tmp_path):
    a = _matrix(tmp_path / "a.txt", [[1] * 18 for _ in range(18)])
    r = runner.invoke(main, ["matmul", a, a])
    assert r.exit_code != 0
    assert "2060 nm / 120 nm" in r.output


def test_report(runner, tmp_path):
    out = tmp_path / "rep.csv"
    r = runner.invoke(main, ["report", "--sweep", "N=10", "--out", str(out)])
    assert r.exit_code == 0, r.output
    lines = out.read_text().splitlines()
    header = lines[0].split(",")
    row = dict(zip(header, lines[1].split(",")))
    assert int(row["devices_spin"]) == 200 and int(row["devices_crossbar"]) == 1000
    assert "excluded" in _kv(r.output)


def test_report_full_scale_energy(runner, tmp_path):
    out = tmp_path / "rep.csv"
    r = runner.invoke(main, ["report", "--sweep", "N=1000", "--n-max", "1000", "--out", str(out)])
    assert r.exit_code == 0, r.output
    lines = out.read_text().splitlines()
    row = dict(zip(lines[0].split(","), lines[1].split(",")))
    assert float(row["energy_spin_worst_j"]) == pytest.approx(60e-6, rel=1e-9)


def test_report_empty_sweep(runner, tmp_path):
    out = tmp_path / "rep.csv"
    r = runner.invoke(main, ["report", "--sweep", "N=", "--out", str(out)])
    assert r.exit_code == 0, r.output
    assert len(out.read_text().splitlines()) == 1


def test_calibrate_block(runner, tmp_path):
    out = tmp_path / "cal.cfg"
    r = runner.invoke(main, ["calibrate", "--out", str(out)])
    assert r.exit_code == 0, r.output
    kv = _kv(out.read_text())
    assert set(kv) >= {"calibration.kappa_s_per_v", "calibration.delta_v",
                       "calibration.decode_scale_compensated_unitless"}
    # the block merges back into a config that then loads
    r = runner.invoke(main, ["report", "--config", str(out), "--sweep", "N=2"])
    assert r.exit_code == 0, r.output


def test_calibrate_pinned_gamma(runner, tmp_path):
    cfg = tmp_path / "p.cfg"
    cfg.write_text("magnet.pinned_gamma_v = -0.001\n")
    out = tmp_path / "cal.cfg"
    r = runner.invoke(main, ["calibrate", "--config", str(cfg), "--out", str(out)])
    assert r.exit_code == 0, r.output
    big_gamma = 0.26235
    assert float(_kv(out.read_text())["calibration.delta_v"]) == pytest.approx(
        -0.001 - big_gamma, abs=1e-3)


def test_calibrate_rejects_bad_table(runner, tmp_path):
    t = tmp_path / "t.csv"
    t.write_text("1e10, 1e-9, 1e-10\n5e9, 2e-9, 1e-10\n")
    cfg = tmp_path / "c.cfg"
    cfg.write_text(f"mobility.mode_name = table\nmobility.table_path_file = {t}\n")
    r = runner.invoke(main, ["calibrate", "--config", str(cfg)])
    assert r.exit_code != 0
    assert "strictly increasing" in r.output
