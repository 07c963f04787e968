import math

import numpy as np
import pytest

from kickrotor import cli, scan


def run(tmp_path, name, *args):
    out = tmp_path / name
    code = cli.main([*args, "--out", str(out), "-q"])
    return code, out


def read_kv(path):
    return dict(line.split("=", 1) for line in path.read_text().splitlines())


def test_classical(tmp_path):
    code, out = run(tmp_path, "c", "classical", "--K", "0", "--n-kicks", "20",
                    "--ensemble-size", "100")
    assert code == 0
    rows = (out / "classical.csv").read_text().splitlines()
    assert rows[0] == "n,mean_P2" and len(rows) == 21
    assert len({r.split(",")[1] for r in rows[1:]}) == 1


def test_evolve_zero_kick_constant(tmp_path):
    code, out = run(tmp_path, "e", "evolve", "--K", "0", "--N1", "20", "--grid-size", "64",
                    "--beta-samples", "8")
    assert code == 0
    traj = np.loadtxt(out / "trajectory.csv", delimiter=",", skiprows=1)
    assert np.allclose(traj[:, 1], traj[0, 1], rtol=1e-12)
    assert (out / "trajectory.csv").read_text().startswith("n,mean_P2,p0\n")
    assert (out / "snapshot.csv").read_text().startswith("m,P,re,im,prob\n")
    assert (out / "distribution.csv").exists() and (out / "summary.txt").exists()


def test_evolve_deterministic_and_manifest_replays(tmp_path):
    args = ["evolve", "--K", "5", "--hbar-eff", "2.89", "--N1", "15", "--grid-size", "128",
            "--beta-samples", "8", "--seed", "7"]
    _, a = run(tmp_path, "a", *args)
    _, b = run(tmp_path, "b", *args)
    _, c = run(tmp_path, "c", "evolve", "--config", str(a / "manifest.txt"))
    for name in ("trajectory.csv", "distribution.csv", "snapshot.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
        assert (a / name).read_bytes() == (c / name).read_bytes()


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nK = 3.5\nphi = pi\nN1 = 6\n")
    resolved = cli.resolve(config=cfg, flags={"N1": "8"})
    assert resolved["K"] == 3.5 and resolved["phi"] == math.pi and resolved["N1"] == 8
    assert cli.resolve(preset="fig1", flags={"K": "20"})["K"] == 20.0


def test_lab_units_logged(tmp_path, caplog):
    caplog.set_level("INFO", logger="kickrotor")
    cfg = cli.resolve(flags={"f1_khz": "18", "tau_us": "3"})
    assert cfg["hbar_eff"] == pytest.approx(5.77, abs=0.01)
    assert cfg["tau"] == pytest.approx(0.054)
    assert "hbar_eff=" in caplog.text and "tau*f1=0.054" in caplog.text


def test_f_half_command(tmp_path):
    code, out = run(tmp_path, "f", "f-half", "--f1-khz", "18", "--tau-us", "3", "--N1", "10",
                    "--r-min", "0.8", "--r-max", "1.2", "--r-steps", "4001")
    assert code == 0
    assert float(read_kv(out / "summary.txt")["delta_F12"]) == pytest.approx(0.091, abs=0.01)
    assert "# f1_khz=18.0" in (out / "manifest.txt").read_text()


@pytest.mark.parametrize("args", [
    ["evolve", "--tau", "2"],
    ["evolve", "--f1-khz", "18", "--hbar-eff", "3"],
    ["evolve", "--tau-us", "3"],
    ["evolve", "--grid-size", "abc"],
    ["scan", "--r-steps", "2"],
])
def test_config_errors_exit_2(tmp_path, args, capsys):
    code, _ = run(tmp_path, "x", *args)
    assert code == cli.EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("kick_strength=3\n")
    code, _ = run(tmp_path, "x", "evolve", "--config", str(cfg))
    assert code == cli.EXIT_CONFIG


def test_guard_exit_3(tmp_path, capsys):
    code, _ = run(tmp_path, "g", "evolve", "--K", "40", "--hbar-eff", "1", "--N1", "3",
                  "--grid-size", "64", "--max-grid", "64")
    assert code == cli.EXIT_GUARD
    assert "t=" in capsys.readouterr().err


def test_spectrum_fig2(tmp_path):
    code, out = run(tmp_path, "s", "spectrum", "--preset", "fig2")
    assert code == 0
    for r in ("0.98", "0.93", "0.8"):
        assert (out / f"spectrum_r{r}.csv").read_text().startswith("f_over_f1,power\n")


def test_fig1_preset_parameters(tmp_path):
    code, out = run(tmp_path, "p", "spectrum", "--preset", "fig1", "--f-steps", "11")
    assert code == 0
    kv = read_kv(out / "manifest.txt")
    assert kv["K"] == "42.0" and kv["N1"] == "10" and kv["tau"] == "0.054"
    assert float(kv["phi"]) == math.pi


def test_scan_command(tmp_path):
    code, out = run(tmp_path, "r", "scan", "--K", "42", "--N1", "10", "--phi", "pi",
                    "--grid-size", "128", "--r-min", "0.99", "--r-max", "1.01", "--r-steps", "41")
    assert code == 0
    assert (out / "resonance.csv").read_text().startswith("r,p0,se\n")
    kv = read_kv(out / "width_report.txt")
    assert float(kv["W"]) == pytest.approx(float(kv["delta_r"]) * 10)


def test_width_vs_n_command(tmp_path, monkeypatch):
    def fake(params, n1_list, **kw):
        n1 = np.array(n1_list)
        dr = 1.0 / n1**2
        return scan.WidthSeries(n1, dr, dr * n1, scan.local_slopes(n1, dr), [""] * len(n1))

    monkeypatch.setattr(scan, "width_vs_n", fake)
    code, out = run(tmp_path, "w", "width-vs-n", "--k-list", "12,20", "--include-modulated",
                    "--n1-list", "5 10 20")
    assert code == 0
    for tag in ("_K12", "_K20", "_modulated"):
        assert (out / f"width_vs_n{tag}.csv").exists()
    assert read_kv(out / "summary.txt")["fourier_limit"] == "1.0"
