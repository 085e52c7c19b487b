import json
import subprocess
import sys

from stochdr import harness
from stochdr.cli import main
from stochdr.errors import NewtonDivergedError

SMALL = ["--set", "n=12", "--set", "K=10", "--set", "paths=2"]


def write_cfg(tmp_path, text):
    p = tmp_path / "cfg.yaml"
    p.write_text(text)
    return str(p)


def test_run(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "equation: quasilinear\nnoise:\n  mu0: 0.1\n")
    out = tmp_path / "out"
    assert main(["run", "--config", cfg, *SMALL, "--out", str(out)]) == 0
    assert (out / "convergence.csv").exists()
    s = json.loads((out / "summary.json").read_text())
    assert s["config"]["noise"]["mu0"] == 0.1 and s["config"]["n"] == 12
    assert "paths ok" in capsys.readouterr().out


def test_invalid_config_exit_code(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "equation: quasilinear\nscheme: dr_h\n")
    assert main(["run", "--config", cfg, "--out", str(tmp_path)]) != 0
    assert "error" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert main(["run", "--config", str(tmp_path / "none.yaml")]) != 0


def test_path_failures_exit_code(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise NewtonDivergedError("forced", residual=None)

    monkeypatch.setattr(harness, "reference_solve", boom)
    assert main(["run", *SMALL, "--out", str(tmp_path)]) != 0
    assert (tmp_path / "summary.json").exists()


def test_compare(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "equation: reaction_diffusion_h\nlambda: 0.1\nN_max: 800\n"
                              "stop_tol: 1.0e-9\n")
    assert main(["compare", "--config", cfg, *SMALL, "--out", str(tmp_path / "c")]) == 0
    assert json.loads(capsys.readouterr().out)["passed"] is True


def test_compare_wrong_equation(tmp_path):
    assert main(["compare", *SMALL, "--out", str(tmp_path)]) != 0


def test_check_hypotheses(capsys):
    assert main(["check-hypotheses", "--set", "n=12", "--trials", "500"]) == 0
    assert "PASS monotone" in capsys.readouterr().out


def test_check_hypotheses_negative_control(capsys):
    assert main(["check-hypotheses", "--set", "equation=porous_media", "--set", "reaction=negative_linear",
                 "--trials", "200"]) != 0
    assert "FAIL" in capsys.readouterr().out


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "stochdr", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "check-hypotheses" in r.stdout
