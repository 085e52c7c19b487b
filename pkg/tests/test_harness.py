import json

import numpy as np
import pytest

from stochdr import harness
from stochdr.config import RunConfig
from stochdr.errors import ConfigError, LambdaNuTooLargeError, NewtonDivergedError, RunFailedError
from stochdr.harness import (
    ConvergenceReport,
    compare_schemes,
    emit_outputs,
    initial_datum,
    run_experiment,
)
from stochdr.spaces import build_grid


def small(**kw):
    base = dict(n=16, K=20, T=0.5, paths=3, N_max=200, stop_tol=1e-8)
    base.update(kw)
    return RunConfig(**base)


def test_deterministic_linear_limit():
    cfg = small(paths=1, flux="linear", reaction="zero", nu_react=0.0,
                noise={"mu0": 0.0}, stop_tol=1e-10)
    rep = run_experiment(cfg)
    assert rep.summary["final"]["errV"] <= 1e-6


def test_csv_is_byte_identical(tmp_path):
    cfg = small(paths=2)
    run_experiment(cfg, tmp_path / "a")
    run_experiment(cfg, tmp_path / "b")
    assert (tmp_path / "a/convergence.csv").read_bytes() == (tmp_path / "b/convergence.csv").read_bytes()


def test_path_order_and_workers_do_not_matter(tmp_path):
    cfg = small(paths=4)
    run_experiment(cfg, tmp_path / "a")
    run_experiment(cfg, tmp_path / "b", path_order=[3, 1, 0, 2])
    run_experiment(cfg.replace(workers=2), tmp_path / "c")
    ref = (tmp_path / "a/convergence.csv").read_bytes()
    assert (tmp_path / "b/convergence.csv").read_bytes() == ref
    assert (tmp_path / "c/convergence.csv").read_bytes() == ref


def test_bad_path_order():
    with pytest.raises(ConfigError):
        run_experiment(small(paths=2), path_order=[0, 0])


def test_default_quasilinear_error_curve_nonincreasing():
    rep = run_experiment(RunConfig(paths=16))
    err = rep.errV
    assert np.all(np.diff(err[5:]) <= 0)
    assert len(rep.rows) <= RunConfig().N_max
    assert all(np.isfinite(v) for row in rep.rows for v in row)
    assert [r[0] for r in rep.rows] == list(range(len(rep.rows)))


def test_common_random_numbers(monkeypatch):
    seen = {"ref": [], "dr": []}
    real_ref = harness.reference_solve
    real_dr = harness.DouglasRachford

    def spy_ref(op, path, x0, opts=None):
        seen["ref"].append(path)
        return real_ref(op, path, x0, opts)

    class SpyDR(real_dr):
        def __init__(self, op, path, *a, **k):
            seen["dr"].append(path)
            super().__init__(op, path, *a, **k)

    monkeypatch.setattr(harness, "reference_solve", spy_ref)
    monkeypatch.setattr(harness, "DouglasRachford", SpyDR)
    run_experiment(small(paths=2))
    assert len(seen["ref"]) == 2
    assert all(a is b for a, b in zip(seen["ref"], seen["dr"]))


def test_failed_paths(monkeypatch):
    real_ref = harness.reference_solve
    calls = []

    def flaky(op, path, x0, opts=None):
        calls.append(1)
        if len(calls) == 1:
            raise NewtonDivergedError("forced", residual=None)
        return real_ref(op, path, x0, opts)

    monkeypatch.setattr(harness, "reference_solve", flaky)
    rep = run_experiment(small(paths=11, K=10, n=8))
    assert rep.summary["final"]["paths_failed"] == 1
    assert "0" in rep.summary["final"]["failures"]

    calls.clear()
    with pytest.raises(RunFailedError):
        run_experiment(small(paths=3, K=10, n=8))


def test_dr_h_checks_lambda_nu():
    cfg = small(equation="reaction_diffusion_h", scheme="dr_h", lam=50.0)
    with pytest.raises(LambdaNuTooLargeError):
        run_experiment(cfg)


def test_dr_h_run():
    rep = run_experiment(small(equation="reaction_diffusion_h", scheme="dr_h", lam=0.1,
                               N_max=500, stop_tol=1e-8, paths=2))
    assert rep.summary["final"]["converged"] == 2


def test_porous_run():
    rep = run_experiment(small(equation="porous_media", paths=2))
    assert rep.summary["final"]["converged"] == 2
    assert rep.summary["final"]["errV"] < 1e-6


def test_compare_linear():
    cfg = small(equation="reaction_diffusion_h", reaction="zero", lam=0.1, N_max=1000,
                stop_tol=1e-10, paths=2)
    rep = compare_schemes(cfg)
    assert rep["dist_v_ref"] <= 1e-5 and rep["dist_h_ref"] <= 1e-5
    assert rep["dist_v_h"] <= 2e-5


def test_compare_odd_default(tmp_path):
    cfg = small(equation="reaction_diffusion_h", lam=0.1, N_max=1000, stop_tol=1e-9, paths=2)
    rep = compare_schemes(cfg, tmp_path)
    assert rep["passed"] and rep["dist_v_h"] <= rep["threshold"]
    assert json.loads((tmp_path / "compare.json").read_text())["passed"]


def test_compare_rejects_incompatible_equation():
    with pytest.raises(ConfigError):
        compare_schemes(small())


def test_empty_report_writes_header_only(tmp_path):
    emit_outputs(ConvergenceReport([], {}), tmp_path)
    assert (tmp_path / "convergence.csv").read_text() == (
        "n,dv_norm,errV,errH,max_resolvent_residual\n")


def test_three_rows_give_four_lines(tmp_path):
    rows = [(i, 1.0 / (i + 1), 0.5, 0.25, 1e-11) for i in range(3)]
    emit_outputs(ConvergenceReport(rows, {}), tmp_path)
    lines = (tmp_path / "convergence.csv").read_text().splitlines()
    assert len(lines) == 4 and lines[1] == "0,1.0,0.5,0.25,1e-11"


def test_summary_roundtrip(tmp_path):
    cfg = small(paths=2)
    run_experiment(cfg, tmp_path)
    s = json.loads((tmp_path / "summary.json").read_text())
    assert s["config_hash"] == cfg.hash()
    assert RunConfig.from_dict(s["config"]).hash() == cfg.hash()
    assert s["schema_version"] == 1
    assert {"numpy", "scipy", "python"} <= set(s["versions"])
    assert len(s["seeds"]["paths"]) == 2


def test_fields_snapshot(tmp_path):
    cfg = small(paths=1, snapshot_times=[0.0, 0.5])
    run_experiment(cfg, tmp_path)
    lines = (tmp_path / "fields.csv").read_text().splitlines()
    assert lines[0] == "path,k,t,xi,X,X_ref"
    assert len(lines) == 1 + 2 * 16


def test_unwritable_dir(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError, match="file"):
        emit_outputs(ConvergenceReport([], {}), blocker / "sub")


@pytest.mark.parametrize("kind", ["sine", "bump", "random_V"])
def test_initial_data(kind):
    g = build_grid(16)
    x = initial_datum(RunConfig(initial=kind, x_amp=2.0), g)
    assert x.shape == (16,) and np.abs(x).max() == pytest.approx(2.0, rel=0.05)
