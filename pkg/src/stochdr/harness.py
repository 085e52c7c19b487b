"""Monte Carlo orchestration: paths, reference runs, splitting runs, outputs.

Every path m draws its noise from ``path_seed(base_seed, m)``, and the
same sampled path feeds the reference solver and every splitting scheme.
Per-path results are merged in path-index order and reduced with
``math.fsum``, so the aggregated numbers do not depend on scheduling.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .config import SCHEMA_VERSION, RunConfig
from .errors import ConfigError, LambdaNuTooLargeError, RunFailedError, StochDRError
from .noise import NoiseSpec, WienerPath, compute_nu, path_seed, sample_path
from .operators import (
    MonotoneOperator,
    PorousMediaOperator,
    QuasilinearOperator,
    TimeProfile,
    check_hypotheses,
    reaction_diffusion,
    shift_operator,
)
from .reference import reference_solve
from .resolvents import SolverOpts
from .spaces import Grid, build_grid
from .splitting import DouglasRachford, HilbertDouglasRachford

log = logging.getLogger(__name__)

CSV_HEADER = ("n", "dv_norm", "errV", "errH", "max_resolvent_residual")
MAX_FAIL_FRACTION = 0.10


def build_operator(cfg: RunConfig, grid: Grid) -> MonotoneOperator:
    profile = TimeProfile(cfg.profile_amp, cfg.profile_freq)
    if cfg.equation == "quasilinear":
        return QuasilinearOperator(grid, flux=cfg.flux, reaction=cfg.reaction_name,
                                   nu_react=cfg.nu_react, profile=profile)
    if cfg.equation == "porous_media":
        return PorousMediaOperator(grid, psi=cfg.reaction_name, nu_lin=cfg.nu_lin,
                                   profile=profile)
    if cfg.equation == "reaction_diffusion_h":
        return reaction_diffusion(grid, cfg.reaction_name, profile)
    raise ConfigError(f"unknown equation {cfg.equation!r}")


def initial_datum(cfg: RunConfig, grid: Grid) -> np.ndarray:
    xi = grid.nodes
    if cfg.initial == "sine":
        x = np.sin(np.pi * xi)
    elif cfg.initial == "bump":
        s = (xi - 0.5) / 0.3
        inside = np.abs(s) < 1
        x = np.zeros_like(xi)
        x[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
    else:
        rng = np.random.default_rng([cfg.base_seed, 7])
        k = np.arange(1, 9)
        x = (rng.standard_normal(8) / k**2) @ np.sin(np.pi * np.outer(k, xi))
        x /= np.max(np.abs(x))
    return cfg.x_amp * x


def noise_spec(cfg: RunConfig) -> NoiseSpec:
    return NoiseSpec(cfg.noise.J_modes, cfg.noise.mu0, cfg.noise.decay_p, seed=cfg.base_seed)


def solver_opts(cfg: RunConfig) -> SolverOpts:
    return SolverOpts(newton_tol=cfg.newton_tol, max_newton=cfg.max_newton)


def check_scheme(cfg: RunConfig, scheme: str | None = None) -> float:
    """Validate ``cfg`` for ``scheme`` and return nu; dr_h needs lambda * nu < 1."""
    scheme = scheme or cfg.scheme
    cfg.replace(scheme=scheme).validate()
    grid = build_grid(cfg.n)
    nu = compute_nu(noise_spec(cfg), grid, cfg.triple)
    if scheme == "dr_h" and cfg.lam * nu >= 1:
        raise LambdaNuTooLargeError(f"lambda*nu = {cfg.lam * nu:.3g} must be < 1 for dr_h")
    return nu


def make_path(cfg: RunConfig, grid: Grid, m: int) -> WienerPath:
    return sample_path(noise_spec(cfg), grid, cfg.K, cfg.T, cfg.triple,
                       seed=path_seed(cfg.base_seed, m))


@dataclass
class PathResult:
    m: int
    rows: np.ndarray  # (iterations, 4): dv_norm, errV, errH, max residual
    iterations: int = 0
    converged: bool = False
    final_errV: float = float("nan")
    final_errH: float = float("nan")
    snapshots: dict = field(default_factory=dict)
    X: np.ndarray | None = None
    error: str = ""

    @property
    def failed(self) -> bool:
        return bool(self.error)


def _rows(history) -> np.ndarray:
    return np.array([[r.dv_norm, r.errV, r.errH, r.max_residual] for r in history],
                    dtype=float).reshape(-1, 4)


def _snapshot_indices(cfg: RunConfig, K: int) -> list[int]:
    return [int(round(s / cfg.T * K)) for s in cfg.snapshot_times]


def _solve_path(cfg: RunConfig, m: int, scheme: str | None = None,
                keep_X: bool = False) -> PathResult:
    scheme = scheme or cfg.scheme
    grid = build_grid(cfg.n)
    try:
        path = make_path(cfg, grid, m)
        op = shift_operator(build_operator(cfg, grid), path.nu, cfg.delta, cfg.T)
        x0 = initial_datum(cfg, grid)
        opts = solver_opts(cfg)
        ref = reference_solve(op, path, x0, opts)
        cls = DouglasRachford if scheme == "dr_v" else HilbertDouglasRachford
        res = cls(op, path, x0, cfg.lam, opts).solve(None, cfg.N_max, cfg.stop_tol, y_ref=ref.y)
    except StochDRError as exc:
        log.warning("path %d failed: %s", m, exc)
        return PathResult(m, np.zeros((0, 4)), error=f"{type(exc).__name__}: {exc}")
    d = res.y - ref.y
    snaps = {k: (res.X[k].copy(), ref.X[k].copy()) for k in _snapshot_indices(cfg, path.K)}
    return PathResult(m, _rows(res.history), res.iterations, res.converged,
                      path.norm_V(d), path.norm_H(d), snaps, res.X if keep_X else None)


def _rms(values) -> float:
    values = list(values)
    return math.sqrt(math.fsum(v * v for v in values) / len(values)) if values else float("nan")


def aggregate(results: list[PathResult]) -> list[tuple]:
    """Per-iteration Monte Carlo rows; finished paths hold their last row."""
    ok = [r for r in sorted(results, key=lambda r: r.m) if not r.failed and len(r.rows)]
    if not ok:
        return []
    N = max(len(r.rows) for r in ok)
    rows = []
    for n in range(N):
        cur = [r.rows[min(n, len(r.rows) - 1)] for r in ok]
        rows.append((n, _rms(c[0] for c in cur), _rms(c[1] for c in cur),
                     _rms(c[2] for c in cur), max(float(c[3]) for c in cur)))
    return rows


@dataclass
class ConvergenceReport:
    rows: list[tuple]
    summary: dict
    results: list[PathResult] = field(default_factory=list, repr=False)
    config: RunConfig | None = None

    @property
    def errV(self) -> np.ndarray:
        return np.array([r[2] for r in self.rows])

    @property
    def dv(self) -> np.ndarray:
        return np.array([r[1] for r in self.rows])


def _versions() -> dict:
    return {"stochdr": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def _map_paths(cfg: RunConfig, order, **kw) -> list[PathResult]:
    if cfg.workers > 1 and len(order) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [pool.submit(_solve_path, cfg, m, **kw) for m in order]
            results = [f.result() for f in futures]
    else:
        results = [_solve_path(cfg, m, **kw) for m in order]
    return sorted(results, key=lambda r: r.m)


def run_experiment(cfg: RunConfig, out_dir: str | Path | None = None,
                   path_order=None) -> ConvergenceReport:
    """Run every path, aggregate, optionally write outputs.

    Raises :class:`RunFailedError` (after writing outputs) when more than
    10% of the paths fail.
    """
    check_scheme(cfg)
    t0 = time.perf_counter()
    order = list(range(cfg.paths)) if path_order is None else list(path_order)
    if sorted(order) != list(range(cfg.paths)):
        raise ConfigError("path_order must be a permutation of range(paths)")
    results = _map_paths(cfg, order)
    rows = aggregate(results)
    ok = [r for r in results if not r.failed]
    failed = [r for r in results if r.failed]
    summary = {
        "schema_version": SCHEMA_VERSION,
        "config": cfg.to_dict(),
        "config_hash": cfg.hash(),
        "seeds": {"base_seed": cfg.base_seed,
                  "paths": [f"SeedSequence({cfg.base_seed}, spawn_key=({r.m},))" for r in results]},
        "final": {
            "errV": _rms(r.final_errV for r in ok),
            "errH": _rms(r.final_errH for r in ok),
            "iterations": [r.iterations for r in results],
            "converged": sum(r.converged for r in ok),
            "paths_ok": len(ok),
            "paths_failed": len(failed),
            "failures": {str(r.m): r.error for r in failed},
        },
        "wall_time_s": time.perf_counter() - t0,
        "versions": _versions(),
    }
    report = ConvergenceReport(rows, summary, results, cfg)
    if out_dir is not None:
        emit_outputs(report, out_dir)
    if len(failed) > MAX_FAIL_FRACTION * cfg.paths:
        raise RunFailedError(f"{len(failed)} of {cfg.paths} paths failed")
    return report


def _write_csv(path: Path, rows) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for n, *vals in rows:
            w.writerow([int(n)] + [repr(float(v)) for v in vals])


def emit_outputs(report: ConvergenceReport, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        written = [out / "convergence.csv", out / "summary.json"]
        _write_csv(written[0], report.rows)
        written[1].write_text(json.dumps(report.summary, indent=2, sort_keys=True) + "\n",
                              encoding="utf-8")
        snaps = [(r.m, k, v) for r in report.results for k, v in sorted(r.snapshots.items())]
        if snaps:
            cfg = report.config
            xi = build_grid(cfg.n).nodes
            dt = cfg.T / cfg.K
            p = out / "fields.csv"
            with p.open("w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(("path", "k", "t", "xi", "X", "X_ref"))
                for m, k, (X, Xr) in snaps:
                    for i in range(len(xi)):
                        w.writerow([m, k, repr(k * dt), repr(float(xi[i])),
                                    repr(float(X[i])), repr(float(Xr[i]))])
            written.append(p)
    except OSError as exc:
        raise OSError(f"cannot write outputs to {out}: {exc}") from exc
    return written


def compare_schemes(cfg: RunConfig, out_dir: str | Path | None = None) -> dict:
    """Run both schemes on identical paths for the reaction-diffusion problem."""
    if cfg.equation != "reaction_diffusion_h":
        raise ConfigError("compare needs equation = reaction_diffusion_h")
    check_scheme(cfg, "dr_h")
    t0 = time.perf_counter()
    grid = build_grid(cfg.n)
    x0 = initial_datum(cfg, grid)
    opts = solver_opts(cfg)
    per_path = []
    failures = {}
    for m in range(cfg.paths):
        try:
            path = make_path(cfg, grid, m)
            op = shift_operator(build_operator(cfg, grid), path.nu, cfg.delta, cfg.T)
            ref = reference_solve(op, path, x0, opts)
            rv = DouglasRachford(op, path, x0, cfg.lam, opts).solve(
                None, cfg.N_max, cfg.stop_tol)
            rh = HilbertDouglasRachford(op, path, x0, cfg.lam, opts).solve(
                None, cfg.N_max, cfg.stop_tol)
        except StochDRError as exc:
            failures[str(m)] = f"{type(exc).__name__}: {exc}"
            continue
        per_path.append({
            "m": m,
            "v_h": path.norm_H(rv.y - rh.y),
            "v_ref": path.norm_H(rv.y - ref.y),
            "h_ref": path.norm_H(rh.y - ref.y),
            "iterations_v": rv.iterations,
            "iterations_h": rh.iterations,
            "converged_v": rv.converged,
            "converged_h": rh.converged,
        })
    threshold = max(1e-4, 100 * cfg.stop_tol)
    report = {
        "config": cfg.to_dict(),
        "config_hash": cfg.hash(),
        "threshold": threshold,
        "dist_v_h": _rms(p["v_h"] for p in per_path),
        "dist_v_ref": _rms(p["v_ref"] for p in per_path),
        "dist_h_ref": _rms(p["h_ref"] for p in per_path),
        "paths": per_path,
        "failures": failures,
        "wall_time_s": time.perf_counter() - t0,
        "versions": _versions(),
    }
    report["passed"] = bool(per_path) and all(
        report[k] <= threshold for k in ("dist_v_h", "dist_v_ref", "dist_h_ref"))
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "compare.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n",
                                          encoding="utf-8")
    if len(failures) > MAX_FAIL_FRACTION * cfg.paths:
        raise RunFailedError(f"{len(failures)} of {cfg.paths} paths failed")
    return report


def hypothesis_report(cfg: RunConfig, trials: int = 10_000, seed: int = 0):
    """Check the configured operator before and after the strong-monotonicity shift."""
    cfg.validate()
    grid = build_grid(cfg.n)
    path = make_path(cfg, grid, 0)
    base = build_operator(cfg, grid)
    shifted = shift_operator(base, path.nu, cfg.delta, cfg.T)
    return [check_hypotheses(op, trials, seed, t_max=cfg.T) for op in (base, shifted)]
