"""Command line entry point: ``stochdr run | compare | check-hypotheses``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .config import apply_overrides, load_config
from .errors import StochDRError
from .harness import compare_schemes, hypothesis_report, run_experiment


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stochdr", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Monte Carlo splitting run with reference comparison")
    run.add_argument("--config", help="YAML or JSON config file")
    run.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                     help="override a config entry (repeatable), e.g. noise.mu0=0.1")
    run.add_argument("--out", help="output directory (default: output_dir from config)")

    cmp_ = sub.add_parser("compare", help="V- and H-geometry schemes on identical paths")
    cmp_.add_argument("--config")
    cmp_.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    cmp_.add_argument("--out")

    hyp = sub.add_parser("check-hypotheses", help="randomized checks of the operator hypotheses")
    hyp.add_argument("--config")
    hyp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    hyp.add_argument("--trials", type=int, default=10_000)
    hyp.add_argument("--seed", type=int, default=0)
    return p


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = apply_overrides(load_config(args.config), args.set)
        if args.command == "run":
            out = args.out or cfg.output_dir
            rep = run_experiment(cfg, out_dir=out)
            fin = rep.summary["final"]
            print(f"{len(rep.rows)} iterations, errV={fin['errV']:.3e} "
                  f"errH={fin['errH']:.3e}, {fin['paths_ok']}/{cfg.paths} paths ok -> {out}")
        elif args.command == "compare":
            out = args.out or cfg.output_dir
            rep = compare_schemes(cfg, out_dir=out)
            print(json.dumps({k: rep[k] for k in ("dist_v_h", "dist_v_ref", "dist_h_ref",
                                                  "threshold", "passed")}, indent=2))
            return 0 if rep["passed"] else 1
        else:
            reports = hypothesis_report(cfg, args.trials, args.seed)
            for r in reports:
                print("\n".join(r.lines()))
            return 0 if all(r.ok for r in reports) else 1
    except (StochDRError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0
