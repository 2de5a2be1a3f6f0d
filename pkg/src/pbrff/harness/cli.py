"""``pbrff`` command line: ``toy``, ``landmarks``, ``greedy`` and ``bounds`` subcommands."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from pbrff import bounds as B
from pbrff.harness.config import make_config, read_config_file
from pbrff.harness.experiments import PIPELINE_RUNNERS
from pbrff.posterior import PseudoPosterior, f_divergence, kl_to_uniform

SUBCOMMANDS = {"toy": "toy_landmarks", "landmarks": "landmarks_table", "greedy": "greedy_curves"}


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON or TOML experiment config")
    p.add_argument("--seed", type=int, help="run a single seed instead of the configured list")
    p.add_argument("--jobs", type=int, help="parallel worker processes")
    p.add_argument("--full", action="store_true", help="full-scale settings (slow)")
    p.add_argument("--output", help="output directory")
    p.add_argument("--dataset", action="append", help="dataset CSV path (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pbrff", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, pipeline in SUBCOMMANDS.items():
        _add_run_flags(sub.add_parser(name, help=f"run the {pipeline} pipeline"))

    b = sub.add_parser("bounds", help="evaluate a PAC-Bayes bound")
    b.add_argument("--kind", required=True, choices=["thm1", "cor1", "thm2", "thm3", "chi2"])
    b.add_argument("--posterior", help="posterior JSON with losses; supplies emp and the divergence")
    b.add_argument("--emp", type=float)
    b.add_argument("--divergence", type=float, help="KL for thm1/cor1/thm2, D_mu for thm3, chi2 for chi2")
    b.add_argument("--n", type=int)
    b.add_argument("--t", type=float)
    b.add_argument("--mu", type=float, default=2.0)
    b.add_argument("--eps", type=float, default=0.05)
    b.add_argument("--n-landmarks", type=int, default=1)
    return parser


def _run_pipeline(args) -> int:
    overrides = read_config_file(args.config) if args.config else {}
    if args.seed is not None:
        overrides["seeds"] = [args.seed]
    if args.jobs is not None:
        overrides["jobs"] = args.jobs
    if args.full:
        overrides["full"] = True
    if args.output:
        overrides["output_dir"] = args.output
    if args.dataset:
        overrides["datasets"] = args.dataset
    cfg = make_config(SUBCOMMANDS[args.command], overrides)
    rows = PIPELINE_RUNNERS[cfg.pipeline](cfg)
    print(json.dumps({"status": "ok", "pipeline": cfg.pipeline, "rows": len(rows), "output_dir": cfg.output_dir}))
    return 0


def _run_bounds(args) -> int:
    emp, div, n = args.emp, args.divergence, args.n
    if args.posterior:
        q = PseudoPosterior.load(args.posterior)
        emp = q.expected_loss() if emp is None else emp
        n = q.n if n is None else n
        if div is None:
            div = {"thm3": f_divergence(q, args.mu), "chi2": f_divergence(q, 2.0)}.get(args.kind, kl_to_uniform(q))
        if args.t is None and args.kind in ("thm1", "thm2"):
            args.t = q.t
    missing = [k for k, v in (("emp", emp), ("divergence", div), ("n", n)) if v is None]
    if args.kind in ("thm1", "cor1", "thm2") and args.t is None:
        missing.append("t")
    if missing:
        raise ValueError(f"missing inputs: {', '.join(missing)}")
    if args.kind == "thm1":
        report = B.bound_thm1(emp, div, n, args.t, args.eps, args.n_landmarks)
    elif args.kind == "cor1":
        report = B.bound_cor1(emp, div, n, args.t, args.eps)
    elif args.kind == "thm2":
        report = B.bound_thm2(emp, div, n, args.t, args.eps)
    elif args.kind == "thm3":
        report = B.bound_thm3(emp, div, n, args.mu, args.eps)
    else:
        report = B.bound_cor_chi2(emp, div, n, args.eps)
    print(report.to_json())
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "bounds":
            return _run_bounds(args)
        return _run_pipeline(args)
    except Exception as e:  # noqa: BLE001 - reported as a machine-readable record
        print(json.dumps({"status": "error", "error": type(e).__name__, "message": str(e)}), file=sys.stderr)
        return 1
