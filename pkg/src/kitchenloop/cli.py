"""Command-line entry points: run suites, train, gradcheck, serve.

``run`` exits 0 only when every threshold listed in the config file holds;
with no config it simply runs and reports. ``gradcheck`` exits 0 only when
the analytic/numeric agreement meets its tolerances.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .harness.catalog import SUITES
from .harness.report import FORMATS, emit_report
from .harness.suites import SuiteSpec, run_suite
from .policy.checkpoint import load_checkpoint, save_checkpoint
from .policy.config import PolicyConfig
from .policy.dataset import REACH_TEMPLATES, load_dataset
from .policy.gradcheck import run_gradcheck
from .policy.training import TrainConfig, train_policy

GRADCHECK_TOL_FULL = 1e-4
GRADCHECK_TOL_LINEAR = 1e-8


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(doc, dict):
        raise SystemExit(f"config {path}: expected a JSON object")
    return doc


def _spec_from_config(args, config: dict) -> SuiteSpec:
    fields = {}
    for key in ("trials", "executor", "checkpoint", "retry_budget",
                "epochs", "demos_per_task", "eval_scenes"):
        if key in config:
            fields[key] = config[key]
    if "seeds" in config:
        fields["seeds"] = tuple(config["seeds"])
    return SuiteSpec(suite=args.suite, seed_base=args.seed_base,
                     planner=args.planner, **fields)


def _check_thresholds(table, thresholds: dict) -> list[str]:
    """Returns failure messages; empty means every threshold held."""
    failures = []
    rates = {row.cell: row.rate for row in table.rows}
    for cell, minimum in thresholds.items():
        if cell == "*":
            for label, rate in rates.items():
                if rate < minimum:
                    failures.append(f"{label}: rate {rate:.3f} < {minimum}")
        elif cell not in rates:
            failures.append(f"{cell}: no such cell in suite {table.suite!r}")
        elif rates[cell] < minimum:
            failures.append(f"{cell}: rate {rates[cell]:.3f} < {minimum}")
    return failures


def cmd_run(args) -> int:
    config = _load_config(args.config)
    spec = _spec_from_config(args, config)
    table = run_suite(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for fmt in FORMATS:
        (out / f"{args.suite}.{fmt}").write_bytes(emit_report(table, fmt))
    for row in table.rows:
        ref = "" if row.reference_rate is None else f"  (reference {row.reference_rate:.2f})"
        print(f"{row.cell}: {row.successes}/{row.trials} = {row.rate:.3f}{ref}")
    print(f"report written to {out}/{args.suite}.csv and .json "
          f"(config {table.config_hash[:12]})")
    failures = _check_thresholds(table, config.get("thresholds", {}))
    for msg in failures:
        print(f"THRESHOLD FAILED  {msg}")
    return 1 if failures else 0


def cmd_train(args) -> int:
    config = _load_config(args.config)
    demos = load_dataset(args.dataset)
    templates = tuple(config.get("templates", REACH_TEMPLATES))
    cfg = PolicyConfig(templates=templates)
    hyper_fields = {k: config[k] for k in
                    ("epochs", "seed", "lr", "batch_size", "alpha", "jitter",
                     "sem_dropout") if k in config}
    hyper = TrainConfig(**hyper_fields)
    params, curve = train_policy(demos, cfg, hyper)
    save_checkpoint(args.out, params, cfg)
    for epoch, row in enumerate(curve):
        print(f"epoch {epoch:3d}  total {row['total']:.4f}  trans {row['trans']:.4f}")
    print(f"checkpoint written to {args.out}")
    return 0


def cmd_gradcheck(args) -> int:
    ok = True
    for linear_only, tol in ((False, GRADCHECK_TOL_FULL), (True, GRADCHECK_TOL_LINEAR)):
        report = run_gradcheck(seed=args.seed, linear_only=linear_only)
        err = report["max_rel_error"]
        passed = err < tol
        ok = ok and passed
        mode = "linear" if linear_only else "full"
        print(f"gradcheck {mode}: max relative error {err:.3e} "
              f"({'PASS' if passed else 'FAIL'}, tolerance {tol:g})")
    return 0 if ok else 1


def cmd_serve(args) -> int:
    import uvicorn

    from .gateway import SessionManager, create_app

    checkpoint = load_checkpoint(args.checkpoint) if args.checkpoint else None
    app = create_app(SessionManager(checkpoint=checkpoint))
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def cmd_scenarios(_args) -> int:
    from .gateway import scenario_catalog

    for sid, entry in sorted(scenario_catalog().items()):
        print(f"{sid}: {entry.scenario.instruction}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kitchenloop")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a benchmark suite and emit reports")
    run.add_argument("--suite", required=True, choices=SUITES)
    run.add_argument("--planner", default="scripted", choices=("scripted", "remote"))
    run.add_argument("--seed-base", type=int, default=0)
    run.add_argument("--out", default="reports")
    run.add_argument("--config", default=None,
                     help="JSON file: suite overrides plus {'thresholds': {cell: min_rate}}")
    run.set_defaults(fn=cmd_run)

    train = sub.add_parser("train", help="train the policy on a saved dataset")
    train.add_argument("--dataset", required=True)
    train.add_argument("--config", default=None,
                       help="JSON file of training hyperparameters")
    train.add_argument("--out", required=True, help="checkpoint output path")
    train.set_defaults(fn=cmd_train)

    grad = sub.add_parser("gradcheck", help="verify gradients against finite differences")
    grad.add_argument("--seed", type=int, default=0)
    grad.set_defaults(fn=cmd_gradcheck)

    serve = sub.add_parser("serve", help="start the episode-control gateway")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8321)
    serve.add_argument("--checkpoint", default=None,
                       help="policy checkpoint enabling the learned executor")
    serve.set_defaults(fn=cmd_serve)

    scen = sub.add_parser("scenarios", help="list gateway scenario ids")
    scen.set_defaults(fn=cmd_scenarios)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
