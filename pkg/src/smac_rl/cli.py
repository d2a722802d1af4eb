"""Command line entry point: ``smac-rl {run,ablate-batch,plot,verify}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import harness
from .envs import ENV_IDS
from .optim import OPTIMIZER_IDS


def _csv_list(cast):
    def parse(text):
        return [cast(x) for x in text.split(",") if x]
    return parse


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="smac-rl", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="train every env x algorithm x seed and summarize")
    run.add_argument("--config", type=Path, help="JSON experiment file; flags override it")
    run.add_argument("--env", type=_csv_list(str), help=f"comma list from {sorted(ENV_IDS)}")
    run.add_argument("--opt", type=_csv_list(str), help=f"comma list from {list(OPTIMIZER_IDS)}")
    run.add_argument("--seed", type=_csv_list(int), help="comma list of seeds")
    run.add_argument("--eta", type=float, help="actor step size")
    run.add_argument("--lambda", dest="lam", type=float, help="Sherman-Morrison damping")
    run.add_argument("--timesteps", type=int, help="environment steps per run")
    run.add_argument("--out", type=str, help="output directory")
    run.add_argument("--jobs", type=int, help="parallel runs")
    run.add_argument("--no-plots", action="store_true")

    ab = sub.add_parser("ablate-batch", help="per-sample vs batch-mean SMAC updates")
    ab.add_argument("--env", default="cartpole")
    ab.add_argument("--sizes", type=_csv_list(int), default=[1, 1000])
    ab.add_argument("--seed", type=_csv_list(int), default=[0])
    ab.add_argument("--timesteps", type=int)
    ab.add_argument("--out", default="results/ablation")

    pl = sub.add_parser("plot", help="redraw plots and summary from a finished run directory")
    pl.add_argument("--out", required=True)

    sub.add_parser("verify", help="check the numerical core against its oracles")
    return p


def _overrides(args) -> dict:
    out = {}
    if args.eta is not None:
        out["eta"] = args.eta
    if args.lam is not None:
        out["lam"] = args.lam
    if args.timesteps is not None:
        out["total_timesteps"] = args.timesteps
    return out


def cmd_run(args) -> int:
    try:
        base = json.loads(args.config.read_text()) if args.config else {}
        overrides = {**base.get("overrides", {}), **_overrides(args)}
        spec = harness.ExperimentSpec.from_dict(
            {**base, "overrides": overrides},
            envs=args.env, algorithms=args.opt, seeds=args.seed, out_dir=args.out,
            jobs=args.jobs)
        spec.validate()
    except (ValueError, KeyError, TypeError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return harness.EXIT_INVALID_CONFIG
    result = harness.run_experiment(spec, plots=not args.no_plots)
    print(harness.format_summary(result.summary), end="")
    for r in result.failed:
        print(f"FAILED {harness.run_name(r.config)}: {(r.error or '').splitlines()[0]}",
              file=sys.stderr)
    return result.exit_code


def cmd_ablate(args) -> int:
    try:
        report = harness.ablation_batch_size(args.env, args.sizes, args.seed,
                                             args.timesteps, args.out)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return harness.EXIT_INVALID_CONFIG
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return harness.EXIT_RUN_FAILED
    print(harness.format_ablation(report), end="")
    return harness.EXIT_OK


def cmd_plot(args) -> int:
    records = harness.load_records(args.out)
    if not records:
        print(f"error: no runs under {args.out}/runs", file=sys.stderr)
        return harness.EXIT_INVALID_CONFIG
    rows = harness.summarize(records)
    harness.write_summary(rows, args.out)
    for path in harness.emit_plots(records, Path(args.out) / "plots"):
        print(path)
    return harness.EXIT_OK


def cmd_verify(args) -> int:
    from .verify import run_all

    ok = True
    for name, passed, detail in run_all():
        print(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
        ok &= passed
    return harness.EXIT_OK if ok else harness.EXIT_RUN_FAILED


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": cmd_run, "ablate-batch": cmd_ablate, "plot": cmd_plot,
               "verify": cmd_verify}[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
