"""Command-line entry point: ``spokeforge <command> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import pipeline
from .errors import SpokeForgeError

COMMANDS = ("generate", "evaluate", "train", "optimize", "pareto", "export")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spokeforge", description="Spoke design campaigns on a geometric proxy.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="JSON file with campaign settings; flags override it")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out", help="campaign directory")
    ap.add_argument("--backend", help="proxy | surrogate | dataset:<csv>")
    ap.add_argument("--algo", choices=("pso", "bo"))
    ap.add_argument("--objective", help="e.g. target:rft=12000,target:rfc=1000,min:sedt,min:vib_rms")
    ap.add_argument("--count", type=int, help="designs to generate")
    ap.add_argument("--n-train", type=int)
    ap.add_argument("--n-test", type=int)
    ap.add_argument("--tune", action="store_true", default=None, help="grid-search hyperparameters by k-fold CV")
    ap.add_argument("--iters", type=int, help="optimizer iterations")
    ap.add_argument("--particles", type=int, help="PSO swarm size")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def make_config(args) -> pipeline.CampaignConfig:
    data = pipeline.load_config(args.config) if args.config else {}
    for key in ("seed", "out", "backend", "algo", "objective", "count", "n_train", "n_test", "tune"):
        v = getattr(args, key)
        if v is not None:
            data[key] = v
    if args.seed is not None and args.seed < 0:
        raise pipeline.ConfigError("seed must be a non-negative integer")
    if args.iters is not None or args.particles is not None:
        for group in ("pso", "bo", "pareto_pso", "mobo"):
            opts = dict(data.get(group, {}))
            if args.iters is not None:
                opts["n_iters"] = args.iters
            if args.particles is not None and group in ("pso", "pareto_pso"):
                opts["n_particles"] = args.particles
            data[group] = opts
    try:
        return pipeline.CampaignConfig.from_dict(data)
    except TypeError as exc:
        raise pipeline.ConfigError(str(exc)) from None


def _summary(command: str, result) -> str:
    if command == "generate":
        return json.dumps(result.manifest.get("generate", {}))
    if command == "export":
        return "\n".join(str(p) for p in result) or "no plots written"
    if command == "train":
        return pipeline.format_train_report(result).rstrip()
    if command == "optimize":
        result = {k: v for k, v in result.items() if k != "trace"}
    return json.dumps(result, indent=1)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = make_config(args)
        handler = getattr(pipeline, f"cmd_{args.command}")
        result = handler(cfg)
    except SpokeForgeError as exc:
        print(f"spokeforge {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code
    print(_summary(args.command, result))
    if args.command == "evaluate" and result["errors"]:
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
