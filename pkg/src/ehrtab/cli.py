"""Command line front end: gen | eval | report | trace | export-finetune.

A JSON config file gives the run definition; flags override single fields.
Exit codes: 0 success, 1 partial failures during eval, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Optional

from .runner import (
    ConfigError,
    EmptyLogError,
    RunConfig,
    cmd_eval,
    cmd_export_finetune,
    cmd_gen,
    cmd_report,
    cmd_trace,
    config_from_dict,
    run_id_of,
)

log = logging.getLogger("ehrtab.cli")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--tasks", help="comma-separated task ids, e.g. D-R1,D-R2")
    parser.add_argument("--flavors", help="comma-separated flavors: synthea,eicu")
    parser.add_argument("--formats", help="comma-separated formats: plain,special,graph,nl")
    parser.add_argument("--k-shots", help="comma-separated k values from 0,1,3,5")
    parser.add_argument("--pipeline", choices=["bare", "staged"])
    parser.add_argument("--model", help="model name sent to the backend")
    parser.add_argument("--backend-kind", choices=["gold-mock", "http", "replay"])
    parser.add_argument("--endpoint", help="http backend endpoint URL")
    parser.add_argument("--credential-env", help="environment variable naming the API key")
    parser.add_argument("--cache-path", help="replay cache file")
    parser.add_argument("--eval-seed", type=int)
    parser.add_argument("--pool-seed", type=int)
    parser.add_argument("--n-per-task", type=int)
    parser.add_argument("--leniency", choices=["strict", "normal", "loose"])
    parser.add_argument("--concurrency", type=int)


def build_config(args: argparse.Namespace) -> RunConfig:
    data: dict = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    if args.out:
        data["out_dir"] = args.out
    if args.tasks:
        data["tasks"] = args.tasks.split(",")
    if args.flavors:
        data["flavors"] = args.flavors.split(",")
    if args.formats:
        data["formats"] = args.formats.split(",")
    if args.k_shots:
        try:
            data["k_shots"] = [int(k) for k in args.k_shots.split(",")]
        except ValueError:
            raise ConfigError(f"bad k-shots value {args.k_shots!r}") from None
    if args.pipeline:
        data["pipeline"] = args.pipeline
    if args.model:
        data["model_name"] = args.model
    backend = dict(data.get("backend", {}))
    if args.backend_kind:
        backend["kind"] = args.backend_kind
    if args.endpoint:
        backend["endpoint"] = args.endpoint
    if args.credential_env:
        backend["credential_env"] = args.credential_env
    if args.cache_path:
        backend["cache_path"] = args.cache_path
    if backend:
        data["backend"] = backend
    if args.eval_seed is not None:
        data["eval_seed"] = args.eval_seed
    if args.pool_seed is not None:
        data["pool_seed"] = args.pool_seed
    if args.n_per_task is not None:
        data["n_per_task"] = args.n_per_task
    if args.leniency:
        data["leniency"] = args.leniency
    if args.concurrency is not None:
        data["concurrency"] = args.concurrency
    return config_from_dict(data)


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ehrtab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, desc in [
        ("gen", "generate evaluation instance files"),
        ("eval", "run the evaluation sweep"),
        ("report", "score a run log and render the report"),
        ("trace", "print pipeline traces for one instance"),
        ("export-finetune", "write per-flavor finetune pair files"),
    ]:
        p = sub.add_parser(name, help=desc)
        _add_common(p)
        if name == "trace":
            p.add_argument("--instance", required=True, help="instance id to look up")
            p.add_argument("--run-id", help="run id; defaults to the config's run id")
        if name == "report":
            p.add_argument("--run-id", help="run id; defaults to the config's run id")
    return parser


def main(argv: Optional[list] = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = make_parser().parse_args(argv)
    try:
        config = build_config(args)
    except (ConfigError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        if args.command == "gen":
            count = cmd_gen(config)
            print(f"wrote {count} instances under {config.out_dir}/instances")
            return 0
        if args.command == "eval":
            written, failures = cmd_eval(config)
            print(
                f"run {run_id_of(config)}: {written} new records, {failures} backend failures"
            )
            return 1 if failures else 0
        if args.command == "report":
            result = cmd_report(config, run_id=getattr(args, "run_id", None))
            with open(result["report_path"], "r", encoding="utf-8") as fh:
                print(fh.read(), end="")
            print(f"scores: {result['scores_path']}")
            print(f"report: {result['report_path']}")
            return 0
        if args.command == "trace":
            traces = cmd_trace(config, args.instance, run_id=args.run_id)
            if not traces:
                print(f"no traces for {args.instance}", file=sys.stderr)
                return 1
            for t in traces:
                print(json.dumps(t, indent=2, sort_keys=True))
            return 0
        if args.command == "export-finetune":
            counts = cmd_export_finetune(config)
            for flavor, n in sorted(counts.items()):
                print(f"{flavor}: {n} pairs")
            return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except EmptyLogError as exc:
        print(f"nothing to report: {exc}", file=sys.stderr)
        return 2
    raise AssertionError("unreachable command")


if __name__ == "__main__":
    sys.exit(main())
