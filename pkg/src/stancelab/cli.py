"""Command-line entry points: run, search, report, ablate."""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .experiment import (DEFAULT_SPACE, Resources, RunConfig, ablate,
                         load_results, parse_settings, report, run,
                         sample_configs)


def _load_config(spec: str) -> RunConfig:
    """A --config value is either a JSON file path or a literal settings string."""
    path = Path(spec)
    if path.exists():
        return RunConfig.from_dict(json.loads(path.read_text()))
    return parse_settings(spec)


def _execute(args: tuple[dict, str, str | None]) -> dict:
    cfg_dict, data_dir, out_dir = args
    corpus, resources = Resources.from_data_dir(data_dir)
    result = run(RunConfig.from_dict(cfg_dict), corpus, resources, out_dir=out_dir)
    return result.to_dict()


def _cmd_run(args) -> int:
    cfg = _load_config(args.config)
    corpus, resources = Resources.from_data_dir(args.data)
    result = run(cfg, corpus, resources, out_dir=args.out)
    print(json.dumps(result.to_dict(), indent=2))
    return 0


def _cmd_search(args) -> int:
    space = json.loads(Path(args.space).read_text()) if args.space else DEFAULT_SPACE
    configs = sample_configs(space, n=args.n, seed=args.seed)
    if not args.data:
        lines = [json.dumps(cfg.to_dict()) for cfg in configs]
        if args.out:
            Path(args.out).mkdir(parents=True, exist_ok=True)
            (Path(args.out) / "configs.jsonl").write_text("\n".join(lines) + "\n")
        else:
            print("\n".join(lines))
        return 0

    jobs = [(cfg.to_dict(), args.data, args.out) for cfg in configs]
    threads = int(os.environ.get("STANCELAB_THREADS", "1"))
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_execute, jobs))
    else:
        results = [_execute(job) for job in jobs]
    for res in results:
        print(f"{res['eval_f_avg']:.4f}  {res['settings']}")
    return 0


def _cmd_report(args) -> int:
    results = load_results(args.in_dir)
    print(report(results, format=args.format), end="")
    return 0


def _cmd_ablate(args) -> int:
    cfg = _load_config(args.config)
    corpus, resources = Resources.from_data_dir(args.data)
    outcome = ablate(cfg, args.toggle, corpus, resources, out_dir=args.out)
    print(json.dumps({
        "toggle": outcome["toggle"],
        "deltas": outcome["deltas"],
        "full": outcome["full"].to_dict(),
        "ablated": outcome["ablated"].to_dict(),
    }, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stancelab",
        description="Multi-view stance detection experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one configuration")
    p_run.add_argument("--config", required=True,
                       help="JSON config file or a literal settings string")
    p_run.add_argument("--data", required=True, help="data directory")
    p_run.add_argument("--out", default=None, help="directory for run results")
    p_run.set_defaults(func=_cmd_run)

    p_search = sub.add_parser("search", help="sample random configurations")
    p_search.add_argument("--space", default=None, help="JSON config-space file")
    p_search.add_argument("--n", type=int, required=True, help="number of draws")
    p_search.add_argument("--seed", type=int, default=0)
    p_search.add_argument("--data", default=None,
                          help="execute each sampled config against this data directory")
    p_search.add_argument("--out", default=None)
    p_search.set_defaults(func=_cmd_search)

    p_report = sub.add_parser("report", help="render results as a table")
    p_report.add_argument("--in", dest="in_dir", required=True, help="results directory")
    p_report.add_argument("--format", choices=("csv", "markdown"), default="markdown")
    p_report.set_defaults(func=_cmd_report)

    p_ablate = sub.add_parser("ablate", help="run a config with and without one block")
    p_ablate.add_argument("--config", required=True)
    p_ablate.add_argument("--toggle", choices=("graph", "sv", "freq"), required=True)
    p_ablate.add_argument("--data", required=True)
    p_ablate.add_argument("--out", default=None)
    p_ablate.set_defaults(func=_cmd_ablate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
