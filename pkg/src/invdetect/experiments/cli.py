"""Command line entry point: ``invdetect run <config>``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
The output directory is ``--out`` if given, else ``$INVDETECT_OUT/<name>``,
else ``results/<name>``, where ``<name>`` is the config's ``name`` or file stem.
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np

from ..gram import NotPositiveDefinite
from ..operators import write_sinogram_csv
from .config import ConfigError, load_config
from .power import BracketError
from .studies import run_study

OUT_ENV = "INVDETECT_OUT"


def _git_describe() -> str:
    try:
        res = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            capture_output=True,
            text=True,
            timeout=10,
            cwd=Path(__file__).resolve().parent,
        )
        return res.stdout.strip() or "unknown"
    except (OSError, subprocess.SubprocessError):
        return "unknown"


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def output_dir(config_path: str, cfg, out: str | None) -> Path:
    if out:
        return Path(out)
    root = os.environ.get(OUT_ENV) or "results"
    return Path(root) / (cfg.name or Path(config_path).stem)


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config, fast=args.fast)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"config error: {args.config}: {e.strerror}", file=sys.stderr)
        return 2
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    out = output_dir(args.config, cfg, args.out)
    t0 = time.perf_counter()
    try:
        result = run_study(cfg, threads=args.threads)
    except NotPositiveDefinite as e:
        print(f"numerical error: {e} (Gram matrix {e.variant})", file=sys.stderr)
        return 3
    except (np.linalg.LinAlgError, FloatingPointError, BracketError) as e:
        print(f"numerical error: {e}", file=sys.stderr)
        return 3
    wall = time.perf_counter() - t0
    out.mkdir(parents=True, exist_ok=True)
    result.curve.to_csv(out / "power_curve.csv")
    if result.sinogram is not None:
        write_sinogram_csv(out / "sinogram.csv", result.sinogram)
    meta = {
        "config_hash": cfg.config_hash(),
        "seed": cfg.seed,
        "git_describe": _git_describe(),
        "wall_time_s": wall,
        "fast": cfg.fast,
        "config": cfg.as_dict(),
        "results": result.summary,
    }
    with open(out / "meta.json", "w") as fh:
        json.dump(_jsonable(meta), fh, indent=2, sort_keys=True)
    print(json.dumps(_jsonable(result.summary), sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="invdetect", description="Detection tests for linear inverse problems.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run the experiment described by a config file")
    r.add_argument("config", help="YAML experiment config")
    r.add_argument("--out", help=f"output directory (default: ${OUT_ENV}/<name> or results/<name>)")
    r.add_argument("--seed", type=int, help="override the config seed")
    r.add_argument("--fast", action="store_true", help="apply the reduced CI grids")
    r.add_argument("--threads", type=int, default=1, help="worker threads for noise generation")
    r.set_defaults(func=cmd_run)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        print("config error: --threads must be >= 1", file=sys.stderr)
        return 2
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
