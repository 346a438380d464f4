"""Command line: train | eval | predict | synth | inspect | grad-check.

Every command reads one JSON config (see experiments.parse_config for the
schema) and returns exit code 0 on success, 1 on validation errors, 2 on
unexpected runtime failures.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .experiments import (
    ConfigError,
    load_config_file,
    parse_config,
    run_eval,
    run_grad_check,
    run_inspect,
    run_predict,
    run_synth,
    run_train,
)

_NEEDED_SECTIONS = {
    "train": ("model", "data", "train"),
    "eval": ("model", "data"),
    "predict": ("model", "data"),
    "synth": ("data",),
    "inspect": ("model",),
    "grad-check": (),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qrnn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("train", "fit a model and write checkpoint, history and metrics"),
        ("eval", "score a checkpoint on the test split, export predictions"),
        ("predict", "forecast from one raw window via a checkpoint"),
        ("synth", "generate a synthetic dataset file"),
        ("inspect", "print the bound circuit of a model config"),
        ("grad-check", "compare finite-difference and parameter-shift gradients"),
    ]:
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", type=Path, default=None, help="JSON config file")
        cmd.add_argument("--seed", type=int, default=None, help="override train.seed")
        cmd.add_argument("--workers", type=int, default=None, help="override gradient worker count")
        cmd.add_argument("--out", type=str, default=None, help="override output.dir")
        if name in ("eval", "predict"):
            cmd.add_argument("--checkpoint", type=Path, default=None,
                             help="parameter file (default: <out>/checkpoint.json)")
        if name == "predict":
            cmd.add_argument("--values", type=str, required=True,
                             help="comma-separated raw window values")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = None
        if args.config is not None:
            raw = load_config_file(args.config)
            config = parse_config(
                raw,
                need=_NEEDED_SECTIONS[args.command],
                seed_override=args.seed,
                workers_override=args.workers,
                out_override=args.out,
            )
        elif args.command != "grad-check":
            raise ConfigError("--config is required for this command")

        if args.command == "train":
            metrics = run_train(config)
            print(json.dumps(metrics, indent=2, sort_keys=True))
        elif args.command == "eval":
            metrics = run_eval(config, checkpoint=args.checkpoint)
            print(json.dumps(metrics, indent=2, sort_keys=True))
        elif args.command == "predict":
            try:
                values = [float(v) for v in args.values.split(",") if v.strip()]
            except ValueError:
                raise ConfigError(f"--values: could not parse {args.values!r}") from None
            result = run_predict(config, values, checkpoint=args.checkpoint)
            print(json.dumps(result, indent=2, sort_keys=True))
        elif args.command == "synth":
            print(json.dumps(run_synth(config), indent=2, sort_keys=True))
        elif args.command == "inspect":
            print(run_inspect(config))
        else:
            result = run_grad_check(config)
            print(json.dumps(result, indent=2, sort_keys=True))
            if not result["ok"]:
                print("gradient routes disagree beyond tolerance", file=sys.stderr)
                return 2
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - the CLI boundary maps everything to exit 2
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def entry_point() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry_point()
