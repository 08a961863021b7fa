"""Command line entry point: ``coronawsn {lifetime,denoise,coverage,probe}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .config import ConfigError, load_config
from .experiments import (
    run_complexity_probe,
    run_coverage_experiment,
    run_denoise_experiment,
    run_lifetime_experiment,
)

log = logging.getLogger("coronawsn")


def _key_value(text: str) -> tuple[str, str]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {text!r}")
    key, value = text.split("=", 1)
    return key.strip(), value.strip()


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value config file")
    common.add_argument(
        "--set",
        dest="overrides",
        action="append",
        type=_key_value,
        default=[],
        metavar="KEY=VALUE",
        help="override a config key (repeatable)",
    )
    common.add_argument("--output-dir", help="shorthand for --set output_dir=...")
    common.add_argument("--seeds", help="shorthand for --set seeds=..., e.g. 0-9")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="coronawsn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("lifetime", parents=[common], help="alive-node and energy series per protocol")
    d = sub.add_parser("denoise", parents=[common], help="corrupt, denoise and score images")
    d.add_argument("images", nargs="*", help="PGM/PPM inputs (overrides the images key)")
    d.add_argument("--sigmas", help="shorthand for --set sigmas=...")
    sub.add_parser("coverage", parents=[common], help="coverage rate, heatmap and topology dump")
    sub.add_parser("probe", parents=[common], help="sparse estimation timing vs dictionary width")
    return parser


def _overrides(args) -> dict[str, str]:
    values = dict(args.overrides)
    for key in ("output_dir", "seeds", "sigmas"):
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    if getattr(args, "images", None):
        values["images"] = ",".join(args.images)
    return values


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = load_config(args.config, _overrides(args))
        if args.command == "lifetime":
            summary = run_lifetime_experiment(config)
            print(json.dumps(summary["medians"], sort_keys=True))
        elif args.command == "denoise":
            if not config.images:
                raise ConfigError("no images given")
            result = run_denoise_experiment(config)
            print("\n".join(result.rows))
            if result.errors:
                for msg in result.errors:
                    print(f"error: {msg}", file=sys.stderr)
                return 1
        elif args.command == "coverage":
            print(json.dumps(run_coverage_experiment(config), sort_keys=True))
        elif args.command == "probe":
            print(json.dumps(run_complexity_probe(config).to_dict()))
    except (ConfigError, ValueError, OSError) as exc:
        print(f"coronawsn {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
