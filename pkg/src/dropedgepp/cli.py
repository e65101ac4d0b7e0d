"""Command line front-end: ``dropedgepp {train,men,curves,convert-dataset}``.

Exit codes: 0 success, 1 invalid configuration or input path, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings

from .backbones import TrainingDiverged
from .data import DatasetError, convert_npz, convert_planetoid
from .experiment import (
    DEFAULTS,
    PRESETS,
    ConfigError,
    cmd_curves,
    cmd_men,
    cmd_train,
    config_from_sources,
    write_report,
)
from .samplers import SAMPLERS


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--config", help="flat key = value config file")
    g.add_argument("--preset", choices=sorted(PRESETS), metavar="NAME", help="named preset")
    for key, default in DEFAULTS.items():
        shown = ",".join(map(str, default)) if isinstance(default, tuple) else default
        p.add_argument(f"--{key}", dest=key, default=None, metavar="VALUE", help=f"default: {shown}")
    p.add_argument("--out", help="report path (default: <run.output_dir>/<run name>.<kind>.json)")
    p.add_argument("--dump-config", action="store_true", help="print the resolved config and exit")


def _resolve(args) -> object:
    overrides = {k: getattr(args, k) for k in DEFAULTS if getattr(args, k) is not None}
    return config_from_sources(args.config, args.preset, overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dropedgepp", description="Layer-wise edge sampling experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train and evaluate over all configured seeds")
    _add_config_flags(p)
    p.add_argument("--checkpoint-dir", help="save each seed's best parameters as seed<k>.npz here")

    p = sub.add_parser("men", help="Mean-Edge-Number statistics of sampled schedules")
    _add_config_flags(p)
    p.add_argument("--methods", help=f"comma separated subset of {','.join(SAMPLERS)} (default: sampler.method)")

    p = sub.add_parser("curves", help="CSV plot data from a run report")
    p.add_argument("report")
    p.add_argument("--out-dir")

    p = sub.add_parser("convert-dataset", help="convert a public distribution to the text layout")
    p.add_argument("--format", choices=("planetoid", "npz"), required=True)
    p.add_argument("--name", required=True, help="dataset name, e.g. cora")
    p.add_argument("--raw", required=True, help="directory with ind.<name>.* files, or the .npz file")
    p.add_argument("--out", required=True, help="dataset root to write <name>/ into")
    p.add_argument("--largest-component", action="store_true", help="npz only: keep the largest component")
    return parser


def _run(args) -> int:
    if args.command in ("train", "men"):
        config = _resolve(args)
        if args.dump_config:
            sys.stdout.write(config.to_text())
            return 0
        if args.command == "train":
            report = cmd_train(config, write=False, checkpoint_dir=args.checkpoint_dir)
            path = write_report(report, config, args.out)
            s = report["summary"]
            print(f"test accuracy {100 * s['test_acc_mean']:.1f} +- {100 * s['test_acc_std']:.1f} "
                  f"over {len(report['runs'])} seeds -> {path}")
        else:
            methods = args.methods.split(",") if args.methods else None
            for m in methods or []:
                if m not in SAMPLERS:
                    raise ConfigError(f"unknown sampler {m!r}")
            report = cmd_men(config, methods=methods, write=False)
            path = write_report(report, config, args.out)
            for m, r in report["methods"].items():
                print(f"{m:12s} MEN {r['men']:.3e} +- {r['men_std']:.2e}  MEN* {r['men_star']:.3e}")
            print(f"-> {path}")
        return 0
    if args.command == "curves":
        for p in cmd_curves(args.report, args.out_dir):
            print(p)
        return 0
    if args.format == "planetoid":
        out = convert_planetoid(args.raw, args.name, args.out)
    else:
        out = convert_npz(args.raw, args.name, args.out, args.largest_component)
    print(out)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    warnings.simplefilter("default")
    try:
        return _run(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except TrainingDiverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(json.dumps(exc.report, default=str), file=sys.stderr)
        return 2
    except (DatasetError, RuntimeError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
