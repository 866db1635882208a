"""Command line entry point: ``sim run | preset | validate``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .experiments import (PRESETS, ResultsTable, SweepSpec, figure_preset, override, run_sweep,
                          summarize, sweep_to_dict, write_plot_script, write_results)

EXIT_OK, EXIT_RUNTIME, EXIT_INVALID = 0, 1, 2

log = logging.getLogger("xlmimo_sim")


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must fit in 64 bits: {text}")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--trials", type=_positive, help="Monte-Carlo trials per point")
    p.add_argument("--seed", type=_seed, help="master seed (decimal or 0x-prefixed)")
    p.add_argument("--workers", type=_positive, default=1, help="threads per Monte-Carlo estimate")
    p.add_argument("--plot-script", metavar="PATH", help="also write a matplotlib script for the CSV(s)")
    p.add_argument("--timing", action="store_true", help="record wall time (output is then not reproducible)")
    p.add_argument("-q", "--quiet", action="store_true", help="no progress output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sim", description="Cell-free vs small-cell XL-MIMO uplink SE sweeps")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="evaluate a scenario (or the sweep it defines) from a config file")
    run.add_argument("--config", required=True)
    run.add_argument("--out", default="results.csv")
    _common(run)

    preset = sub.add_parser("preset", help="run one of the figure presets")
    preset.add_argument("name", choices=PRESETS)
    preset.add_argument("--out", help="CSV path; multi-variant presets add _<label> to the stem")
    preset.add_argument("--desk", action="store_true", help="reduced preset with at most 10 BSs")
    preset.add_argument("--dump-config", action="store_true",
                        help="print the preset as config JSON instead of running it")
    _common(preset)

    validate = sub.add_parser("validate", help="parse and check a config file")
    validate.add_argument("--config", required=True)
    return parser


def _progress(quiet: bool, label: str):
    if quiet:
        return None

    def report(i, n, value):
        print(f"[{label}] point {i + 1}/{n}: value={value}", file=sys.stderr, flush=True)
    return report


def _variant_path(out: Path, label: str, n_variants: int) -> Path:
    return out if n_variants == 1 else out.with_name(f"{out.stem}_{label}{out.suffix}")


def _execute(variants, out: Path, args, title: str, metric: str) -> tuple[dict, bool]:
    tables: dict[str, ResultsTable] = {}
    files = {}
    ok = True
    for label, spec in variants:
        table = run_sweep(spec, workers=args.workers, timing=args.timing,
                          progress=_progress(args.quiet, label))
        path = write_results(table, _variant_path(out, label, len(variants)))
        tables[label], files[label] = table, path
        for row in table.failed:
            print(f"failed: {label} {table.sweep_var}={row.value} {row.scheme}/{row.method}: {row.error}",
                  file=sys.stderr)
            ok = False
        if not args.quiet:
            print(f"wrote {path}", file=sys.stderr)
    if args.plot_script:
        write_plot_script(args.plot_script, files, title, metric)
    return tables, ok


def cmd_run(args) -> int:
    cfg, sweep = load_config(args.config)
    spec = (SweepSpec(sweep["variable"], sweep["values"], cfg) if sweep
            else SweepSpec("M", (cfg.M,), cfg))
    spec = override(spec, trials=args.trials, seed=args.seed)
    _, ok = _execute((("run", spec),), Path(args.out), args, f"SE vs {spec.variable}", "sum_se")
    return EXIT_OK if ok else EXIT_RUNTIME


def cmd_preset(args) -> int:
    preset = figure_preset(args.name, desk=args.desk)
    variants = tuple((label, override(spec, trials=args.trials, seed=args.seed))
                     for label, spec in preset.variants)
    if args.dump_config:
        dumped = {label: sweep_to_dict(spec) for label, spec in variants}
        print(json.dumps(dumped if len(dumped) > 1 else next(iter(dumped.values())), indent=2))
        return EXIT_OK
    out = Path(args.out or f"{preset.name}.csv")
    tables, ok = _execute(variants, out, args, preset.title, preset.metric)
    for line in summarize(preset, tables):
        print(line)
    return EXIT_OK if ok else EXIT_RUNTIME


def cmd_validate(args) -> int:
    cfg, sweep = load_config(args.config)
    if sweep:
        SweepSpec(sweep["variable"], sweep["values"], cfg)
    evals = ", ".join(f"{s}/{m}" for s, m in cfg.evaluations())
    print(f"{args.config}: ok (M={cfg.M}, K={cfg.K}, N_r={cfg.n_r}, N_s={cfg.n_s}; {evals})")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": cmd_run, "preset": cmd_preset, "validate": cmd_validate}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (OSError, ArithmeticError, RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
