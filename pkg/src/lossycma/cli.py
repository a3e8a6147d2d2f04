"""Command-line entry point: ``lossycma --preset ground-modes --out results/``."""

import argparse
import logging
import sys

import yaml
from pydantic import ValidationError

from .config import PRESETS, load_config, preset
from .errors import CMAError
from .runner import run, sweep


def build_parser():
    p = argparse.ArgumentParser(
        prog="lossycma",
        description="Characteristic modes of a vertical dipole above a lossy half-space.",
    )
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="YAML scenario file")
    src.add_argument("--preset", choices=sorted(PRESETS), help="shipped scenario")
    p.add_argument("--out", help="output directory (overrides output_dir in the config)")
    p.add_argument("--workers", type=int, default=1, help="concurrent scenarios in a sweep")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    return p


def _print_summary(results):
    results = results if isinstance(results, list) else [results]
    for r in results:
        cfg = r.config
        print(f"[{cfg.name}] f={cfg.frequency:.6g} Hz  h={cfg.height_h:g} {cfg.units}  "
              f"ground={cfg.ground.kind}  Zin={r.input_impedance.real:.4f}{r.input_impedance.imag:+.4f}j ohm")
        for form, lam in r.eigen_table().items():
            print(f"  {form:13s} " + "  ".join(f"{x: .6e}" for x in lam))
        if r.efficiency is not None:
            print(f"  eta = {r.efficiency.eta:.6f}")
        for name, (_, _, rms) in r.field_cuts.items():
            print(f"  field cut {name}: modal vs direct RMS = {rms:.3e}")


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config) if args.config else preset(args.preset)
        out = args.out or cfg.output_dir
        if cfg.sweep is not None:
            results = sweep(cfg, cfg.sweep.axis, cfg.sweep.values, out_dir=out, workers=args.workers)
        else:
            results = run(cfg, out)
    except (ValidationError, yaml.YAMLError) as exc:
        print(f"configuration error:\n{exc}", file=sys.stderr)
        return 2
    except (CMAError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _print_summary(results)
    if out:
        print(f"reports written to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
