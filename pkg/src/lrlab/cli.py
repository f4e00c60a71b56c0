"""Command line entry point: ``lrlab <verb> [options]``.

Exit codes: 0 success, 2 configuration or domain error, 3 resource limit,
4 numerical failure.
"""

import argparse
import logging
import sys
from pathlib import Path

from threadpoolctl import threadpool_limits

from .config import format_config, load_config, required_keys
from .errors import ConfigError, DomainError, NumericError, ResourceError
from .experiments import FIGURES, run_bounds, run_commutator, run_evolve, run_reproduce

EXIT_OK, EXIT_CONFIG, EXIT_RESOURCE, EXIT_NUMERIC = 0, 2, 3, 4

log = logging.getLogger("lrlab")


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="experiment config (INI)")
    common.add_argument("--out", type=Path, help="output directory (overrides [output] dir)")
    common.add_argument("--threads", type=int, default=None, help="BLAS/LAPACK thread count")
    common.add_argument("--seed", type=int, default=None, help="recorded in the report; all methods are deterministic")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="lrlab", description="Lieb-Robinson bounds and tip-driven spin dynamics")
    sub = p.add_subparsers(dest="verb", required=True)
    sub.add_parser("bounds", parents=[common], help="sample the configured bound curves")
    sub.add_parser("evolve", parents=[common], help="exact tip-perturbed dynamics against the bound")
    sub.add_parser("commutator", parents=[common], help="exact commutator norm against the bounds")
    rp = sub.add_parser("reproduce", parents=[common], help="reproduce a figure from its preset")
    rp.add_argument("figure", choices=FIGURES)
    rp.add_argument("--fast", action="store_true", help="use the spin-1/2 variant for fig3a/fig3b")
    vp = sub.add_parser("validate-config", parents=[common], help="check a config and print it with defaults filled in")
    vp.add_argument("--keys", action="store_true", help="list the required keys and exit")
    return p


def _summary(report):
    lines = [f"{report.figure}: {len(report.files)} files"]
    for r in report.ratios:
        v = "n/a" if r["value"] is None else f"{r['value']:.4g}"
        lines.append(f"  {r['name']} = {v}")
    for name, ok in report.checks.items():
        if isinstance(ok, bool):
            lines.append(f"  check {name}: {'ok' if ok else 'FAILED'}")
    for e in report.errors:
        lines.append(f"  error in {e['curve']}: {e['error']}: {e['message']}")
    return "\n".join(lines)


def _dispatch(args):
    if args.verb == "validate-config":
        if args.keys:
            print("\n".join(required_keys()))
            return EXIT_OK
        if args.config is None:
            raise ConfigError(["--config is required"])
        cfg = load_config(args.config)
        print(format_config(cfg), end="")
        for key in cfg.defaults_applied:
            print(f"# default applied: {key}")
        return EXIT_OK

    if args.verb == "reproduce":
        cfg = load_config(args.config) if args.config else None
        out = args.out or Path(cfg.output.dir if cfg else f"out/{args.figure}")
        report = run_reproduce(args.figure, out, cfg, fast=args.fast, seed=args.seed)
    else:
        if args.config is None:
            raise ConfigError([f"{args.verb} needs --config"])
        cfg = load_config(args.config)
        out = args.out or Path(cfg.output.dir)
        runner = {"bounds": run_bounds, "evolve": run_evolve, "commutator": run_commutator}[args.verb]
        report = runner(cfg, out, seed=args.seed)
    print(_summary(report))
    print(f"report: {out / 'report.json'}")
    if report.errors:
        # surface the first failure class through the exit code
        kinds = {e["error"] for e in report.errors}
        if "ResourceError" in kinds or "MemoryError" in kinds:
            return EXIT_RESOURCE
        if "NumericError" in kinds or "LinAlgError" in kinds:
            return EXIT_NUMERIC
        return EXIT_CONFIG
    return EXIT_OK


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        with threadpool_limits(limits=args.threads):
            return _dispatch(args)
    except ConfigError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (NumericError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
