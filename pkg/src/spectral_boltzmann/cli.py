"""Command line entry point.

::

    spectral-boltzmann solve CONFIG [--out DIR] [--threads N] [--fast] [--nv N] [--steps N]
    spectral-boltzmann weights precompute CONFIG [--fast] [--nv N] [--cache-dir DIR]
    spectral-boltzmann postprocess align-shock PROFILE [--out FILE]

``CONFIG`` is a TOML path or the name of a bundled scenario. Exit status is
0 on success, 2 for configuration errors and 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .errors import ConfigError, NumericalFailure

log = logging.getLogger("spectral_boltzmann")


def _progress(label):
    def report(done, total):
        if total and (done == total or done % max(1, total // 20) == 0):
            log.info("%s %d/%d", label, done, total)
    return report


def _load(args):
    from .config import load_config
    cfg = load_config(args.config, fast=args.fast, nv=args.nv)
    if getattr(args, "threads", None) is not None:
        cfg.numerics.threads = args.threads
    if getattr(args, "steps", None) is not None:
        cfg.numerics.steps = args.steps
    if getattr(args, "cache_dir", None) is not None:
        cfg.numerics.cache_dir = args.cache_dir
    return cfg


def cmd_solve(args):
    from .scenarios import run_scenario
    cfg = _load(args)
    art = run_scenario(cfg, out_dir=args.out, progress=_progress("step"))
    log.info("finished %d steps in %.1f s; outputs in %s", art.steps, art.wall_time,
             art.out_dir)
    return 0


def cmd_precompute(args):
    from .scenarios import build_solver, default_cache_dir
    from .weights import cache_path, DEALIASED, QuadratureRule
    cfg = _load(args)
    if cfg.numerics.cache_dir is None:
        cfg.numerics.cache_dir = str(default_cache_dir())
    model, phase, tables, _ = build_solver(cfg, progress=_progress("channel"))
    factor = cfg.numerics.umax_factor or DEALIASED
    path = cache_path(cfg.numerics.cache_dir, phase, model,
                      QuadratureRule(order=cfg.numerics.quadrature_order), factor)
    print(path)
    return 0


def cmd_align(args):
    from .scenarios import read_profile, _write_csv
    from .transport import align_shock
    columns, rows = read_profile(args.profile)
    ns = sum(c.startswith("rho_") for c in columns)
    rho = rows[:, 1:1 + ns].sum(1)
    try:
        xs, x0 = align_shock(rows[:, 0], rho)
    except ValueError as exc:
        raise ConfigError(f"{args.profile}: {exc}") from None
    out = rows.copy()
    out[:, 0] = xs
    dest = Path(args.out) if args.out else Path(args.profile).with_name(
        Path(args.profile).stem + "_aligned.csv")
    with open(args.profile) as fh:
        units = next((ln[len("# units: "):].strip().split(", ") for ln in fh
                      if ln.startswith("# units:")), ["-"] * len(columns))
    _write_csv(dest, columns, out, units)
    print(f"{dest} shift={x0:.6e}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="spectral-boltzmann",
                                description="Spectral multi-species Boltzmann solver")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("config", help="TOML file or bundled scenario name")
        sp.add_argument("--fast", action="store_true", help="use the desk-scale overrides")
        sp.add_argument("--nv", type=int, help="override the velocity grid size")
        sp.add_argument("--threads", type=int, help="number of worker threads")

    s = sub.add_parser("solve", help="run a scenario")
    common(s)
    s.add_argument("--out", help="output directory")
    s.add_argument("--steps", type=int, help="override the number of steps")
    s.set_defaults(func=cmd_solve)

    w = sub.add_parser("weights", help="weight table utilities")
    wsub = w.add_subparsers(dest="action", required=True)
    pc = wsub.add_parser("precompute", help="fill the weight cache for a scenario")
    common(pc)
    pc.add_argument("--cache-dir", help="cache directory")
    pc.set_defaults(func=cmd_precompute)

    pp = sub.add_parser("postprocess", help="post-processing utilities")
    psub = pp.add_subparsers(dest="action", required=True)
    al = psub.add_parser("align-shock", help="shift a profile so the density midpoint is at x=0")
    al.add_argument("profile")
    al.add_argument("--out")
    al.set_defaults(func=cmd_align)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.verbose:
        log.setLevel(logging.INFO)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalFailure as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
