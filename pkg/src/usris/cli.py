"""Command-line entry point: ``usris <subcommand> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import experiments as ex
from .channel import write_channels
from .config import SystemConfig, override, parse_config
from .errors import ConfigError, DegenerateChannelError, FoldConstraintError, InfeasibleBudgetError
from .geometry import FoldConfiguration, angle_set_for, write_geometry_csv

EXIT_CONFIG = 2
EXIT_DEGENERATE = 3

log = logging.getLogger("usris")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", type=Path, default=argparse.SUPPRESS, help="YAML config file")
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    p.add_argument("--scale", type=float, default=argparse.SUPPRESS,
                   help="grid area ratio, a power of 1/2 (1 = full size)")
    p.add_argument("--out", type=Path, default=argparse.SUPPRESS, help="output directory")
    p.add_argument("--threads", type=int, default=argparse.SUPPRESS,
                   help="worker threads for candidate evaluation")
    return p


def _fold_options(p):
    p.add_argument("--architecture", default="foldable_sparse", choices=ex.ARCHITECTURES)
    p.add_argument("--fold", type=int, nargs=2, metavar=("LEFT", "RIGHT"), default=None,
                   help="0-based indices into the fold angle set (default: flat)")


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="usris", parents=[common],
                                     description="Sparse and foldable multilayer user-side RIS simulator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", parents=[common], help="achievable rate vs transmit power")
    p.add_argument("--timing", action="store_true", help="add a wall-clock runtime_s column")
    p.add_argument("--architectures", nargs="+", choices=ex.ARCHITECTURES, default=list(ex.ARCHITECTURES))

    p = sub.add_parser("optimize", parents=[common], help="run the two-stage pipeline once")
    p.add_argument("--p-max", type=float, default=None, help="transmit power in W (default: largest in config)")

    p = sub.add_parser("ear", parents=[common], help="element activation ratio study")
    p.add_argument("--p-max", type=float, default=None)

    p = sub.add_parser("geometry", parents=[common], help="dump element positions")
    _fold_options(p)

    p = sub.add_parser("channels", parents=[common], help="dump channel matrices")
    _fold_options(p)
    return parser


def load_config(args) -> SystemConfig:
    cfg = parse_config(args.config) if getattr(args, "config", None) else SystemConfig()
    return override(cfg, seed=getattr(args, "seed", None), scale=getattr(args, "scale", None))


def _fold_from(cfg, arch, args) -> FoldConfiguration:
    if args.fold is None:
        return FoldConfiguration(0.0, 0.0)
    scen = ex.build_scenario(cfg, arch)
    angles = angle_set_for(scen.spec, cfg.fold_angles)
    try:
        return FoldConfiguration(angles.angles[args.fold[0]], angles.angles[args.fold[1]])
    except IndexError:
        raise FoldConstraintError(f"fold indices {args.fold} outside 0..{angles.m - 1}") from None


def cmd_sweep(cfg, args, out, threads) -> int:
    result = ex.run_rate_sweep(cfg, threads, tuple(args.architectures))
    paths = ex.write_sweep(result, out, timing=args.timing)
    for name in args.architectures:
        ex.rate_curve_check(result, name)
    print(f"wrote {paths['csv']}")
    return 0


def cmd_optimize(cfg, args, out, threads) -> int:
    arch, scen, res = ex.optimize(cfg, args.p_max, threads)
    out.mkdir(parents=True, exist_ok=True)
    ex.write_topology(res.topology, arch.rows, arch.cols, out / "topology.txt")
    with open(out / "fold.json", "w") as fh:
        json.dump({"phi_left_rad": res.fold.phi_left, "phi_right_rad": res.fold.phi_right}, fh, indent=1)
        fh.write("\n")
    res.solution.dump(out / "solution.json")
    for i, s in enumerate(res.stage1, start=1):
        s.trace.write_csv(out / f"stage1_trace{'' if i == 1 else i}.csv")
    for i, s in enumerate(res.stage2, start=1):
        s.trace.write_csv(out / f"stage2_trace{'' if i == 1 else i}.csv")
    print(f"rate {res.rate:.6f} bit/s/Hz (stage 1: {res.stage1_rate:.6f}, initial: {res.init_rate:.6f})")
    if res.solution.degenerate:
        log.error("effective channel is zero for the optimized topology")
        return EXIT_DEGENERATE
    return 0


def cmd_ear(cfg, args, out, threads) -> int:
    study = ex.run_ear_study(cfg, args.p_max, threads)
    ex.write_ear_study(study, out)
    print(f"EAR dense multilayer {study.dense.global_ear:.4f}, foldable sparse {study.foldable.global_ear:.4f}")
    return 0


def cmd_geometry(cfg, args, out, threads) -> int:
    arch = ex.architecture(cfg, args.architecture)
    fold = _fold_from(cfg, arch, args)
    geom = ex.build_scenario(cfg, arch).geometry(fold)
    out.mkdir(parents=True, exist_ok=True)
    write_geometry_csv(geom, out / "geometry.csv")
    print(f"wrote {out / 'geometry.csv'}")
    return 0


def cmd_channels(cfg, args, out, threads) -> int:
    arch = ex.architecture(cfg, args.architecture)
    fold = _fold_from(cfg, arch, args)
    paths = write_channels(ex.build_scenario(cfg, arch).channels(fold), out)
    print(f"wrote {len(paths)} matrices to {out}")
    return 0


COMMANDS = {"sweep": cmd_sweep, "optimize": cmd_optimize, "ear": cmd_ear,
            "geometry": cmd_geometry, "channels": cmd_channels}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = getattr(args, "out", None) or Path("results") / args.command
    threads = getattr(args, "threads", 1)
    try:
        cfg = load_config(args)
        return COMMANDS[args.command](cfg, args, out, threads)
    except (ConfigError, FoldConstraintError, InfeasibleBudgetError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DegenerateChannelError as exc:
        print(f"numerical degeneracy: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE


if __name__ == "__main__":
    sys.exit(main())
