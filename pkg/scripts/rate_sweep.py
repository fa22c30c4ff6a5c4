"""Achievable rate versus transmit power for the four reference architectures.

Writes sweep.csv, results.json and config.yaml, then prints the curves.

    python3 scripts/rate_sweep.py --config my.yaml --out results/sweep
"""

import argparse
from pathlib import Path

from usris.config import SystemConfig, override, parse_config
from usris.experiments import ARCHITECTURES, rate_curve_check, run_rate_sweep, write_sweep


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--config", type=Path)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--scale", type=float)
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--out", type=Path, default=Path("results/sweep"))
    args = parser.parse_args()

    cfg = parse_config(args.config) if args.config else SystemConfig()
    cfg = override(cfg, seed=args.seed, scale=args.scale)
    result = run_rate_sweep(cfg, args.threads)
    paths = write_sweep(result, args.out)

    print(f"{'P_max [W]':>12}" + "".join(f"{name:>20}" for name in ARCHITECTURES))
    curves = {name: dict(rate_curve_check(result, name)) for name in ARCHITECTURES}
    for p in sorted(cfg.p_max_w):
        print(f"{p:12.4g}" + "".join(f"{curves[name][float(p)]:20.4f}" for name in ARCHITECTURES))
    print(f"wrote {paths['csv']}")


if __name__ == "__main__":
    main()
