"""Dense-seeded ordering check: foldable >= sparse >= dense-embedded, per seed.

Also prints the rates of the four reference architectures (random stage-1
start) at the same power so the dense baselines can be compared directly.
"""

import argparse
import sys
from pathlib import Path

from usris.config import SystemConfig, override, parse_config
from usris.experiments import ARCHITECTURES, ordering_check, run_cells


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--config", type=Path)
    parser.add_argument("--scale", type=float)
    parser.add_argument("--p-max", type=float)
    parser.add_argument("--seeds", type=int, default=10)
    parser.add_argument("--threads", type=int, default=1)
    args = parser.parse_args()

    cfg = parse_config(args.config) if args.config else SystemConfig()
    cfg = override(cfg, scale=args.scale)
    p_max = args.p_max if args.p_max is not None else max(cfg.p_max_w)

    print(f"{'seed':>4} {'dense-embedded':>15} {'sparse':>10} {'foldable':>10}  ordered")
    failures = 0
    for seed in range(args.seeds):
        o = ordering_check(cfg, seed, p_max, args.threads)
        failures += not o.ordered
        print(f"{seed:4d} {o.dense_embedded:15.4f} {o.sparse:10.4f} {o.foldable:10.4f}  {o.ordered}")

    print(f"\nreference architectures at P_max = {p_max:g} W, seed {cfg.seed}:")
    cells = {c.architecture: c for c in run_cells(cfg, p_max, args.threads)}
    for name in ARCHITECTURES:
        print(f"  {name:<18} {cells[name].rate:.4f} bit/s/Hz")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
