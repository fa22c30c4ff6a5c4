"""EAR of the dense two-layer surface against the optimized foldable sparse surface.

With ``--seeds n`` the study is repeated over seeds 0..n-1 and the medians
are compared; heatmaps are written for the configured seed only.
"""

import argparse
import statistics
from dataclasses import replace
from pathlib import Path

from usris.config import SystemConfig, override, parse_config
from usris.experiments import run_ear_study, write_ear_study


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--config", type=Path)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--scale", type=float)
    parser.add_argument("--p-max", type=float)
    parser.add_argument("--seeds", type=int, default=1)
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--out", type=Path, default=Path("results/ear"))
    args = parser.parse_args()

    cfg = parse_config(args.config) if args.config else SystemConfig()
    cfg = override(cfg, seed=args.seed, scale=args.scale)
    study = run_ear_study(cfg, args.p_max, args.threads)
    write_ear_study(study, args.out)
    print(f"seed {cfg.seed}: dense {study.dense.global_ear:.4f}, foldable {study.foldable.global_ear:.4f}")

    if args.seeds > 1:
        dense, foldable = [], []
        for seed in range(args.seeds):
            s = run_ear_study(replace(cfg, seed=seed), args.p_max, args.threads)
            dense.append(s.dense.global_ear)
            foldable.append(s.foldable.global_ear)
            print(f"  seed {seed}: dense {dense[-1]:.4f}  foldable {foldable[-1]:.4f}")
        print(f"median over {args.seeds} seeds: dense {statistics.median(dense):.4f}, "
              f"foldable {statistics.median(foldable):.4f}")


if __name__ == "__main__":
    main()
