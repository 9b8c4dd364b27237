"""Null rejection rates of the statistics kernels at a chosen sample size."""

import argparse
from dataclasses import dataclass

import numpy as np

from entrainkit import stats


@dataclass(frozen=True)
class CalibrationConfig:
    n: int = 20
    seeds: int = 5000
    alpha: float = 0.05


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=CalibrationConfig.n, help="sample size per group")
    parser.add_argument("--seeds", type=int, default=CalibrationConfig.seeds)
    parser.add_argument("--alpha", type=float, default=CalibrationConfig.alpha)
    args = parser.parse_args(argv)
    cfg = CalibrationConfig(args.n, args.seeds, args.alpha)
    hits = {"mann_whitney": 0, "welch_t": 0, "paired_t": 0, "shapiro_wilk": 0}
    for seed in range(cfg.seeds):
        rng = np.random.default_rng(seed)
        x, y = rng.standard_normal(cfg.n), rng.standard_normal(cfg.n)
        hits["mann_whitney"] += stats.mann_whitney_u(x, y).p < cfg.alpha
        hits["welch_t"] += stats.welch_t(x, y).p < cfg.alpha
        hits["paired_t"] += stats.paired_t(x, y).p < cfg.alpha
        if cfg.n >= 3:
            hits["shapiro_wilk"] += stats.shapiro_wilk(x).p < cfg.alpha
    for name, k in hits.items():
        print(f"{name:<13} {k / cfg.seeds:.4f}  (nominal {cfg.alpha})")


if __name__ == "__main__":
    main()
