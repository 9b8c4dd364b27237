"""Mean proximity delta as a function of the coupling strength lambda."""

import argparse
from dataclasses import dataclass

import numpy as np

from entrainkit.oracle import conversation_delta, lambda_sweep_configs, oracle_report, run_configs


@dataclass(frozen=True)
class SweepConfig:
    lambdas: tuple = (0.0, 0.15, 0.3, 0.45, 0.6, 0.75, 0.9)
    n: int = 50
    seed: int = 0


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=SweepConfig.n, help="conversations per lambda")
    parser.add_argument("--seed", type=int, default=SweepConfig.seed)
    args = parser.parse_args(argv)
    cfg = SweepConfig(n=args.n, seed=args.seed)
    pairs = run_configs(lambda_sweep_configs(cfg.lambdas, n=cfg.n, master_seed=cfg.seed))
    print("lambda  mean_delta  sd")
    for lam in cfg.lambdas:
        d = np.array([conversation_delta(r) for c, r in pairs if c.coupling_lambda == lam])
        print(f"{lam:6.2f}  {d.mean():+.4f}     {d.std(ddof=1):.4f}")
    for line in oracle_report(pairs).lines():
        print(line)


if __name__ == "__main__":
    main()
