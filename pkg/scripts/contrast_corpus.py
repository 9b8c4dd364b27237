"""Write a high/low success contrast corpus and run the full analysis on it."""

import argparse
import os
from dataclasses import dataclass

from entrainkit.config import parse_config
from entrainkit.pipeline import run_analyze
from entrainkit.reports import emit_reports
from entrainkit.synth import contrast_corpus, write_corpus


@dataclass(frozen=True)
class ContrastConfig:
    out: str = "contrast_run"
    n_per_group: int = 10
    seed: int = 0


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=ContrastConfig.out)
    parser.add_argument("--n", type=int, default=ContrastConfig.n_per_group, help="conversations per group")
    parser.add_argument("--seed", type=int, default=ContrastConfig.seed)
    args = parser.parse_args(argv)
    cfg = ContrastConfig(args.out, args.n, args.seed)
    write_corpus(contrast_corpus(cfg.n_per_group, master_seed=cfg.seed), cfg.out)
    bundle = run_analyze(parse_config(f"seed = {cfg.seed}\n", base_dir=os.path.abspath(cfg.out)))
    paths = emit_reports(bundle, os.path.join(cfg.out, "out"), ("csv",))
    print("family     feature          stat   lsc_mean  hsc_mean  p")
    for r in bundle.group_tests:
        print(f"{r['family']:<10} {r['feature']:<16} {r['statistic']:<6} "
              f"{r['lsc_mean']:9.3f} {r['hsc_mean']:9.3f}  {r['p']:.2e}")
    print("wrote", *paths, sep="\n  ")


if __name__ == "__main__":
    main()
