"""Command-line entry point: ``entrainkit <command> ...``."""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import __version__
from .errors import EntrainError

EXIT_ERROR = 3  # 0/1/2 are reserved for pass/fail/nothing-to-check


def _cmd_analyze(args):
    from .config import load_config
    from .pipeline import run_analyze
    from .reports import emit_reports, save_bundle

    cfg = load_config(args.config, seed=args.seed, jobs=args.jobs,
                      output_dir=os.path.abspath(args.out) if args.out else None)
    bundle = run_analyze(cfg)
    save_bundle(bundle, cfg.output_dir)
    for path in emit_reports(bundle, cfg.output_dir, cfg.formats):
        print(path)
    for cid, why in bundle.excluded.items():
        print(f"excluded {cid}: {why}", file=sys.stderr)
    return 0


def _cmd_report(args):
    from .reports import emit_reports, load_bundle

    bundle = load_bundle(args.bundle)
    for path in emit_reports(bundle, args.out or args.bundle, (args.format,)):
        print(path)
    return 0


def _read_surveys(path, required=()):
    from .corpus import parse_surveys

    with open(path, encoding="utf-8") as fh:
        return parse_surveys(fh.read(), required=required)


def _cmd_pcs_fit(args):
    from .corpus import ALL_CONSTRUCTS
    from .pcs import fit_pcs_model

    responses = _read_surveys(args.surveys)
    model = fit_pcs_model(responses, constructs=tuple(ALL_CONSTRUCTS),
                          min_responses=args.min_responses, seed=args.seed or 0)
    text = model.to_json()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(args.out)
    else:
        sys.stdout.write(text)
    print(f"retained {len(model.retained)} constructs: {', '.join(model.retained)}", file=sys.stderr)
    return 0


def _cmd_pcs_score(args):
    from .corpus import PCS_CONSTRUCTS
    from .pcs import PcsModel, label_groups, pcs_to_csv, score_pcs

    retained = tuple(PCS_CONSTRUCTS)
    if args.model:
        with open(args.model, encoding="utf-8") as fh:
            retained = tuple(PcsModel.from_json(fh.read()).retained)
    responses = _read_surveys(args.surveys, required=retained)
    records = score_pcs(responses, retained, args.conversation_rule)
    records, counts = label_groups(records, args.low, args.high, args.rule)
    text = pcs_to_csv(records)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(args.out)
    else:
        sys.stdout.write(text)
    print(" ".join(f"{k}={v}" for k, v in counts.items()), file=sys.stderr)
    return 0


def _cmd_synth_generate(args):
    from .synth import SynthConfig, bundle_seed, contrast_corpus, generate, write_corpus

    seed = args.seed or 0
    if args.contrast:
        bundles = contrast_corpus(args.n, master_seed=seed)
    else:
        latent_rng = np.random.default_rng(seed)
        bundles = []
        for i in range(args.n):
            success = args.success if args.success is not None else float(latent_rng.uniform())
            bundles.append(generate(SynthConfig(
                seed=bundle_seed(seed, i), coupling_lambda=args.coupling, fau_rho=args.rho,
                success_latent=success, n_turns=args.turns, conversation_id=f"syn{i:04d}",
            )))
    manifest = write_corpus(bundles, args.out)
    print(manifest)
    return 0


def _cmd_synth_oracle(args):
    from .oracle import lambda_sweep_configs, oracle_report, run_configs, synchrony_configs

    seed = args.seed or 0
    configs = lambda_sweep_configs(n=args.n, master_seed=seed) + synchrony_configs(n=args.n, master_seed=seed)
    report = oracle_report(run_configs(configs, seed=seed))
    print("\n".join(report.lines()))
    return report.status


def _cmd_selftest(args):
    from .selftest import ALL_SUITES, run_selftest

    return run_selftest(ALL_SUITES)


def _cmd_stats_selftest(args):
    from .selftest import STATS_SUITES, run_selftest

    return run_selftest(STATS_SUITES)


def build_parser():
    parser = argparse.ArgumentParser(prog="entrainkit", description=__doc__)
    parser.add_argument("--version", action="version", version=f"entrainkit {__version__}")
    parser.add_argument("--seed", type=int, default=None, help="master seed (overrides the config)")
    parser.add_argument("--jobs", type=int, default=None, help="worker processes for per-conversation work")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="run the full pipeline from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="output directory (overrides the config)")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("report", help="re-render reports from a saved bundle.json")
    p.add_argument("--bundle", required=True, help="directory holding bundle.json")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", help="output directory (defaults to the bundle directory)")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("pcs", help="fit or apply the perceived-success model")
    pcs_sub = p.add_subparsers(dest="pcs_command", required=True)
    q = pcs_sub.add_parser("fit")
    q.add_argument("--surveys", required=True)
    q.add_argument("--out")
    q.add_argument("--min-responses", type=int, default=50)
    q.set_defaults(func=_cmd_pcs_fit)
    q = pcs_sub.add_parser("score")
    q.add_argument("--surveys", required=True)
    q.add_argument("--model", help="model JSON from 'pcs fit' (defaults to the 11 affect constructs)")
    q.add_argument("--out")
    q.add_argument("--low", type=float, default=0.6)
    q.add_argument("--high", type=float, default=0.9)
    q.add_argument("--rule", choices=("fixed", "median_sd"), default="fixed")
    q.add_argument("--conversation-rule", choices=("mean", "min"), default="mean")
    q.set_defaults(func=_cmd_pcs_score)

    p = sub.add_parser("synth", help="synthetic conversations with known entrainment")
    synth_sub = p.add_subparsers(dest="synth_command", required=True)
    q = synth_sub.add_parser("generate")
    q.add_argument("--n", type=int, default=10)
    q.add_argument("--lambda", dest="coupling", type=float, default=0.0)
    q.add_argument("--rho", type=float, default=0.0)
    q.add_argument("--success", type=float, default=None,
                   help="success latent for every bundle (default: uniform draw per bundle)")
    q.add_argument("--turns", type=int, default=30)
    q.add_argument("--contrast", action="store_true",
                   help="write N coupled/high-success plus N null/low-success bundles")
    q.add_argument("--out", required=True)
    q.set_defaults(func=_cmd_synth_generate)
    q = synth_sub.add_parser("oracle", help="run the recovery checks on fresh synthetic data")
    q.add_argument("--n", type=int, default=200, help="conversations per condition")
    q.set_defaults(func=_cmd_synth_oracle)

    p = sub.add_parser("selftest", help="stats oracles, feature closed forms, quick synth recovery")
    p.set_defaults(func=_cmd_selftest)

    p = sub.add_parser("stats", help="statistics kernels")
    stats_sub = p.add_subparsers(dest="stats_command", required=True)
    q = stats_sub.add_parser("selftest")
    q.set_defaults(func=_cmd_stats_selftest)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.jobs is not None and args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_ERROR
    try:
        return args.func(args)
    except (EntrainError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
