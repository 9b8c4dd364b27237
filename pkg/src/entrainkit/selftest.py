"""Built-in self-test: stats oracles, feature closed forms and a quick synth recovery.

Exit status: 0 all suites pass, 1 a suite failed, 2 the reference fixtures
are missing or unreadable.
"""

from __future__ import annotations

import itertools
import json
import math
import os
import sys
from typing import Callable, Optional

import numpy as np

from . import stats

FIXTURES = os.path.join(os.path.dirname(__file__), "data", "selftest_fixtures.json")
TOL_P = 1e-8
TOL_EXACT = 1e-12


def brute_force_mwu_p(x, y):
    """Two-sided exact p by enumerating every split of the pooled ranks."""
    n1 = len(x)
    pooled = np.concatenate([x, y])
    ranks = stats.rankdata(pooled)
    offset = n1 * (n1 + 1) / 2.0
    u_obs = ranks[:n1].sum() - offset
    us = np.array([ranks[list(c)].sum() - offset
                   for c in itertools.combinations(range(pooled.size), n1)])
    lower = np.mean(us <= u_obs + 1e-9)
    upper = np.mean(us >= u_obs - 1e-9)
    return min(1.0, 2.0 * min(lower, upper))


def brute_force_cliffs_delta(x, y):
    gt = sum(1 for a in x for b in y if a > b)
    lt = sum(1 for a in x for b in y if a < b)
    return (gt - lt) / (len(x) * len(y))


# ---------------------------------------------------------------- suites

def _suite_mwu_exact(mwu, fixtures, n_cases=200):
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(n_cases):
        n1 = int(rng.integers(1, 6))
        n2 = int(rng.integers(1, 11 - n1))
        pool = rng.permutation(1000)[: n1 + n2].astype(float)
        x, y = pool[:n1], pool[n1:]
        worst = max(worst, abs(mwu(x, y).p - brute_force_mwu_p(x, y)))
    return worst <= TOL_EXACT, f"max |p - enumeration| = {worst:.2e} over {n_cases} samples"


def _suite_mwu_reference(mwu, fixtures):
    worst = 0.0
    for case in fixtures["mann_whitney"]:
        res = mwu(case["x"], case["y"])
        worst = max(worst, abs(res.p - case["p"]), abs(res.statistic - case["U"]))
    return worst <= TOL_P, f"max deviation from reference = {worst:.2e}"


def _suite_t_tests(mwu, fixtures):
    worst = 0.0
    for case in fixtures["welch_t"]:
        res = stats.welch_t(case["x"], case["y"])
        worst = max(worst, abs(res.statistic - case["t"]), abs(res.p - case["p"]), abs(res.df - case["df"]))
    for case in fixtures["paired_t"]:
        res = stats.paired_t(case["x"], case["y"])
        worst = max(worst, abs(res.statistic - case["t"]), abs(res.p - case["p"]))
    return worst <= TOL_P, f"max deviation from reference = {worst:.2e}"


def _suite_shapiro(mwu, fixtures):
    worst = 0.0
    for case in fixtures["shapiro_wilk"]:
        res = stats.shapiro_wilk(case["x"])
        worst = max(worst, abs(res.statistic - case["W"]), abs(res.p - case["p"]))
    return worst <= TOL_P, f"max deviation from reference = {worst:.2e}"


def _suite_bh(mwu, fixtures):
    hand = stats.bh_fdr([0.01, 0.02, 0.04])
    ok = np.array_equal(hand, [0.03, 0.03, 0.04])
    worst = max(float(np.max(np.abs(stats.bh_fdr(c["p"]) - c["q"]))) for c in fixtures["bh_fdr"])
    return ok and worst <= 1e-12, f"hand case {'exact' if ok else hand.tolist()}, reference deviation {worst:.2e}"


def _suite_cliffs(mwu, fixtures, n_cases=200):
    rng = np.random.default_rng(2)
    for _ in range(n_cases):
        x = rng.integers(0, 8, int(rng.integers(1, 30))).astype(float)
        y = rng.integers(0, 8, int(rng.integers(1, 30))).astype(float)
        if stats.cliffs_delta(x, y) != brute_force_cliffs_delta(x, y):
            return False, "disagrees with the O(n*m) count"
    return True, f"exact on {n_cases} tied samples"


def _suite_features(mwu, fixtures):
    from .acoustic import compute_intensity, estimate_f0
    from .corpus import AudioTrack

    sr = 16000
    t = np.arange(2 * sr) / sr
    errors = []
    for f0 in (110.0, 220.0, 330.0):
        x = 0.3 * sum(w * np.sin(2 * np.pi * f0 * (h + 1) * t) for h, w in enumerate((1.0, 0.5, 0.25)))
        track = estimate_f0(AudioTrack("A", sr, x))
        if track.valid.mean() < 0.95:
            return False, f"{f0:g} Hz tone only {track.valid.mean():.1%} voiced"
        errors.append(float(np.median(np.abs(track.values[track.valid] - f0))))
    silent = estimate_f0(AudioTrack("A", sr, np.zeros(sr))).valid.mean()
    full = compute_intensity(AudioTrack("A", sr, np.sin(2 * np.pi * 440 * t)))
    half = compute_intensity(AudioTrack("A", sr, 0.5 * np.sin(2 * np.pi * 440 * t)))
    level = float(np.median(full.values[full.valid]))
    shift = float(np.median(half.values[half.valid])) - level
    target = 20 * math.log10(math.sqrt(0.5) / 2e-5)
    ok = max(errors) <= 2.0 and silent == 0.0 and abs(level - target) <= 0.05 and abs(shift + 6.0206) <= 0.01
    return ok, f"F0 median error {max(errors):.3f} Hz, full-scale sine {level:.3f} dB, halving {shift:+.3f} dB"


def _suite_synth(mwu, fixtures, n=8):
    from .oracle import (conversation_delta, lambda_sweep_configs, oracle_report, run_configs,
                         synchrony_configs)

    # few conversations, so check means with wide bands; the 200-seed
    # fraction checks live in the acceptance suite
    strong = run_configs(lambda_sweep_configs(lambdas=(0.9,), n=n, master_seed=99))
    mean_delta = float(np.mean([conversation_delta(r) for _, r in strong]))
    sync = oracle_report(run_configs(synchrony_configs(rhos=(0.6,), n=n // 2, master_seed=99))).checks[0]
    ok = mean_delta < -0.3 and sync.observed <= 0.3
    return ok, (f"lambda=0.9 mean delta {mean_delta:.3f} (< -0.3), "
                f"rho=0.6 worst AU |mean_z - atanh(0.6)| {sync.observed:.3f} (<= 0.3)")


STATS_SUITES = (
    ("mann_whitney_exact", _suite_mwu_exact),
    ("mann_whitney_reference", _suite_mwu_reference),
    ("t_tests", _suite_t_tests),
    ("shapiro_wilk", _suite_shapiro),
    ("bh_fdr", _suite_bh),
    ("cliffs_delta", _suite_cliffs),
)
ALL_SUITES = STATS_SUITES + (("features", _suite_features), ("synth_recovery", _suite_synth))


def load_fixtures(path=FIXTURES):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def run_selftest(suites=ALL_SUITES, fixtures_path=FIXTURES,
                 mann_whitney: Optional[Callable] = None, out=None) -> int:
    """Run ``suites`` and print one line each; returns the exit status."""
    out = out or sys.stdout
    try:
        fixtures = load_fixtures(fixtures_path)
    except (OSError, ValueError) as exc:
        print(f"MISSING FIXTURES: {exc}", file=out)
        return 2
    mwu = mann_whitney or stats.mann_whitney_u
    status = 0
    for name, suite in suites:
        try:
            ok, detail = suite(mwu, fixtures)
        except Exception as exc:  # a crashing suite is a failed suite
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}", file=out)
        if not ok:
            status = 1
    return status
