"""Recovery checks of the analysis against synthetic ground truth."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .analysis import ConversationResult, analyze_bundle
from .synth import SynthConfig, bundle_seed, generate

NULL_BAND = 0.05
STRONG_LAMBDA = 0.9
STRONG_DELTA = -0.3
STRONG_FRACTION = 0.9
SYNC_TOLERANCE = 0.15
INDEPENDENT_BAND = 0.05

# Short audio-only conversations for proximity sweeps: many turn pairs per
# second of signal keeps a 4 x 200 sweep inside two minutes on one core.
SWEEP_CONFIG = dict(n_turns=32, mean_turn_s=0.5, include_fau=False)
SYNC_CONFIG = dict(include_audio=False)


def conversation_delta(result: ConversationResult):
    """Per-conversation proximity effect: mean Cliff's delta over feature-statistics."""
    deltas = [v["delta"] for v in result.proximity.values()
              if v.get("delta") is not None and math.isfinite(v["delta"])]
    return float(np.mean(deltas)) if deltas else float("nan")


def conversation_mean_z(result: ConversationResult):
    zs = [v["mean_z"] for v in result.synchrony.values() if v.get("mean_z") is not None]
    return float(np.mean(zs)) if zs else float("nan")


@dataclass(frozen=True)
class OracleCheck:
    name: str
    passed: bool
    observed: float
    target: str
    offending_seeds: Tuple[int, ...] = ()

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        extra = f" offending seeds: {list(self.offending_seeds)}" if self.offending_seeds else ""
        return f"{status} {self.name}: observed {self.observed:.4f}, target {self.target}{extra}"


@dataclass
class OracleReport:
    status: int  # 0 all pass, 1 some check failed, 2 nothing to check
    checks: List[OracleCheck] = field(default_factory=list)

    def lines(self):
        if self.status == 2:
            return ["NOTHING TO CHECK: empty bundle set"]
        return [c.line() for c in self.checks]


def oracle_report(pairs: Sequence[Tuple[SynthConfig, ConversationResult]]) -> OracleReport:
    """Check null and strong-coupling delta recovery, monotonicity and synchrony."""
    if not pairs:
        return OracleReport(status=2)
    checks = []
    by_lambda: Dict[float, List[Tuple[int, float]]] = {}
    for cfg, res in pairs:
        if res.proximity:
            by_lambda.setdefault(cfg.coupling_lambda, []).append((cfg.seed, conversation_delta(res)))

    if 0.0 in by_lambda:
        mean = float(np.nanmean([d for _, d in by_lambda[0.0]]))
        checks.append(OracleCheck("null_delta", abs(mean) <= NULL_BAND, mean,
                                  f"[-{NULL_BAND}, {NULL_BAND}]"))
    strong = [v for lam, vals in by_lambda.items() if lam >= STRONG_LAMBDA for v in vals]
    if strong:
        hits = [d < STRONG_DELTA for _, d in strong]
        frac = float(np.mean(hits))
        bad = tuple(seed for (seed, _), hit in zip(strong, hits) if not hit)
        checks.append(OracleCheck("strong_delta", frac >= STRONG_FRACTION, frac,
                                  f">= {STRONG_FRACTION} of conversations below {STRONG_DELTA}",
                                  bad if frac < STRONG_FRACTION else ()))
    if len(by_lambda) > 1:
        lams = sorted(by_lambda)
        means = [float(np.nanmean([d for _, d in by_lambda[lam]])) for lam in lams]
        steps = np.diff(means)
        checks.append(OracleCheck("monotone_delta", bool(np.all(steps < 0)), float(steps.max()),
                                  "mean delta strictly decreasing in lambda"))

    by_rho: Dict[float, List[ConversationResult]] = {}
    for cfg, res in pairs:
        if res.synchrony:
            by_rho.setdefault(cfg.fau_rho, []).append(res)
    for rho, results in sorted(by_rho.items()):
        aus = sorted({au for r in results for au in r.synchrony})
        per_au = np.array([np.mean([r.synchrony[au]["mean_z"] for r in results if au in r.synchrony])
                           for au in aus])
        if rho == 0.0:
            worst = float(np.max(np.abs(per_au)))
            checks.append(OracleCheck("independent_synchrony", worst < INDEPENDENT_BAND, worst,
                                      f"|mean_z| < {INDEPENDENT_BAND} for every AU"))
        else:
            target = math.atanh(rho)
            worst = float(np.max(np.abs(per_au - target)))
            checks.append(OracleCheck(f"synchrony_rho_{rho:g}", worst <= SYNC_TOLERANCE, worst,
                                      f"|mean_z - {target:.3f}| <= {SYNC_TOLERANCE} for every AU"))
    return OracleReport(status=0 if all(c.passed for c in checks) else 1, checks=checks)


def run_configs(configs: Sequence[SynthConfig], seed=0):
    """Generate and analyze each config; returns (config, result) pairs."""
    return [(cfg, analyze_bundle(generate(cfg), seed=seed)) for cfg in configs]


def lambda_sweep_configs(lambdas=(0.0, 0.3, 0.6, 0.9), n=200, master_seed=0, **overrides):
    params = {**SWEEP_CONFIG, **overrides}
    return [SynthConfig(seed=bundle_seed(master_seed, k * n + i), coupling_lambda=lam, **params)
            for k, lam in enumerate(lambdas) for i in range(n)]


def synchrony_configs(rhos=(0.6, 0.0), n=200, master_seed=0, **overrides):
    params = {**SYNC_CONFIG, **overrides}
    return [SynthConfig(seed=bundle_seed(master_seed, 10_000 + k * n + i), fau_rho=rho, **params)
            for k, rho in enumerate(rhos) for i in range(n)]

