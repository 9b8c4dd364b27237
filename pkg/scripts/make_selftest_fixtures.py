"""Regenerate the reference values the self-test compares against.

Reference numbers come from scipy.stats, so the installed self-test can
check the from-scratch kernels without importing scipy.stats itself.

    python scripts/make_selftest_fixtures.py
"""

import json
import os

import numpy as np
from scipy import stats as ss

OUT = os.path.join(os.path.dirname(__file__), "..", "src", "entrainkit", "data", "selftest_fixtures.json")


def main():
    rng = np.random.default_rng(20240611)
    doc = {"mann_whitney": [], "welch_t": [], "paired_t": [], "shapiro_wilk": [], "bh_fdr": []}

    for n1, n2, ties in [(6, 7, True), (12, 15, False), (20, 18, True), (30, 25, False), (4, 5, False)]:
        x = rng.normal(0, 1, n1)
        y = rng.normal(0.5, 1, n2)
        if ties:
            x, y = np.round(x, 1), np.round(y, 1)
        method = "exact" if n1 + n2 <= 16 and not ties else "asymptotic"
        res = ss.mannwhitneyu(x, y, alternative="two-sided", use_continuity=True, method=method)
        doc["mann_whitney"].append({"x": x.tolist(), "y": y.tolist(), "U": float(res.statistic),
                                    "p": float(res.pvalue)})

    for n1, n2 in [(8, 12), (20, 20), (5, 30)]:
        x = rng.normal(0, 1, n1)
        y = rng.normal(0.3, 2, n2)
        res = ss.ttest_ind(x, y, equal_var=False)
        doc["welch_t"].append({"x": x.tolist(), "y": y.tolist(), "t": float(res.statistic),
                               "df": float(res.df), "p": float(res.pvalue)})

    for n in (6, 25):
        x = rng.normal(0, 1, n)
        y = x + rng.normal(0.2, 0.5, n)
        res = ss.ttest_rel(x, y)
        doc["paired_t"].append({"x": x.tolist(), "y": y.tolist(), "t": float(res.statistic),
                                "p": float(res.pvalue)})

    for n, dist in [(3, "normal"), (10, "normal"), (50, "lognormal"), (200, "normal"), (1000, "uniform")]:
        x = {"normal": rng.normal, "lognormal": rng.lognormal, "uniform": rng.uniform}[dist](size=n)
        res = ss.shapiro(x)
        doc["shapiro_wilk"].append({"x": x.tolist(), "W": float(res.statistic), "p": float(res.pvalue)})

    for n in (5, 40):
        p = rng.uniform(0, 0.2, n)
        doc["bh_fdr"].append({"p": p.tolist(), "q": ss.false_discovery_control(p).tolist()})

    os.makedirs(os.path.dirname(OUT), exist_ok=True)
    with open(OUT, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")
    print(f"wrote {os.path.normpath(OUT)}")


if __name__ == "__main__":
    main()
