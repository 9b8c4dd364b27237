"""Statistical kernels: rank tests, t-tests, normality, effect sizes,
correlation, FDR correction and correlation-matrix PCA.

Everything here is written against numpy and the stdlib only; scipy is used
exclusively as an independent reference in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from statistics import NormalDist
from typing import Optional, Sequence

import numpy as np

from .errors import (
    ConstantInput,
    DegenerateMatrix,
    EmptySample,
    LengthMismatch,
    OutOfRangeP,
    SampleSizeOutOfRange,
    ZeroVarianceBothGroups,
    ZeroVarianceDifferences,
)

_NORMAL = NormalDist()

EXACT_MWU_MAX_N = 16
FISHER_EPS = 1e-6


@dataclass(frozen=True)
class StatTestResult:
    kind: str  # mann_whitney | welch_t | paired_t | shapiro_wilk
    statistic: float
    p: float
    z: Optional[float] = None
    df: Optional[float] = None
    group_summaries: Optional[tuple] = None  # ((mean, sd), (mean, sd))
    method: str = ""

    def as_dict(self):
        return {
            "kind": self.kind,
            "statistic": self.statistic,
            "p": self.p,
            "z": self.z,
            "df": self.df,
            "group_summaries": self.group_summaries,
            "method": self.method,
        }


def _as_sample(x, name="x"):
    arr = np.asarray(x, dtype=float).ravel()
    if arr.size == 0:
        raise EmptySample(f"{name} is empty")
    return arr


def _summary(a):
    sd = float(np.std(a, ddof=1)) if a.size > 1 else 0.0
    return (float(np.mean(a)), sd)


def normal_sf(z):
    return 0.5 * math.erfc(z / math.sqrt(2.0))


# ---------------------------------------------------------------- ranks / MWU

def rankdata(a):
    """Midranks (1-based), ties get the average of the ranks they span."""
    a = np.asarray(a, dtype=float)
    order = np.argsort(a, kind="mergesort")
    sorted_a = a[order]
    ranks = np.empty(a.size, dtype=float)
    n = a.size
    i = 0
    while i < n:
        j = i
        while j + 1 < n and sorted_a[j + 1] == sorted_a[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _tie_sizes(a):
    _, counts = np.unique(a, return_counts=True)
    return counts


@lru_cache(maxsize=None)
def _u_counts(n1, n2):
    """Number of labelings giving each U = 0..n1*n2 (tie-free null)."""
    # table[j][u] for the current i; the largest element is either an x
    # (beats all j y's) or a y (beats nothing)
    prev = [[1] for _ in range(n2 + 1)]  # i = 0: only U = 0
    for i in range(1, n1 + 1):
        cur = [[1]]  # j = 0: only U = 0
        for j in range(1, n2 + 1):
            size = i * j + 1
            row = [0] * size
            left = cur[j - 1]
            for u, c in enumerate(left):
                row[u] += c
            up = prev[j]
            for u, c in enumerate(up):
                row[u + j] += c
            cur.append(row)
        prev = cur
    return tuple(prev[n2])


def mann_whitney_exact_p(u, n1, n2):
    counts = _u_counts(n1, n2)
    total = sum(counts)
    k = int(round(u))
    lower = sum(counts[: k + 1])
    upper = sum(counts[k:])
    return min(1.0, 2.0 * min(lower, upper) / total)


def mann_whitney_u(x, y, continuity=True, method="auto"):
    """Two-sided Mann-Whitney U test.

    U is the statistic of the first sample, ``R_x - n1(n1+1)/2``. The exact
    null distribution is used when ``n1 + n2 <= 16`` and there are no ties,
    otherwise the tie-corrected normal approximation. ``z`` carries the sign
    of ``U - n1*n2/2`` in both cases.
    """
    x = _as_sample(x, "x")
    y = _as_sample(y, "y")
    n1, n2 = x.size, y.size
    pooled = np.concatenate([x, y])
    ranks = rankdata(pooled)
    u = float(ranks[:n1].sum() - n1 * (n1 + 1) / 2.0)
    mu = n1 * n2 / 2.0
    n = n1 + n2
    ties = _tie_sizes(pooled)
    has_ties = bool(np.any(ties > 1))
    tie_term = float(np.sum(ties.astype(float) ** 3 - ties)) / (n * (n - 1)) if n > 1 else 0.0
    var = n1 * n2 / 12.0 * ((n + 1) - tie_term)
    if var > 0:
        dev = abs(u - mu)
        if continuity:
            dev = max(dev - 0.5, 0.0)
        z = math.copysign(dev / math.sqrt(var), u - mu) if dev > 0 else 0.0
    else:
        z = 0.0

    use_exact = method == "exact" or (method == "auto" and n <= EXACT_MWU_MAX_N and not has_ties)
    if use_exact:
        if has_ties:
            raise ValueError("exact Mann-Whitney p requires tie-free samples")
        p = mann_whitney_exact_p(u, n1, n2)
        used = "exact"
    else:
        p = min(1.0, 2.0 * normal_sf(abs(z))) if var > 0 else 1.0
        used = "normal"
    return StatTestResult(
        kind="mann_whitney",
        statistic=u,
        p=p,
        z=z,
        group_summaries=(_summary(x), _summary(y)),
        method=used,
    )


# ---------------------------------------------------------------- t tests

def _betacf(a, b, x):
    # modified Lentz evaluation of the incomplete-beta continued fraction
    tiny = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 10000):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def betainc(a, b, x, y=None):
    """Regularized incomplete beta I_x(a, b); ``y`` may pass 1 - x exactly."""
    if y is None:
        y = 1.0 - x
    if x <= 0.0:
        return 0.0
    if y <= 0.0:
        return 1.0
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log(y))
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * _betacf(a, b, x) / a
    return 1.0 - math.exp(log_front) * _betacf(b, a, y) / b


def t_two_sided_p(t, df):
    if math.isnan(t):
        return math.nan
    if math.isinf(t):
        return 0.0
    t2 = t * t
    return min(1.0, betainc(df / 2.0, 0.5, df / (df + t2), t2 / (df + t2)))


def welch_t(x, y):
    x = _as_sample(x, "x")
    y = _as_sample(y, "y")
    if x.size < 2 or y.size < 2:
        raise EmptySample("welch_t needs at least two observations per group")
    vx = float(np.var(x, ddof=1)) / x.size
    vy = float(np.var(y, ddof=1)) / y.size
    if vx == 0.0 and vy == 0.0:
        raise ZeroVarianceBothGroups("both groups have zero variance")
    se2 = vx + vy
    t = float((np.mean(x) - np.mean(y)) / math.sqrt(se2))
    df = se2 ** 2 / (vx ** 2 / (x.size - 1) + vy ** 2 / (y.size - 1))
    return StatTestResult(
        kind="welch_t",
        statistic=t,
        p=t_two_sided_p(t, df),
        df=df,
        group_summaries=(_summary(x), _summary(y)),
    )


def paired_t(x, y):
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.size != y.size:
        raise LengthMismatch(f"paired samples differ in length ({x.size} vs {y.size})")
    if x.size < 2:
        raise EmptySample("paired_t needs at least two pairs")
    d = x - y
    sd = float(np.std(d, ddof=1))
    if sd == 0.0:
        raise ZeroVarianceDifferences("differences have zero variance")
    n = d.size
    t = float(np.mean(d)) / (sd / math.sqrt(n))
    df = n - 1.0
    return StatTestResult(
        kind="paired_t",
        statistic=t,
        p=t_two_sided_p(t, df),
        df=df,
        group_summaries=(_summary(x), _summary(y)),
    )


# ---------------------------------------------------------------- Shapiro-Wilk

def _poly(coefs, x):
    result = 0.0
    for c in reversed(coefs):
        result = result * x + c
    return result


_SW_C1 = (0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056)
_SW_C2 = (0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633)
_SW_C3 = (0.544, -0.39978, 0.025054, -6.714e-4)
_SW_C4 = (1.3822, -0.77857, 0.062767, -0.0020322)
_SW_C5 = (-1.5861, -0.31082, -0.083751, 0.0038915)
_SW_C6 = (-0.4803, -0.082676, 0.0030302)
_SW_G = (-2.273, 0.459)


def _sw_coefficients(n):
    """Half-vector of Royston's approximate W weights, largest first."""
    if n == 3:
        return np.array([math.sqrt(0.5)])
    half = n // 2
    m = np.array([-_NORMAL.inv_cdf((i - 0.375) / (n + 0.25)) for i in range(1, half + 1)])
    summ2 = 2.0 * float(np.sum(m ** 2))
    ssumm2 = math.sqrt(summ2)
    rsn = 1.0 / math.sqrt(n)
    a = m / ssumm2
    a1 = _poly(_SW_C1, rsn) + m[0] / ssumm2
    if n > 5:
        a2 = _poly(_SW_C2, rsn) + m[1] / ssumm2
        fac = math.sqrt((summ2 - 2.0 * m[0] ** 2 - 2.0 * m[1] ** 2)
                        / (1.0 - 2.0 * a1 ** 2 - 2.0 * a2 ** 2))
        a = m / fac
        a[0], a[1] = a1, a2
    else:
        fac = math.sqrt((summ2 - 2.0 * m[0] ** 2) / (1.0 - 2.0 * a1 ** 2))
        a = m / fac
        a[0] = a1
    return a


def shapiro_wilk(x):
    """Shapiro-Wilk W with Royston's normalizing approximation for p."""
    x = np.sort(np.asarray(x, dtype=float).ravel())
    n = x.size
    if n < 3 or n > 5000:
        raise SampleSizeOutOfRange(f"shapiro_wilk needs 3 <= n <= 5000, got {n}")
    ss = float(np.sum((x - x.mean()) ** 2))
    if ss == 0.0:
        raise ConstantInput("shapiro_wilk on a constant sample")
    a = _sw_coefficients(n)
    half = a.size
    num = float(np.sum(a * (x[::-1][:half] - x[:half])))
    w = min(num * num / ss, 1.0)

    if n == 3:
        p = 6.0 / math.pi * (math.asin(math.sqrt(w)) - math.asin(math.sqrt(0.75)))
        p = min(max(p, 0.0), 1.0)
        return StatTestResult(kind="shapiro_wilk", statistic=w, p=p)

    w1 = math.log1p(-w) if w < 1.0 else -math.inf
    if n <= 11:
        gamma = _poly(_SW_G, n)
        if w1 >= gamma:
            return StatTestResult(kind="shapiro_wilk", statistic=w, p=0.0)
        y = -math.log(gamma - w1)
        mu = _poly(_SW_C3, n)
        sigma = math.exp(_poly(_SW_C4, n))
    else:
        ln = math.log(n)
        y = w1
        mu = _poly(_SW_C5, ln)
        sigma = math.exp(_poly(_SW_C6, ln))
    if math.isinf(y):
        p = 1.0
    else:
        p = normal_sf((y - mu) / sigma)
    return StatTestResult(kind="shapiro_wilk", statistic=w, p=p)


# ---------------------------------------------------------------- effect sizes, correlation

def cliffs_delta(x, y):
    """(#(x_i > y_j) - #(x_i < y_j)) / (n1 * n2), counted via sorting."""
    x = _as_sample(x, "x")
    y = np.sort(_as_sample(y, "y"))
    less = np.searchsorted(y, x, side="left")  # y_j < x_i
    leq = np.searchsorted(y, x, side="right")
    greater = y.size - leq  # y_j > x_i
    gt = int(less.sum())
    lt = int(greater.sum())
    return (gt - lt) / (x.size * y.size)


def pearson_r(x, y):
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.size != y.size:
        raise LengthMismatch("pearson_r inputs differ in length")
    if x.size < 2:
        raise EmptySample("pearson_r needs at least two points")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(np.dot(dx, dx))
    syy = float(np.dot(dy, dy))
    if sxx == 0.0 or syy == 0.0:
        raise ConstantInput("pearson_r on a constant input")
    r = float(np.dot(dx, dy)) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def fisher_z(r, eps=FISHER_EPS):
    bound = 1.0 - eps
    return math.atanh(max(-bound, min(bound, r)))


# ---------------------------------------------------------------- FDR

def bh_fdr(p):
    """Benjamini-Hochberg step-up q-values, returned in input order."""
    p = np.asarray(p, dtype=float).ravel()
    if p.size == 0:
        return p.copy()
    if np.any(np.isnan(p)) or np.any(p < 0) or np.any(p > 1):
        raise OutOfRangeP("p-values must lie in [0, 1]")
    m = p.size
    order = np.argsort(p, kind="mergesort")
    ranked = p[order] * (m / np.arange(1, m + 1))
    q_sorted = np.minimum.accumulate(ranked[::-1])[::-1]
    q = np.empty(m)
    q[order] = np.minimum(q_sorted, 1.0)
    return q


# ---------------------------------------------------------------- PCA

@dataclass(frozen=True)
class PcaResult:
    loadings: np.ndarray  # constructs x components, correlations
    scores: np.ndarray  # observations x components
    explained_variance: np.ndarray  # eigenvalues of the correlation matrix
    explained_ratio: np.ndarray
    components: np.ndarray  # unit eigenvectors, constructs x components
    mean: np.ndarray
    scale: np.ndarray


def standardize(data):
    data = np.asarray(data, dtype=float)
    mean = data.mean(axis=0)
    scale = data.std(axis=0)
    if np.any(scale == 0.0):
        bad = [int(i) for i in np.flatnonzero(scale == 0.0)]
        raise DegenerateMatrix(f"constant column(s) {bad}")
    return (data - mean) / scale, mean, scale


def pca(data, n_components=None, rotation=None):
    """PCA on the correlation matrix.

    Each component's sign is fixed so its largest-magnitude loading is
    positive. Loadings are construct-component correlations. With
    ``rotation="varimax"`` the retained loadings are rotated and reordered by
    explained variance; scores and eigenvalues stay unrotated.
    """
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or data.shape[0] < 2:
        raise DegenerateMatrix("pca needs a 2-D matrix with at least two rows")
    n, p = data.shape
    if n_components is None:
        n_components = p
    if not 1 <= n_components <= p:
        raise ValueError(f"n_components must be in [1, {p}]")
    z, mean, scale = standardize(data)
    _, s, vt = np.linalg.svd(z / math.sqrt(n), full_matrices=True)
    eig = np.zeros(p)
    eig[: s.size] = s ** 2
    v = vt.T
    for k in range(p):
        col = v[:, k]
        if col[np.argmax(np.abs(col))] < 0:
            v[:, k] = -col
    v = v[:, :n_components]
    eig = eig[:n_components]
    loadings = v * np.sqrt(eig)
    if rotation == "varimax":
        loadings, _ = varimax(loadings)
        order = np.argsort(-np.sum(loadings ** 2, axis=0), kind="mergesort")
        loadings = loadings[:, order]
        for k in range(loadings.shape[1]):
            col = loadings[:, k]
            if col[np.argmax(np.abs(col))] < 0:
                loadings[:, k] = -col
    elif rotation is not None:
        raise ValueError(f"unknown rotation {rotation!r}")
    return PcaResult(
        loadings=loadings,
        scores=z @ v,
        explained_variance=eig,
        explained_ratio=eig / p,
        components=v,
        mean=mean,
        scale=scale,
    )


def varimax(loadings, max_iter=500, tol=1e-10):
    """Orthogonal varimax rotation of a loading matrix."""
    lam = np.asarray(loadings, dtype=float)
    p, k = lam.shape
    if k < 2:
        return lam.copy(), np.eye(k)
    rot = np.eye(k)
    crit = 0.0
    for _ in range(max_iter):
        lr = lam @ rot
        u, s, vt = np.linalg.svd(lam.T @ (lr ** 3 - lr @ np.diag(np.sum(lr ** 2, axis=0)) / p))
        rot = u @ vt
        new_crit = float(np.sum(s))
        if new_crit - crit < tol * max(new_crit, 1.0):
            break
        crit = new_crit
    return lam @ rot, rot
