"""Perceived conversational success (PCS) from post-conversation surveys."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import stats
from .corpus import ALL_CONSTRUCTS, PCS_CONSTRUCTS
from .errors import (
    DegenerateMatrix,
    MissingConstruct,
    SingleResponseCohort,
    TooFewResponses,
)

LOW_THRESHOLD = 0.6
HIGH_THRESHOLD = 0.9
LOADING_CUTOFF = 0.4
MIN_FIT_RESPONSES = 50

LABELS = ("LSC", "HSC", "excluded")
PCS_COLUMNS = ("conversation_id", "participant_id", "pcs", "conversation_pcs", "label")


@dataclass(frozen=True)
class PcsRecord:
    participant: str
    conversation_id: str
    pcs: float
    conversation_pcs: float = float("nan")
    label: str = "excluded"


@dataclass
class PcsModel:
    constructs: List[str]
    loadings: List[List[float]]  # constructs x 2 (rotated)
    retained: List[str]
    eigenvalues: List[float]
    exploratory_dims: int
    n_responses: int
    seed: int = 0
    bounds: Dict[str, float] = field(default_factory=dict)

    def to_json(self):
        return json.dumps(self.__dict__, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text):
        return cls(**json.loads(text))


def response_matrix(responses, constructs):
    """Rows for responses that have every construct; returns (matrix, kept)."""
    rows, kept = [], []
    for r in responses:
        if all(c in r.ratings for c in constructs):
            rows.append([r.ratings[c] for c in constructs])
            kept.append(r)
    return np.array(rows, dtype=float).reshape(len(rows), len(constructs)), kept


def fit_pcs_model(responses, constructs=tuple(ALL_CONSTRUCTS), n_components=2,
                  cutoff=LOADING_CUTOFF, min_responses=MIN_FIT_RESPONSES, seed=0):
    """Exploratory PCA, then a varimax-rotated two-component PCA.

    Constructs loading above ``cutoff`` on the rotated component that
    explains the most variance become the PCS construct set.
    """
    constructs = list(constructs)
    data, _ = response_matrix(responses, constructs)
    if data.shape[0] < min_responses:
        raise TooFewResponses(f"{data.shape[0]} complete responses, need {min_responses}")
    full = stats.pca(data)
    if full.explained_variance[0] >= len(constructs) * (1.0 - 1e-9):
        raise DegenerateMatrix("all constructs are perfectly collinear")
    exploratory = int(np.sum([
        (full.explained_variance[k] > 1.0) and np.any(np.abs(full.loadings[:, k]) > cutoff)
        for k in range(len(constructs))
    ]))
    rotated = stats.pca(data, n_components, rotation="varimax").loadings
    retained = [c for c, l in zip(constructs, rotated[:, 0]) if abs(l) > cutoff]
    return PcsModel(
        constructs=constructs,
        loadings=rotated.tolist(),
        retained=retained,
        eigenvalues=full.explained_variance.tolist(),
        exploratory_dims=exploratory,
        n_responses=int(data.shape[0]),
        seed=seed,
    )


def score_pcs(responses, retained=tuple(PCS_CONSTRUCTS), conversation_rule="mean"):
    """Cohort z-score per construct, average, then min-max rescale to [0, 1].

    ``conversation_rule`` combines the two participants ("mean" or "min").
    """
    retained = list(retained)
    if len(responses) < 2:
        raise SingleResponseCohort("need at least two responses to z-score")
    for r in responses:
        missing = [c for c in retained if c not in r.ratings]
        if missing:
            raise MissingConstruct(f"{r.conversation_id}/{r.participant} lacks {', '.join(missing)}")
    data = np.array([[r.ratings[c] for c in retained] for r in responses], dtype=float)
    z, _, _ = stats.standardize(data)
    mean_z = z.mean(axis=1)
    lo, hi = float(mean_z.min()), float(mean_z.max())
    if hi > lo:
        pcs = (mean_z - lo) / (hi - lo)
    else:
        pcs = np.full(mean_z.size, 0.5)

    by_conv: Dict[str, List[float]] = {}
    for r, s in zip(responses, pcs):
        by_conv.setdefault(r.conversation_id, []).append(float(s))
    combine = {"mean": lambda v: float(np.mean(v)), "min": lambda v: float(np.min(v))}[conversation_rule]
    conv_pcs = {c: combine(v) for c, v in by_conv.items()}
    return [
        PcsRecord(participant=r.participant, conversation_id=r.conversation_id,
                  pcs=float(s), conversation_pcs=conv_pcs[r.conversation_id])
        for r, s in zip(responses, pcs)
    ]


def label_of(conversation_pcs, low=LOW_THRESHOLD, high=HIGH_THRESHOLD):
    if conversation_pcs <= low:
        return "LSC"
    if conversation_pcs >= high:
        return "HSC"
    return "excluded"


def median_sd_thresholds(records):
    """Alternative cutoffs: median -/+ one SD of the per-conversation PCS."""
    conv = {}
    for r in records:
        conv[r.conversation_id] = r.conversation_pcs
    vals = np.array(list(conv.values()))
    med = float(np.median(vals))
    sd = float(np.std(vals, ddof=1)) if vals.size > 1 else 0.0
    return med - sd, med + sd


def label_groups(records, low=LOW_THRESHOLD, high=HIGH_THRESHOLD, rule="fixed"):
    """Attach LSC/HSC/excluded labels; returns (records, per-label conversation counts)."""
    if rule == "median_sd":
        low, high = median_sd_thresholds(records)
    elif rule != "fixed":
        raise ValueError(f"unknown label rule {rule!r}")
    out = [replace(r, label=label_of(r.conversation_pcs, low, high)) for r in records]
    counts = {label: 0 for label in LABELS}
    seen = set()
    for r in out:
        if r.conversation_id not in seen:
            seen.add(r.conversation_id)
            counts[r.label] += 1
    return out, counts


def conversation_labels(records):
    return {r.conversation_id: r.label for r in records}


def pcs_to_csv(records):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(PCS_COLUMNS)
    for r in sorted(records, key=lambda r: (r.conversation_id, r.participant)):
        writer.writerow([r.conversation_id, r.participant, f"{r.pcs:.3f}",
                         f"{r.conversation_pcs:.3f}", r.label])
    return buf.getvalue()


def pcs_from_csv(raw):
    rows = csv.DictReader(line for line in io.StringIO(raw) if not line.startswith("#"))
    return [
        PcsRecord(participant=row["participant_id"], conversation_id=row["conversation_id"],
                  pcs=float(row["pcs"]), conversation_pcs=float(row["conversation_pcs"]),
                  label=row["label"])
        for row in rows
    ]
