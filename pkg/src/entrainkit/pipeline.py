"""End-to-end run: manifest -> per-conversation metrics -> PCS labels -> group tests."""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Sequence

import numpy as np

from . import __version__, pcs, stats
from .acoustic import PITCH_DEVIATION_NOTICE
from .analysis import ConversationResult, analyze_conversation, conversation_from_bytes
from .config import RunConfig
from .corpus import AU_IDS, parse_surveys
from .entrainment import FEATURE_STATS
from .errors import EntrainError, LayoutError, NoLabeledConversations
from .synth import MANIFEST_COLUMNS

GROUP_1, GROUP_2 = "LSC", "HSC"  # U, z and t are reported for group 1 against group 2

# Table-1 layout: (family, feature label, statistic, per-conversation column or delta key)
RAW_ROWS = (
    ("turn", "turn_duration", "min", "turn_min"),
    ("turn", "turn_duration", "max", "turn_max"),
    ("turn", "turn_duration", "mean", "turn_mean"),
    ("turn", "turn_duration", "total", "turn_total"),
    ("pause", "pause_duration", "min", "pause_min"),
    ("pause", "pause_duration", "max", "pause_max"),
    ("pause", "pause_duration", "mean", "pause_mean"),
    ("pause", "pause_duration", "total", "pause_total"),
    ("count", "turn_count", "count", "turn_count"),
    ("count", "pause_count", "count", "pause_count"),
)
DELTA_ROWS = tuple((f, f, s, f"{f}:{s}") for f, s in FEATURE_STATS)

GROUP_TEST_COLUMNS = (
    "family", "feature", "statistic", "path", "test", "n_lsc", "n_hsc",
    "value", "z", "df", "p", "q", "effect_size",
    "lsc_mean", "lsc_sd", "hsc_mean", "hsc_sd", "note",
)


@dataclass(frozen=True)
class ManifestEntry:
    conversation_id: str
    clean: bool
    transcript_path: str
    audio_a: str = ""
    audio_b: str = ""
    fau_a: str = ""
    fau_b: str = ""


@dataclass
class ReportBundle:
    header: Dict[str, str]
    turn_pause: List[dict]
    proximity: List[dict]
    synchrony: List[dict]
    pcs: List[dict]
    group_tests: List[dict]
    excluded: Dict[str, str] = field(default_factory=dict)

    def to_json(self):
        return json.dumps(_jsonable(asdict(self)), indent=1, sort_keys=True, allow_nan=False) + "\n"

    @classmethod
    def from_json(cls, text):
        raw = json.loads(text)
        for key in ("turn_pause", "proximity", "synchrony", "pcs", "group_tests"):
            raw[key] = [{k: (float("nan") if v is None and k not in _TEXT_KEYS else v)
                         for k, v in row.items()} for row in raw[key]]
        return cls(**raw)


_TEXT_KEYS = {"conversation_id", "participant_id", "label", "feature", "statistic", "family",
              "path", "test", "note", "au", "flag"}


def _jsonable(obj):
    if isinstance(obj, float):
        return None if not math.isfinite(obj) else obj
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    return obj


# ---------------------------------------------------------------- ingestion

def read_manifest(path) -> List[ManifestEntry]:
    if not os.path.isfile(path):
        raise LayoutError(f"manifest not found: {path}")
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(line for line in fh if not line.startswith("#"))
        missing = [c for c in MANIFEST_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise LayoutError(f"manifest lacks columns: {', '.join(missing)}")
        entries = []
        for row in reader:
            flag = (row["clean"] or "").strip()
            if flag not in ("0", "1"):
                raise LayoutError(f"{row['conversation_id']}: clean must be 0 or 1, got {flag!r}")
            entries.append(ManifestEntry(
                conversation_id=row["conversation_id"].strip(),
                clean=flag == "1",
                **{c: (row[c] or "").strip() for c in MANIFEST_COLUMNS[2:]},
            ))
    ids = [e.conversation_id for e in entries]
    if len(set(ids)) != len(ids):
        raise LayoutError("duplicate conversation_id in manifest")
    return entries


def _speaker_of(name, suffixes):
    base = os.path.basename(name)
    for suffix in suffixes:
        if base.lower().endswith(suffix):
            stem = base[: -len(suffix)]
            if "." in stem:
                return stem.rsplit(".", 1)[1]
    raise LayoutError(f"cannot read a speaker id from file name {name!r}")


def read_entry(cfg: RunConfig, entry: ManifestEntry):
    """Raw file contents for one conversation plus their content digest."""
    digest = hashlib.sha256()

    def grab(name, binary):
        with open(cfg.path(name), "rb") as fh:
            data = fh.read()
        digest.update(name.encode() + b"\0" + data + b"\0")
        return data if binary else data.decode("utf-8")

    transcript = grab(entry.transcript_path, False)
    audio = {_speaker_of(n, (".wav",)): grab(n, True) for n in (entry.audio_a, entry.audio_b) if n}
    fau = {_speaker_of(n, (".fau.csv", ".csv")): grab(n, False) for n in (entry.fau_a, entry.fau_b) if n}
    return transcript, audio, fau, digest.hexdigest()


def cache_key(content_digest, params):
    blob = json.dumps({"content": content_digest, "params": params, "version": __version__},
                      sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


def _analyze_entry(args):
    """Worker: returns (conversation_id, result dict or None, error text)."""
    cfg, entry = args
    try:
        transcript, audio, fau, digest = read_entry(cfg, entry)
    except (OSError, UnicodeDecodeError, LayoutError) as exc:
        return entry.conversation_id, None, f"unreadable: {exc}"
    params = cfg.analysis_params()
    key = cache_key(digest, params)
    cache_path = os.path.join(cfg.resolved_cache_dir, f"{key}.json")
    if cfg.use_cache and os.path.isfile(cache_path):
        with open(cache_path, encoding="utf-8") as fh:
            return entry.conversation_id, json.load(fh), ""
    try:
        conv = conversation_from_bytes(entry.conversation_id, transcript, audio, fau)
        result = analyze_conversation(
            conv, seed=cfg.seed, pause_threshold_s=cfg.pause_threshold_s,
            window_s=cfg.window_s, k_baseline=cfg.k_baseline,
        ).to_dict()
    except (EntrainError, ValueError) as exc:
        return entry.conversation_id, None, f"{type(exc).__name__}: {exc}"
    text = json.dumps(_jsonable(result), sort_keys=True)
    if cfg.use_cache:
        os.makedirs(cfg.resolved_cache_dir, exist_ok=True)
        tmp = f"{cache_path}.{os.getpid()}.tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, cache_path)  # atomic, so an interrupted run leaves no partial entry
    # fresh and cached results take the same JSON round trip (NaN -> None)
    return entry.conversation_id, json.loads(text), ""


def analyze_corpus(cfg: RunConfig, entries: Sequence[ManifestEntry]):
    """Per-conversation results plus ``{conversation_id: reason}`` for exclusions."""
    excluded = {e.conversation_id: "clean=0" for e in entries if not e.clean}
    todo = [(cfg, e) for e in entries if e.clean]
    if cfg.jobs > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            outcomes = list(pool.map(_analyze_entry, todo))
    else:
        outcomes = [_analyze_entry(job) for job in todo]
    results = {}
    for cid, result, error in outcomes:
        if result is None:
            excluded[cid] = error
        else:
            results[cid] = ConversationResult.from_dict(result)
    return dict(sorted(results.items())), dict(sorted(excluded.items()))


# ---------------------------------------------------------------- PCS labels

def pcs_records(cfg: RunConfig):
    if cfg.pcs_csv:
        path = cfg.path(cfg.pcs_csv)
        if not os.path.isfile(path):
            raise LayoutError(f"pcs file not found: {path}")
        with open(path, encoding="utf-8") as fh:
            return pcs.pcs_from_csv(fh.read())
    path = cfg.path(cfg.surveys)
    if not os.path.isfile(path):
        raise LayoutError(f"survey file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        responses = parse_surveys(fh.read(), required=cfg.retained_constructs)
    records = pcs.score_pcs(responses, cfg.retained_constructs, cfg.conversation_rule)
    labeled, _ = pcs.label_groups(records, cfg.low_threshold, cfg.high_threshold, cfg.label_rule)
    return labeled


# ---------------------------------------------------------------- group tests

def _group_row(family, feature, statistic, path, test, lsc, hsc):
    row = dict.fromkeys(GROUP_TEST_COLUMNS, float("nan"))
    row.update(family=family, feature=feature, statistic=statistic, path=path, test=test,
               n_lsc=len(lsc), n_hsc=len(hsc), note="")
    try:
        if test == "mann_whitney":
            res = stats.mann_whitney_u(lsc, hsc)
            row["effect_size"] = stats.cliffs_delta(lsc, hsc)
        else:
            res = stats.welch_t(lsc, hsc)
            pooled = math.sqrt((np.var(lsc, ddof=1) + np.var(hsc, ddof=1)) / 2.0)
            row["effect_size"] = (np.mean(lsc) - np.mean(hsc)) / pooled if pooled > 0 else float("nan")
        row.update(value=res.statistic, z=res.z if res.z is not None else float("nan"),
                   df=res.df if res.df is not None else float("nan"), p=res.p)
    except EntrainError as exc:
        row["note"] = f"{type(exc).__name__}: {exc}"
    for prefix, sample in (("lsc", lsc), ("hsc", hsc)):
        if len(sample):
            row[f"{prefix}_mean"] = float(np.mean(sample))
            row[f"{prefix}_sd"] = float(np.std(sample, ddof=1)) if len(sample) > 1 else float("nan")
    return row


def group_tests(results: Dict[str, ConversationResult], labels: Dict[str, str],
                families: Sequence[str]):
    """LSC-vs-HSC comparisons with BH q values computed inside each family.

    Turn and pause rows test raw per-conversation statistics; F0 and
    intensity rows test per-conversation Cliff's delta; AU rows test
    per-conversation mean Fisher z with Welch's t.
    """
    groups = {g: [cid for cid in sorted(results) if labels.get(cid) == g] for g in (GROUP_1, GROUP_2)}
    if not groups[GROUP_1] or not groups[GROUP_2]:
        raise NoLabeledConversations(
            f"need conversations in both groups, have {len(groups[GROUP_1])} LSC "
            f"and {len(groups[GROUP_2])} HSC")

    def sample(group, getter):
        vals = [getter(results[cid]) for cid in groups[group]]
        return np.array([v for v in vals if v is not None and math.isfinite(v)], dtype=float)

    rows = []
    for family, feature, statistic, key in RAW_ROWS:
        if family in families:
            get = lambda r, key=key: float(r.turn_row[key])
            rows.append(_group_row(family, feature, statistic, "raw", "mann_whitney",
                                   sample(GROUP_1, get), sample(GROUP_2, get)))
    for family, feature, statistic, key in DELTA_ROWS:
        if family in families:
            get = lambda r, key=key: r.proximity.get(key, {}).get("delta")
            rows.append(_group_row(family, feature, statistic, "delta_mwu", "mann_whitney",
                                   sample(GROUP_1, get), sample(GROUP_2, get)))
    if "au" in families:
        au_rows = []
        for au in AU_IDS:
            get = lambda r, au=au: r.synchrony.get(au, {}).get("mean_z")
            au_rows.append(_group_row("au", au, "mean_z", "welch_z", "welch_t",
                                      sample(GROUP_1, get), sample(GROUP_2, get)))
        au_rows.sort(key=lambda r: (not math.isfinite(r["p"]), r["p"], r["feature"]))
        rows.extend(au_rows)

    for family in dict.fromkeys(r["family"] for r in rows):
        members = [r for r in rows if r["family"] == family and math.isfinite(r["p"])]
        if members:
            for r, q in zip(members, stats.bh_fdr([r["p"] for r in members])):
                r["q"] = float(q)
    return rows


# ---------------------------------------------------------------- run

def run_header(cfg: RunConfig, excluded: Dict[str, str]):
    header = {"version": __version__, "seed": str(cfg.seed), "notice": PITCH_DEVIATION_NOTICE,
              "pcs_bounding": "cohort min-max rescaling of the mean construct z-score"}
    for key, value in cfg.echo().items():
        if key not in ("seed", "jobs", "use_cache", "cache_dir", "output_dir"):
            header[f"param.{key}"] = value
    header["excluded"] = ";".join(f"{cid}:{why}" for cid, why in excluded.items()) or "none"
    return header


def run_analyze(cfg: RunConfig) -> ReportBundle:
    cfg.validate()
    if not os.path.isdir(cfg.corpus_root):
        raise LayoutError(f"corpus root not found: {cfg.corpus_root}")
    entries = read_manifest(cfg.path(cfg.manifest))
    if len(entries) < 2:
        raise LayoutError("corpus needs at least two conversations")
    results, excluded = analyze_corpus(cfg, entries)
    records = pcs_records(cfg)
    labels = pcs.conversation_labels(records)
    tests = group_tests(results, labels, cfg.group_tests)

    turn_rows = [results[cid].turn_row for cid in results]
    prox_rows, sync_rows = [], []
    for cid, res in results.items():
        for feature, statistic in FEATURE_STATS:
            entry = res.proximity.get(f"{feature}:{statistic}")
            if entry is not None:
                prox_rows.append({"conversation_id": cid, "feature": feature, "statistic": statistic,
                                  "n_pairs": entry["n_pairs"], "t": entry["t"], "p": entry["p"],
                                  "delta": entry["delta"]})
        for au in AU_IDS:
            entry = res.synchrony.get(au)
            if entry is not None:
                sync_rows.append({"conversation_id": cid, "au": au,
                                  "n_windows": entry["n_windows"], "mean_z": entry["mean_z"]})
    pcs_rows = [{"conversation_id": r.conversation_id, "participant_id": r.participant,
                 "pcs": r.pcs, "conversation_pcs": r.conversation_pcs, "label": r.label}
                for r in sorted(records, key=lambda r: (r.conversation_id, r.participant))]
    return ReportBundle(
        header=run_header(cfg, excluded),
        turn_pause=turn_rows,
        proximity=prox_rows,
        synchrony=sync_rows,
        pcs=pcs_rows,
        group_tests=tests,
        excluded=excluded,
    )
