"""Run configuration read from a flat ``key = value`` file."""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields, replace
from typing import Optional, Tuple

from . import entrainment, pcs, turns
from .errors import InvalidConfig

GROUP_FAMILIES = ("turn", "pause", "count", "f0", "intensity", "au")


@dataclass(frozen=True)
class RunConfig:
    corpus_root: str = "."
    manifest: str = "manifest.csv"
    surveys: str = "surveys.csv"
    pcs_csv: str = ""  # precomputed labels; overrides surveys when set
    output_dir: str = "out"
    cache_dir: str = ""  # defaults to <output_dir>/.cache
    pause_threshold_s: float = turns.PAUSE_THRESHOLD_S
    window_s: float = entrainment.WINDOW_S
    k_baseline: int = entrainment.K_BASELINE
    low_threshold: float = pcs.LOW_THRESHOLD
    high_threshold: float = pcs.HIGH_THRESHOLD
    label_rule: str = "fixed"
    conversation_rule: str = "mean"
    retained_constructs: Tuple[str, ...] = tuple(pcs.PCS_CONSTRUCTS)
    group_tests: Tuple[str, ...] = GROUP_FAMILIES
    formats: Tuple[str, ...] = ("csv", "json")
    seed: int = 0
    jobs: int = 1
    use_cache: bool = True

    def validate(self):
        problems = []
        if self.pause_threshold_s < 0:
            problems.append("pause_threshold_s must be >= 0")
        if self.window_s <= 0:
            problems.append("window_s must be > 0")
        if self.k_baseline < 1:
            problems.append("k_baseline must be >= 1")
        if not 0.0 <= self.low_threshold < self.high_threshold <= 1.0:
            problems.append("need 0 <= low_threshold < high_threshold <= 1")
        if self.label_rule not in ("fixed", "median_sd"):
            problems.append("label_rule must be fixed or median_sd")
        if self.conversation_rule not in ("mean", "min"):
            problems.append("conversation_rule must be mean or min")
        unknown = set(self.group_tests) - set(GROUP_FAMILIES)
        if unknown:
            problems.append(f"unknown group_tests: {', '.join(sorted(unknown))}")
        bad_formats = set(self.formats) - {"csv", "json"}
        if bad_formats:
            problems.append(f"unknown formats: {', '.join(sorted(bad_formats))}")
        if self.jobs < 1:
            problems.append("jobs must be >= 1")
        if problems:
            raise InvalidConfig("; ".join(problems))
        return self

    def path(self, name):
        """Resolve a corpus-relative path."""
        return name if os.path.isabs(name) else os.path.join(self.corpus_root, name)

    @property
    def resolved_cache_dir(self):
        return self.cache_dir or os.path.join(self.output_dir, ".cache")

    def analysis_params(self):
        """Parameters that change per-conversation results (part of the cache key)."""
        return {
            "k_baseline": self.k_baseline,
            "pause_threshold_s": self.pause_threshold_s,
            "seed": self.seed,
            "window_s": self.window_s,
        }

    def echo(self):
        """Flat ``{key: text}`` view for report headers."""
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            out[f.name] = ",".join(value) if isinstance(value, tuple) else str(value)
        return out


def _convert(name, raw, default):
    raw = raw.strip()
    try:
        if isinstance(default, bool):
            lowered = raw.lower()
            if lowered not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return lowered in ("true", "1", "yes")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
    except ValueError:
        raise InvalidConfig(f"{name}: cannot parse {raw!r}") from None
    if isinstance(default, tuple):
        return tuple(part.strip() for part in raw.split(",") if part.strip())
    return raw


def parse_config(text, base_dir=".", **overrides) -> RunConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment, unknown keys are errors.

    Relative paths are taken relative to ``base_dir`` (the config file's folder).
    """
    defaults = RunConfig()
    known = {f.name for f in fields(RunConfig)}
    values = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidConfig(f"line {line_no}: expected key = value")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in known:
            raise InvalidConfig(f"line {line_no}: unknown key {key!r}")
        if key in values:
            raise InvalidConfig(f"line {line_no}: duplicate key {key!r}")
        values[key] = _convert(key, raw, getattr(defaults, key))
    values.setdefault("output_dir", defaults.output_dir)
    for key in ("corpus_root", "output_dir", "cache_dir"):
        if values.get(key) and not os.path.isabs(values[key]):
            values[key] = os.path.normpath(os.path.join(base_dir, values[key]))
    values.setdefault("corpus_root", base_dir)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return replace(defaults, **values).validate()


def load_config(path, **overrides) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_config(text, base_dir=os.path.dirname(os.path.abspath(path)), **overrides)


def config_to_text(cfg: RunConfig) -> str:
    return "".join(f"{k} = {v}\n" for k, v in sorted(cfg.echo().items()))
