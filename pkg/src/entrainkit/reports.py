"""Byte-stable CSV/JSON/markdown renderings of a :class:`ReportBundle`.

Every p and q value is printed in scientific notation with three
significant digits ("1.18e-08"); other reals use three fixed decimals.
Missing values print as ``NA`` in CSV and ``null`` in JSON.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from typing import Iterable, Sequence

from .pipeline import GROUP_TEST_COLUMNS, ReportBundle
from .turns import ROW_COLUMNS

PROXIMITY_COLUMNS = ("conversation_id", "feature", "statistic", "n_pairs", "t", "p", "delta")
SYNCHRONY_COLUMNS = ("conversation_id", "au", "n_windows", "mean_z")
PCS_REPORT_COLUMNS = ("conversation_id", "participant_id", "pcs", "conversation_pcs", "label")

TABLES = {
    "turn_pause": ROW_COLUMNS,
    "proximity": PROXIMITY_COLUMNS,
    "synchrony": SYNCHRONY_COLUMNS,
    "pcs": PCS_REPORT_COLUMNS,
    "group_tests": GROUP_TEST_COLUMNS,
}
P_COLUMNS = {"p", "q"}
INT_COLUMNS = {"n_pairs", "n_windows", "turn_count", "pause_count", "n_lsc", "n_hsc"}

TABLE1_FEATURES = (
    ("turn_duration", "Turn duration"),
    ("pause_duration", "Pause duration"),
    ("f0", "F0"),
    ("intensity", "Intensity"),
)
TABLE1_STATS = ("min", "max", "mean", "total")


def format_p(p):
    """Three significant digits in scientific notation: 1.18e-8 -> '1.18e-08'."""
    if p is None or not math.isfinite(p):
        return "NA"
    return f"{p:.2e}"


def format_value(column, value):
    if value is None:
        return "NA"
    if isinstance(value, str):
        return value
    if isinstance(value, float) and not math.isfinite(value):
        return "NA"
    if column in P_COLUMNS:
        return format_p(value)
    if column in INT_COLUMNS:
        return str(int(value))
    return f"{value:.3f}"


def json_value(column, value):
    """The CSV rendering parsed back, so JSON and CSV carry identical numbers."""
    text = format_value(column, value)
    if text == "NA":
        return None
    if isinstance(value, str):
        return value
    return int(text) if column in INT_COLUMNS else float(text)


def header_lines(header):
    return "".join(f"# {key}={str(value).replace(chr(10), ' ')}\n" for key, value in sorted(header.items()))


def table_csv(rows: Iterable[dict], columns: Sequence[str], header=None):
    buf = io.StringIO()
    if header:
        buf.write(header_lines(header))
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(c, row.get(c)) for c in columns])
    return buf.getvalue()


def report_json(bundle: ReportBundle):
    doc = {"header": dict(bundle.header), "excluded": dict(bundle.excluded)}
    for name, columns in TABLES.items():
        doc[name] = [{c: json_value(c, row.get(c)) for c in columns} for row in getattr(bundle, name)]
    return json.dumps(doc, indent=1, sort_keys=True, allow_nan=False) + "\n"


# ---------------------------------------------------------------- markdown tables

def _num(x, digits):
    return "NA" if x is None or not math.isfinite(x) else f"{x:.{digits}f}"


def _u(value):
    return "NA" if value is None or not math.isfinite(value) else f"{value:g}"


def inline_result(row):
    """Inline Mann-Whitney form, e.g. 'U= 545, z= -5.71, p= 1.18e-08'."""
    return f"U= {_u(row['value'])}, z= {_num(row['z'], 2)}, p= {format_p(row['p'])}"


def _cell(row):
    if row is None:
        return "-"
    mark = "*" if row.get("q") is not None and math.isfinite(row["q"]) and row["q"] < 0.05 else ""
    return (f"{_u(row['value'])}, {_num(row['z'], 3)}, {format_p(row['p'])}, "
            f"{format_p(row.get('q'))}{mark}")


def render_table1(rows):
    index = {(r["feature"], r["statistic"]): r for r in rows}
    out = ["| f | minimum f (U, z, p, q) | maximum f (U, z, p, q) | mean f (U, z, p, q) | total f (U, z, p, q) |",
           "|---|---|---|---|---|"]
    for key, label in TABLE1_FEATURES:
        if not any((key, s) in index for s in TABLE1_STATS):
            continue
        out.append("| " + " | ".join([label] + [_cell(index.get((key, s))) for s in TABLE1_STATS]) + " |")
    return "\n".join(out) + "\n"


def au_rows_by_p(rows):
    au = [r for r in rows if r["family"] == "au"]
    return sorted(au, key=lambda r: (r["p"] is None or not math.isfinite(r["p"]),
                                     r["p"] if r["p"] is not None else 0.0, r["feature"]))


def render_table2(rows):
    au = au_rows_by_p(rows)
    label = "t" if all(r.get("test") == "welch_t" for r in au) else "z"
    out = [f"| FAU | {label} | p | (mu_L, sd_L) | (mu_H, sd_H) |", "|---|---|---|---|---|"]
    for r in au:
        stat = r["value"] if r.get("test") == "welch_t" else r["z"]
        mark = "*" if r["p"] is not None and math.isfinite(r["p"]) and r["p"] < 0.05 else ""
        out.append(f"| {r['feature']} | {_num(stat, 2)} | {format_p(r['p'])}{mark} | "
                   f"({_num(r['lsc_mean'], 2)}, {_num(r['lsc_sd'], 2)}) | "
                   f"({_num(r['hsc_mean'], 2)}, {_num(r['hsc_sd'], 2)}) |")
    return "\n".join(out) + "\n"


def render_tables(rows, header=None):
    """Markdown with Table-1 and Table-2 layouts plus inline count results."""
    parts = []
    if header:
        parts.append("".join(f"<!-- {k}={v} -->\n" for k, v in sorted(header.items())))
    parts.append("## Turn, pause and prosodic-proximity tests (LSC vs HSC)\n\n")
    parts.append(render_table1([r for r in rows if r["family"] in ("turn", "pause", "f0", "intensity")]))
    counts = [r for r in rows if r["family"] == "count"]
    if counts:
        parts.append("\n")
        for r in counts:
            parts.append(f"- {r['feature'].replace('_', ' ')}: {inline_result(r)}\n")
    parts.append("\n## Facial action-unit synchrony (ascending p)\n\n")
    parts.append(render_table2(rows))
    return "".join(parts)


# ---------------------------------------------------------------- files

def emit_reports(bundle: ReportBundle, out_dir, formats=("csv", "json")):
    """Write report files; returns the sorted list of paths written."""
    os.makedirs(out_dir, exist_ok=True)
    written = {}
    if "csv" in formats:
        for name, columns in TABLES.items():
            written[f"{name}.csv"] = table_csv(getattr(bundle, name), columns, bundle.header)
        written["tables.md"] = render_tables(bundle.group_tests, bundle.header)
    if "json" in formats:
        written["report.json"] = report_json(bundle)
    paths = []
    for name, text in sorted(written.items()):
        path = os.path.join(out_dir, name)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        paths.append(path)
    return paths


def save_bundle(bundle: ReportBundle, out_dir):
    """Full-precision bundle that ``report --bundle`` re-renders from."""
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "bundle.json")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(bundle.to_json())
    return path


def load_bundle(bundle_dir):
    path = os.path.join(bundle_dir, "bundle.json")
    with open(path, encoding="utf-8") as fh:
        return ReportBundle.from_json(fh.read())
