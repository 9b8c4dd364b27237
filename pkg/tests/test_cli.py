import json
import os
import subprocess
import sys

import pytest

from entrainkit.cli import EXIT_ERROR, main
from entrainkit.corpus import surveys_to_csv
from entrainkit.synth import block_model_surveys


@pytest.fixture(scope="module")
def generated(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    corpus = root / "corpus"
    assert main(["--seed", "1", "synth", "generate", "--contrast", "--n", "2", "--turns", "14",
                 "--out", str(corpus)]) == 0
    (corpus / "run.cfg").write_text("output_dir = out\n")
    return corpus


def test_generate_writes_layout(generated):
    manifest = (generated / "manifest.csv").read_text().splitlines()
    assert len(manifest) == 5
    assert (generated / "surveys.csv").exists()


def test_analyze_then_report(generated, tmp_path, capsys):
    assert main(["analyze", "--config", str(generated / "run.cfg"), "--out", str(tmp_path / "a")]) == 0
    written = capsys.readouterr().out.split()
    assert any(p.endswith("tables.md") for p in written)
    first = (tmp_path / "a" / "group_tests.csv").read_bytes()

    assert main(["analyze", "--config", str(generated / "run.cfg"), "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "b" / "group_tests.csv").read_bytes() == first

    assert main(["report", "--bundle", str(tmp_path / "a"), "--format", "json",
                 "--out", str(tmp_path / "c")]) == 0
    assert (tmp_path / "c" / "report.json").read_bytes() == (tmp_path / "a" / "report.json").read_bytes()
    doc = json.loads((tmp_path / "c" / "report.json").read_text())
    assert doc["header"]["seed"] == "0"


def test_seed_flag_reaches_header(generated, tmp_path):
    assert main(["--seed", "5", "analyze", "--config", str(generated / "run.cfg"),
                 "--out", str(tmp_path)]) == 0
    assert "# seed=5" in (tmp_path / "proximity.csv").read_text().splitlines()


def test_pcs_fit_and_score(tmp_path, capsys):
    surveys = tmp_path / "surveys.csv"
    surveys.write_text(surveys_to_csv(block_model_surveys(n_conversations=60, seed=2)))
    model = tmp_path / "model.json"
    assert main(["pcs", "fit", "--surveys", str(surveys), "--out", str(model)]) == 0
    assert "retained 11 constructs" in capsys.readouterr().err
    out = tmp_path / "pcs.csv"
    assert main(["pcs", "score", "--surveys", str(surveys), "--model", str(model),
                 "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "conversation_id,participant_id,pcs,conversation_pcs,label"
    assert len(lines) == 121


def test_pcs_fit_too_few(tmp_path, capsys):
    surveys = tmp_path / "surveys.csv"
    surveys.write_text(surveys_to_csv(block_model_surveys(n_conversations=10, seed=2)))
    assert main(["pcs", "fit", "--surveys", str(surveys)]) == EXIT_ERROR
    assert "TooFewResponses" in capsys.readouterr().err


def test_errors_exit_3(tmp_path, capsys):
    assert main(["analyze", "--config", str(tmp_path / "none.cfg")]) == EXIT_ERROR
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = blue\n")
    assert main(["analyze", "--config", str(bad)]) == EXIT_ERROR
    assert "InvalidConfig" in capsys.readouterr().err
    assert main(["--jobs", "0", "selftest"]) == EXIT_ERROR


def test_stats_selftest(capsys):
    assert main(["stats", "selftest"]) == 0
    assert capsys.readouterr().out.count("PASS") == 6


def test_synth_oracle_small(capsys):
    status = main(["synth", "oracle", "--n", "2"])
    lines = capsys.readouterr().out.splitlines()
    assert status in (0, 1)
    assert [l.split()[1] for l in lines][:3] == ["null_delta:", "strong_delta:", "monotone_delta:"]


def test_console_script_help():
    proc = subprocess.run([sys.executable, "-m", "entrainkit.cli", "--help"],
                          capture_output=True, text=True, check=True)
    for cmd in ("analyze", "report", "pcs", "synth", "selftest", "stats"):
        assert cmd in proc.stdout
