import os

import pytest

from entrainkit.config import GROUP_FAMILIES, RunConfig, config_to_text, load_config, parse_config
from entrainkit.errors import InvalidConfig
from entrainkit.pcs import PCS_CONSTRUCTS


def test_defaults_match_study_parameters():
    cfg = RunConfig()
    assert cfg.pause_threshold_s == 0.6 and cfg.window_s == 5.0 and cfg.k_baseline == 10
    assert (cfg.low_threshold, cfg.high_threshold) == (0.6, 0.9)
    assert cfg.retained_constructs == tuple(PCS_CONSTRUCTS) and len(cfg.retained_constructs) == 11
    assert cfg.group_tests == GROUP_FAMILIES


def test_parse_values_and_comments(tmp_path):
    text = """
    # a comment
    seed = 7
    window_s = 2.5   # trailing comment
    use_cache = false
    formats = csv
    group_tests = turn, au
    output_dir = results
    """
    cfg = parse_config(text, base_dir=str(tmp_path))
    assert cfg.seed == 7 and cfg.window_s == 2.5 and cfg.use_cache is False
    assert cfg.formats == ("csv",) and cfg.group_tests == ("turn", "au")
    assert cfg.output_dir == os.path.join(str(tmp_path), "results")
    assert cfg.corpus_root == str(tmp_path)


@pytest.mark.parametrize("text", [
    "colour = blue", "seed = 1\nseed = 2", "seed", "seed = one", "low_threshold = 0.95",
    "group_tests = turn, gaze", "formats = xml", "jobs = 0", "label_rule = quantile",
])
def test_rejects_bad_config(text):
    with pytest.raises(InvalidConfig):
        parse_config(text)


def test_overrides_and_round_trip(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("seed = 3\njobs = 2\n")
    cfg = load_config(str(path), seed=9, jobs=None)
    assert cfg.seed == 9 and cfg.jobs == 2
    again = parse_config(config_to_text(cfg), base_dir=str(tmp_path))
    assert again == cfg


def test_cache_dir_and_params():
    cfg = RunConfig(output_dir="/tmp/out")
    assert cfg.resolved_cache_dir == "/tmp/out/.cache"
    assert set(cfg.analysis_params()) == {"k_baseline", "pause_threshold_s", "seed", "window_s"}
