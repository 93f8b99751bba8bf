import numpy as np
import pytest

from tdsv.config import parse_config
from tdsv.corpus import gen_synth_corpus

TINY_DOC = {
    "corpus": {
        "n_target_speakers": 4,
        "n_ubm_speakers": 6,
        "n_phrases": 2,
        "n_wrong_phrases": 1,
        "sessions": 2,
        "n_test_per_phrase": 1,
        "seed": 77,
    },
    "ubm": {"k": 8, "max_iterations": 8},
    "augment": {"systems": ["b", "f"]},
    "multi_condition": {"systems": ["a", "b", "f"]},
    "fusion": [{"systems": ["a", "b", "f"], "methods": ["maximum", "average"]}],
    "noise": {"snr_db": [5.0]},
}


@pytest.fixture(scope="session")
def tiny_root(tmp_path_factory):
    """A small synthetic corpus shared (read-only) across test modules."""
    root = tmp_path_factory.mktemp("tiny-corpus")
    cfg = parse_config(TINY_DOC, base_dir=root)
    gen_synth_corpus(cfg.corpus_dir, cfg.corpus)
    return root


@pytest.fixture()
def tiny_cfg(tiny_root, tmp_path):
    """Config over the shared corpus, with a test-private output dir."""
    cfg = parse_config(TINY_DOC, base_dir=tiny_root)
    cfg.output_dir = tmp_path / "out"
    return cfg


@pytest.fixture()
def rng():
    return np.random.default_rng(20260810)
