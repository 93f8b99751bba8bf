import numpy as np
import pytest

from tdsv.audio import load_manifest, read_wav
from tdsv.config import parse_config
from tdsv.errors import ConfigError, IncompleteError, TdsvError
from tdsv.experiment import (
    enroll_all,
    enrollment_frames_by_system,
    fused_system_id,
    multi_condition_id,
    noise_conditions,
    pooled_frames,
    run_experiment,
    score_trials,
)
from tdsv.features import extract_features
from tdsv.gmm import em_fit, llr_score
from tdsv.trials import evaluate_trials, fuse_score_sets, load_scores, load_trials, report_rows
from .conftest import TINY_DOC


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    """UBM + models over the tiny corpus, shared by the module's tests."""
    root = tmp_path_factory.mktemp("trained")
    cfg = parse_config(TINY_DOC, base_dir=root)
    from tdsv.corpus import gen_synth_corpus
    gen_synth_corpus(cfg.corpus_dir, cfg.corpus)
    ubm_rows = pooled_frames(load_manifest(cfg.ubm_manifest), cfg.frontend)
    ubm, _ = em_fit(ubm_rows, cfg.ubm_k, cfg.em)
    enroll = load_manifest(cfg.enroll_manifest)
    model_set = enroll_all(ubm, enroll, cfg.augment_specs, cfg.map_cfg,
                           cfg.multi_condition, cfg.frontend)
    return cfg, ubm, enroll, model_set


def test_no_augmentations_yields_only_baseline(trained):
    cfg, ubm, enroll, _ = trained
    model_set = enroll_all(ubm, enroll, {}, cfg.map_cfg, frontend=cfg.frontend)
    assert model_set.systems() == ["a"]
    assert len(model_set.speakers()) == cfg.corpus.n_target_speakers


def test_model_count_is_speakers_times_systems(trained):
    cfg, _, _, model_set = trained
    systems = model_set.systems()
    assert systems == ["a", "b", "f", multi_condition_id(cfg.multi_condition)]
    total = sum(len(per) for per in model_set.models.values())
    assert total == cfg.corpus.n_target_speakers * len(systems)


def test_multi_condition_pools_member_frames(trained):
    cfg, _, enroll, _ = trained
    frames = enrollment_frames_by_system(enroll, ["a", "b", "f"], cfg.augment_specs,
                                         cfg.frontend)
    speaker = enroll.speaker_ids()[0]
    member_total = sum(frames[s][speaker].shape[0] for s in cfg.multi_condition)
    pooled = np.vstack([frames[s][speaker] for s in cfg.multi_condition])
    assert pooled.shape[0] == member_total


def test_augmented_systems_use_transformed_data(trained):
    cfg, _, enroll, _ = trained
    frames = enrollment_frames_by_system(enroll, ["a", "b"], cfg.augment_specs,
                                         cfg.frontend)
    speaker = enroll.speaker_ids()[0]
    assert not np.array_equal(frames["a"][speaker], frames["b"][speaker])


def test_baseline_models_independent_of_augmentation_set(trained):
    cfg, ubm, enroll, model_set = trained
    only_a = enroll_all(ubm, enroll, {}, cfg.map_cfg, frontend=cfg.frontend)
    for speaker in only_a.speakers():
        assert np.array_equal(only_a.get(speaker, "a").means,
                              model_set.get(speaker, "a").means)


def test_scores_cover_trials_and_are_pure(trained):
    cfg, ubm, _, model_set = trained
    trial_list = load_trials(cfg.trials_path)
    test_manifest = load_manifest(cfg.test_manifest)
    first = score_trials(model_set, ubm, trial_list, test_manifest, cfg.frontend,
                         systems=["a"])
    second = score_trials(model_set, ubm, trial_list, test_manifest, cfg.frontend,
                          systems=["a"])
    assert len(first["a"].scores) == len(trial_list)
    assert first["a"].scores == second["a"].scores


def test_scores_match_manual_feature_plus_llr_composition(trained):
    cfg, ubm, _, model_set = trained
    trial_list = load_trials(cfg.trials_path)
    test_manifest = load_manifest(cfg.test_manifest)
    scores = score_trials(model_set, ubm, trial_list, test_manifest, cfg.frontend,
                          systems=["a"])["a"]
    by_utt = test_manifest.by_utterance()
    for trial in list(trial_list)[:10]:
        feats = extract_features(read_wav(by_utt[trial.utterance_id].path), cfg.frontend)
        want = llr_score(model_set.get(trial.model_id, "a"), ubm, feats)
        assert scores.get(trial) == want


def test_feature_cache_is_semantically_invisible(trained, tmp_path):
    cfg, ubm, _, model_set = trained
    trial_list = load_trials(cfg.trials_path)
    test_manifest = load_manifest(cfg.test_manifest)
    plain = score_trials(model_set, ubm, trial_list, test_manifest, cfg.frontend,
                         systems=["a"])
    cold = score_trials(model_set, ubm, trial_list, test_manifest, cfg.frontend,
                        systems=["a"], cache_dir=tmp_path)
    warm = score_trials(model_set, ubm, trial_list, test_manifest, cfg.frontend,
                        systems=["a"], cache_dir=tmp_path)
    assert plain["a"].scores == cold["a"].scores  # 0 ulp
    assert cold["a"].scores == warm["a"].scores
    assert any(tmp_path.glob("*.fmx"))


def test_noisy_scoring_changes_scores(trained):
    cfg, ubm, _, model_set = trained
    trial_list = load_trials(cfg.trials_path)
    test_manifest = load_manifest(cfg.test_manifest)
    conditions = noise_conditions(cfg)
    assert [c.condition_id for c in conditions] == ["market-5db", "car-5db"]
    clean = score_trials(model_set, ubm, trial_list, test_manifest, cfg.frontend,
                         systems=["a"])["a"]
    noisy = score_trials(model_set, ubm, trial_list, test_manifest, cfg.frontend,
                         noise=conditions[0], systems=["a"])["a"]
    assert clean.scores != noisy.scores


def test_missing_model_raises_incomplete(trained):
    cfg, ubm, _, model_set = trained
    trial_list = load_trials(cfg.trials_path)
    test_manifest = load_manifest(cfg.test_manifest)
    with pytest.raises(IncompleteError):
        score_trials(model_set, ubm, trial_list, test_manifest, cfg.frontend,
                     systems=["zz"])


def test_trial_utterance_missing_from_manifest(trained):
    from tdsv.trials import Trial, TrialList
    cfg, ubm, _, model_set = trained
    test_manifest = load_manifest(cfg.test_manifest)
    ghost = TrialList([Trial(model_set.speakers()[0], "no-such-utt", "genuine")])
    with pytest.raises(IncompleteError, match="no-such-utt"):
        score_trials(model_set, ubm, ghost, test_manifest, cfg.frontend, systems=["a"])


def test_augmentation_failure_names_the_utterance(trained):
    from tdsv.augment import AugmentSpec
    cfg, ubm, enroll, _ = trained
    specs = {"e": AugmentSpec(kind="impulse_response")}  # no IR provided
    first_utt = enroll.entries[0].utterance_id
    with pytest.raises(TdsvError, match=first_utt):
        enroll_all(ubm, enroll, specs, cfg.map_cfg, frontend=cfg.frontend, ir=None)


def test_run_experiment_emits_full_artifact_tree(tiny_cfg):
    result = run_experiment(tiny_cfg)
    out = tiny_cfg.output_dir
    assert (out / "models" / "ubm.json").exists()
    assert (out / "run_summary.json").exists()
    assert not (out / "STALE").exists()
    assert result.conditions == ["clean", "market-5db", "car-5db"]
    for condition in result.conditions:
        assert (out / "reports" / f"{condition}.tsv").exists()
        labels = [r.label for r in result.reports[condition]]
        assert labels == ["a", "b", "f", "multi-abf",
                          "fuse-maximum-abf", "fuse-average-abf"]
    # one score file per (condition, system) pair
    assert len(result.score_files) == 3 * 6


def test_rerun_is_byte_identical(tiny_cfg):
    first = run_experiment(tiny_cfg)
    snapshot = {p: p.read_bytes()
                for p in sorted(tiny_cfg.output_dir.rglob("*")) if p.is_file()}
    second = run_experiment(tiny_cfg)
    for path, blob in snapshot.items():
        assert path.read_bytes() == blob, path
    assert first.conditions == second.conditions


def test_fusion_from_emitted_files_matches_in_process(tiny_cfg):
    result = run_experiment(tiny_cfg)
    trial_list = load_trials(tiny_cfg.trials_path)
    cond_dir = tiny_cfg.output_dir / "scores" / "clean"
    members = [load_scores(cond_dir / f"{s}.tsv")[s] for s in ("a", "b", "f")]
    refused = fuse_score_sets(members, "maximum", fused_system_id("maximum", "abf"))
    from_files = evaluate_trials(trial_list, refused, tiny_cfg.dcf)
    in_process = result.report("clean", "fuse-maximum-abf")
    assert report_rows(from_files) == report_rows(in_process)


def test_failed_run_leaves_stale_marker(tiny_cfg):
    tiny_cfg.trials_path = tiny_cfg.base_dir / "missing-trials.tsv"
    with pytest.raises(TdsvError, match="stage"):
        run_experiment(tiny_cfg)
    assert (tiny_cfg.output_dir / "STALE").exists()


def test_ir_system_requires_ir_file(tiny_root, tmp_path):
    doc = dict(TINY_DOC)
    doc = {**doc, "augment": {"systems": ["e"]}, "multi_condition": {}, "fusion": []}
    cfg = parse_config(doc, base_dir=tiny_root)
    cfg.output_dir = tmp_path / "out"
    cfg.ir_path = tmp_path / "nonexistent.wav"
    with pytest.raises(ConfigError):
        run_experiment(cfg)
