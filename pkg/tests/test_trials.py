import numpy as np
import pytest

from tdsv.errors import DomainError, DuplicateError, IncompleteError, ParseError, ValidationError
from tdsv.metrics import DcfParams, compute_eer, compute_min_dcf
from tdsv.trials import (
    DCF_NOTE,
    NONTARGET_TYPES,
    ScoreSet,
    Trial,
    TrialList,
    evaluate_trials,
    fuse_score_sets,
    load_scores,
    load_trials,
    render_report_text,
    render_report_tsv,
    save_scores,
    save_trials,
)


def make_protocol(rng, shift=0.0):
    """Four-type trial set with controlled overlaps, plus its score set."""
    trials, scores = [], ScoreSet("sys")
    spread = {"genuine": 2.0, "target-wrong": 0.5, "imposter-correct": 0.0,
              "imposter-wrong": -1.0}
    idx = 0
    for trial_type, center in spread.items():
        for _ in range(25):
            utt = f"u{idx:03d}"
            trials.append(Trial("mdl", utt, trial_type))
            scores.scores[("mdl", utt)] = float(rng.normal(center + shift, 1.0))
            idx += 1
    return TrialList(trials), scores


def test_trial_list_validates_types_and_uniqueness():
    with pytest.raises(ValidationError):
        TrialList([Trial("m", "u", "bogus-type")])
    with pytest.raises(DuplicateError):
        TrialList([Trial("m", "u", "genuine"), Trial("m", "u", "genuine")])
    # same pair under different types is a different trial
    TrialList([Trial("m", "u", "genuine"), Trial("m", "u", "target-wrong")])


def test_trials_tsv_round_trip(tmp_path):
    trials = TrialList([Trial("m1", "u1", "genuine"),
                        Trial("m1", "u2", "imposter-correct")])
    path = tmp_path / "t.tsv"
    save_trials(trials, path)
    back = load_trials(path)
    assert [t.type for t in back] == ["genuine", "imposter-correct"]
    assert back.counts()["genuine"] == 1


def test_trials_tsv_rejects_bad_rows(tmp_path):
    path = tmp_path / "t.tsv"
    path.write_text("m1\tu1\n")
    with pytest.raises(ParseError):
        load_trials(path)
    path.write_text("m1\tu1\tnot-a-type\n")
    with pytest.raises(ParseError):
        load_trials(path)


def test_scores_tsv_round_trip_and_precision(tmp_path):
    ss = ScoreSet("a", {("m", "u1"): 1.0 / 3.0, ("m", "u2"): -2.5})
    path = tmp_path / "s.tsv"
    save_scores(ss, path)
    line = path.read_text().splitlines()[0]
    assert line.split("\t")[3] == "0.333333333333"  # 12 significant digits
    back = load_scores(path)["a"]
    assert back.scores[("m", "u1")] == pytest.approx(1.0 / 3.0, abs=1e-12)


def test_scores_tsv_rejects_duplicates_and_garbage(tmp_path):
    path = tmp_path / "s.tsv"
    path.write_text("a\tm\tu\t1.0\na\tm\tu\t2.0\n")
    with pytest.raises(DuplicateError):
        load_scores(path)
    path.write_text("a\tm\tu\tnot-a-number\n")
    with pytest.raises(ParseError):
        load_scores(path)
    path.write_text("a\tm\tu\tinf\n")
    with pytest.raises(ParseError):
        load_scores(path)


def test_evaluate_matches_per_type_metric_calls(rng):
    trials, scores = make_protocol(rng)
    report = evaluate_trials(trials, scores, DcfParams())
    genuine = [scores.get(t) for t in trials.of_type("genuine")]
    for nt in NONTARGET_TYPES:
        nontarget = [scores.get(t) for t in trials.of_type(nt)]
        assert report.per_type[nt][0] == compute_eer(genuine, nontarget).eer
        assert report.per_type[nt][1] == compute_min_dcf(genuine, nontarget,
                                                         DcfParams()).min_dcf
    want_avg = np.mean([report.per_type[nt][0] for nt in NONTARGET_TYPES])
    assert report.avg_eer == pytest.approx(want_avg, abs=1e-12)


def test_perfectly_separated_protocol_scores_zero():
    trials, scores = [], ScoreSet("sys")
    for i, trial_type in enumerate(["genuine"] + list(NONTARGET_TYPES)):
        for j in range(3):
            utt = f"u{i}{j}"
            trials.append(Trial("m", utt, trial_type))
            scores.scores[("m", utt)] = 10.0 - 5.0 * (trial_type != "genuine") - 0.1 * j
    report = evaluate_trials(TrialList(trials), scores)
    assert report.avg_eer == 0.0
    assert report.avg_min_dcf == 0.0


def test_missing_scores_reported_with_trial_ids(rng):
    trials, scores = make_protocol(rng)
    del scores.scores[("mdl", "u000")]
    with pytest.raises(IncompleteError, match="u000"):
        evaluate_trials(trials, scores)


def test_evaluate_requires_every_type(rng):
    trials, scores = make_protocol(rng)
    pruned = TrialList([t for t in trials if t.type != "target-wrong"])
    with pytest.raises(DomainError):
        evaluate_trials(pruned, scores)


def test_report_rendering_has_exact_columns(rng):
    trials, scores = make_protocol(rng)
    report = evaluate_trials(trials, scores)
    tsv = render_report_tsv([report])
    header = [l for l in tsv.splitlines() if not l.startswith("#")][0]
    assert header == "system\ttarget-wrong\timposter-correct\timposter-wrong\taverage"
    assert DCF_NOTE in tsv
    row = tsv.splitlines()[-1].split("\t")
    assert row[0] == "sys"
    for cell in row[1:]:
        eer, dcf = cell.split("/")
        float(eer), float(dcf)  # EER% / MinDCFx100, both numeric
    text = render_report_text([report])
    assert "target-wrong" in text and "average" in text


def test_fuse_score_sets_applies_method_per_trial(rng):
    a = ScoreSet("a", {("m", "u1"): 1.0, ("m", "u2"): 5.0})
    b = ScoreSet("b", {("m", "u1"): 3.0, ("m", "u2"): 1.0})
    fused = fuse_score_sets([a, b], "maximum")
    assert fused.scores == {("m", "u1"): 3.0, ("m", "u2"): 5.0}
    assert fused.system_id.startswith("fuse-maximum")


def test_fuse_score_sets_rejects_mismatched_trials():
    a = ScoreSet("a", {("m", "u1"): 1.0})
    b = ScoreSet("b", {("m", "u2"): 1.0})
    with pytest.raises(IncompleteError):
        fuse_score_sets([a, b], "average")


def test_eval_report_values_in_range(rng):
    trials, scores = make_protocol(rng)
    report = evaluate_trials(trials, scores)
    for nt in NONTARGET_TYPES:
        eer, dcf = report.per_type[nt]
        assert 0.0 <= eer <= 50.0
        assert dcf >= 0.0
    assert report.counts["genuine"] == 25
