"""Trial protocol bookkeeping: trial lists, score sets, per-type evaluation
reports, and their TSV wire formats.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError, DuplicateError, IncompleteError, IoError, ParseError, ValidationError
from .metrics import DcfParams, compute_eer, compute_min_dcf, fuse_scores

GENUINE = "genuine"
NONTARGET_TYPES = ("target-wrong", "imposter-correct", "imposter-wrong")
TRIAL_TYPES = (GENUINE,) + NONTARGET_TYPES

REPORT_COLUMNS = NONTARGET_TYPES + ("average",)
DCF_NOTE = "detection cost: raw (unnormalized) DCF, displayed x100"


@dataclass(frozen=True)
class Trial:
    model_id: str
    utterance_id: str
    type: str

    @property
    def key(self) -> tuple[str, str]:
        return (self.model_id, self.utterance_id)


@dataclass
class TrialList:
    trials: list[Trial] = field(default_factory=list)

    def __post_init__(self):
        seen = set()
        for t in self.trials:
            if t.type not in TRIAL_TYPES:
                raise ValidationError(f"unknown trial type {t.type!r}")
            triple = (t.model_id, t.utterance_id, t.type)
            if triple in seen:
                raise DuplicateError(f"duplicate trial {triple}")
            seen.add(triple)

    def __len__(self) -> int:
        return len(self.trials)

    def __iter__(self):
        return iter(self.trials)

    def of_type(self, trial_type: str) -> list[Trial]:
        return [t for t in self.trials if t.type == trial_type]

    def counts(self) -> dict[str, int]:
        out = {t: 0 for t in TRIAL_TYPES}
        for t in self.trials:
            out[t.type] += 1
        return out


def load_trials(path) -> TrialList:
    """Read a 3-column TSV: model_id, utterance_id, type."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    trials = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 3:
            raise ParseError(f"{path}:{lineno}: expected 3 tab-separated columns, got {len(cols)}")
        model_id, utt_id, trial_type = (c.strip() for c in cols)
        if trial_type not in TRIAL_TYPES:
            raise ParseError(f"{path}:{lineno}: unknown trial type {trial_type!r}")
        trials.append(Trial(model_id, utt_id, trial_type))
    return TrialList(trials)


def save_trials(trial_list: TrialList, path) -> None:
    lines = [f"{t.model_id}\t{t.utterance_id}\t{t.type}" for t in trial_list]
    try:
        Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


@dataclass
class ScoreSet:
    """Scores for one system, keyed by (model_id, utterance_id)."""

    system_id: str
    scores: dict[tuple[str, str], float] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.scores)

    def get(self, trial: Trial) -> float:
        return self.scores[trial.key]


def save_scores(score_sets, path) -> None:
    """Write score sets as TSV rows: system, model, utterance, score (12 s.d.)."""
    if isinstance(score_sets, ScoreSet):
        score_sets = [score_sets]
    lines = []
    for ss in score_sets:
        for (model_id, utt_id), value in ss.scores.items():
            lines.append(f"{ss.system_id}\t{model_id}\t{utt_id}\t{value:.12g}")
    try:
        Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def load_scores(path) -> dict[str, ScoreSet]:
    """Read a score TSV; returns one ScoreSet per system id, in file order."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    out: dict[str, ScoreSet] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 4:
            raise ParseError(f"{path}:{lineno}: expected 4 tab-separated columns, got {len(cols)}")
        system_id, model_id, utt_id, raw = (c.strip() for c in cols)
        try:
            value = float(raw)
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: bad score {raw!r}") from exc
        if not np.isfinite(value):
            raise ParseError(f"{path}:{lineno}: non-finite score")
        ss = out.setdefault(system_id, ScoreSet(system_id))
        if (model_id, utt_id) in ss.scores:
            raise DuplicateError(f"{path}:{lineno}: duplicate score for "
                                 f"({system_id}, {model_id}, {utt_id})")
        ss.scores[(model_id, utt_id)] = value
    return out


@dataclass
class EvalReport:
    """Per non-target-type EER / MinDCF pairs plus their unweighted averages."""

    label: str
    per_type: dict[str, tuple[float, float]]  # type -> (eer %, raw min_dcf)
    counts: dict[str, int]

    @property
    def avg_eer(self) -> float:
        return float(np.mean([self.per_type[t][0] for t in NONTARGET_TYPES]))

    @property
    def avg_min_dcf(self) -> float:
        return float(np.mean([self.per_type[t][1] for t in NONTARGET_TYPES]))


def evaluate_trials(trial_list: TrialList, score_set: ScoreSet,
                    params: DcfParams | None = None) -> EvalReport:
    """Score the genuine set against each non-target type separately."""
    params = params or DcfParams()
    missing = [t for t in trial_list if t.key not in score_set.scores]
    if missing:
        shown = ", ".join(f"({t.model_id}, {t.utterance_id})" for t in missing[:5])
        more = f" and {len(missing) - 5} more" if len(missing) > 5 else ""
        raise IncompleteError(f"system {score_set.system_id!r}: "
                              f"{len(missing)} unscored trials: {shown}{more}")

    by_type = {t: [] for t in TRIAL_TYPES}
    for t in trial_list:
        by_type[t.type].append(score_set.get(t))
    if not by_type[GENUINE]:
        raise DomainError("trial list has no genuine trials")

    per_type = {}
    for nt in NONTARGET_TYPES:
        if not by_type[nt]:
            raise DomainError(f"trial list has no {nt!r} trials")
        eer, _ = compute_eer(by_type[GENUINE], by_type[nt])
        dcf, _ = compute_min_dcf(by_type[GENUINE], by_type[nt], params)
        per_type[nt] = (eer, dcf)
    return EvalReport(score_set.system_id, per_type, trial_list.counts())


def fuse_score_sets(score_sets: list[ScoreSet], method: str,
                    system_id: str | None = None) -> ScoreSet:
    """Per-trial fusion across systems; all sets must cover identical trials."""
    if not score_sets:
        raise DomainError("need at least one score set to fuse")
    keys = set(score_sets[0].scores)
    for ss in score_sets[1:]:
        if set(ss.scores) != keys:
            raise IncompleteError(f"score sets {score_sets[0].system_id!r} and "
                                  f"{ss.system_id!r} cover different trials")
    label = system_id or f"fuse-{method}(" + ",".join(s.system_id for s in score_sets) + ")"
    fused = ScoreSet(label)
    for key in score_sets[0].scores:
        fused.scores[key] = fuse_scores([ss.scores[key] for ss in score_sets], method)
    return fused


def _cell(eer: float, min_dcf: float) -> str:
    return f"{eer:.2f}/{min_dcf * 100.0:.2f}"


def report_rows(report: EvalReport) -> list[str]:
    cells = [_cell(*report.per_type[t]) for t in NONTARGET_TYPES]
    cells.append(_cell(report.avg_eer, report.avg_min_dcf))
    return cells


def render_report_tsv(reports: list[EvalReport]) -> str:
    """Machine-readable table: one row per system, one column per non-target
    type plus the average."""
    lines = [f"# {DCF_NOTE}",
             "# cell format: EER%/MinDCFx100",
             "system\t" + "\t".join(REPORT_COLUMNS)]
    for r in reports:
        lines.append(r.label + "\t" + "\t".join(report_rows(r)))
    return "\n".join(lines) + "\n"


def render_report_text(reports: list[EvalReport]) -> str:
    """Human-readable aligned table of the same cells."""
    header = ["system"] + list(REPORT_COLUMNS)
    rows = [[r.label] + report_rows(r) for r in reports]
    widths = [max(len(row[i]) for row in [header] + rows) for i in range(len(header))]
    lines = [DCF_NOTE, "cell format: EER%/MinDCFx100", ""]
    lines.append("  ".join(h.ljust(w) for h, w in zip(header, widths)))
    lines.append("  ".join("-" * w for w in widths))
    for row in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)))
    return "\n".join(lines) + "\n"
