"""Experiment orchestration: enrollment-variant model building, trial
scoring under clean/noisy conditions, fusion, and report emission.

Noise is applied to evaluation data only; enrollment always uses clean
audio (augmented or not).
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .audio import Manifest, Waveform, load_manifest, read_wav
from .augment import AugmentSpec, add_noise_snr, augment_variants
from .config import ExperimentConfig
from .errors import ConfigError, IncompleteError, TdsvError
from .features import (
    FeatureMatrix,
    FrontendConfig,
    energy_vad,
    extract_features,
    frame_signal,
    load_features,
    save_features,
    vad_sample_mask,
)
from .gmm import DiagGmm, MapConfig, em_fit, log_likelihoods, map_adapt, save_gmm
from .synth import stable_seed
from .trials import (
    EvalReport,
    ScoreSet,
    TrialList,
    evaluate_trials,
    fuse_score_sets,
    load_trials,
    render_report_text,
    render_report_tsv,
    save_scores,
)

log = logging.getLogger(__name__)

CLEAN_CONDITION = "clean"


@dataclass
class SpeakerModelSet:
    """speaker_id -> system_id -> adapted model."""

    models: dict[str, dict[str, DiagGmm]] = field(default_factory=dict)

    def add(self, speaker_id: str, system_id: str, model: DiagGmm) -> None:
        self.models.setdefault(speaker_id, {})[system_id] = model

    def get(self, speaker_id: str, system_id: str) -> DiagGmm:
        try:
            return self.models[speaker_id][system_id]
        except KeyError:
            raise IncompleteError(f"no model for speaker {speaker_id!r}, "
                                  f"system {system_id!r}") from None

    def speakers(self) -> list[str]:
        return list(self.models)

    def systems(self) -> list[str]:
        seen: dict[str, None] = {}
        for per_system in self.models.values():
            for system_id in per_system:
                seen.setdefault(system_id, None)
        return list(seen)


@dataclass(frozen=True)
class NoiseCondition:
    condition_id: str
    noise: Waveform
    snr_db: float


def multi_condition_id(members) -> str:
    return "multi-" + "".join(members)


def fused_system_id(method: str, members) -> str:
    return f"fuse-{method}-" + "".join(members)


def pooled_frames(manifest: Manifest, frontend: FrontendConfig) -> np.ndarray:
    """Stack feature rows from every utterance in a manifest."""
    blocks = []
    for entry in manifest:
        blocks.append(extract_features(read_wav(entry.path), frontend).rows)
    if not blocks:
        raise IncompleteError("manifest is empty")
    return np.vstack(blocks)


def enrollment_frames_by_system(manifest: Manifest, systems, augment_specs: dict[str, AugmentSpec],
                                frontend: FrontendConfig, ir: Waveform | None = None,
                                ) -> dict[str, dict[str, np.ndarray]]:
    """system_id -> speaker_id -> pooled enrollment feature rows.

    System 'a' uses the original audio; each augmentation system extracts
    features from every transformed copy of the same utterances. The
    sound-mix partner is the speaker's next enrollment utterance in
    manifest order (round robin).
    """
    out: dict[str, dict[str, np.ndarray]] = {s: {} for s in systems}
    for speaker_id in manifest.speaker_ids():
        entries = manifest.for_speaker(speaker_id)
        waves = [read_wav(e.path) for e in entries]
        for system_id in systems:
            blocks = []
            for i, (entry, wave) in enumerate(zip(entries, waves)):
                try:
                    if system_id == "a":
                        variants = [wave]
                    else:
                        spec = augment_specs[system_id]
                        partner = waves[(i + 1) % len(waves)]
                        variants = augment_variants(wave, spec, ir=ir, partner=partner)
                    for variant in variants:
                        blocks.append(extract_features(variant, frontend).rows)
                except TdsvError as exc:
                    raise type(exc)(f"system {system_id!r}, utterance "
                                    f"{entry.utterance_id!r}: {exc}") from exc
            out[system_id][speaker_id] = np.vstack(blocks)
    return out


def enroll_all(ubm: DiagGmm, enroll_manifest: Manifest, augment_specs: dict[str, AugmentSpec],
               map_cfg: MapConfig, multi_condition=(), frontend: FrontendConfig | None = None,
               ir: Waveform | None = None) -> SpeakerModelSet:
    """MAP-adapt one model per (speaker, system), pooling each speaker's
    sessions; optionally add a multi-condition system trained on the pooled
    frames of the named member systems."""
    frontend = frontend or FrontendConfig()
    systems = ["a"] + list(augment_specs)
    frames = enrollment_frames_by_system(enroll_manifest, systems, augment_specs,
                                         frontend, ir)
    model_set = SpeakerModelSet()
    for system_id in systems:
        for speaker_id, rows in frames[system_id].items():
            model_set.add(speaker_id, system_id, map_adapt(ubm, rows, map_cfg))
    if multi_condition:
        mc_id = multi_condition_id(multi_condition)
        for speaker_id in enroll_manifest.speaker_ids():
            pooled = np.vstack([frames[s][speaker_id] for s in multi_condition])
            model_set.add(speaker_id, mc_id, map_adapt(ubm, pooled, map_cfg))
    return model_set


def test_features(trial_list: TrialList, test_manifest: Manifest, frontend: FrontendConfig,
                  noise: NoiseCondition | None = None, cache_dir=None,
                  ) -> dict[str, FeatureMatrix]:
    """Extract (or load cached) features for every utterance in the trial
    list, once per noise condition."""
    by_utt = test_manifest.by_utterance()
    needed: dict[str, None] = {}
    for t in trial_list:
        needed.setdefault(t.utterance_id, None)
    missing = [u for u in needed if u not in by_utt]
    if missing:
        raise IncompleteError(f"trial utterances missing from test manifest: "
                              f"{', '.join(missing[:5])}")

    condition = noise.condition_id if noise else CLEAN_CONDITION
    cache_dir = Path(cache_dir) if cache_dir else None
    if cache_dir:
        cache_dir.mkdir(parents=True, exist_ok=True)

    out: dict[str, FeatureMatrix] = {}
    for utt_id in needed:
        cache_path = cache_dir / f"{utt_id}.{condition}.fmx" if cache_dir else None
        if cache_path is not None and cache_path.exists():
            out[utt_id] = load_features(cache_path)
            continue
        wave = read_wav(by_utt[utt_id].path)
        if noise is not None:
            mask = vad_sample_mask(energy_vad(frame_signal(wave, frontend), frontend),
                                   len(wave.samples), frontend, wave.sample_rate)
            offset = stable_seed("noise-offset", utt_id) % len(noise.noise.samples)
            rolled = Waveform(np.roll(noise.noise.samples, -offset), noise.noise.sample_rate)
            wave = add_noise_snr(wave, rolled, noise.snr_db, mask)
        feats = extract_features(wave, frontend)
        if cache_path is not None:
            save_features(feats, cache_path)
        out[utt_id] = feats
    return out


def score_trials(model_set: SpeakerModelSet, ubm: DiagGmm, trial_list: TrialList,
                 test_manifest: Manifest, frontend: FrontendConfig | None = None,
                 noise: NoiseCondition | None = None, systems=None,
                 cache_dir=None) -> dict[str, ScoreSet]:
    """LLR-score every trial against every requested system's models."""
    frontend = frontend or FrontendConfig()
    systems = list(systems) if systems is not None else model_set.systems()
    feats = test_features(trial_list, test_manifest, frontend, noise, cache_dir)

    ubm_ll = {utt_id: log_likelihoods(ubm, fm.rows) for utt_id, fm in feats.items()}
    out: dict[str, ScoreSet] = {}
    for system_id in systems:
        score_set = ScoreSet(system_id)
        for trial in trial_list:
            model = model_set.get(trial.model_id, system_id)
            rows = feats[trial.utterance_id].rows
            score = float(np.mean(log_likelihoods(model, rows) - ubm_ll[trial.utterance_id]))
            score_set.scores[trial.key] = score
        out[system_id] = score_set
    return out


@dataclass
class ExperimentResult:
    output_dir: Path
    conditions: list[str]
    reports: dict[str, list[EvalReport]]  # condition -> ordered report rows
    score_files: dict[tuple[str, str], Path]  # (condition, system) -> path

    def report(self, condition: str, label: str) -> EvalReport:
        for r in self.reports[condition]:
            if r.label == label:
                return r
        raise KeyError(f"no report row {label!r} under condition {condition!r}")


def noise_conditions(cfg: ExperimentConfig) -> list[NoiseCondition]:
    if not cfg.snr_db:
        return []
    if cfg.noise_manifest is None or not Path(cfg.noise_manifest).exists():
        return []
    manifest = load_manifest(cfg.noise_manifest)
    return [NoiseCondition(f"{entry.utterance_id}-{snr:g}db", read_wav(entry.path), snr)
            for entry in manifest
            for snr in cfg.snr_db]


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Full pipeline: background model, per-system enrollment, clean and
    noisy scoring, fusion, evaluation, and report files under output_dir.

    Deterministic given the config and corpus bytes; a STALE marker flags
    partially written output trees.
    """
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stale = out_dir / "STALE"
    stale.write_text("run in progress or aborted; outputs may be inconsistent\n")

    stage = "load-corpus"
    try:
        ubm_manifest = load_manifest(cfg.ubm_manifest)
        enroll_manifest = load_manifest(cfg.enroll_manifest)
        test_manifest = load_manifest(cfg.test_manifest)
        trial_list = load_trials(cfg.trials_path)
        ir = None
        if any(s.kind == "impulse_response" for s in cfg.augment_specs.values()):
            if cfg.ir_path is None or not Path(cfg.ir_path).exists():
                raise ConfigError("impulse_response system configured but no IR file found")
            ir = read_wav(cfg.ir_path)

        stage = "train-ubm"
        log.info("training background model (K=%d)", cfg.ubm_k)
        ubm_rows = pooled_frames(ubm_manifest, cfg.frontend)
        ubm, _ = em_fit(ubm_rows, cfg.ubm_k, cfg.em)
        models_dir = out_dir / "models"
        models_dir.mkdir(exist_ok=True)
        save_gmm(ubm, models_dir / "ubm.json")

        stage = "enroll"
        log.info("enrolling %d speakers x %d systems",
                 len(enroll_manifest.speaker_ids()), len(cfg.systems))
        model_set = enroll_all(ubm, enroll_manifest, cfg.augment_specs, cfg.map_cfg,
                               cfg.multi_condition, cfg.frontend, ir)
        for speaker_id, per_system in model_set.models.items():
            for system_id, model in per_system.items():
                sys_dir = models_dir / system_id
                sys_dir.mkdir(exist_ok=True)
                save_gmm(model, sys_dir / f"{speaker_id}.json")

        stage = "score"
        conditions: list[NoiseCondition | None] = [None] + list(noise_conditions(cfg))
        all_scores: dict[str, dict[str, ScoreSet]] = {}
        score_files: dict[tuple[str, str], Path] = {}
        for noise in conditions:
            condition = noise.condition_id if noise else CLEAN_CONDITION
            log.info("scoring condition %s", condition)
            all_scores[condition] = score_trials(model_set, ubm, trial_list,
                                                 test_manifest, cfg.frontend, noise)

        stage = "fuse"
        for condition, per_system in all_scores.items():
            for group in cfg.fusion_groups:
                for method in group.methods:
                    fused_id = fused_system_id(method, group.systems)
                    per_system[fused_id] = fuse_score_sets(
                        [per_system[s] for s in group.systems], method, fused_id)

        stage = "write-scores"
        for condition, per_system in all_scores.items():
            cond_dir = out_dir / "scores" / condition
            cond_dir.mkdir(parents=True, exist_ok=True)
            for system_id, score_set in per_system.items():
                path = cond_dir / f"{system_id}.tsv"
                save_scores(score_set, path)
                score_files[(condition, system_id)] = path

        stage = "evaluate"
        reports: dict[str, list[EvalReport]] = {}
        reports_dir = out_dir / "reports"
        reports_dir.mkdir(exist_ok=True)
        for condition, per_system in all_scores.items():
            rows = [evaluate_trials(trial_list, score_set, cfg.dcf)
                    for score_set in per_system.values()]
            reports[condition] = rows
            (reports_dir / f"{condition}.tsv").write_text(render_report_tsv(rows))
            (reports_dir / f"{condition}.txt").write_text(render_report_text(rows))

        stage = "summarize"
        summary = {
            "systems": list(cfg.systems),
            "conditions": list(all_scores),
            "trial_counts": trial_list.counts(),
            "ubm": {"k": cfg.ubm_k, "dim": int(ubm.d), "training_frames": int(len(ubm_rows))},
            "speakers": model_set.speakers(),
            "report_rows": {cond: [r.label for r in rows] for cond, rows in reports.items()},
            "averages": {cond: {r.label: [round(r.avg_eer, 6), round(r.avg_min_dcf, 8)]
                                for r in rows}
                         for cond, rows in reports.items()},
        }
        (out_dir / "run_summary.json").write_text(
            json.dumps(summary, indent=2, sort_keys=True) + "\n")
    except TdsvError as exc:
        raise type(exc)(f"stage {stage!r}: {exc}") from exc

    stale.unlink()
    return ExperimentResult(out_dir, list(all_scores), reports, score_files)
