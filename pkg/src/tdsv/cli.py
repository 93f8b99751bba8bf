"""Command-line interface.

Subcommands mirror the pipeline stages; each reads --config and works off
the artifacts a previous stage left under the configured output directory.
Exit codes: 0 success, 2 config error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .audio import Manifest, ManifestEntry, load_manifest, read_wav, save_manifest, write_wav
from .augment import augment_variants
from .config import ExperimentConfig, FusionGroup, load_config
from .corpus import gen_synth_corpus
from .errors import ConfigError, DataError, IncompleteError, NumericError, TdsvError
from .experiment import (
    enroll_all,
    fused_system_id,
    multi_condition_id,
    noise_conditions,
    pooled_frames,
    run_experiment,
    score_trials,
    SpeakerModelSet,
)
from .features import extract_features, save_features
from .gmm import em_fit, load_gmm, save_gmm
from .trials import (
    evaluate_trials,
    fuse_score_sets,
    load_scores,
    load_trials,
    render_report_text,
    render_report_tsv,
    save_scores,
)


def _load_cfg(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    if getattr(args, "out", None):
        cfg.output_dir = Path(args.out)
    if getattr(args, "snr", None):
        try:
            cfg.snr_db = tuple(float(v) for v in args.snr.split(","))
        except ValueError as exc:
            raise ConfigError(f"--snr: expected comma-separated numbers: {exc}") from exc
    return cfg


def _systems_arg(args, cfg: ExperimentConfig) -> list[str]:
    if not getattr(args, "systems", None):
        return list(cfg.systems)
    systems = [s.strip() for s in args.systems.split(",") if s.strip()]
    for s in systems:
        if s not in cfg.systems:
            raise ConfigError(f"--systems: {s!r} is not a configured system "
                              f"(have {', '.join(cfg.systems)})")
    return systems


def cmd_synth(args) -> int:
    cfg = _load_cfg(args)
    paths = gen_synth_corpus(cfg.corpus_dir, cfg.corpus)
    print(f"corpus written under {paths.root}")
    return 0


def cmd_augment(args) -> int:
    cfg = _load_cfg(args)
    systems = [s for s in _systems_arg(args, cfg) if s != "a"]
    manifest = load_manifest(cfg.enroll_manifest)
    ir = read_wav(cfg.ir_path) if Path(cfg.ir_path).exists() else None
    if ir is None and any(cfg.augment_specs[s].kind == "impulse_response" for s in systems):
        raise ConfigError(f"impulse_response system configured but no IR at {cfg.ir_path}")
    out_root = Path(cfg.output_dir) / "augmented"
    for system_id in systems:
        spec = cfg.augment_specs[system_id]
        entries = []
        for speaker_id in manifest.speaker_ids():
            speaker_entries = manifest.for_speaker(speaker_id)
            waves = [read_wav(e.path) for e in speaker_entries]
            for i, (entry, wave) in enumerate(zip(speaker_entries, waves)):
                partner = waves[(i + 1) % len(waves)]
                variants = augment_variants(wave, spec, ir=ir, partner=partner)
                for v_idx, variant in enumerate(variants):
                    utt_id = f"{entry.utterance_id}__{system_id}{v_idx}"
                    path = out_root / system_id / speaker_id / f"{utt_id}.wav"
                    path.parent.mkdir(parents=True, exist_ok=True)
                    write_wav(variant, path)
                    entries.append(ManifestEntry(utt_id, speaker_id, entry.phrase_id, path))
        save_manifest(Manifest(entries), out_root / f"{system_id}.tsv")
        print(f"system {system_id}: {len(entries)} augmented files under {out_root / system_id}")
    return 0


def cmd_extract(args) -> int:
    cfg = _load_cfg(args)
    out = Path(cfg.output_dir) / "features"
    out.mkdir(parents=True, exist_ok=True)
    count = 0
    for manifest_path in (cfg.ubm_manifest, cfg.enroll_manifest, cfg.test_manifest):
        for entry in load_manifest(manifest_path):
            feats = extract_features(read_wav(entry.path), cfg.frontend)
            save_features(feats, out / f"{entry.utterance_id}.clean.fmx")
            count += 1
    print(f"extracted {count} feature files under {out}")
    return 0


def cmd_train_ubm(args) -> int:
    cfg = _load_cfg(args)
    rows = pooled_frames(load_manifest(cfg.ubm_manifest), cfg.frontend)
    model, history = em_fit(rows, cfg.ubm_k, cfg.em)
    out = Path(cfg.output_dir) / "models"
    out.mkdir(parents=True, exist_ok=True)
    save_gmm(model, out / "ubm.json")
    print(f"UBM K={cfg.ubm_k} trained on {len(rows)} frames "
          f"({len(history)} EM iterations) -> {out / 'ubm.json'}")
    return 0


def _load_ubm(cfg: ExperimentConfig):
    path = Path(cfg.output_dir) / "models" / "ubm.json"
    if not path.exists():
        raise IncompleteError(f"no UBM at {path}; run `tdsv train-ubm` first")
    return load_gmm(path)


def cmd_enroll(args) -> int:
    cfg = _load_cfg(args)
    systems = _systems_arg(args, cfg)
    ubm = _load_ubm(cfg)
    manifest = load_manifest(cfg.enroll_manifest)
    ir = read_wav(cfg.ir_path) if Path(cfg.ir_path).exists() else None
    specs = {s: cfg.augment_specs[s] for s in systems if s != "a"}
    multi = cfg.multi_condition if set(cfg.multi_condition) <= set(systems) else ()
    model_set = enroll_all(ubm, manifest, specs, cfg.map_cfg, multi, cfg.frontend, ir)
    models_dir = Path(cfg.output_dir) / "models"
    n = 0
    for speaker_id, per_system in model_set.models.items():
        for system_id, model in per_system.items():
            sys_dir = models_dir / system_id
            sys_dir.mkdir(parents=True, exist_ok=True)
            save_gmm(model, sys_dir / f"{speaker_id}.json")
            n += 1
    print(f"enrolled {n} speaker models under {models_dir}")
    return 0


def _load_model_set(cfg: ExperimentConfig, systems) -> SpeakerModelSet:
    models_dir = Path(cfg.output_dir) / "models"
    model_set = SpeakerModelSet()
    for system_id in systems:
        sys_dir = models_dir / system_id
        if not sys_dir.is_dir():
            raise IncompleteError(f"no models for system {system_id!r} under {models_dir}; "
                                  f"run `tdsv enroll` first")
        for path in sorted(sys_dir.glob("*.json")):
            model_set.add(path.stem, system_id, load_gmm(path))
    return model_set


def cmd_score(args) -> int:
    cfg = _load_cfg(args)
    systems = _systems_arg(args, cfg)
    ubm = _load_ubm(cfg)
    mc_id = multi_condition_id(cfg.multi_condition) if cfg.multi_condition else None
    if mc_id and (Path(cfg.output_dir) / "models" / mc_id).is_dir():
        systems = systems + [mc_id]
    model_set = _load_model_set(cfg, systems)
    trial_list = load_trials(cfg.trials_path)
    test_manifest = load_manifest(cfg.test_manifest)
    conditions = [None] + list(noise_conditions(cfg))
    for noise in conditions:
        condition = noise.condition_id if noise else "clean"
        scores = score_trials(model_set, ubm, trial_list, test_manifest, cfg.frontend,
                              noise, systems=systems)
        cond_dir = Path(cfg.output_dir) / "scores" / condition
        cond_dir.mkdir(parents=True, exist_ok=True)
        for system_id, score_set in scores.items():
            save_scores(score_set, cond_dir / f"{system_id}.tsv")
        print(f"condition {condition}: scored {len(trial_list)} trials x "
              f"{len(systems)} systems -> {cond_dir}")
    return 0


def _fusion_groups(args, cfg: ExperimentConfig):
    if getattr(args, "fusion_method", None):
        systems = _systems_arg(args, cfg)
        return [FusionGroup(tuple(systems), (args.fusion_method,))]
    if not cfg.fusion_groups:
        raise ConfigError("no [[fusion]] groups configured and no --fusion-method given")
    return list(cfg.fusion_groups)


def cmd_fuse(args) -> int:
    cfg = _load_cfg(args)
    groups = _fusion_groups(args, cfg)
    scores_root = Path(cfg.output_dir) / "scores"
    if not scores_root.is_dir():
        raise IncompleteError(f"no scores under {scores_root}; run `tdsv score` first")
    for cond_dir in sorted(p for p in scores_root.iterdir() if p.is_dir()):
        for group in groups:
            sets = []
            for system_id in group.systems:
                path = cond_dir / f"{system_id}.tsv"
                if not path.exists():
                    raise IncompleteError(f"missing score file {path}")
                sets.append(load_scores(path)[system_id])
            for method in group.methods:
                fused_id = fused_system_id(method, group.systems)
                fused = fuse_score_sets(sets, method, fused_id)
                save_scores(fused, cond_dir / f"{fused_id}.tsv")
                print(f"{cond_dir.name}: wrote {fused_id}.tsv")
    return 0


def cmd_evaluate(args) -> int:
    cfg = _load_cfg(args)
    trial_list = load_trials(cfg.trials_path)
    scores_root = Path(cfg.output_dir) / "scores"
    if not scores_root.is_dir():
        raise IncompleteError(f"no scores under {scores_root}; run `tdsv score` first")
    reports_dir = Path(cfg.output_dir) / "reports"
    reports_dir.mkdir(parents=True, exist_ok=True)
    for cond_dir in sorted(p for p in scores_root.iterdir() if p.is_dir()):
        labels = [p.stem for p in sorted(cond_dir.glob("*.tsv"))]
        ordered = [s for s in cfg.systems if s in labels] \
            + [l for l in labels if l not in cfg.systems]
        rows = []
        for label in ordered:
            score_set = load_scores(cond_dir / f"{label}.tsv")[label]
            rows.append(evaluate_trials(trial_list, score_set, cfg.dcf))
        (reports_dir / f"{cond_dir.name}.tsv").write_text(render_report_tsv(rows))
        (reports_dir / f"{cond_dir.name}.txt").write_text(render_report_text(rows))
        print(f"condition {cond_dir.name}:")
        print(render_report_text(rows))
    return 0


def cmd_run(args) -> int:
    cfg = _load_cfg(args)
    result = run_experiment(cfg)
    for condition in result.conditions:
        print(f"condition {condition}:")
        print(render_report_text(result.reports[condition]))
    print(f"artifacts under {result.output_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tdsv",
        description="Text-dependent speaker verification with enrollment-time augmentation.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text, *, systems=False, snr=False, fusion=False):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="TOML experiment config")
        p.add_argument("--out", help="override [paths] output_dir")
        if systems:
            p.add_argument("--systems", help="comma-separated system letters, e.g. a,b,f")
        if snr:
            p.add_argument("--snr", help="comma-separated SNR dB values, e.g. 5,10")
        if fusion:
            p.add_argument("--fusion-method", dest="fusion_method",
                           choices=["average", "minimum", "maximum", "median"],
                           help="fuse --systems with this method instead of config groups")
        p.set_defaults(func=func)
        return p

    add("synth", cmd_synth, "generate the synthetic corpus")
    add("augment", cmd_augment, "write augmented enrollment WAVs", systems=True)
    add("extract", cmd_extract, "extract clean features to .fmx cache files")
    add("train-ubm", cmd_train_ubm, "EM-train the background model")
    add("enroll", cmd_enroll, "MAP-adapt per-speaker, per-system models", systems=True)
    add("score", cmd_score, "score the trial list under all conditions", systems=True, snr=True)
    add("fuse", cmd_fuse, "fuse per-system score files", systems=True, fusion=True)
    add("evaluate", cmd_evaluate, "compute EER/MinDCF reports from score files")
    add("run", cmd_run, "full pipeline: train, enroll, score, fuse, evaluate", snr=True)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 4
    except TdsvError as exc:  # pragma: no cover - base-class safety net
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
