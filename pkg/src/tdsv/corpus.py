"""Synthetic corpus generation: speakers, enrollment/test partitions, the
four-way trial protocol, noise recordings, and the reverb fixture.

Targets and background speakers are disjoint pools. Every speaker enrolls
the same shared pass-phrases; extra phrases appear only in test so that
wrong-phrase trials exist. Everything is a pure function of the seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio import Manifest, ManifestEntry, save_manifest, write_wav
from .errors import DomainError
from .synth import (
    SynthSpeakerSpec,
    car_noise,
    hall_impulse_response,
    market_noise,
    stable_seed,
    synth_utterance,
)
from .trials import GENUINE, NONTARGET_TYPES, Trial, TrialList, save_trials


@dataclass(frozen=True)
class CorpusConfig:
    n_target_speakers: int = 20
    n_ubm_speakers: int = 40
    n_phrases: int = 3  # pass-phrases every speaker enrolls
    n_wrong_phrases: int = 2  # extra phrases appearing only in test
    sessions: int = 3  # enrollment recordings per (speaker, phrase)
    n_test_per_phrase: int = 2  # test recordings per (target, phrase)
    sample_rate: int = 16000
    seed: int = 1234

    def __post_init__(self):
        for name in ("n_target_speakers", "n_ubm_speakers", "n_phrases",
                     "n_wrong_phrases", "sessions", "n_test_per_phrase"):
            if getattr(self, name) < 1:
                raise DomainError(f"{name} must be >= 1")


@dataclass
class CorpusPaths:
    root: Path
    ubm_manifest: Path
    enroll_manifest: Path
    test_manifest: Path
    trials: Path
    noise_manifest: Path
    ir: Path


def _speaker_specs(prefix: str, count: int, seed: int) -> list[SynthSpeakerSpec]:
    specs = []
    for i in range(count):
        sid = f"{prefix}-{i:03d}"
        rng = np.random.default_rng(stable_seed("speaker", seed, sid))
        f0 = float(rng.uniform(95.0, 285.0))
        offsets = (float(rng.uniform(-80.0, 80.0)),
                   float(rng.uniform(-150.0, 150.0)),
                   float(rng.uniform(-200.0, 200.0)))
        specs.append(SynthSpeakerSpec(sid, f0, offsets, int(rng.integers(2 ** 31))))
    return specs


def _duration(seed: int, *key) -> float:
    rng = np.random.default_rng(stable_seed("duration", seed, *key))
    return round(float(rng.uniform(1.8, 2.8)), 4)


def gen_synth_corpus(out_dir, cfg: CorpusConfig | None = None) -> CorpusPaths:
    """Write WAV trees, manifests, trial list, noises, and the reverb IR."""
    cfg = cfg or CorpusConfig()
    root = Path(out_dir)
    for sub in ("wav/ubm", "wav/enroll", "wav/test", "noise", "fixtures"):
        (root / sub).mkdir(parents=True, exist_ok=True)

    targets = _speaker_specs("tgt", cfg.n_target_speakers, cfg.seed)
    ubm_speakers = _speaker_specs("ubm", cfg.n_ubm_speakers, cfg.seed)
    enrolled_phrases = [f"phrase-{i:03d}" for i in range(cfg.n_phrases)]
    wrong_phrases = [f"phrase-{100 + i:03d}" for i in range(cfg.n_wrong_phrases)]

    def render(spec: SynthSpeakerSpec, phrase: str, stream: str, index: int,
               subdir: str) -> ManifestEntry:
        duration = _duration(cfg.seed, spec.speaker_id, phrase, stream, index)
        wave = synth_utterance(spec, phrase, duration, cfg.sample_rate)
        utt_id = f"{spec.speaker_id}_{phrase}_{stream}{index}"
        path = root / "wav" / subdir / spec.speaker_id / f"{utt_id}.wav"
        path.parent.mkdir(parents=True, exist_ok=True)
        write_wav(wave, path)
        return ManifestEntry(utt_id, spec.speaker_id, phrase, path)

    # background speakers cover every phrase so no phrase is systematically
    # unmodeled by the UBM (which would bias wrong-phrase trial scores)
    ubm_entries = [render(spec, phrase, "s", s, "ubm")
                   for spec in ubm_speakers
                   for phrase in enrolled_phrases + wrong_phrases
                   for s in range(cfg.sessions)]
    enroll_entries = [render(spec, phrase, "s", s, "enroll")
                      for spec in targets
                      for phrase in enrolled_phrases
                      for s in range(cfg.sessions)]
    test_entries = [render(spec, phrase, "t", i, "test")
                    for spec in targets
                    for phrase in enrolled_phrases + wrong_phrases
                    for i in range(cfg.n_test_per_phrase)]

    paths = CorpusPaths(
        root=root,
        ubm_manifest=root / "ubm.tsv",
        enroll_manifest=root / "enroll.tsv",
        test_manifest=root / "test.tsv",
        trials=root / "trials.tsv",
        noise_manifest=root / "noise.tsv",
        ir=root / "fixtures" / "hall_ir.wav",
    )
    save_manifest(Manifest(ubm_entries), paths.ubm_manifest)
    save_manifest(Manifest(enroll_entries), paths.enroll_manifest)
    save_manifest(Manifest(test_entries), paths.test_manifest)

    enrolled = set(enrolled_phrases)
    trials = []
    for model in targets:
        for entry in test_entries:
            same_speaker = entry.speaker_id == model.speaker_id
            same_phrase = entry.phrase_id in enrolled
            if same_speaker and same_phrase:
                trial_type = GENUINE
            elif same_speaker:
                trial_type = NONTARGET_TYPES[0]  # target-wrong
            elif same_phrase:
                trial_type = NONTARGET_TYPES[1]  # imposter-correct
            else:
                trial_type = NONTARGET_TYPES[2]  # imposter-wrong
            trials.append(Trial(model.speaker_id, entry.utterance_id, trial_type))
    save_trials(TrialList(trials), paths.trials)

    noise_len = 10.0
    noise_entries = []
    for noise_id, make in (("market", market_noise), ("car", car_noise)):
        wave = make(cfg.sample_rate, noise_len, seed=cfg.seed)
        path = root / "noise" / f"{noise_id}.wav"
        write_wav(wave, path)
        noise_entries.append(ManifestEntry(noise_id, "-", "-", path))
    save_manifest(Manifest(noise_entries), paths.noise_manifest)

    write_wav(hall_impulse_response(cfg.sample_rate, seed=cfg.seed), paths.ir)
    return paths
