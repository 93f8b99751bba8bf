"""Experiment configuration: a TOML file with one table per subsystem.

Relative paths resolve against the config file's directory. Unknown keys
are rejected so typos fail fast (exit code 2 via the CLI).
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .augment import AugmentSpec, WowParams
from .corpus import CorpusConfig
from .errors import ConfigError, DomainError
from .features import FrontendConfig
from .gmm import EmConfig, MapConfig
from .metrics import FUSION_METHODS, DcfParams

# system letters, in report order
SYSTEM_KINDS = {
    "a": "original",
    "b": "wow",
    "c": "pitch_shift",
    "d": "harmonic_distortion",
    "e": "impulse_response",
    "f": "sound_mix",
}
DEFAULT_AUGMENT_SYSTEMS = ("b", "c", "d", "e", "f")


@dataclass(frozen=True)
class FusionGroup:
    systems: tuple[str, ...]
    methods: tuple[str, ...]


@dataclass
class ExperimentConfig:
    base_dir: Path
    corpus: CorpusConfig
    corpus_dir: Path
    ubm_manifest: Path
    enroll_manifest: Path
    test_manifest: Path
    trials_path: Path
    noise_manifest: Path | None
    ir_path: Path | None
    output_dir: Path
    frontend: FrontendConfig
    ubm_k: int
    em: EmConfig
    map_cfg: MapConfig
    dcf: DcfParams
    augment_systems: tuple[str, ...]  # subset of b..f; system 'a' is implicit
    augment_specs: dict[str, AugmentSpec] = field(default_factory=dict)
    multi_condition: tuple[str, ...] = ()
    fusion_groups: tuple[FusionGroup, ...] = ()
    snr_db: tuple[float, ...] = ()

    @property
    def systems(self) -> tuple[str, ...]:
        return ("a",) + self.augment_systems


class _Table:
    """Typed accessor over one TOML table that rejects leftover keys."""

    def __init__(self, name: str, data):
        if not isinstance(data, dict):
            raise ConfigError(f"[{name}] must be a table")
        self.name = name
        self.data = dict(data)

    def take(self, key, kind, default):
        if key not in self.data:
            return default
        value = self.data.pop(key)
        if kind is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if not isinstance(value, kind) or isinstance(value, bool) != (kind is bool):
            raise ConfigError(f"[{self.name}] {key}: expected {kind.__name__}, "
                              f"got {type(value).__name__}")
        return value

    def take_list(self, key, item_kind, default):
        if key not in self.data:
            return default
        value = self.data.pop(key)
        if not isinstance(value, list):
            raise ConfigError(f"[{self.name}] {key}: expected a list")
        out = []
        for item in value:
            if item_kind is float and isinstance(item, int) and not isinstance(item, bool):
                item = float(item)
            if not isinstance(item, item_kind):
                raise ConfigError(f"[{self.name}] {key}: expected list of "
                                  f"{item_kind.__name__}")
            out.append(item)
        return out

    def finish(self):
        if self.data:
            raise ConfigError(f"[{self.name}] unknown keys: {', '.join(sorted(self.data))}")


def _build(name, table, factory):
    try:
        cfg = factory(table)
    except DomainError as exc:
        raise ConfigError(f"[{name}] {exc}") from exc
    table.finish()
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: invalid TOML: {exc}") from exc
    return parse_config(doc, base_dir=path.parent)


def parse_config(doc: dict, base_dir) -> ExperimentConfig:
    base_dir = Path(base_dir)
    doc = dict(doc)

    def resolve(p):
        p = Path(p)
        return p if p.is_absolute() else base_dir / p

    corpus_t = _Table("corpus", doc.pop("corpus", {}))
    corpus_dir = resolve(corpus_t.take("dir", str, "corpus"))
    corpus = _build("corpus", corpus_t, lambda t: CorpusConfig(
        n_target_speakers=t.take("n_target_speakers", int, 20),
        n_ubm_speakers=t.take("n_ubm_speakers", int, 40),
        n_phrases=t.take("n_phrases", int, 3),
        n_wrong_phrases=t.take("n_wrong_phrases", int, 2),
        sessions=t.take("sessions", int, 3),
        n_test_per_phrase=t.take("n_test_per_phrase", int, 2),
        sample_rate=t.take("sample_rate", int, 16000),
        seed=t.take("seed", int, 1234),
    ))

    paths_t = _Table("paths", doc.pop("paths", {}))
    ubm_manifest = resolve(paths_t.take("ubm_manifest", str, corpus_dir / "ubm.tsv"))
    enroll_manifest = resolve(paths_t.take("enroll_manifest", str, corpus_dir / "enroll.tsv"))
    test_manifest = resolve(paths_t.take("test_manifest", str, corpus_dir / "test.tsv"))
    trials_path = resolve(paths_t.take("trials", str, corpus_dir / "trials.tsv"))
    noise_manifest = paths_t.take("noise_manifest", str, None)
    noise_manifest = resolve(noise_manifest) if noise_manifest else corpus_dir / "noise.tsv"
    ir_path = paths_t.take("ir", str, None)
    ir_path = resolve(ir_path) if ir_path else corpus_dir / "fixtures" / "hall_ir.wav"
    output_dir = resolve(paths_t.take("output_dir", str, "out"))
    paths_t.finish()

    fe_t = _Table("frontend", doc.pop("frontend", {}))
    frontend = _build("frontend", fe_t, lambda t: FrontendConfig(
        frame_len=t.take("frame_len", float, 0.025),
        frame_hop=t.take("frame_hop", float, 0.010),
        n_mel_filters=t.take("n_mel_filters", int, 27),
        n_static_ceps=t.take("n_static_ceps", int, 19),
        pre_emphasis=t.take("pre_emphasis", float, 0.97),
        vad_threshold_db=t.take("vad_threshold_db", float, 30.0),
        delta_window=t.take("delta_window", int, 2),
        mel_low_hz=t.take("mel_low_hz", float, 64.0),
    ))

    ubm_t = _Table("ubm", doc.pop("ubm", {}))
    ubm_k = ubm_t.take("k", int, 64)
    em = _build("ubm", ubm_t, lambda t: EmConfig(
        max_iterations=t.take("max_iterations", int, 20),
        rel_tol=t.take("rel_tol", float, 1e-5),
        seed=t.take("seed", int, 0),
        split_iterations=t.take("split_iterations", int, 2),
    ))
    if ubm_k < 1:
        raise ConfigError("[ubm] k must be >= 1")

    map_t = _Table("map", doc.pop("map", {}))
    map_cfg = _build("map", map_t, lambda t: MapConfig(
        relevance=t.take("relevance", float, 10.0),
        iterations=t.take("iterations", int, 3),
        adapt_means=t.take("adapt_means", bool, True),
        adapt_weights=t.take("adapt_weights", bool, False),
        adapt_variances=t.take("adapt_variances", bool, False),
    ))

    dcf_t = _Table("dcf", doc.pop("dcf", {}))
    dcf = _build("dcf", dcf_t, lambda t: DcfParams(
        c_miss=t.take("c_miss", float, 10.0),
        c_fa=t.take("c_fa", float, 1.0),
        p_target=t.take("p_target", float, 0.01),
    ))

    aug_t = _Table("augment", doc.pop("augment", {}))
    augment_systems = tuple(aug_t.take_list("systems", str, list(DEFAULT_AUGMENT_SYSTEMS)))
    semitones = tuple(aug_t.take_list("pitch_semitones", int, [1, 2]))
    wow = WowParams(a=aug_t.take("wow_a", float, 3.0), f=aug_t.take("wow_f", float, 2.0))
    depth = aug_t.take("distortion_depth", int, 5)
    aug_t.finish()
    for sys_id in augment_systems:
        if sys_id not in SYSTEM_KINDS or sys_id == "a":
            raise ConfigError(f"[augment] systems: unknown system {sys_id!r} "
                              f"(expected letters b..f)")
    if len(set(augment_systems)) != len(augment_systems):
        raise ConfigError("[augment] systems: duplicates not allowed")
    try:
        augment_specs = {
            sys_id: AugmentSpec(kind=SYSTEM_KINDS[sys_id], semitones=semitones, wow=wow,
                                distortion_depth=depth,
                                ir_path=str(ir_path) if SYSTEM_KINDS[sys_id] == "impulse_response" else None)
            for sys_id in augment_systems
        }
    except DomainError as exc:
        raise ConfigError(f"[augment] {exc}") from exc

    mc_t = _Table("multi_condition", doc.pop("multi_condition", {}))
    multi_condition = tuple(mc_t.take_list("systems", str, []))
    mc_t.finish()

    fusion_groups = []
    raw_fusion = doc.pop("fusion", [])
    if not isinstance(raw_fusion, list):
        raise ConfigError("[[fusion]] must be an array of tables")
    for i, raw in enumerate(raw_fusion):
        t = _Table(f"fusion[{i}]", raw)
        systems = tuple(t.take_list("systems", str, []))
        methods = tuple(t.take_list("methods", str, []))
        t.finish()
        if not systems:
            raise ConfigError(f"[[fusion]] group {i}: systems must be nonempty")
        if not methods:
            raise ConfigError(f"[[fusion]] group {i}: methods must be nonempty")
        for m in methods:
            if m not in FUSION_METHODS:
                raise ConfigError(f"[[fusion]] group {i}: unknown method {m!r}")
        fusion_groups.append(FusionGroup(systems, methods))

    noise_t = _Table("noise", doc.pop("noise", {}))
    snr_db = tuple(noise_t.take_list("snr_db", float, []))
    noise_t.finish()

    if doc:
        raise ConfigError(f"unknown config sections: {', '.join(sorted(doc))}")

    cfg = ExperimentConfig(
        base_dir=base_dir, corpus=corpus, corpus_dir=corpus_dir,
        ubm_manifest=ubm_manifest, enroll_manifest=enroll_manifest,
        test_manifest=test_manifest, trials_path=trials_path,
        noise_manifest=noise_manifest, ir_path=ir_path, output_dir=output_dir,
        frontend=frontend, ubm_k=ubm_k, em=em, map_cfg=map_cfg, dcf=dcf,
        augment_systems=augment_systems, augment_specs=augment_specs,
        multi_condition=multi_condition, fusion_groups=tuple(fusion_groups),
        snr_db=snr_db,
    )
    _cross_validate(cfg)
    return cfg


def _cross_validate(cfg: ExperimentConfig) -> None:
    available = set(cfg.systems)
    for member in cfg.multi_condition:
        if member not in available:
            raise ConfigError(f"[multi_condition] references unconfigured system {member!r}")
    for group in cfg.fusion_groups:
        for member in group.systems:
            if member not in available:
                raise ConfigError(f"[[fusion]] references unconfigured system {member!r}")
