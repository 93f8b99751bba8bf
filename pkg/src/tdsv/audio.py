"""WAV I/O and corpus manifests.

Audio is kept deliberately narrow: RIFF/WAVE, PCM 16-bit signed
little-endian, mono. Samples live in [-1, 1] as float64 (int16 / 32768).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError, DuplicateError, FormatError, IoError, ParseError, UnsupportedError

INT16_SCALE = 32768.0


@dataclass
class Waveform:
    """Mono audio signal: float64 samples plus a sample rate in Hz."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise DomainError(f"waveform must be 1-D, got shape {self.samples.shape}")
        if self.sample_rate <= 0:
            raise DomainError(f"sample rate must be positive, got {self.sample_rate}")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


def read_wav(path) -> Waveform:
    """Read a PCM 16-bit mono WAV file, scaling samples by 1/32768."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc

    if len(raw) < 12 or raw[0:4] != b"RIFF" or raw[8:12] != b"WAVE":
        raise FormatError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    data = None
    pos = 12
    while pos + 8 <= len(raw):
        chunk_id = raw[pos:pos + 4]
        (chunk_size,) = struct.unpack_from("<I", raw, pos + 4)
        body = raw[pos + 8:pos + 8 + chunk_size]
        if len(body) < chunk_size:
            raise FormatError(f"{path}: truncated '{chunk_id.decode('ascii', 'replace')}' chunk")
        if chunk_id == b"fmt ":
            fmt = body
        elif chunk_id == b"data":
            data = body
        pos += 8 + chunk_size + (chunk_size & 1)  # chunks are word-aligned

    if fmt is None or len(fmt) < 16:
        raise FormatError(f"{path}: missing or short fmt chunk")
    if data is None:
        raise FormatError(f"{path}: missing data chunk")

    audio_format, channels, sample_rate, _, _, bits = struct.unpack_from("<HHIIHH", fmt, 0)
    if audio_format != 1:
        raise UnsupportedError(f"{path}: only PCM supported, got format tag {audio_format}")
    if channels != 1:
        raise UnsupportedError(f"{path}: only mono supported, got {channels} channels")
    if bits != 16:
        raise UnsupportedError(f"{path}: only 16-bit supported, got {bits}")
    if len(data) % 2 != 0:
        raise FormatError(f"{path}: data chunk has odd byte count")

    samples = np.frombuffer(data, dtype="<i2").astype(np.float64) / INT16_SCALE
    return Waveform(samples, sample_rate)


def write_wav(wave: Waveform, path) -> None:
    """Write PCM 16-bit mono little-endian WAV.

    Samples outside [-1, 1] are hard-clipped; quantization rounds half away
    from zero.
    """
    x = np.asarray(wave.samples, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise DomainError("waveform contains non-finite samples")
    x = np.clip(x, -1.0, 1.0) * INT16_SCALE
    q = np.trunc(x + np.copysign(0.5, x))  # round half away from zero
    q = np.clip(q, -32768, 32767).astype("<i2")

    payload = q.tobytes()
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF", 36 + len(payload), b"WAVE",
        b"fmt ", 16, 1, 1, wave.sample_rate, wave.sample_rate * 2, 2, 16,
        b"data", len(payload),
    )
    try:
        Path(path).write_bytes(header + payload)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


@dataclass(frozen=True)
class ManifestEntry:
    utterance_id: str
    speaker_id: str
    phrase_id: str
    path: Path


@dataclass
class Manifest:
    """Ordered list of corpus entries with unique utterance ids."""

    entries: list[ManifestEntry] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def by_utterance(self) -> dict[str, ManifestEntry]:
        return {e.utterance_id: e for e in self.entries}

    def speaker_ids(self) -> list[str]:
        seen: dict[str, None] = {}
        for e in self.entries:
            seen.setdefault(e.speaker_id, None)
        return list(seen)

    def for_speaker(self, speaker_id: str) -> list[ManifestEntry]:
        return [e for e in self.entries if e.speaker_id == speaker_id]


def load_manifest(path, check_paths: bool = True) -> Manifest:
    """Load a 4-column TSV manifest; relative paths resolve against its directory.

    Lines starting with '#' are comments. Duplicate utterance ids and rows
    with the wrong column count are rejected.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc

    base = path.parent
    entries: list[ManifestEntry] = []
    seen: set[str] = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 4:
            raise ParseError(f"{path}:{lineno}: expected 4 tab-separated columns, got {len(cols)}")
        utt_id, speaker_id, phrase_id, wav = (c.strip() for c in cols)
        if utt_id in seen:
            raise DuplicateError(f"{path}:{lineno}: duplicate utterance_id {utt_id!r}")
        seen.add(utt_id)
        wav_path = Path(wav)
        if not wav_path.is_absolute():
            wav_path = base / wav_path
        if check_paths and not wav_path.exists():
            raise IoError(f"{path}:{lineno}: referenced file does not exist: {wav_path}")
        entries.append(ManifestEntry(utt_id, speaker_id, phrase_id, wav_path))
    return Manifest(entries)


def save_manifest(manifest: Manifest, path) -> None:
    """Write a manifest TSV; paths are stored relative to the file when possible."""
    path = Path(path)
    base = path.parent.resolve()
    lines = []
    for e in manifest.entries:
        p = Path(e.path)
        try:
            rel = p.resolve().relative_to(base)
        except ValueError:
            rel = p
        lines.append(f"{e.utterance_id}\t{e.speaker_id}\t{e.phrase_id}\t{rel.as_posix()}")
    try:
        path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
