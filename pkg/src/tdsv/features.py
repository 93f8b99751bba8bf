"""Acoustic front-end: framing, mel cepstra, trajectory filtering, deltas,
energy-based frame selection, and utterance-level normalization.

The default configuration yields 57-dim rows per frame: 19 static cepstra
(C1..C19, C0 dropped) plus first and second differences.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import fft as sfft
from scipy import signal

from .audio import Waveform
from .errors import DomainError, FormatError, IoError

LOG_ENERGY_FLOOR = 1e-10

# band-pass on cepstral trajectories: numerator zero at DC, slow pole
RASTA_NUMER = 0.1 * np.array([2.0, 1.0, 0.0, -1.0, -2.0])
RASTA_DENOM = np.array([1.0, -0.98])


@dataclass(frozen=True)
class FrontendConfig:
    frame_len: float = 0.025
    frame_hop: float = 0.010
    n_mel_filters: int = 27
    n_static_ceps: int = 19
    pre_emphasis: float = 0.97
    vad_threshold_db: float = 30.0
    delta_window: int = 2
    mel_low_hz: float = 64.0

    def __post_init__(self):
        if not 0 < self.frame_hop <= self.frame_len:
            raise DomainError("require 0 < frame_hop <= frame_len")
        if not 0 < self.n_static_ceps < self.n_mel_filters:
            raise DomainError("require 0 < n_static_ceps < n_mel_filters")
        if self.delta_window < 1:
            raise DomainError("delta_window must be >= 1")

    def frame_len_samples(self, sample_rate: int) -> int:
        return int(round(self.frame_len * sample_rate))

    def frame_hop_samples(self, sample_rate: int) -> int:
        return int(round(self.frame_hop * sample_rate))


@dataclass
class FeatureMatrix:
    """Per-frame feature rows plus (optionally) the frame center times."""

    rows: np.ndarray
    frame_times: np.ndarray | None = None

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.float64)
        if self.rows.ndim != 2:
            raise DomainError(f"feature rows must be 2-D, got shape {self.rows.shape}")
        if self.frame_times is not None:
            self.frame_times = np.asarray(self.frame_times, dtype=np.float64)

    @property
    def n_frames(self) -> int:
        return self.rows.shape[0]

    @property
    def dim(self) -> int:
        return self.rows.shape[1]


def frame_signal(wave: Waveform, cfg: FrontendConfig) -> np.ndarray:
    """Pre-emphasize, slice into hopped frames, apply a Hamming window.

    Returns an (n_frames, frame_len_samples) array with
    n_frames = 1 + floor((N - L) / H).
    """
    x = np.asarray(wave.samples, dtype=np.float64)
    length = cfg.frame_len_samples(wave.sample_rate)
    hop = cfg.frame_hop_samples(wave.sample_rate)
    if len(x) < length:
        raise DomainError(f"waveform too short: {len(x)} samples < one frame ({length})")

    emphasized = np.empty_like(x)
    emphasized[0] = x[0]
    emphasized[1:] = x[1:] - cfg.pre_emphasis * x[:-1]

    n_frames = 1 + (len(x) - length) // hop
    idx = np.arange(length)[None, :] + hop * np.arange(n_frames)[:, None]
    return emphasized[idx] * np.hamming(length)


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(n_filters: int, n_fft: int, sample_rate: int,
                   low_hz: float = 64.0) -> np.ndarray:
    """Triangular filters, linear in mel, spanning low_hz..Nyquist."""
    mel_pts = np.linspace(hz_to_mel(low_hz), hz_to_mel(sample_rate / 2.0), n_filters + 2)
    bin_mels = hz_to_mel(np.arange(n_fft // 2 + 1) * sample_rate / n_fft)
    fb = np.zeros((n_filters, len(bin_mels)))
    for i in range(n_filters):
        left, center, right = mel_pts[i], mel_pts[i + 1], mel_pts[i + 2]
        up = (bin_mels - left) / (center - left)
        down = (right - bin_mels) / (right - center)
        fb[i] = np.maximum(0.0, np.minimum(up, down))
    return fb


def filter_center_freqs(n_filters: int, sample_rate: int, low_hz: float = 64.0) -> np.ndarray:
    mel_pts = np.linspace(hz_to_mel(low_hz), hz_to_mel(sample_rate / 2.0), n_filters + 2)
    return mel_to_hz(mel_pts[1:-1])


def mfcc_static(frames: np.ndarray, cfg: FrontendConfig, sample_rate: int) -> np.ndarray:
    """Static cepstra C1..C{n_static_ceps} from windowed frames."""
    n_fft = 1
    while n_fft < frames.shape[1]:
        n_fft *= 2
    power = np.abs(np.fft.rfft(frames, n_fft, axis=1)) ** 2
    fb = mel_filterbank(cfg.n_mel_filters, n_fft, sample_rate, cfg.mel_low_hz)
    log_energies = np.log(np.maximum(power @ fb.T, LOG_ENERGY_FLOOR))
    ceps = sfft.dct(log_energies, type=2, norm="ortho", axis=1)
    return ceps[:, 1:cfg.n_static_ceps + 1]  # C0 carries energy and is dropped


def rasta_filter(ceps: np.ndarray) -> np.ndarray:
    """Band-pass each cepstral trajectory, causal with zero initial state."""
    if ceps.shape[0] < 1:
        raise DomainError("need at least one frame")
    return signal.lfilter(RASTA_NUMER, RASTA_DENOM, ceps, axis=0)


def append_deltas(static: np.ndarray, delta_window: int = 2) -> np.ndarray:
    """Append first and second regression differences (edge frames replicated)."""
    d = _delta(static, delta_window)
    dd = _delta(d, delta_window)
    return np.concatenate([static, d, dd], axis=1)


def _delta(x: np.ndarray, window: int) -> np.ndarray:
    padded = np.pad(x, ((window, window), (0, 0)), mode="edge")
    denom = 2.0 * sum(k * k for k in range(1, window + 1))
    out = np.zeros_like(x)
    n = x.shape[0]
    for k in range(1, window + 1):
        out += k * (padded[window + k:window + k + n] - padded[window - k:window - k + n])
    return out / denom


def energy_vad(frames: np.ndarray, cfg: FrontendConfig) -> np.ndarray:
    """Keep frames within vad_threshold_db of the loudest frame."""
    if frames.shape[0] < 1:
        raise DomainError("need at least one frame")
    energies = np.sum(frames ** 2, axis=1)
    db = 10.0 * np.log10(np.maximum(energies, 1e-300))
    return db >= db.max() - cfg.vad_threshold_db


def vad_sample_mask(mask: np.ndarray, n_samples: int, cfg: FrontendConfig,
                    sample_rate: int) -> np.ndarray:
    """Expand a per-frame selection mask to the samples those frames cover."""
    length = cfg.frame_len_samples(sample_rate)
    hop = cfg.frame_hop_samples(sample_rate)
    out = np.zeros(n_samples, dtype=bool)
    for i in np.flatnonzero(mask):
        out[i * hop:min(i * hop + length, n_samples)] = True
    return out


def cmvn(features: FeatureMatrix) -> FeatureMatrix:
    """Normalize each dimension to zero mean, unit (population) variance.

    Dimensions with near-zero spread are only mean-subtracted.
    """
    rows = features.rows
    if rows.shape[0] < 2:
        raise DomainError("normalization needs at least 2 frames")
    mu = rows.mean(axis=0)
    sigma = rows.std(axis=0)
    sigma = np.where(sigma < 1e-12, 1.0, sigma)
    return FeatureMatrix((rows - mu) / sigma, features.frame_times)


def extract_features(wave: Waveform, cfg: FrontendConfig | None = None) -> FeatureMatrix:
    """Full front-end: frame, cepstra, trajectory filter, deltas, frame
    selection, utterance normalization."""
    cfg = cfg or FrontendConfig()
    frames = frame_signal(wave, cfg)
    ceps = mfcc_static(frames, cfg, wave.sample_rate)
    full = append_deltas(rasta_filter(ceps), cfg.delta_window)
    mask = energy_vad(frames, cfg)
    if int(mask.sum()) < 2:
        raise DomainError("fewer than 2 voiced frames after selection")

    length = cfg.frame_len_samples(wave.sample_rate)
    hop = cfg.frame_hop_samples(wave.sample_rate)
    times = (np.arange(frames.shape[0]) * hop + length / 2.0) / wave.sample_rate
    return cmvn(FeatureMatrix(full[mask], times[mask]))


def save_features(features: FeatureMatrix, path) -> None:
    """Persist rows as '.fmx': ASCII 'n_rows n_dims' header, float64-LE payload."""
    rows = np.ascontiguousarray(features.rows, dtype="<f8")
    header = f"{rows.shape[0]} {rows.shape[1]}\n".encode("ascii")
    try:
        Path(path).write_bytes(header + rows.tobytes())
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def load_features(path) -> FeatureMatrix:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    newline = raw.find(b"\n")
    if newline < 0:
        raise FormatError(f"{path}: missing header line")
    try:
        n_rows, n_dims = (int(tok) for tok in raw[:newline].split())
    except ValueError as exc:
        raise FormatError(f"{path}: malformed header {raw[:newline]!r}") from exc
    payload = raw[newline + 1:]
    expected = n_rows * n_dims * struct.calcsize("<d")
    if len(payload) != expected:
        raise FormatError(f"{path}: payload size {len(payload)} != expected {expected}")
    rows = np.frombuffer(payload, dtype="<f8").reshape(n_rows, n_dims)
    return FeatureMatrix(rows.copy())
