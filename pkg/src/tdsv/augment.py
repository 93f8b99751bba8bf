"""Enrollment-data augmentation transforms and SNR-calibrated noise mixing.

All transforms are pure functions that preserve sample rate and length.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .audio import Waveform
from .errors import DomainError

AUGMENT_KINDS = ("pitch_shift", "wow", "harmonic_distortion", "impulse_response", "sound_mix")


@dataclass(frozen=True)
class WowParams:
    """Periodic time-warp parameters: warp(t) = t + a*sin(2*pi*f*t)/(2*pi*f)."""

    a: float = 3.0
    f: float = 2.0

    def __post_init__(self):
        if self.a < 0:
            raise DomainError(f"warp depth must be >= 0, got {self.a}")
        if self.f <= 0:
            raise DomainError(f"modulation frequency must be > 0, got {self.f}")


@dataclass(frozen=True)
class AugmentSpec:
    """One augmentation system's transform and parameters."""

    kind: str
    semitones: tuple[int, ...] = (1, 2)  # pitch_shift emits one variant per value
    wow: WowParams = field(default_factory=WowParams)
    distortion_depth: int = 5
    ir_path: str | None = None
    mix_partner: str | None = None

    def __post_init__(self):
        if self.kind not in AUGMENT_KINDS:
            raise DomainError(f"unknown augmentation kind {self.kind!r}")
        if self.kind == "pitch_shift" and not self.semitones:
            raise DomainError("pitch_shift needs at least one semitone value")
        if self.kind == "harmonic_distortion" and self.distortion_depth < 0:
            raise DomainError("distortion depth must be >= 0")


def _next_pow2(n: int) -> int:
    p = 1
    while p < n:
        p *= 2
    return p


def _phase_vocoder_stretch(x: np.ndarray, stretch: float, n_fft: int, hop: int) -> np.ndarray:
    """Time-stretch by `stretch` (>1 lengthens) preserving pitch."""
    _, _, Z = signal.stft(x, window="hann", nperseg=n_fft, noverlap=n_fft - hop,
                          boundary="zeros", padded=True)
    n_bins, n_frames = Z.shape
    steps = np.arange(0, n_frames, 1.0 / stretch)
    omega = 2.0 * np.pi * np.arange(n_bins) * hop / n_fft  # expected advance per hop

    Zp = np.pad(Z, ((0, 0), (0, 2)))
    out = np.zeros((n_bins, len(steps)), dtype=complex)
    phase = np.angle(Z[:, 0])
    for i, step in enumerate(steps):
        j = int(step)
        frac = step - j
        mag = (1.0 - frac) * np.abs(Zp[:, j]) + frac * np.abs(Zp[:, j + 1])
        out[:, i] = mag * np.exp(1j * phase)
        dphi = np.angle(Zp[:, j + 1]) - np.angle(Zp[:, j]) - omega
        dphi -= 2.0 * np.pi * np.round(dphi / (2.0 * np.pi))
        phase += omega + dphi

    _, y = signal.istft(out, window="hann", nperseg=n_fft, noverlap=n_fft - hop,
                        input_onesided=True, boundary=True)
    return np.asarray(y, dtype=np.float64)


def pitch_shift(wave: Waveform, semitones: float) -> Waveform:
    """Shift pitch by a semitone count without changing duration.

    Phase-vocoder time stretch by 2**(semitones/12) followed by reading the
    stretched signal back at the same factor.
    """
    if not -12 <= semitones <= 12:
        raise DomainError(f"semitone shift must be in [-12, 12], got {semitones}")
    x = np.asarray(wave.samples, dtype=np.float64)
    n = len(x)
    factor = 2.0 ** (semitones / 12.0)

    n_fft = min(_next_pow2(int(0.064 * wave.sample_rate)), max(_next_pow2(n) // 2, 32))
    hop = max(n_fft // 4, 1)
    stretched = _phase_vocoder_stretch(x, factor, n_fft, hop)

    positions = np.arange(n) * factor
    need = int(np.ceil(positions[-1])) + 2 if n else 0
    if len(stretched) < need:
        stretched = np.pad(stretched, (0, need - len(stretched)))
    return Waveform(np.interp(positions, np.arange(len(stretched)), stretched),
                    wave.sample_rate)


def wow_resample(wave: Waveform, params: WowParams) -> Waveform:
    """Periodic time-warp: output at time t reads the input at
    t + a*sin(2*pi*f*t)/(2*pi*f), linearly interpolated."""
    n = len(wave.samples)
    if params.a > 0 and params.a / (2.0 * np.pi * params.f) >= wave.duration:
        raise DomainError("warp excursion a/(2*pi*f) must stay below the utterance duration")
    t = np.arange(n) / wave.sample_rate
    # source position in samples; written so a=0 gives exact integers
    positions = np.arange(n, dtype=np.float64) + (
        params.a * np.sin(2.0 * np.pi * params.f * t) * wave.sample_rate
        / (2.0 * np.pi * params.f))
    out = np.interp(positions, np.arange(n), wave.samples)
    return Waveform(out, wave.sample_rate)


def harmonic_distort(wave: Waveform, depth: int) -> Waveform:
    """Apply y <- sin(pi/2 * y) `depth` times per sample."""
    if depth < 0:
        raise DomainError(f"depth must be >= 0, got {depth}")
    y = np.array(wave.samples, dtype=np.float64, copy=True)
    for _ in range(depth):
        y = np.sin(0.5 * np.pi * y)
    return Waveform(y, wave.sample_rate)


def apply_ir(wave: Waveform, ir: Waveform, normalize: bool = True) -> Waveform:
    """Convolve with an impulse response, truncated to the input length.

    If the convolution exceeds full scale the output is rescaled back to the
    input's peak (disable with normalize=False).
    """
    if ir.sample_rate != wave.sample_rate:
        raise DomainError(f"sample rate mismatch: {wave.sample_rate} vs {ir.sample_rate}")
    if len(ir.samples) == 0:
        raise DomainError("impulse response is empty")
    y = signal.convolve(wave.samples, ir.samples, method="auto")[:len(wave.samples)]
    if normalize:
        peak = np.max(np.abs(y), initial=0.0)
        if peak > 1.0:
            in_peak = np.max(np.abs(wave.samples), initial=0.0)
            y = y * (in_peak / peak)
    return Waveform(y, wave.sample_rate)


def _loop_to_length(x: np.ndarray, n: int) -> np.ndarray:
    if len(x) == 0:
        raise DomainError("cannot loop an empty signal")
    reps = -(-n // len(x))
    return np.tile(x, reps)[:n]


def sound_mix(wave: Waveform, partner: Waveform) -> Waveform:
    """Average with another utterance (looped/truncated to length)."""
    if partner.sample_rate != wave.sample_rate:
        raise DomainError(f"sample rate mismatch: {wave.sample_rate} vs {partner.sample_rate}")
    if len(partner.samples) == 0:
        raise DomainError("mix partner is empty")
    mixed = 0.5 * (wave.samples + _loop_to_length(partner.samples, len(wave.samples)))
    peak = np.max(np.abs(mixed), initial=0.0)
    if peak > 1.0:
        mixed = mixed * (0.99 / peak)
    return Waveform(mixed, wave.sample_rate)


def add_noise_snr(wave: Waveform, noise: Waveform, snr_db: float,
                  vad_mask: np.ndarray) -> Waveform:
    """Mix in noise scaled to a target SNR.

    Speech power is the mean square over VAD-selected samples (simplified
    active speech level); noise power is measured over the same samples of
    the looped noise. No clipping here; that happens at write time.
    """
    if noise.sample_rate != wave.sample_rate:
        raise DomainError(f"sample rate mismatch: {wave.sample_rate} vs {noise.sample_rate}")
    mask = np.asarray(vad_mask, dtype=bool)
    if mask.shape != wave.samples.shape:
        raise DomainError("vad_mask must have one flag per sample")
    if not mask.any():
        raise DomainError("vad_mask selects no samples")

    looped = _loop_to_length(np.asarray(noise.samples, dtype=np.float64), len(wave.samples))
    p_speech = float(np.mean(wave.samples[mask] ** 2))
    p_noise = float(np.mean(looped[mask] ** 2))
    if p_noise <= 0.0:
        raise DomainError("noise has zero power over the gated region")
    if p_speech <= 0.0:
        raise DomainError("speech has zero power over the gated region")

    gain = np.sqrt(p_speech / (p_noise * 10.0 ** (snr_db / 10.0)))
    return Waveform(wave.samples + gain * looped, wave.sample_rate)


def augment_variants(wave: Waveform, spec: AugmentSpec, ir: Waveform | None = None,
                     partner: Waveform | None = None) -> list[Waveform]:
    """All augmented copies of one utterance under a spec.

    pitch_shift yields one variant per configured semitone value; the other
    kinds yield exactly one. impulse_response needs `ir`, sound_mix needs
    `partner`.
    """
    if spec.kind == "pitch_shift":
        return [pitch_shift(wave, s) for s in spec.semitones]
    if spec.kind == "wow":
        return [wow_resample(wave, spec.wow)]
    if spec.kind == "harmonic_distortion":
        return [harmonic_distort(wave, spec.distortion_depth)]
    if spec.kind == "impulse_response":
        if ir is None:
            raise DomainError("impulse_response augmentation needs an IR waveform")
        return [apply_ir(wave, ir)]
    if spec.kind == "sound_mix":
        if partner is None:
            raise DomainError("sound_mix augmentation needs a partner waveform")
        return [sound_mix(wave, partner)]
    raise DomainError(f"unknown augmentation kind {spec.kind!r}")
