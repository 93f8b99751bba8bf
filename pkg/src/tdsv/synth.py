"""Deterministic parametric speech synthesizer for desk-scale corpora.

Each utterance is a harmonic source (speaker f0) shaped by a sequence of
formant resonators (vowels chosen by the phrase, offset per speaker), with
a phrase-dependent syllable envelope and low-level seeded noise. Same
arguments always produce bit-identical output.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np
from scipy import signal

from .audio import Waveform
from .errors import DomainError

# (F1, F2, F3) in Hz, loosely after classic vowel-formant measurements
VOWEL_FORMANTS = {
    "a": (730.0, 1090.0, 2440.0),
    "e": (530.0, 1840.0, 2480.0),
    "i": (270.0, 2290.0, 3010.0),
    "o": (570.0, 840.0, 2410.0),
    "u": (300.0, 870.0, 2240.0),
}
_VOWEL_ORDER = "aeiou"
FORMANT_BANDWIDTHS = (90.0, 110.0, 170.0)

F0_MIN = 80.0
F0_MAX = 300.0


@dataclass(frozen=True)
class SynthSpeakerSpec:
    """Parameters defining one synthetic voice."""

    speaker_id: str
    f0: float
    formant_offsets: tuple[float, float, float]
    seed: int

    def __post_init__(self):
        if not F0_MIN <= self.f0 <= F0_MAX:
            raise DomainError(f"f0 must be in [{F0_MIN}, {F0_MAX}] Hz, got {self.f0}")
        if len(self.formant_offsets) != 3:
            raise DomainError("formant_offsets must have exactly three values")


def stable_seed(*parts) -> int:
    """Derive a 63-bit seed from arbitrary values, stable across processes."""
    text = "\x1f".join(repr(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") >> 1


def phrase_vowels(phrase_id: str) -> list[str]:
    """Deterministic vowel sequence for a phrase (3 to 5 vowels)."""
    rng = np.random.default_rng(stable_seed("phrase", phrase_id))
    count = 3 + int(rng.integers(3))
    return [_VOWEL_ORDER[int(rng.integers(len(_VOWEL_ORDER)))] for _ in range(count)]


def _resonator_sos(freq: float, bandwidth: float, sample_rate: int) -> np.ndarray:
    # two-pole resonance, unity gain at the resonant frequency
    r = np.exp(-np.pi * bandwidth / sample_rate)
    theta = 2.0 * np.pi * freq / sample_rate
    a = [1.0, -2.0 * r * np.cos(theta), r * r]
    gain = abs(np.polyval(a[::-1], np.exp(-1j * theta)))
    return np.array([[gain, 0.0, 0.0, a[0], a[1], a[2]]])


def synth_utterance(spec: SynthSpeakerSpec, phrase_id: str, duration: float,
                    sample_rate: int) -> Waveform:
    """Render one utterance; pure function of its arguments, peak 0.9."""
    if not 0.5 <= duration <= 10.0:
        raise DomainError(f"duration must be in [0.5, 10] s, got {duration}")

    n = int(round(duration * sample_rate))
    t = np.arange(n) / sample_rate
    rng = np.random.default_rng(
        stable_seed(spec.seed, spec.speaker_id, phrase_id, duration, sample_rate))
    phrase_rng = np.random.default_rng(stable_seed("phrase-shape", phrase_id))

    # session-level drift keeps repeated recordings of one speaker apart
    f0_drift = 1.0 + 0.01 * rng.uniform(-1.0, 1.0)
    formant_drift = 1.0 + 0.015 * rng.uniform(-1.0, 1.0, size=3)
    # phrase coloring: shared by all speakers, smaller than speaker offsets
    phrase_shift = phrase_rng.uniform(-60.0, 60.0, size=3)

    # slowly modulated pitch contour, integrated to a phase track
    contour_rate = 1.2 + 1.5 * phrase_rng.random()
    contour_phase = 2.0 * np.pi * phrase_rng.random()
    f0_track = spec.f0 * f0_drift * (1.0 + 0.015 * np.sin(2.0 * np.pi * contour_rate * t
                                                          + contour_phase))
    phase = 2.0 * np.pi * np.cumsum(f0_track) / sample_rate

    n_harmonics = max(1, int(0.45 * sample_rate / (spec.f0 * 1.03)))
    source = np.zeros(n)
    for h in range(1, n_harmonics + 1):
        source += np.sin(h * phase) / h

    vowels = phrase_vowels(phrase_id)
    # syllable boundaries at jittered equal fractions of the utterance
    fractions = np.cumsum(1.0 + 0.2 * phrase_rng.uniform(-1.0, 1.0, size=len(vowels)))
    fractions = np.concatenate([[0.0], fractions / fractions[-1]])
    bounds = np.round(fractions * n).astype(int)

    out = np.zeros(n)
    for k, vowel in enumerate(vowels):
        lo, hi = bounds[k], bounds[k + 1]
        if hi - lo < 8:
            continue
        env = np.zeros(n)
        env[lo:hi] = np.hanning(hi - lo)
        seg = source * env
        for f_nom, offset, shift, bw, drift in zip(VOWEL_FORMANTS[vowel], spec.formant_offsets,
                                                   phrase_shift, FORMANT_BANDWIDTHS,
                                                   formant_drift):
            freq = (f_nom + offset + shift) * drift
            freq = min(max(freq, 120.0), 0.45 * sample_rate)
            seg = signal.sosfilt(_resonator_sos(freq, bw, sample_rate), seg)
        out += seg

    out += 0.003 * np.max(np.abs(out)) * rng.standard_normal(n)
    peak = np.max(np.abs(out))
    if peak > 0:
        out *= 0.9 / peak
    return Waveform(out, sample_rate)


def hall_impulse_response(sample_rate: int, duration: float = 0.25, decay: float = 0.05,
                          seed: int = 7321) -> Waveform:
    """Synthetic exponentially decaying reverberant impulse response."""
    rng = np.random.default_rng(stable_seed("hall-ir", seed, sample_rate, duration, decay))
    n = int(round(duration * sample_rate))
    t = np.arange(n) / sample_rate
    tail = rng.standard_normal(n) * np.exp(-t / decay)
    h = 0.4 * tail / np.max(np.abs(tail))
    h[0] = 1.0  # direct path
    return Waveform(h, sample_rate)


def market_noise(sample_rate: int, duration: float = 10.0, seed: int = 90210) -> Waveform:
    """Babble-like broadband noise with slow amplitude modulation."""
    rng = np.random.default_rng(stable_seed("market-noise", seed, sample_rate, duration))
    n = int(round(duration * sample_rate))
    x = rng.standard_normal(n)
    sos = signal.butter(2, [150.0, min(4000.0, 0.45 * sample_rate)], btype="bandpass",
                        fs=sample_rate, output="sos")
    x = signal.sosfilt(sos, x)
    slow = signal.sosfilt(signal.butter(2, 3.0, fs=sample_rate, output="sos"),
                          rng.standard_normal(n))
    slow = slow / (np.max(np.abs(slow)) + 1e-12)
    x *= 1.0 + 0.5 * slow
    return Waveform(0.5 * x / np.max(np.abs(x)), sample_rate)


def car_noise(sample_rate: int, duration: float = 10.0, seed: int = 31337) -> Waveform:
    """Low-frequency rumble with a faint broadband floor."""
    rng = np.random.default_rng(stable_seed("car-noise", seed, sample_rate, duration))
    n = int(round(duration * sample_rate))
    rumble = signal.sosfilt(signal.butter(2, 120.0, fs=sample_rate, output="sos"),
                            rng.standard_normal(n))
    floor = 0.02 * rng.standard_normal(n)
    x = rumble / np.max(np.abs(rumble)) + floor
    return Waveform(0.5 * x / np.max(np.abs(x)), sample_rate)
