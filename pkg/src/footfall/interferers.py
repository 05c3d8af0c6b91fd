"""Interference generators: ambient noise beds and synthetic voice babble.

Noise beds come back at unit RMS so the scene mixer can scale them to any
target signal-to-noise ratio. Babble is a harmonic-plus-noise chorus driven
by seeded pitch contours. Pitch stays at or above 110 Hz so the chorus never
imitates the low resonances of a footstep, and syllable timing is drawn
aperiodically so the chorus cannot carry a walking-pace rhythm.
"""

from __future__ import annotations

import numpy as np

from .errors import FootfallError
from .types import Waveform

VOICE_TOP_HZ = 3800.0
_BREATH_LO_HZ = 300.0
_BREATH_LEVEL = 0.12
_SYLLABLE_RAMP_S = 0.02


def white_noise(n: int, rng: np.random.Generator) -> np.ndarray:
    """Unit-RMS white noise, n samples."""
    if n <= 0:
        raise FootfallError("sample count must be positive", n=n)
    x = rng.standard_normal(n)
    return x / np.sqrt(np.mean(x * x))


def pink_noise(n: int, rng: np.random.Generator) -> np.ndarray:
    """Unit-RMS noise with power density falling as 1/f.

    White noise is shaped in the frequency domain by 1/sqrt(f); the DC bin is
    zeroed. Equal energy per octave, 3 dB down per octave in density.
    """
    if n <= 0:
        raise FootfallError("sample count must be positive", n=n)
    spectrum = np.fft.rfft(rng.standard_normal(n))
    f = np.fft.rfftfreq(n)
    spectrum[0] = 0.0
    spectrum[1:] /= np.sqrt(f[1:] / f[1])
    x = np.fft.irfft(spectrum, n)
    return x / np.sqrt(np.mean(x * x))


def _pitch_contour(n: int, sample_rate: int, rng: np.random.Generator,
                   lo: float, hi: float) -> np.ndarray:
    """Slowly wandering fundamental, clipped to [lo, hi] Hz."""
    base = rng.uniform(lo * 1.05, hi * 0.9)
    n_ctrl = max(4, int(3 * n / sample_rate) + 2)
    ctrl = np.cumsum(rng.normal(0.0, 0.06, n_ctrl))
    ctrl -= ctrl.mean()
    wobble = np.interp(np.arange(n), np.linspace(0, n - 1, n_ctrl), ctrl)
    return np.clip(base * np.exp(wobble), lo, hi)


def _syllable_envelope(n: int, sample_rate: int, rng: np.random.Generator) -> np.ndarray:
    """On/off amplitude gating with aperiodic syllable and pause lengths."""
    env = np.zeros(n)
    ramp = int(_SYLLABLE_RAMP_S * sample_rate)
    t = int(rng.uniform(0.0, 0.12) * sample_rate)
    while t < n:
        dur = int(rng.uniform(0.09, 0.28) * sample_rate)
        gap = int(rng.uniform(0.04, 0.18) * sample_rate)
        seg = min(dur, n - t)
        shape = np.ones(seg)
        edge = min(ramp, seg // 2)
        if edge > 0:
            fade = 0.5 - 0.5 * np.cos(np.pi * np.arange(edge) / edge)
            shape[:edge] = fade
            shape[seg - edge:] = fade[::-1]
        env[t:t + seg] = shape * rng.uniform(0.5, 1.0)
        t += dur + gap
    return env


def _talker(n: int, sample_rate: int, rng: np.random.Generator,
            lo: float, hi: float) -> np.ndarray:
    top = min(VOICE_TOP_HZ, 0.45 * sample_rate)
    f0 = _pitch_contour(n, sample_rate, rng, lo, hi)
    phase = 2.0 * np.pi * np.cumsum(f0) / sample_rate
    n_harmonics = max(1, int(top / np.max(f0)))
    voiced = np.zeros(n)
    for k in range(1, n_harmonics + 1):
        voiced += np.sin(k * phase) / k

    breath = np.fft.rfft(rng.standard_normal(n))
    f = np.fft.rfftfreq(n, 1.0 / sample_rate)
    breath[(f < _BREATH_LO_HZ) | (f > top)] = 0.0
    breath = np.fft.irfft(breath, n)
    breath *= _BREATH_LEVEL * np.sqrt(np.mean(voiced * voiced)) / max(
        np.sqrt(np.mean(breath * breath)), 1e-300)

    return (voiced + breath) * _syllable_envelope(n, sample_rate, rng)


def babble(duration_s: float, sample_rate: int, rng: np.random.Generator,
           n_talkers: int = 4, pitch_lo: float = 110.0, pitch_hi: float = 290.0) -> Waveform:
    """Unit-RMS chorus of n_talkers synthetic voices."""
    if duration_s <= 0:
        raise FootfallError("duration must be positive", duration_s=duration_s)
    if n_talkers < 1:
        raise FootfallError("need at least one talker", n_talkers=n_talkers)
    if pitch_lo < 110.0 or pitch_hi <= pitch_lo:
        raise FootfallError("pitch range must sit at or above 110 Hz",
                            pitch_lo=pitch_lo, pitch_hi=pitch_hi)
    n = int(round(duration_s * sample_rate))
    x = np.zeros(n)
    for _ in range(n_talkers):
        x += _talker(n, sample_rate, rng, pitch_lo, pitch_hi)
    level = np.sqrt(np.mean(x * x))
    if level < 1e-12:
        raise FootfallError("babble came out silent; duration too short for a syllable")
    return Waveform(x / level, sample_rate)
