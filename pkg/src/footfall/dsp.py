"""Short-time analysis primitives: STFT, inverse STFT, RMS level."""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import FootfallError
from .types import Spectrogram, Waveform

# Relative floor under which the overlap-add weight is treated as zero.
_OLA_FLOOR = 1e-8


def hann_window(n: int) -> np.ndarray:
    """Periodic Hann window (DFT-even), sums to a constant under 50% overlap."""
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * np.arange(n) / n))


def rms(w: Waveform | np.ndarray) -> float:
    """Root-mean-square level of a waveform."""
    x = w.samples if isinstance(w, Waveform) else np.asarray(w, dtype=np.float64)
    if x.size == 0:
        raise FootfallError("rms of empty waveform")
    return float(np.sqrt(np.mean(x * x)))


def _frame(x: np.ndarray, window_len: int, hop: int) -> np.ndarray:
    """Frames fully inside the signal, shape (n_frames, window_len)."""
    if x.size < window_len:
        raise FootfallError(
            "waveform shorter than analysis window",
            n_samples=int(x.size),
            window_len=window_len,
        )
    return sliding_window_view(x, window_len)[::hop]


def ola_weight(window: np.ndarray, hop: int, n_frames: int) -> np.ndarray:
    """Sum of squared analysis windows overlapped at the given hop."""
    n = (n_frames - 1) * hop + window.size
    den = np.zeros(n)
    wsq = window * window
    for m in range(n_frames):
        den[m * hop : m * hop + window.size] += wsq
    return den


def stft(w: Waveform, window_len: int = 512, hop: int = 256) -> Spectrogram:
    """Magnitude-and-phase STFT with a periodic Hann window.

    Frames lie fully inside the signal (no padding), so shifting the input by
    one hop shifts the frame axis by exactly one column.
    """
    if hop <= 0:
        raise FootfallError("hop must be positive", hop=hop)
    if hop > window_len:
        raise FootfallError(
            "hop larger than window breaks overlap-add reconstruction",
            hop=hop,
            window_len=window_len,
        )
    frames = _frame(w.samples, window_len, hop)
    window = hann_window(window_len)
    z = np.fft.rfft(frames * window, axis=1).T  # (n_bins, n_frames)
    return Spectrogram(
        magnitudes=np.abs(z),
        phase=np.angle(z),
        window_len=window_len,
        hop=hop,
        sample_rate=w.sample_rate,
    )


def istft(spec: Spectrogram) -> Waveform:
    """Weighted overlap-add inverse of stft.

    Interior samples (at least one window away from either edge) reconstruct
    the original signal to well below 1e-6 RMS; edge samples are attenuated
    where the window weight vanishes.
    """
    z = spec.complex_values()
    window = hann_window(spec.window_len)
    frames = np.fft.irfft(z.T, n=spec.window_len, axis=1)
    n_frames = frames.shape[0]
    n = (n_frames - 1) * spec.hop + spec.window_len
    den = ola_weight(window, spec.hop, n_frames)
    # Overlap-add requires the interior weight to stay bounded away from zero.
    interior = den[spec.window_len : n - spec.window_len]
    if interior.size and interior.min() < _OLA_FLOOR * den.max():
        raise FootfallError(
            "window/hop combination is not overlap-add invertible",
            window_len=spec.window_len,
            hop=spec.hop,
        )
    acc = np.zeros(n)
    weighted = frames * window
    for m in range(n_frames):
        acc[m * spec.hop : m * spec.hop + spec.window_len] += weighted[m]
    out = np.where(den > _OLA_FLOOR * den.max(), acc / np.maximum(den, 1e-300), 0.0)
    return Waveform(out, spec.sample_rate)


def narrowband_envelope(x: np.ndarray, sample_rate: int, center_hz: float, bandwidth_hz: float) -> np.ndarray:
    """Amplitude envelope of the signal restricted to one frequency band.

    Complex demodulation at center_hz with a Gaussian low-pass (sigma of
    bandwidth/4, so the band edge sits at two sigma). The Gaussian has no
    sidelobes, so strong out-of-band content cannot masquerade as an early
    arrival. Useful for timing a single arrival whose carrier is known.
    """
    if center_hz <= 0 or bandwidth_hz <= 0:
        raise FootfallError("band must be positive", center_hz=center_hz, bandwidth_hz=bandwidth_hz)
    x = np.asarray(x, dtype=np.float64)
    spectrum = np.fft.fft(x)
    f = np.fft.fftfreq(x.size, 1.0 / sample_rate)
    sigma = 0.25 * bandwidth_hz
    # one-sided mask selects the +center band only, giving the analytic signal
    spectrum *= np.exp(-0.5 * ((f - center_hz) / sigma) ** 2)
    return 2.0 * np.abs(np.fft.ifft(spectrum))


def envelope_peak_time(env: np.ndarray, sample_rate: int) -> float:
    """Sub-sample peak location of an envelope via parabolic interpolation."""
    k = int(np.argmax(env))
    if 0 < k < env.size - 1:
        a, b, c = env[k - 1], env[k], env[k + 1]
        den = a - 2.0 * b + c
        if den < 0:
            k = k + 0.5 * (a - c) / den
    return float(k) / sample_rate


def analyze_padded(w: Waveform, window_len: int, hop: int) -> tuple[Spectrogram, int]:
    """STFT of the zero-padded signal so that every original sample is interior.

    Returns the spectrogram and the offset of the first original sample;
    synthesize_padded inverts it back to the exact original length.
    """
    pad = window_len
    n = w.samples.size
    total = pad + n + pad
    # grow the tail so the last frame covers the padded span
    n_frames = int(np.ceil(max(total - window_len, 0) / hop)) + 1
    total = (n_frames - 1) * hop + window_len
    padded = np.zeros(total)
    padded[pad : pad + n] = w.samples
    return stft(Waveform(padded, w.sample_rate), window_len, hop), pad


def synthesize_padded(spec: Spectrogram, offset: int, n_samples: int) -> Waveform:
    """Inverse of analyze_padded: crop back to the original sample span."""
    full = istft(spec)
    return Waveform(full.samples[offset : offset + n_samples], spec.sample_rate)
