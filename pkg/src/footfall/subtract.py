"""Multi-band spectral subtraction for stationary background noise.

The spectrum is split into linear bands; each band subtracts an
over-subtraction multiple of the noise power that grows as the band SNR
drops, with a spectral floor keeping a fixed fraction of the noisy power.
"""

from __future__ import annotations

import numpy as np

from .dsp import analyze_padded, synthesize_padded
from .errors import FootfallError
from .types import Spectrogram, Waveform

SPECTRAL_FLOOR = 0.02  # fraction of noisy power kept as floor


def noise_power_profile(noise: Spectrogram) -> np.ndarray:
    """Mean power per frequency bin of a noise-only spectrogram."""
    return np.mean(noise.magnitudes**2, axis=1)


def _oversubtraction(snr_db: np.ndarray) -> np.ndarray:
    """Berouti-style over-subtraction factor from segmental SNR in dB."""
    alpha = 4.0 - 0.15 * snr_db
    alpha = np.where(snr_db < -5.0, 4.75, alpha)
    alpha = np.where(snr_db > 20.0, 1.0, alpha)
    return alpha


def _band_weight(center_hz: float, sample_rate: int) -> float:
    # low frequencies keep speech-like content, mids get scrubbed hardest
    if center_hz <= 1000.0:
        return 1.0
    if center_hz <= sample_rate / 2.0 - 2000.0:
        return 2.5
    return 1.5


def spectral_subtract(
    noisy: Waveform,
    noise_profile: Spectrogram,
    n_bands: int = 4,
    floor: float = SPECTRAL_FLOOR,
) -> Waveform:
    """Subtract a stationary noise estimate from a noisy waveform.

    noise_profile is a spectrogram of a noise-only stretch recorded with the
    same window/hop; its per-bin mean power is the noise estimate. Output has
    exactly the input length; a zero noise profile returns the input intact.
    """
    if n_bands < 1:
        raise FootfallError("n_bands must be >= 1", n_bands=n_bands)
    if noise_profile.sample_rate != noisy.sample_rate:
        raise FootfallError(
            "noise profile sample rate differs from signal",
            signal=noisy.sample_rate,
            profile=noise_profile.sample_rate,
        )
    window_len, hop = noise_profile.window_len, noise_profile.hop
    spec, offset = analyze_padded(noisy, window_len, hop)
    power = spec.magnitudes**2  # (n_bins, n_frames)
    noise_power = noise_power_profile(noise_profile)[:, None]

    n_bins = power.shape[0]
    edges = np.linspace(0, n_bins, n_bands + 1).astype(int)
    bin_freqs = spec.bin_freqs
    cleaned = np.empty_like(power)
    for b in range(n_bands):
        lo, hi = edges[b], edges[b + 1]
        band_power = power[lo:hi]
        band_noise = noise_power[lo:hi]
        noise_energy = float(np.sum(band_noise)) * band_power.shape[1]
        if noise_energy <= 0.0:
            cleaned[lo:hi] = band_power
            continue
        seg_snr = 10.0 * np.log10(
            np.maximum(np.sum(band_power, axis=0), 1e-300) / np.maximum(np.sum(band_noise), 1e-300)
        )
        alpha = _oversubtraction(seg_snr)[None, :]
        delta = _band_weight(float(np.mean(bin_freqs[lo:hi])), noisy.sample_rate)
        cleaned[lo:hi] = np.maximum(band_power - alpha * delta * band_noise, floor * band_power)

    out_spec = Spectrogram(
        magnitudes=np.sqrt(cleaned),
        phase=spec.phase,
        window_len=window_len,
        hop=hop,
        sample_rate=noisy.sample_rate,
    )
    return synthesize_padded(out_spec, offset, noisy.samples.size)
