"""Two-source spectral factorization that pulls footsteps out of speech.

The power spectrogram is factored as w @ h with nonnegative templates and
activations under the Itakura-Saito divergence, whose scale invariance suits
audio: a relative error in a quiet bin costs as much as the same relative
error in a loud one, so low-level impact tails are not sacrificed to loud
voice harmonics. The component set is split in two, and the footstep share
starts from activations laid out as a periodic comb at the detected step
rate, so rhythmic energy settles there while sustained speech lands in the
rest. Stems are rebuilt through complementary per-bin Wiener masks and the
inverse transform, which makes them sum back to the input exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dsp import analyze_padded, synthesize_padded
from .errors import FootfallError
from .types import Spectrogram, Waveform

R_FOOTSTEP = 8
R_VOICE = 24  # speech needs the wider template budget for harmonic variety
ITERS = 120

# Relative spectral floor: keeps the divergence finite over padded frames.
_POWER_FLOOR = 1e-10
_COMB_WIDTH_FRAMES = 1.0
_COMB_FLOOR = 0.05


@dataclass
class NmfModel:
    """Factorization state: templates w (bins x components), activations h.

    The first r_footstep components belong to the footstep source, the
    remaining r_voice to the voice source. Template columns carry unit L1
    norm; all the scale lives in h.
    """

    w: np.ndarray
    h: np.ndarray
    r_footstep: int
    r_voice: int

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=np.float64)
        self.h = np.asarray(self.h, dtype=np.float64)
        if self.r_footstep < 1 or self.r_voice < 1:
            raise FootfallError(
                "component split needs at least one component per source",
                r_footstep=self.r_footstep,
                r_voice=self.r_voice,
            )
        r = self.r_footstep + self.r_voice
        if self.w.ndim != 2 or self.h.ndim != 2 or self.w.shape[1] != r or self.h.shape[0] != r:
            raise FootfallError(
                "w/h shapes do not match the component split",
                w_shape=tuple(self.w.shape),
                h_shape=tuple(self.h.shape),
                r=r,
            )
        if not (np.all(np.isfinite(self.w)) and np.all(np.isfinite(self.h))):
            raise FootfallError("model entries must be finite")
        if np.any(self.w < 0.0) or np.any(self.h < 0.0):
            raise FootfallError("model entries must be nonnegative")
        col = self.w.sum(axis=0)
        if np.any(np.abs(col - 1.0) > 1e-6):
            raise FootfallError(
                "template columns must have unit L1 norm",
                worst=float(np.max(np.abs(col - 1.0))),
            )

    def source_powers(self) -> tuple[np.ndarray, np.ndarray]:
        """Modelled power of each source, shapes (n_bins, n_frames)."""
        rf = self.r_footstep
        return self.w[:, :rf] @ self.h[:rf], self.w[:, rf:] @ self.h[rf:]


def is_divergence(p: np.ndarray, v: np.ndarray) -> float:
    """Itakura-Saito divergence between observed power p and model v."""
    r = p / v
    return float(np.sum(r - np.log(r) - 1.0))


def comb_activations(n_frames: int, period_frames: float, n_components: int,
                     rng: np.random.Generator) -> np.ndarray:
    """Periodic activation prior: one bump per step period.

    Components are staggered one frame apart so that together they can carry
    the attack and the decay tail of each impact; a small positive floor
    leaves the factorization free to move energy elsewhere.
    """
    if period_frames <= 0:
        raise FootfallError("comb period must be positive", period_frames=period_frames)
    t = np.arange(n_frames, dtype=np.float64)
    rows = np.empty((n_components, n_frames))
    for j in range(n_components):
        phase = np.mod(t - j, period_frames)
        dist = np.minimum(phase, period_frames - phase)
        rows[j] = _COMB_FLOOR + np.exp(-0.5 * (dist / _COMB_WIDTH_FRAMES) ** 2)
    return rows * rng.uniform(0.9, 1.1, size=rows.shape)


def onset_comb(power: np.ndarray, period_frames: float, n_components: int,
               rng: np.random.Generator, tail: int = 8) -> np.ndarray:
    """Periodic comb snapped to the observed impact onsets.

    Energy peaks at least 0.6 period apart, visited loudest first, give the
    onset set; each opens a short activation window for the attack and the
    decay tail. The exact zeros between windows are absorbing under
    multiplicative updates, so footstep components initialized this way can
    never drift into modelling the continuous interference. Falls back to
    the free-phase comb when no clear impacts stand out.
    """
    if period_frames <= 0:
        raise FootfallError("comb period must be positive", period_frames=period_frames)
    energy = power.sum(axis=0)
    n = energy.size
    min_gap = max(1, int(round(0.6 * period_frames)))
    floor = np.quantile(energy, 0.4)
    want = int(n / period_frames) + 2
    onsets: list[int] = []
    for k in np.argsort(energy)[::-1]:
        if energy[k] < 2.0 * floor or len(onsets) >= want:
            break
        if all(abs(k - o) >= min_gap for o in onsets):
            onsets.append(int(k))
    if not onsets:
        return comb_activations(n, period_frames, n_components, rng)
    h = np.zeros((n_components, n))
    tail = min(tail, max(1, int(0.35 * period_frames)))
    for o in onsets:
        h[:, max(0, o - 1): min(n, o + tail + 1)] = 1.0
    return h * rng.uniform(0.9, 1.1, size=h.shape)


def _floored(power) -> np.ndarray:
    p = np.asarray(power, dtype=np.float64)
    if p.ndim != 2:
        raise FootfallError("power spectrogram must be 2-d", ndim=p.ndim)
    if not np.all(np.isfinite(p)) or np.any(p < 0.0):
        raise FootfallError("power spectrogram must be finite and nonnegative")
    peak = float(p.max()) if p.size else 0.0
    if peak <= 0.0:
        raise FootfallError("mixture has no energy")
    return np.maximum(p, _POWER_FLOOR * peak)


def _mu_sweeps(p, w, h, iters, n_free_cols) -> np.ndarray:
    """In-place multiplicative update sweeps; returns the divergence track.

    Updates use the square-root exponent, the majorization-minimization form
    of the Itakura-Saito updates, so the divergence never rises. Only the
    first n_free_cols template columns move; the rest stay fixed (their
    activations still adapt), which lets a caller pin pre-fitted templates.
    """
    v = w @ h
    h *= p.mean() / v.mean()  # start at the right overall level
    v = w @ h
    track = np.empty(iters + 1)
    track[0] = is_divergence(p, v)
    # the isfinite check below is the real guard; overflow en route to it
    # must not warn
    with np.errstate(all="ignore"):
        for i in range(1, iters + 1):
            h *= np.sqrt((w.T @ (p / (v * v))) / (w.T @ (1.0 / v)))
            v = w @ h
            if n_free_cols > 0:
                free = slice(0, n_free_cols)
                hf = h[free]
                w[:, free] *= np.sqrt(((p / (v * v)) @ hf.T) / ((1.0 / v) @ hf.T))
                # renormalize moved columns; scale shifts into h, w @ h intact
                scale = w[:, free].sum(axis=0, keepdims=True)
                w[:, free] /= scale
                h[free] *= scale.T
                v = w @ h
            d = is_divergence(p, v)
            if not np.isfinite(d):
                raise FootfallError("factorization diverged", iteration=i)
            track[i] = d
    return track


def step_free_frames(power: np.ndarray, loud_frac: float = 0.3, guard: int = 6) -> np.ndarray:
    """Boolean mask of frames almost surely free of footstep energy.

    Footsteps are impulsive: they occupy a minority of frames and push the
    frame energy far above the between-step level. Everything outside the
    loud windows, with a guard for impact decay tails, carries only the
    continuous interference; unlike a lowest-energy pick this keeps the
    interference at all its levels, not just its own quiet gaps.
    """
    energy = power.sum(axis=0)
    keep = np.ones(energy.size, dtype=bool)
    loud = energy >= np.quantile(energy, 1.0 - loud_frac)
    for k in np.flatnonzero(loud):
        keep[max(0, k - guard): k + guard + 1] = False
    return keep


def voice_templates(power: np.ndarray, r_voice: int = R_VOICE, iters: int = ITERS,
                    rng: np.random.Generator | None = None) -> np.ndarray:
    """Spectral templates of the continuous interference, from quiet frames.

    Fits a plain factorization to the footstep-free frames only; the
    resulting unit-L1 columns can be pinned in nmf_fit so the voice share of
    the model is already accurate and the carving of footstep bins that a
    blind fit commits at low SIR never happens.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    p = _floored(power)
    q, n_frames = p.shape
    w = rng.uniform(0.1, 1.0, size=(q, r_voice))
    w /= w.sum(axis=0, keepdims=True)
    h = rng.uniform(0.1, 1.0, size=(r_voice, n_frames))
    _mu_sweeps(p, w, h, iters, r_voice)
    return w


def nmf_fit(power: np.ndarray, period_frames: float, r_foot: int = R_FOOTSTEP,
            r_voice: int = R_VOICE, iters: int = ITERS,
            rng: np.random.Generator | None = None,
            voice_w: np.ndarray | None = None,
            foot_h: np.ndarray | None = None) -> tuple[NmfModel, np.ndarray]:
    """Factor a power spectrogram into footstep and voice components.

    Returns the fitted model and the divergence track (starting value plus
    one entry per sweep); the track is non-increasing. When voice_w is given
    those templates are pinned and only their activations adapt; otherwise
    the voice share starts random and moves freely. foot_h overrides the
    footstep activation start (default: free-phase comb at period_frames).
    """
    if rng is None:
        rng = np.random.default_rng(0)
    if r_foot < 1 or r_voice < 1:
        raise FootfallError("component counts must be >= 1", r_foot=r_foot, r_voice=r_voice)
    if iters < 1:
        raise FootfallError("iters must be >= 1", iters=iters)
    p = _floored(power)
    q, n_frames = p.shape
    r = r_foot + r_voice
    w = np.empty((q, r))
    w[:, :r_foot] = rng.uniform(0.1, 1.0, size=(q, r_foot))
    w[:, :r_foot] /= w[:, :r_foot].sum(axis=0, keepdims=True)
    if voice_w is None:
        w[:, r_foot:] = rng.uniform(0.1, 1.0, size=(q, r_voice))
        w[:, r_foot:] /= w[:, r_foot:].sum(axis=0, keepdims=True)
        n_free = r
    else:
        voice_w = np.asarray(voice_w, dtype=np.float64)
        if voice_w.shape != (q, r_voice):
            raise FootfallError("voice templates have the wrong shape",
                                got=tuple(voice_w.shape), want=(q, r_voice))
        w[:, r_foot:] = voice_w
        n_free = r_foot
    h = np.empty((r, n_frames))
    if foot_h is None:
        h[:r_foot] = comb_activations(n_frames, period_frames, r_foot, rng)
    else:
        foot_h = np.asarray(foot_h, dtype=np.float64)
        if foot_h.shape != (r_foot, n_frames):
            raise FootfallError("footstep activation start has the wrong shape",
                                got=tuple(foot_h.shape), want=(r_foot, n_frames))
        h[:r_foot] = foot_h
    h[r_foot:] = rng.uniform(0.1, 1.0, size=(r_voice, n_frames))
    track = _mu_sweeps(p, w, h, iters, n_free)
    return NmfModel(w=w, h=h, r_footstep=r_foot, r_voice=r_voice), track


def source_masks(model: NmfModel) -> tuple[np.ndarray, np.ndarray]:
    """Complementary Wiener masks for the two sources.

    Each bin is shared in proportion to the modelled powers, so the two
    masks sum to one everywhere and masked stems sum back to the mixture.
    """
    foot, voice = model.source_powers()
    total = np.maximum(foot + voice, 1e-300)
    return foot / total, voice / total


def nmf_separate(mix: Waveform, step_freq: float, r_foot: int = R_FOOTSTEP,
                 r_voice: int = R_VOICE, iters: int = ITERS, window_len: int = 512,
                 hop: int = 256, rng: np.random.Generator | None = None) -> tuple[Waveform, Waveform]:
    """Split a single-channel mixture into footstep and voice stems.

    step_freq is the accepted pace line in Hz; it sets the comb period of
    the footstep activation prior. Both outputs have exactly the input
    length and sum to the input.
    """
    if step_freq <= 0:
        raise FootfallError("step frequency must be positive", step_freq=step_freq)
    if rng is None:
        rng = np.random.default_rng(0)
    spec, offset = analyze_padded(mix, window_len, hop)
    power = spec.magnitudes**2
    frame_rate = mix.sample_rate / hop
    period = frame_rate / step_freq
    quiet = step_free_frames(power)
    # With real interference present, the step-free frames carry a clear
    # energy share; pin voice templates learned there and confine footstep
    # activations to the observed impacts, then refine the templates once on
    # the first pass's voice stem. Without interference (nothing to
    # separate), the free-phase comb alone is transparent and confinement
    # would only clip decay tails.
    if int(quiet.sum()) >= 2 * r_voice and power[:, quiet].sum() > 0.02 * power.sum():
        voice_w = voice_templates(power[:, quiet], r_voice=r_voice, iters=iters, rng=rng)
        foot_h = onset_comb(power, period, r_foot, rng)
        model, _ = nmf_fit(power, period, r_foot=r_foot, r_voice=r_voice,
                           iters=iters, rng=rng, voice_w=voice_w, foot_h=foot_h)
        _, mask_voice = source_masks(model)
        voice_w = voice_templates(mask_voice**2 * power, r_voice=r_voice,
                                  iters=iters, rng=rng)
        model, _ = nmf_fit(power, period, r_foot=r_foot, r_voice=r_voice,
                           iters=iters, rng=rng, voice_w=voice_w, foot_h=foot_h)
    else:
        model, _ = nmf_fit(power, period, r_foot=r_foot, r_voice=r_voice,
                           iters=iters, rng=rng)
    mask_foot, mask_voice = source_masks(model)
    n = mix.samples.size
    stems = []
    for mask in (mask_foot, mask_voice):
        masked = Spectrogram(
            magnitudes=mask * spec.magnitudes,
            phase=spec.phase,
            window_len=window_len,
            hop=hop,
            sample_rate=mix.sample_rate,
        )
        stems.append(synthesize_padded(masked, offset, n))
    return stems[0], stems[1]
