"""footfall: physically grounded footstep-audio synthesis and passive
walker identification (detection, separation, identification, spatial
estimation, replay defense), scored against synthetic ground truth."""

__version__ = "0.1.0"

from .bss import SeparationScore, score_separation, sdr, sir
from .errors import FootfallError
from .floors import CONCRETE_SLAB, WOOD_JOIST, FloorMaterial, arrival_gap, dispersion_speed
from .footsteps import FootstepPersona, synth_footstep
from .interferers import babble, pink_noise, white_noise
from .nmf import NmfModel, nmf_separate
from .wiener import wiener_residual_suppress
from .scenes import (
    AirSource,
    GroundTruth,
    MicArray,
    Scene,
    StepTruth,
    Trajectory,
    Walker,
    emulate_attack,
    natural_walk,
    render_scene,
)
from .types import MfcFeatures, MultichannelWaveform, Spectrogram, Waveform

__all__ = [
    "AirSource",
    "CONCRETE_SLAB",
    "FloorMaterial",
    "FootfallError",
    "FootstepPersona",
    "GroundTruth",
    "MfcFeatures",
    "MicArray",
    "MultichannelWaveform",
    "NmfModel",
    "Scene",
    "SeparationScore",
    "Spectrogram",
    "StepTruth",
    "Trajectory",
    "WOOD_JOIST",
    "Walker",
    "Waveform",
    "arrival_gap",
    "babble",
    "dispersion_speed",
    "emulate_attack",
    "natural_walk",
    "nmf_separate",
    "pink_noise",
    "render_scene",
    "score_separation",
    "sdr",
    "sir",
    "synth_footstep",
    "white_noise",
    "wiener_residual_suppress",
    "__version__",
]
