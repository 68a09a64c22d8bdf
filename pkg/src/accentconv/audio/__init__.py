from .dsp import SpectrogramConfig, linear_spectrogram, mel, num_frames
from .io import load_and_standardize, load_wav, resample, save_wav, standardize
from .loudness import integrated_loudness, normalize_loudness
from .perturb import formant_shift, perturb, pitch_shift, time_stretch
from .pitch import PitchConfig, denormalize_f0, extract_f0, normalize_f0
from .types import F0Contour, LinearSpectrogram, MelSpectrogram, PerturbConfig, Waveform

__all__ = [
    "F0Contour",
    "LinearSpectrogram",
    "MelSpectrogram",
    "PerturbConfig",
    "PitchConfig",
    "SpectrogramConfig",
    "Waveform",
    "denormalize_f0",
    "extract_f0",
    "formant_shift",
    "integrated_loudness",
    "linear_spectrogram",
    "load_and_standardize",
    "load_wav",
    "mel",
    "normalize_f0",
    "normalize_loudness",
    "num_frames",
    "perturb",
    "pitch_shift",
    "resample",
    "save_wav",
    "standardize",
    "time_stretch",
]
