"""Pulse design for multicarrier transmission over WSSUS doubly-dispersive channels."""

from .channel import ScatteringFunction, flat_scattering, sample_realization
from .cpmaps import SystemConfig, evaluate, gain, interference, sinr
from .frames import FrameError, frame_bounds, orthogonalize
from .optim import DesignResult, gain_optimize, sinr_optimize
from .tfcore import Lattice, Pulse, TFShiftIndex, gaussian_pulse, tf_shift

__version__ = "0.1.0"

__all__ = [
    "DesignResult", "FrameError", "Lattice", "Pulse", "ScatteringFunction", "SystemConfig",
    "TFShiftIndex", "evaluate", "flat_scattering", "frame_bounds", "gain", "gain_optimize",
    "gaussian_pulse", "interference", "orthogonalize", "sample_realization", "sinr",
    "sinr_optimize", "tf_shift",
]
