"""Real-time vibrato transfer: analyze a sidechain, modulate another signal.

The analyzer extracts per-sample FM (as a fractional-delay trace) and AM
(as a zero-centered envelope) from the sidechain; the engine applies them
to the input through a modulated delay line and a gain shaper. See the CLI
entry point `vibrato-transfer` for file-based use.
"""

from .analytic import AnalyticEstimator, instantaneous_amplitude, instantaneous_frequency
from .analyzer import (
    ControlBlock,
    GateMode,
    GateState,
    SidechainAnalyzer,
    compute_rfs,
)
from .delayline import DelayLine
from .engine import TransferEngine, TransferParams
from .filters import BandpassSpec, BiquadCascade, BiquadCoeffs, design_butterworth_bandpass
from .pitch import PitchEstimate, SnacConfig, SnacPitchDetector

__version__ = "0.1.0"

__all__ = [
    "AnalyticEstimator",
    "BandpassSpec",
    "BiquadCascade",
    "BiquadCoeffs",
    "ControlBlock",
    "DelayLine",
    "GateMode",
    "GateState",
    "PitchEstimate",
    "SidechainAnalyzer",
    "SnacConfig",
    "SnacPitchDetector",
    "TransferEngine",
    "TransferParams",
    "compute_rfs",
    "design_butterworth_bandpass",
    "instantaneous_amplitude",
    "instantaneous_frequency",
    "__version__",
]
