"""Mono WAV reading and writing for the command-line front end.

Accepts PCM 8/16/24/32-bit and float WAVs; everything is normalized to
float64 in [-1, 1) for processing. Output is written as float32. Stereo
files are folded to the left channel with a warning since the analysis is
strictly monophonic.
"""

import warnings

import numpy as np
from scipy.io import wavfile

_PCM_SCALE = {
    np.dtype(np.int16): 2.0 ** 15,
    np.dtype(np.int32): 2.0 ** 31,
}


def read_wav(path) -> tuple[int, np.ndarray]:
    """Returns (sample_rate, mono float64 samples)."""
    fs, data = wavfile.read(path)
    if data.ndim == 2:
        warnings.warn(f"{path}: {data.shape[1]} channels, using the left channel")
        data = data[:, 0]
    elif data.ndim != 1:
        raise ValueError(f"{path}: unsupported channel layout {data.shape}")
    if data.dtype in _PCM_SCALE:
        out = data.astype(np.float64) / _PCM_SCALE[data.dtype]
    elif data.dtype == np.uint8:
        out = (data.astype(np.float64) - 128.0) / 128.0
    elif data.dtype in (np.float32, np.float64):
        out = data.astype(np.float64)
    else:
        raise ValueError(f"{path}: unsupported WAV sample format {data.dtype}")
    return int(fs), out


def write_wav(path, fs: int, samples):
    wavfile.write(path, int(fs), np.asarray(samples, dtype=np.float32))
