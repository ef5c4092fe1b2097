"""Fundamental-frequency estimation on fixed frames.

The estimator computes a specially normalized autocorrelation: the plain
autocorrelation r(tau) over the shrinking overlap window is divided by the
per-lag signal energy m(tau), giving a curve in [-1, 1] whose peaks mark
period candidates regardless of input level. Candidate peaks after the
first negative-going zero crossing are weighted by a gentle downward ramp
in lag (so the fundamental beats its multiples), compared by interpolated
height, and the winner's lag is refined by parabolic interpolation on the
unweighted curve for sub-sample period accuracy.

Frames are processed independently; the caller owns framing and hop.
"""

from dataclasses import dataclass, field

import numpy as np

ENERGY_GUARD = 1e-12


@dataclass(frozen=True)
class PitchEstimate:
    f0: float
    peak_value: float
    valid: bool


@dataclass(frozen=True)
class SnacConfig:
    fs: float
    frame_size: int = 2048
    hop: int = field(default=0)
    bias_slope: float = -0.2
    silence_floor_db: float = -80.0

    def __post_init__(self):
        if self.frame_size < 64 or self.frame_size & (self.frame_size - 1):
            raise ValueError("frame_size must be a power of two >= 64")
        if self.hop == 0:
            object.__setattr__(self, "hop", self.frame_size)
        if self.hop != self.frame_size:
            raise ValueError("frames are non-overlapping; hop must equal frame_size")

    @classmethod
    def for_sample_rate(cls, fs: float) -> "SnacConfig":
        """Default frame doubled as needed to keep >= 2048/48000 s of context."""
        frame = 2048
        while frame / fs < 2048.0 / 48000.0:
            frame *= 2
        return cls(fs=fs, frame_size=frame)


class SnacPitchDetector:
    def __init__(self, config: SnacConfig):
        self.config = config

    def analyze_frame(self, frame: np.ndarray) -> PitchEstimate:
        cfg = self.config
        frame = np.asarray(frame, dtype=np.float64)
        if len(frame) != cfg.frame_size:
            raise ValueError(f"expected frame of {cfg.frame_size} samples, got {len(frame)}")
        rms = np.sqrt(np.mean(frame * frame))
        if rms < 10.0 ** (cfg.silence_floor_db / 20.0):
            return PitchEstimate(0.0, 0.0, False)
        ncurve, good = snac_curve(frame)
        picked = pick_period(ncurve, good, cfg.bias_slope)
        if picked is None:
            return PitchEstimate(0.0, 0.0, False)
        lag, value = picked
        return PitchEstimate(cfg.fs / lag, value, True)


def snac_curve(frame: np.ndarray, max_lag: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Normalized autocorrelation for lags 0..max_lag (frame_size/2 default).

    n(tau) = 2 r(tau) / m(tau) with r from the FFT and m from running energy
    sums; lags whose energy m falls under the division guard are masked out.
    Returns (n, usable_mask).
    """
    n_samp = len(frame)
    if max_lag == 0:
        max_lag = n_samp // 2
    spec = np.fft.rfft(frame, 2 * n_samp)
    r = np.fft.irfft(spec * np.conj(spec))[: max_lag + 1]
    sq = np.concatenate([[0.0], np.cumsum(frame * frame)])
    total = sq[-1]
    tau = np.arange(max_lag + 1)
    m = sq[n_samp - tau] + (total - sq[tau])
    good = m > ENERGY_GUARD
    ncurve = np.zeros(max_lag + 1)
    np.divide(2.0 * r, m, out=ncurve, where=good)
    return ncurve, good


def pick_period(ncurve: np.ndarray, good: np.ndarray, bias_slope: float):
    """Best period lag from a normalized-autocorrelation curve, or None.

    Peaks are searched after the first negative-going zero crossing,
    compared by the parabolic height of the lag-biased curve, and the
    winning lag is refined on the unbiased curve.
    """
    tau_max = len(ncurve) - 1
    sign_flip = (ncurve[1:] < 0.0) & (ncurve[:-1] >= 0.0)
    flips = np.nonzero(sign_flip)[0]
    if len(flips) == 0:
        return None
    start = max(int(flips[0]) + 1, 2)
    if start >= tau_max:
        return None
    idx = np.arange(start, tau_max)
    biased = ncurve * (1.0 + bias_slope * np.arange(tau_max + 1) / tau_max)
    is_peak = (
        (biased[idx] > biased[idx - 1])
        & (biased[idx] >= biased[idx + 1])
        & good[idx]
        & good[idx - 1]
        & good[idx + 1]
    )
    peaks = idx[is_peak]
    if len(peaks) == 0:
        return None
    left, mid, right = biased[peaks - 1], biased[peaks], biased[peaks + 1]
    curv = left - 2.0 * mid + right
    offs = np.where(curv < 0.0, 0.5 * (left - right) / np.where(curv == 0.0, 1.0, curv), 0.0)
    heights = mid - 0.25 * (left - right) * offs
    best = peaks[np.argmax(heights)]
    lag, value = _parabolic(ncurve, best)
    if lag <= 0.0:
        return None
    return lag, value


def _parabolic(curve: np.ndarray, i: int) -> tuple[float, float]:
    left, mid, right = curve[i - 1], curve[i], curve[i + 1]
    denom = left - 2.0 * mid + right
    if denom == 0.0:
        return float(i), float(mid)
    off = 0.5 * (left - right) / denom
    return i + off, mid - 0.25 * (left - right) * off
