"""Offline reference analyses used to validate the streaming modules.

Nothing here is meant for real-time use: these functions see the whole
signal at once, so they can use zero-phase filtering and dense STFT
peak-picking that a streaming implementation cannot. Tests compare the
streaming traces against these references.
"""

from dataclasses import dataclass

import numpy as np
import scipy.fft
import scipy.signal as sig

STFT_FRAME = 2048
STFT_HOP = 8
STFT_PAD = 4
PEAK_BAND_HZ = (50.0, 2000.0)
_BATCH_FRAMES = 512
_LOG_GUARD = 1e-300


@dataclass(frozen=True)
class OfflineRfsResult:
    """Whole-signal frequency analysis: carrier, shift trace, delay trace."""

    omega_i: np.ndarray
    omega_c: float
    rfs: np.ndarray
    delay: np.ndarray


@dataclass(frozen=True)
class EnvelopeDecomposition:
    """full = lowpassed + residual, with the residual holding the AM."""

    full: np.ndarray
    lowpassed: np.ndarray
    residual: np.ndarray


def offline_rfs_stft(signal, fs: float, hop: int = STFT_HOP,
                     frame_size: int = STFT_FRAME,
                     band_hz: tuple = PEAK_BAND_HZ,
                     omega_c: float | None = None) -> OfflineRfsResult:
    """Dense STFT peak-picking estimate of the relative frequency shift.

    Tracks the strongest spectral peak inside band_hz frame by frame
    (quadratic interpolation on log magnitude over a zero-padded FFT),
    linearly interpolates the per-frame frequencies to signal length, and
    integrates

        rfs(n) = 1 - omega_i(n) / omega_c,    delay(n) = sum rfs

    omega_c defaults to the mean of omega_i; passing it explicitly models a
    mis-set carrier. Note the integration has no DC protection: any carrier
    error accumulates into an unbounded delay ramp, which is exactly the
    failure mode the streaming analyzer's control bandpass exists to fix.
    """
    x = np.asarray(signal, dtype=np.float64)
    n = len(x)
    if n < frame_size:
        raise ValueError(f"need at least {frame_size} samples, got {n}")
    window = np.hanning(frame_size)
    windows = np.lib.stride_tricks.sliding_window_view(x, frame_size)[::hop]
    n_frames = len(windows)

    # The window length caps how fast a modulation this can follow (a 4096
    # window at 44.1k reads 5 Hz FM ~6% shallow); the padded FFT keeps the
    # parabolic interpolation bias well under the smearing it corrects.
    nfft = STFT_PAD * frame_size
    bin_hz = fs / nfft
    lo = max(1, int(np.ceil(band_hz[0] / bin_hz)))
    hi = min(nfft // 2 - 1, int(np.floor(band_hz[1] / bin_hz)))
    if hi <= lo:
        raise ValueError(f"band {band_hz} resolves to no usable bins at fs={fs}")

    peak_hz = np.empty(n_frames)
    for start in range(0, n_frames, _BATCH_FRAMES):
        chunk = windows[start:start + _BATCH_FRAMES] * window
        mag = np.abs(scipy.fft.rfft(chunk, n=nfft, axis=1, workers=-1))
        k = lo + np.argmax(mag[:, lo:hi + 1], axis=1)
        rows = np.arange(len(chunk))
        if np.any(mag[rows, k] < 1e-12):
            raise ValueError("no detectable harmonic peak in at least one frame")
        logs = np.log(mag[:, lo - 1:hi + 2] + _LOG_GUARD)
        a = logs[rows, k - lo]
        b = logs[rows, k - lo + 1]
        c = logs[rows, k - lo + 2]
        denom = a - 2.0 * b + c
        delta = np.where(denom < 0.0, 0.5 * (a - c) / np.where(denom == 0.0, 1.0, denom), 0.0)
        np.clip(delta, -0.5, 0.5, out=delta)
        peak_hz[start:start + len(chunk)] = (k + delta) * bin_hz

    centers = np.arange(n_frames) * hop + (frame_size - 1) / 2.0
    omega_i = np.interp(np.arange(n), centers, peak_hz)
    if omega_c is None:
        omega_c = float(np.mean(omega_i))
    rfs = 1.0 - omega_i / omega_c
    return OfflineRfsResult(omega_i, omega_c, rfs, np.cumsum(rfs))


def offline_envelope_zero_phase(amplitude_trace, fs: float,
                                cutoff_hz: float = 2.0,
                                order: int = 4) -> EnvelopeDecomposition:
    """Zero-phase split of an amplitude trace into slow level and AM residual.

    The slow part is a forward-backward Butterworth lowpass (no phase lag by
    construction); the residual is the exact pointwise remainder.
    """
    full = np.asarray(amplitude_trace, dtype=np.float64)
    sos = sig.butter(order, cutoff_hz, btype="lowpass", output="sos", fs=fs)
    lowpassed = sig.sosfiltfilt(sos, full)
    return EnvelopeDecomposition(full, lowpassed, full - lowpassed)


def naive_autocorrelation(frame, max_lag: int = 0):
    """Direct O(N^2) autocorrelation r and paired-energy term m.

    Independent of the FFT fast path on purpose; the two must agree to
    1e-6 relative wherever m is nonzero.
    """
    x = np.asarray(frame, dtype=np.float64)
    n = len(x)
    if max_lag <= 0:
        max_lag = n // 2
    r = np.zeros(max_lag + 1)
    m = np.zeros(max_lag + 1)
    for tau in range(max_lag + 1):
        head = x[:n - tau]
        tail = x[tau:]
        r[tau] = np.dot(head, tail)
        m[tau] = np.dot(head, head) + np.dot(tail, tail)
    return r, m


def naive_snac_curve(frame, max_lag: int = 0, guard: float = 1e-12):
    """O(N^2) normalized autocorrelation 2r/m (zero where m is negligible)."""
    r, m = naive_autocorrelation(frame, max_lag)
    curve = np.zeros_like(r)
    good = m > guard
    np.divide(2.0 * r, m, out=curve, where=good)
    return curve


def frequency_response(sections, freqs_hz, fs: float) -> np.ndarray:
    """Complex response of a biquad cascade at the given frequencies."""
    sos = np.vstack([s.as_sos_row() for s in sections])
    _, h = sig.sosfreqz(sos, worN=np.asarray(freqs_hz, dtype=np.float64), fs=fs)
    return h
