"""Applies control traces to the input: fractional delay plus gain shaping.

The engine is the playback half of the effect. Each input sample is written
into a 4096-sample ring, read back at the control trace's fractional delay
(512 samples at rest, so the effect reports a fixed 512-sample latency), and
scaled by

    y(n) = (0.707 + alpha_a * e(n)) * x(n)

with the gain factor clamped to [0, 2]. The -3 dB base gain applies even
when the gate is closed so that gating never causes a level jump.

Parameter changes requested through set_params take effect from the next
block and slew over 10 ms to avoid zipper noise.
"""

import math
from dataclasses import dataclass

import numpy as np

from .delayline import CAPACITY, DelayLine, _fill_previous

BASE_GAIN = 0.707
GAIN_MIN = 0.0
GAIN_MAX = 2.0
PARAM_SLEW_S = 0.010
LATENCY_SAMPLES = 512


@dataclass(frozen=True)
class TransferParams:
    """User depths: alpha_f scales the delay deviation, alpha_a the AM."""

    alpha_f: float = 1.0
    alpha_a: float = 1.0

    def __post_init__(self):
        for name in ("alpha_f", "alpha_a"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0.0:
                raise ValueError(f"{name} must be finite and >= 0, got {v}")


class TransferEngine:
    """Single-owner streaming processor; pair with a SidechainAnalyzer."""

    def __init__(self, fs: float, params: TransferParams | None = None):
        if fs <= 0:
            raise ValueError("sample rate must be positive")
        self.fs = fs
        self.delay_line = DelayLine(CAPACITY)
        self.nonfinite_inputs = 0
        self.nonfinite_controls = 0
        self.clamp_events = 0
        self._target = params if params is not None else TransferParams()
        self._from = self._target
        self._ramp_start = 0
        self._ramp_len = max(1, round(PARAM_SLEW_S * fs))
        self._pos = 0
        self._last_env = 0.0

    @property
    def latency_samples(self) -> int:
        return LATENCY_SAMPLES

    @property
    def params(self) -> TransferParams:
        return self._target

    def set_params(self, params: TransferParams):
        """Retargets both depths; effective values ramp over the next 10 ms."""
        if not isinstance(params, TransferParams):
            params = TransferParams(*params)
        self._from = self.effective_params()
        self._target = params
        self._ramp_start = self._pos

    def effective_params(self) -> TransferParams:
        """The slewed values at the current stream position."""
        t = (self._pos - self._ramp_start) / self._ramp_len
        if t >= 1.0:
            return self._target
        return TransferParams(
            self._from.alpha_f + (self._target.alpha_f - self._from.alpha_f) * t,
            self._from.alpha_a + (self._target.alpha_a - self._from.alpha_a) * t,
        )

    def process_block(self, block: np.ndarray, controls) -> np.ndarray:
        """Delays the block per controls.delay and applies the gain shaper.

        Non-finite input samples are zeroed, non-finite control values fall
        back to the previous valid value; both are counted in diagnostics.
        """
        x = np.asarray(block, dtype=np.float64)
        n = len(x)
        if n != len(controls.delay):
            raise ValueError(
                f"input length {n} does not match controls length {len(controls.delay)}"
            )
        finite = np.isfinite(x)
        if not finite.all():
            self.nonfinite_inputs += int(n - finite.sum())
            x = np.where(finite, x, 0.0)
        env = controls.envelope
        bad = ~np.isfinite(env)
        if bad.any():
            self.nonfinite_controls += int(bad.sum())
            env = _fill_previous(env, bad, self._last_env)
        self._last_env = float(env[-1])

        before = self.delay_line.nonfinite_delays
        out = self.delay_line.write_read_block(x, controls.delay)
        self.nonfinite_controls += self.delay_line.nonfinite_delays - before

        alpha_a = self._alpha_a_values(n)
        gain = alpha_a * env
        gain += BASE_GAIN
        outside = np.count_nonzero((gain < GAIN_MIN) | (gain > GAIN_MAX))
        if outside:
            self.clamp_events += int(outside)
            np.clip(gain, GAIN_MIN, GAIN_MAX, out=gain)
        out *= gain
        self._pos += n
        return out

    def reset(self):
        self.delay_line.reset()
        self._last_env = 0.0
        self._from = self._target
        self._ramp_start = self._pos

    def _alpha_a_values(self, n: int):
        off = self._pos - self._ramp_start
        if off >= self._ramp_len:
            return self._target.alpha_a
        t = np.arange(off, off + n, dtype=np.float64)
        t /= self._ramp_len
        np.clip(t, 0.0, 1.0, out=t)
        start = self._from.alpha_a
        ramped = start + (self._target.alpha_a - start) * t
        # past the ramp end the target applies verbatim, not via the lerp,
        # so the value cannot depend on how the stream was blocked
        return np.where(t >= 1.0, self._target.alpha_a, ramped)
