"""Circular-buffer delay line with cubic fractional reads.

Fixed power-of-two capacity (4096 by default). Reads are clamped to
[1, capacity - 1]; the floor of 1 keeps the newest interpolation tap inside
written history, the ceiling keeps the oldest tap ahead of the write head.
"""

import math

import numpy as np
from numba import njit

CAPACITY = 4096


@njit(cache=True)
def _read_block(buf, mask, base, delays, min_d, max_d, last, out):
    bad = 0
    for k in range(delays.shape[0]):
        d = delays[k]
        if not math.isfinite(d):
            d = last
            bad += 1
        if d < min_d:
            d = min_d
        elif d > max_d:
            d = max_d
        last = d
        p = float(base + k) - d
        i = int(math.floor(p))
        f = p - i
        s_m1 = buf[(i - 1) & mask]
        s0 = buf[i & mask]
        s1 = buf[(i + 1) & mask]
        s2 = buf[(i + 2) & mask]
        c1 = 0.5 * (s1 - s_m1)
        c2 = s_m1 - 2.5 * s0 + 2.0 * s1 - 0.5 * s2
        c3 = 0.5 * (s2 - s_m1) + 1.5 * (s0 - s1)
        out[k] = ((c3 * f + c2) * f + c1) * f + s0
    return last, bad


@njit(cache=True)
def _write_read_block(buf, mask, base, x, delays, min_d, max_d, last, out):
    bad = 0
    for k in range(delays.shape[0]):
        buf[(base + k) & mask] = x[k]
        d = delays[k]
        if not math.isfinite(d):
            d = last
            bad += 1
        if d < min_d:
            d = min_d
        elif d > max_d:
            d = max_d
        last = d
        p = float(base + k) - d
        i = int(math.floor(p))
        f = p - i
        s_m1 = buf[(i - 1) & mask]
        s0 = buf[i & mask]
        s1 = buf[(i + 1) & mask]
        s2 = buf[(i + 2) & mask]
        c1 = 0.5 * (s1 - s_m1)
        c2 = s_m1 - 2.5 * s0 + 2.0 * s1 - 0.5 * s2
        c3 = 0.5 * (s2 - s_m1) + 1.5 * (s0 - s1)
        out[k] = ((c3 * f + c2) * f + c1) * f + s0
    return last, bad


class DelayLine:
    def __init__(self, capacity: int = CAPACITY):
        if capacity < 8 or capacity & (capacity - 1):
            raise ValueError("capacity must be a power of two >= 8")
        self.capacity = capacity
        self.buffer = np.zeros(capacity)
        self.total_written = 0
        self.min_delay = 1.0
        self.max_delay = float(capacity - 1)
        self.nonfinite_delays = 0
        self._mask = capacity - 1
        self._last_delay = self.min_delay

    @property
    def write_index(self) -> int:
        """Buffer slot of the most recently written sample."""
        return (self.total_written - 1) % self.capacity

    def write(self, x: float):
        self.buffer[self.total_written & self._mask] = x
        self.total_written += 1

    def write_block(self, block: np.ndarray):
        n = len(block)
        if n > self.capacity:
            # only the newest capacity samples survive anyway
            block = block[-self.capacity:]
            self.total_written += n - self.capacity
            n = self.capacity
        start = self.total_written & self._mask
        first = min(n, self.capacity - start)
        self.buffer[start:start + first] = block[:first]
        if first < n:
            self.buffer[:n - first] = block[first:]
        self.total_written += n

    def read_fractional(self, delay: float) -> float:
        """Interpolated sample `delay` samples behind the write head.

        Catmull-Rom over the four taps straddling the read point; non-finite
        requests fall back to the previous valid delay and are counted.
        """
        if not math.isfinite(delay):
            delay = self._last_delay
            self.nonfinite_delays += 1
        d = min(max(delay, self.min_delay), self.max_delay)
        self._last_delay = d
        p = float(self.total_written - 1) - d
        i = math.floor(p)
        frac = p - i
        m = self._mask
        buf = self.buffer
        s_m1 = buf[(i - 1) & m]
        s0 = buf[i & m]
        s1 = buf[(i + 1) & m]
        s2 = buf[(i + 2) & m]
        return _cubic(s_m1, s0, s1, s2, frac)

    def read_fractional_block(self, delays: np.ndarray) -> np.ndarray:
        """Batched read_fractional for one delay per already-written sample.

        delays[k] applies to the stream position that was the write head k+1
        samples ago. That matches interleaved write/read only while the taps
        stay clear of the slots the rest of the block went on to overwrite
        (delays[k] < capacity - len(delays) + k); write_read_block holds the
        interleaved semantics at any delay.
        """
        n = len(delays)
        d = np.ascontiguousarray(delays, dtype=np.float64)
        out = np.empty(n)
        last, bad = _read_block(self.buffer, self._mask, self.total_written - n,
                                d, self.min_delay, self.max_delay,
                                self._last_delay, out)
        self._last_delay = float(last)
        self.nonfinite_delays += int(bad)
        return out

    def write_read_block(self, block: np.ndarray, delays: np.ndarray) -> np.ndarray:
        """Write block[k] then read at delays[k], sample by sample.

        Exactly equivalent to interleaving write(block[k]) /
        read_fractional(delays[k]) for the full delay range, because each
        read sees only the history that existed at its own sample.
        """
        n = len(block)
        if n != len(delays):
            raise ValueError(f"block length {n} != delays length {len(delays)}")
        x = np.ascontiguousarray(block, dtype=np.float64)
        d = np.ascontiguousarray(delays, dtype=np.float64)
        out = np.empty(n)
        last, bad = _write_read_block(self.buffer, self._mask,
                                      self.total_written, x, d,
                                      self.min_delay, self.max_delay,
                                      self._last_delay, out)
        self.total_written += n
        self._last_delay = float(last)
        self.nonfinite_delays += int(bad)
        return out

    def reset(self):
        self.buffer[:] = 0.0
        self.total_written = 0
        self.nonfinite_delays = 0
        self._last_delay = self.min_delay


def _cubic(s_m1, s0, s1, s2, frac):
    # Catmull-Rom; frac = 0 returns s0 exactly
    c0 = s0
    c1 = 0.5 * (s1 - s_m1)
    c2 = s_m1 - 2.5 * s0 + 2.0 * s1 - 0.5 * s2
    c3 = 0.5 * (s2 - s_m1) + 1.5 * (s0 - s1)
    return ((c3 * frac + c2) * frac + c1) * frac + c0


def _fill_previous(values: np.ndarray, bad: np.ndarray, carry: float) -> np.ndarray:
    """Replace flagged entries with the most recent unflagged value."""
    idx = np.where(~bad, np.arange(len(values)), -1)
    np.maximum.accumulate(idx, out=idx)
    out = np.where(idx >= 0, values[np.maximum(idx, 0)], carry)
    return out
