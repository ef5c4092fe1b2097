"""Sidechain analysis: pitch gate plus the per-sample control traces.

Signal flow while the gate is open:

    sidechain -> half-octave bandpass at the locked carrier
              -> analytic pair -> instantaneous frequency / amplitude
              -> relative frequency shift 1 - w_i/w_c (clamped to +/-0.05)
              -> 2-10 Hz bandpass -> running sum -> delay trace
    amplitude -> 2-10 Hz bandpass -> envelope trace

The gate arms on four consecutive consistent pitch estimates from frames
that clear the loudness floor, locks the carrier to their median, and
releases by slewing the delay back to its 512-sample resting point with a
bounded per-sample slope so the handoff never clicks.

Block boundaries never change the result: processing one stream as blocks
of 64 or of 2048 samples yields bit-identical control traces.
"""

import math
from dataclasses import dataclass, field, replace
from enum import IntEnum

import numpy as np
from numba import njit

from .analytic import IN_PHASE_COEFFS, QUADRATURE_COEFFS, allpass_sections
from .filters import BandpassSpec, BiquadCascade, cascade_step, design_butterworth_bandpass
from .pitch import SnacConfig, SnacPitchDetector

BASE_DELAY = 512.0
MIN_DELAY = 1.0
MAX_DELAY = 4095.0
RFS_CLAMP = 0.05
CONTROL_BAND_HZ = (2.0, 10.0)
CONTROL_BAND_POLES = 8
HARMONIC_POLES = 4
HALF_OCTAVE = 2.0 ** 0.25
GATE_RMS_DB = -60.0
STABLE_FRAMES = 4
STABILITY_TOL = 0.03
DEVIANT_FRAMES = 2
LOCK_SMOOTH_TC = 1.0
RETUNE_THRESHOLD = 0.01
RELEASE_TC = 0.2
RELEASE_SLOPE_CAP = 0.002
ENV_RELEASE_TC = 0.05
MAG_EPS_SQ = 1e-12
# both below the release slope cap, so the final snap to neutral is inaudible
NEUTRAL_DEVIATION = 1e-3
NEUTRAL_ENVELOPE = 1e-4
MAX_BLOCK = 2048

_DEV_LO = MIN_DELAY - BASE_DELAY
_DEV_HI = MAX_DELAY - BASE_DELAY


@njit(cache=True)
def _active_chain(x, fs_over_two_pi, w_c, alpha_f,
                  harm_sos, harm_zi, re_sos, re_zi, im_sos, im_zi,
                  rfs_sos, rfs_zi, am_sos, am_zi, carry,
                  out_delay, out_env, out_rfs):
    """One fused pass over an Active segment; all state lives in zi/carry.

    Runs the same per-sample recurrences as the BiquadCascade and
    AnalyticEstimator objects (the in-phase path is re_sos plus a one-sample
    delay, the quadrature path is im_sos negated); fused so that a 64-sample
    callback costs one compiled call instead of a dozen array operations.
    """
    re_delay = carry[0]
    prev_re = carry[1]
    prev_im = carry[2]
    prev_mag2 = carry[3]
    held_wi = carry[4]
    dev = carry[5]
    for k in range(x.shape[0]):
        v = cascade_step(harm_sos, harm_zi, x[k])
        re = re_delay
        re_delay = cascade_step(re_sos, re_zi, v)
        im = -cascade_step(im_sos, im_zi, v)
        mag2 = re * re + im * im
        if mag2 < MAG_EPS_SQ and prev_mag2 < MAG_EPS_SQ:
            wi = held_wi
        else:
            wi = math.atan2(im * prev_re - re * prev_im,
                            re * prev_re + im * prev_im) * fs_over_two_pi
        held_wi = wi
        prev_re = re
        prev_im = im
        prev_mag2 = mag2
        r = 1.0 - wi / w_c
        if r > RFS_CLAMP:
            r = RFS_CLAMP
        elif r < -RFS_CLAMP:
            r = -RFS_CLAMP
        rf = cascade_step(rfs_sos, rfs_zi, r)
        out_rfs[k] = rf
        dev += rf
        # accumulator bound chosen so delay stays in range at alpha_f = 1
        if dev > _DEV_HI:
            dev = _DEV_HI
        elif dev < _DEV_LO:
            dev = _DEV_LO
        dl = BASE_DELAY + alpha_f * dev
        if dl > MAX_DELAY:
            dl = MAX_DELAY
        elif dl < MIN_DELAY:
            dl = MIN_DELAY
        out_delay[k] = dl
        out_env[k] = cascade_step(am_sos, am_zi, math.sqrt(mag2))
    carry[0] = re_delay
    carry[1] = prev_re
    carry[2] = prev_im
    carry[3] = prev_mag2
    carry[4] = held_wi
    carry[5] = dev


class GateMode(IntEnum):
    INACTIVE = 0
    ARMING = 1
    ACTIVE = 2
    RELEASING = 3


@dataclass
class GateState:
    mode: GateMode = GateMode.INACTIVE
    stable_count: int = 0
    locked_f0: float = 0.0
    deviant_count: int = 0
    f0_history: list = field(default_factory=list)

    def snapshot(self) -> "GateState":
        return replace(self, f0_history=list(self.f0_history))


@dataclass(frozen=True)
class ControlBlock:
    """Per-sample control traces plus the end-of-block gate view."""

    delay: np.ndarray
    envelope: np.ndarray
    rfs: np.ndarray
    gate: GateState
    f0_hz: float


def compute_rfs(w_i: float, w_c: float, clamp: float = RFS_CLAMP) -> float:
    """Relative frequency shift 1 - w_i/w_c, clamped to +/-clamp."""
    if not math.isfinite(w_c) or w_c <= 0.0:
        raise ValueError(f"carrier must be a positive finite frequency, got {w_c}")
    return min(max(1.0 - w_i / w_c, -clamp), clamp)


class SidechainAnalyzer:
    """Streaming analyzer; feed blocks of at most 2048 samples.

    carrier_override_hz pins the locked carrier to a fixed value instead of
    the armed median (a diagnostic hook for drift experiments); normal
    operation smooths the carrier toward fresh estimates with a 1 s time
    constant.
    """

    def __init__(self, fs: float, rms_gate_db: float = GATE_RMS_DB,
                 carrier_override_hz: float | None = None):
        if fs <= 0:
            raise ValueError("sample rate must be positive")
        self.fs = fs
        self.rms_gate_db = rms_gate_db
        self.carrier_override_hz = carrier_override_hz
        self.gate = GateState()
        self.nonfinite_inputs = 0

        cfg = SnacConfig.for_sample_rate(fs)
        self._detector = SnacPitchDetector(cfg)
        self._frame_size = cfg.frame_size
        self._frame = np.zeros(cfg.frame_size)
        self._fill = 0
        self._last_f0 = 0.0

        self._control_sections = design_butterworth_bandpass(
            BandpassSpec(CONTROL_BAND_HZ[0], CONTROL_BAND_HZ[1], CONTROL_BAND_POLES, fs)
        )
        self._harmonic: BiquadCascade | None = None
        self._rfs_filter: BiquadCascade | None = None
        self._am_filter: BiquadCascade | None = None
        self._in_phase: BiquadCascade | None = None
        self._quadrature: BiquadCascade | None = None
        self._designed_f0 = 0.0
        # analytic-pair carry: re delay reg, prev re/im/|.|^2, held w_i, deviation
        self._carry = np.zeros(6)
        self._deviation = 0.0
        self._envelope = 0.0
        self._fs_over_two_pi = fs / (2.0 * math.pi)
        self._lock_alpha = 1.0 - math.exp(-cfg.frame_size / fs / LOCK_SMOOTH_TC)
        self._release_decay = math.exp(-1.0 / (RELEASE_TC * fs))
        self._env_decay = math.exp(-1.0 / (ENV_RELEASE_TC * fs))

    # ------------------------------------------------------------------ #

    def analyze_block(self, sidechain: np.ndarray, params) -> ControlBlock:
        x = np.asarray(sidechain, dtype=np.float64)
        n = len(x)
        if not 1 <= n <= MAX_BLOCK:
            raise ValueError(f"block length must be in [1, {MAX_BLOCK}], got {n}")
        finite = np.isfinite(x)
        if not finite.all():
            self.nonfinite_inputs += int(n - finite.sum())
            x = np.where(finite, x, 0.0)
        delay = np.empty(n)
        envelope = np.empty(n)
        rfs = np.empty(n)
        pos = 0
        while pos < n:
            take = min(n - pos, self._frame_size - self._fill)
            seg = x[pos:pos + take]
            self._process_segment(seg, delay, envelope, rfs, pos, params)
            self._frame[self._fill:self._fill + take] = seg
            self._fill += take
            if self._fill == self._frame_size:
                self._fill = 0
                self._complete_frame()
            pos += take
        return ControlBlock(delay, envelope, rfs, self.gate.snapshot(), self._last_f0)

    # ------------------------------------------------------------------ #

    def _process_segment(self, seg, out_delay, out_env, out_rfs, lo, params):
        hi = lo + len(seg)
        mode = self.gate.mode
        if mode is GateMode.ACTIVE:
            _active_chain(seg, self._fs_over_two_pi, self.gate.locked_f0,
                          float(params.alpha_f),
                          self._harmonic.sos, self._harmonic.zi,
                          self._in_phase.sos, self._in_phase.zi,
                          self._quadrature.sos, self._quadrature.zi,
                          self._rfs_filter.sos, self._rfs_filter.zi,
                          self._am_filter.sos, self._am_filter.zi,
                          self._carry,
                          out_delay[lo:hi], out_env[lo:hi], out_rfs[lo:hi])
            self._deviation = float(self._carry[5])
            self._envelope = float(out_env[hi - 1])
        elif mode is GateMode.RELEASING:
            alpha_f = params.alpha_f
            for k in range(lo, hi):
                out_delay[k], out_env[k] = self.release_step(alpha_f)
                out_rfs[k] = 0.0
                if (abs(self._deviation) < NEUTRAL_DEVIATION
                        and abs(self._envelope) < NEUTRAL_ENVELOPE):
                    self._finish_release()
                    if k + 1 < hi:
                        out_delay[k + 1:hi] = BASE_DELAY
                        out_env[k + 1:hi] = 0.0
                        out_rfs[k + 1:hi] = 0.0
                    break
        else:
            out_delay[lo:hi] = BASE_DELAY
            out_env[lo:hi] = 0.0
            out_rfs[lo:hi] = 0.0

    def release_step(self, alpha_f: float = 1.0) -> tuple[float, float]:
        """One sample of the release slew; returns (delay, envelope).

        The deviation decays with a 200 ms time constant but the resulting
        delay never moves faster than 0.002 samples per sample; the envelope
        decays with a 50 ms time constant.
        """
        step = self._deviation * (self._release_decay - 1.0)
        if alpha_f > 0.0:
            cap = RELEASE_SLOPE_CAP / alpha_f
            step = min(max(step, -cap), cap)
        self._deviation += step
        self._envelope *= self._env_decay
        delay = BASE_DELAY + alpha_f * self._deviation
        delay = min(max(delay, MIN_DELAY), MAX_DELAY)
        return delay, self._envelope

    # ------------------------------------------------------------------ #

    def _complete_frame(self):
        frame = self._frame
        rms = math.sqrt(float(np.mean(frame * frame)))
        rms_db = 20.0 * math.log10(rms) if rms > 0.0 else -400.0
        estimate = self._detector.analyze_frame(frame)
        if estimate.valid:
            self._last_f0 = estimate.f0
        self.update_gate(estimate, rms_db)

    def update_gate(self, estimate, rms_db: float):
        """Advance the gate state machine by one analysis frame."""
        g = self.gate
        loud = rms_db > self.rms_gate_db
        usable = estimate.valid and loud
        if g.mode is GateMode.INACTIVE:
            if usable:
                g.mode = GateMode.ARMING
                g.stable_count = 1
                g.f0_history = [estimate.f0]
                g.locked_f0 = estimate.f0
        elif g.mode is GateMode.ARMING:
            if not usable:
                self._disarm()
            else:
                median = _median(g.f0_history)
                if abs(estimate.f0 - median) <= STABILITY_TOL * median:
                    g.stable_count += 1
                    g.f0_history.append(estimate.f0)
                    del g.f0_history[:-STABLE_FRAMES]
                else:
                    g.stable_count = 1
                    g.f0_history = [estimate.f0]
                g.locked_f0 = _median(g.f0_history)
                if g.stable_count >= STABLE_FRAMES:
                    self._enter_active()
        elif g.mode is GateMode.ACTIVE:
            if not loud:
                g.mode = GateMode.RELEASING
            elif (estimate.valid
                    and abs(estimate.f0 - g.locked_f0) <= STABILITY_TOL * g.locked_f0):
                g.deviant_count = 0
                if self.carrier_override_hz is None:
                    g.locked_f0 += self._lock_alpha * (estimate.f0 - g.locked_f0)
                    if abs(g.locked_f0 - self._designed_f0) > RETUNE_THRESHOLD * self._designed_f0:
                        self._harmonic.set_coeffs(self._design_harmonic(g.locked_f0))
                        self._designed_f0 = g.locked_f0
            else:
                g.deviant_count += 1
                if g.deviant_count >= DEVIANT_FRAMES:
                    g.mode = GateMode.RELEASING
        # RELEASING leaves the machine only from the sample loop

    def _enter_active(self):
        g = self.gate
        median = _median(g.f0_history)
        g.mode = GateMode.ACTIVE
        g.deviant_count = 0
        g.locked_f0 = (self.carrier_override_hz
                       if self.carrier_override_hz is not None else median)
        self._harmonic = BiquadCascade(self._design_harmonic(g.locked_f0))
        self._designed_f0 = g.locked_f0
        self._in_phase = BiquadCascade(allpass_sections(IN_PHASE_COEFFS))
        self._quadrature = BiquadCascade(allpass_sections(QUADRATURE_COEFFS))
        self._rfs_filter = BiquadCascade(self._control_sections)
        # start the integrator path at its operating point so any constant
        # carrier error cannot kick the running sum at the onset
        self._rfs_filter.warm_start_dc(compute_rfs(median, g.locked_f0))
        self._am_filter = BiquadCascade(self._control_sections)
        self._carry[:] = 0.0
        # hold the measured pitch, not the carrier: while the analytic pair
        # settles this keeps the filter input at its warm-start level even
        # when an override pins the carrier off-pitch
        self._carry[4] = median
        self._deviation = 0.0
        self._envelope = 0.0

    def _disarm(self):
        g = self.gate
        g.mode = GateMode.INACTIVE
        g.stable_count = 0
        g.deviant_count = 0
        g.locked_f0 = 0.0
        g.f0_history = []

    def _finish_release(self):
        self._deviation = 0.0
        self._envelope = 0.0
        self._disarm()

    def _design_harmonic(self, f0: float):
        f_hi = min(f0 * HALF_OCTAVE, 0.45 * self.fs)
        f_lo = min(f0 / HALF_OCTAVE, 0.8 * f_hi)
        return design_butterworth_bandpass(BandpassSpec(f_lo, f_hi, HARMONIC_POLES, self.fs))


def _median(values) -> float:
    s = sorted(values)
    mid = len(s) // 2
    if len(s) % 2:
        return s[mid]
    return 0.5 * (s[mid - 1] + s[mid])
