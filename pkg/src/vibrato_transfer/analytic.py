"""Analytic-signal approximation from two parallel IIR allpass cascades.

Each path is four allpass sections of the form H(z) = (c - z^-2)/(1 - c z^-2);
the in-phase path takes an extra one-sample delay, after which the two
outputs sit 90 degrees apart over nearly the full band. Taken as re + j*im
the pair behaves like the analytic signal of the input, so instantaneous
frequency and amplitude drop out sample by sample with no lookahead.

The frozen tables below come from design_quadrature_allpass(); a golden test
pins them. Only the first ~100 ms after a reset is excluded from accuracy
claims while the recursions settle.
"""

from typing import NamedTuple

import numpy as np

from .filters import BiquadCoeffs, BiquadCascade

# elliptic optimal half-band derivation, transition bandwidth 0.0016 fs:
# ~48.5 dB design attenuation, worst quadrature error 0.43 deg in-band
IN_PHASE_COEFFS = (
    0.4303812404709417,
    0.8415267545826982,
    0.9654679800697039,
    0.9959558969911334,
)
QUADRATURE_COEFFS = (
    0.1397723579000347,
    0.6840445345361971,
    0.9246486508190946,
    0.9853182373060971,
)

MAG_EPS = 1e-6


class AnalyticSample(NamedTuple):
    re: float
    im: float


def allpass_sections(coeffs) -> tuple[BiquadCoeffs, ...]:
    """Second-order-section form of (c - z^-2)/(1 - c z^-2) per coefficient."""
    return tuple(BiquadCoeffs(c, 0.0, -1.0, 0.0, -c) for c in coeffs)


class AnalyticEstimator:
    """Streaming analytic pair. State persists across blocks; reset() clears."""

    def __init__(self):
        self._re_path = BiquadCascade(allpass_sections(IN_PHASE_COEFFS))
        self._im_path = BiquadCascade(allpass_sections(QUADRATURE_COEFFS))
        self._re_delay = 0.0

    def process(self, x: float) -> AnalyticSample:
        re = self._re_delay
        self._re_delay = self._re_path.process_sample(x)
        # negated so im lags re by 90 degrees: positive frequencies rotate +
        im = -self._im_path.process_sample(x)
        return AnalyticSample(re, im)

    def process_block(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        re_raw = self._re_path.process_block(x)
        re = np.empty_like(re_raw)
        re[0] = self._re_delay
        re[1:] = re_raw[:-1]
        self._re_delay = re_raw[-1]
        im = -self._im_path.process_block(x)
        return re, im

    def reset(self):
        self._re_path.reset()
        self._im_path.reset()
        self._re_delay = 0.0


def instantaneous_amplitude(cur: AnalyticSample) -> float:
    return float(np.hypot(cur.re, cur.im))


def instantaneous_frequency(prev: AnalyticSample, cur: AnalyticSample,
                            fs: float, held: float = 0.0) -> float:
    """Frequency in Hz from the angle between consecutive analytic samples.

    When both samples are too small to carry phase (< 1e-6 full scale) the
    caller-supplied held value comes back instead of angle noise.
    """
    if (cur.re * cur.re + cur.im * cur.im < MAG_EPS * MAG_EPS
            and prev.re * prev.re + prev.im * prev.im < MAG_EPS * MAG_EPS):
        return held
    cross_re = cur.re * prev.re + cur.im * prev.im
    cross_im = cur.im * prev.re - cur.re * prev.im
    return float(np.arctan2(cross_im, cross_re)) * fs / (2.0 * np.pi)


def design_quadrature_allpass(transition_bw: float = 0.0016,
                              sections_per_path: int = 4):
    """Derive the allpass coefficient pair (in_phase, quadrature).

    Elliptic optimal half-band allpass decomposition; the half-band branches
    map to a 90-degree phase-difference network once each section's z^-2
    terms flip sign (done in allpass_sections). Returns the two coefficient
    tuples sorted into the delayed (in-phase) and direct (quadrature) paths.
    """
    total = 2 * sections_per_path
    dw = transition_bw * 2.0 * np.pi
    k = np.tan((np.pi - dw) / 4.0) ** 2
    kp = np.sqrt(1.0 - k * k)
    e = 0.5 * (1.0 - np.sqrt(kp)) / (1.0 + np.sqrt(kp))
    q = e * (1.0 + 2.0 * e**4 + 15.0 * e**8 + 150.0 * e**12)
    n = 2 * total + 1
    i = np.arange(1, total + 1)
    num = np.zeros(total)
    den = np.zeros(total)
    for m in range(5):
        sign = -1.0 if m % 2 else 1.0
        num += sign * q ** (m * (m + 1)) * np.sin((2 * m + 1) * np.pi * i / n)
        if m > 0:
            den += sign * q ** (m * m) * np.cos(2 * m * np.pi * i / n)
    w = 2.0 * q**0.25 * num / (1.0 + 2.0 * den)
    ap = np.sqrt((1.0 - w * w * k) * (1.0 - w * w / k)) / (1.0 + w * w)
    coeffs = (1.0 - ap) / (1.0 + ap)
    return tuple(coeffs[1::2]), tuple(coeffs[0::2])
