import numpy as np
import pytest

from vibrato_transfer.filters import BiquadCoeffs
from vibrato_transfer.oracles import (
    PEAK_BAND_HZ,
    STFT_FRAME,
    frequency_response,
    naive_autocorrelation,
    naive_snac_curve,
    offline_envelope_zero_phase,
    offline_rfs_stft,
)

from _helpers import FS, lockin, steady_sine, tremolo_sine, vibrato_sine

EDGE = STFT_FRAME  # STFT estimates are flat inside half a frame of each end


class TestOfflineRfs:
    def test_unmodulated_tone_reads_flat(self):
        res = offline_rfs_stft(steady_sine(FS, 4.0), FS)
        assert abs(res.omega_c - 440.0) < 0.5
        assert np.abs(res.rfs[EDGE:-EDGE]).max() < 1e-3

    def test_tracks_unaligned_carrier(self):
        for freq in (523.25, 1000.0):
            res = offline_rfs_stft(steady_sine(FS, 2.0, f0=freq), FS)
            assert abs(res.omega_c - freq) < 0.1

    def test_vibrato_rfs_amplitude_within_five_percent(self):
        res = offline_rfs_stft(vibrato_sine(FS, 6.0), FS)
        amp, _ = lockin(res.rfs[EDGE:-EDGE], FS, 5.0)
        assert amp == pytest.approx(0.01, rel=0.05)

    def test_vibrato_delay_amplitude_within_five_percent(self):
        res = offline_rfs_stft(vibrato_sine(FS, 6.0), FS)
        amp, _ = lockin(res.delay[EDGE:-EDGE], FS, 5.0)
        # depth * fs / (2 pi rate) with the defaults
        assert amp == pytest.approx(14.037, rel=0.05)

    def test_rfs_tracks_true_waveform(self):
        t = np.arange(int(6.0 * FS)) / FS
        truth = -0.01 * np.sin(2 * np.pi * 5.0 * t)
        res = offline_rfs_stft(vibrato_sine(FS, 6.0), FS)
        err = res.rfs[EDGE:-EDGE] - truth[EDGE:-EDGE]
        assert np.abs(err).max() < 0.1 * 0.01

    def test_delay_is_running_sum_of_rfs(self):
        res = offline_rfs_stft(vibrato_sine(FS, 2.0), FS)
        assert np.abs(np.diff(res.delay) - res.rfs[1:]).max() < 1e-12
        assert res.delay[0] == res.rfs[0]

    def test_forced_carrier_error_ramps_without_bound(self):
        # no DC protection by design: a 1% carrier error must integrate
        # into a monotone delay ramp
        x = steady_sine(FS, 4.0)
        res = offline_rfs_stft(x, FS, omega_c=440.0 * 1.01)
        assert np.all(res.rfs[EDGE:-EDGE] > 0.005)
        d = res.delay[EDGE:-EDGE]
        assert np.all(np.diff(d) > 0.0)
        expected_slope = 1.0 - 440.0 / (440.0 * 1.01)
        assert (d[-1] - d[0]) / (len(d) - 1) == pytest.approx(expected_slope, rel=0.05)

    def test_short_signal_rejected(self):
        with pytest.raises(ValueError):
            offline_rfs_stft(np.ones(STFT_FRAME - 1), FS)

    def test_unresolvable_band_rejected(self):
        with pytest.raises(ValueError):
            offline_rfs_stft(steady_sine(FS, 0.5), FS, band_hz=(0.1, 0.5))

    def test_silent_signal_rejected(self):
        with pytest.raises(ValueError):
            offline_rfs_stft(np.zeros(int(FS)), FS)

    def test_default_band_covers_spec_range(self):
        assert PEAK_BAND_HZ == (50.0, 2000.0)


class TestOfflineEnvelope:
    def test_constant_trace_has_negligible_residual(self):
        dec = offline_envelope_zero_phase(np.full(int(4 * FS), 0.8), FS)
        assert np.abs(dec.residual).max() < 1e-6
        assert np.abs(dec.lowpassed - 0.8).max() < 1e-6

    def test_decomposition_is_exact(self):
        rng = np.random.default_rng(2)
        trace = 1.0 + 0.1 * rng.standard_normal(int(FS))
        dec = offline_envelope_zero_phase(trace, FS)
        assert np.array_equal(dec.full, trace)
        assert np.array_equal(dec.residual, dec.full - dec.lowpassed)

    def test_tremolo_residual_amplitude_and_phase(self):
        t = np.arange(int(6 * FS)) / FS
        trace = 1.0 + 0.05 * np.sin(2 * np.pi * 5.0 * t)
        dec = offline_envelope_zero_phase(trace, FS)
        inner = slice(int(FS), -int(FS))
        amp, phase = lockin(dec.residual[inner], FS, 5.0)
        assert amp == pytest.approx(0.05, rel=0.1)
        # zero-phase filtering leaves the residual aligned with the input
        ref_amp, ref_phase = lockin(trace[inner] - 1.0, FS, 5.0)
        assert abs(phase - ref_phase) < np.radians(2.0)

    def test_slow_drift_goes_to_lowpassed(self):
        t = np.arange(int(8 * FS)) / FS
        trace = 1.0 + 0.3 * np.sin(2 * np.pi * 0.1 * t)
        dec = offline_envelope_zero_phase(trace, FS)
        inner = slice(int(FS), -int(FS))
        assert np.abs(dec.residual[inner]).max() < 0.03


class TestNaiveAutocorrelation:
    def test_tiny_vector_by_hand(self):
        r, m = naive_autocorrelation(np.array([1.0, 2.0, 3.0]))
        assert r.tolist() == [14.0, 8.0]
        assert m.tolist() == [28.0, 18.0]

    def test_snac_of_tiny_vector(self):
        curve = naive_snac_curve(np.array([1.0, 2.0, 3.0]))
        assert curve[0] == pytest.approx(1.0)
        assert curve[1] == pytest.approx(16.0 / 18.0)

    def test_zero_frame_masks_everything(self):
        curve = naive_snac_curve(np.zeros(64))
        assert np.all(curve == 0.0)

    def test_explicit_max_lag(self):
        r, m = naive_autocorrelation(np.arange(16.0), max_lag=4)
        assert len(r) == 5 and len(m) == 5


class TestFrequencyResponse:
    def test_identity_section(self):
        h = frequency_response([BiquadCoeffs(1.0, 0.0, 0.0, 0.0, 0.0)],
                               [100.0, 1000.0, 10000.0], FS)
        assert np.allclose(h, 1.0)

    def test_pure_delay_section(self):
        freqs = np.array([100.0, 1000.0, 5000.0])
        h = frequency_response([BiquadCoeffs(0.0, 1.0, 0.0, 0.0, 0.0)], freqs, FS)
        assert np.allclose(np.abs(h), 1.0)
        assert np.allclose(np.angle(h), -2.0 * np.pi * freqs / FS)
