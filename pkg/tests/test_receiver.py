"""Receiver tests: correlation against a brute-force oracle, delay and onset
estimation, AoA estimation, LCMV separation, and jammer classification."""

import numpy as np
import pytest

from risjam.jammer import JammerModel, JammerSpec, ReceiveArray, jammer_transform
from risjam.receiver import (
    ClassifierThresholds,
    CycleTracker,
    JammerClass,
    NoPeakError,
    ReceiverError,
    SeparationFailure,
    SimilarityMetrics,
    classify_jammer,
    cross_correlate,
    equalize_stream,
    equalized_noise_var,
    estimate_aoa,
    estimate_delay,
    estimate_onset,
    partition_temporal,
    pilot_anomaly_fraction,
    secondary_peak,
    separate_spatial,
    similarity_ratio,
    update_cycle,
)
from risjam.waveform import Family, ModScheme


def brute_force_correlation(y, y_ref, f_max, gamma_max):
    """Independent oracle: explicit double loop over the sliding product."""
    out = np.zeros(2 * gamma_max + 1, dtype=complex)
    lags = np.arange(-gamma_max, gamma_max + 1)
    for i, tau in enumerate(lags):
        acc = 0.0 + 0.0j
        for n in range(f_max):
            j = n + tau
            if 0 <= j < len(y_ref):
                acc += y[n] * np.conj(y_ref[j])
        out[i] = acc
    return lags, out


def _qpsk(n, rng):
    return np.exp(1j * (np.pi / 4 + np.pi / 2 * rng.integers(0, 4, n)))


class TestCrossCorrelation:
    def test_matches_brute_force(self):
        rng = np.random.default_rng(1)
        y = rng.normal(size=96) + 1j * rng.normal(size=96)
        ref = rng.normal(size=96) + 1j * rng.normal(size=96)
        res = cross_correlate(y, ref, f_max=64, gamma_max=16)
        lags, oracle = brute_force_correlation(y, ref, 64, 16)
        assert np.array_equal(res.lags, lags)
        assert np.allclose(res.values, oracle, atol=1e-10)

    def test_delayed_replica_peaks_at_delay(self):
        rng = np.random.default_rng(2)
        x = _qpsk(256, rng)
        d = 17
        y = np.concatenate([np.zeros(d, dtype=complex), x])[:256]
        res = cross_correlate(x, y, f_max=200, gamma_max=40)
        assert estimate_delay(res) == d

    def test_rejects_bad_bounds(self):
        with pytest.raises(ReceiverError):
            cross_correlate(np.ones(10), np.ones(10), f_max=8, gamma_max=8)
        with pytest.raises(ReceiverError):
            cross_correlate(np.ones(4), np.ones(10), f_max=8, gamma_max=2)

    def test_zero_correlation_raises(self):
        res = cross_correlate(np.zeros(16), np.zeros(16), 8, 2)
        with pytest.raises(NoPeakError):
            estimate_delay(res)


class TestSecondaryPeak:
    def test_finds_replica_behind_primary(self):
        rng = np.random.default_rng(3)
        x = _qpsk(512, rng)
        d, alpha = 25, 0.6
        y = x.copy()
        y[d:] += alpha * x[:-d]
        res = cross_correlate(x, y, f_max=400, gamma_max=60)
        lag, strength = secondary_peak(res, guard=2)
        assert lag == d
        assert strength == pytest.approx(alpha, rel=0.2)


class TestOnset:
    def test_noiseless_step(self):
        y = np.concatenate([np.ones(100), 2.0 * np.ones(100)]).astype(complex)
        tau, jump = estimate_onset(y)
        assert tau == 100
        assert jump == pytest.approx(3.0, rel=1e-9)

    def test_noisy_step_within_tolerance(self):
        rng = np.random.default_rng(4)
        n, d = 2048, 700
        y = rng.normal(size=n) + 1j * rng.normal(size=n)
        y[d:] *= 2.0
        tau, jump = estimate_onset(y)
        assert abs(tau - d) <= 20
        assert jump > 1.0

    def test_too_short_raises(self):
        with pytest.raises(ReceiverError):
            estimate_onset(np.ones(4))


class TestCycleTracker:
    def test_two_updates_fix_cycle(self):
        t = CycleTracker()
        t = update_cycle(t, 100)
        assert t.first_attack_time == 100 and t.cycle_estimate is None
        t = update_cycle(t, 260)
        assert t.cycle_estimate == 160
        assert update_cycle(t, 999) == t


class TestSpatial:
    def test_music_two_sources(self):
        rng = np.random.default_rng(5)
        m, n = 8, 2048
        arr = ReceiveArray(m)
        a1, a2 = np.deg2rad(-20.0), np.deg2rad(25.0)
        s1 = _qpsk(n, rng)
        s2 = _qpsk(n, rng)
        x = (
            np.outer(arr.steering(a1), s1)
            + np.outer(arr.steering(a2), s2)
            + 0.1 * (rng.normal(size=(m, n)) + 1j * rng.normal(size=(m, n)))
        )
        est = estimate_aoa(x, 2, grid_deg=0.25)
        assert np.allclose(np.rad2deg(est), [-20.0, 25.0], atol=1.0)

    def test_music_coherent_replica(self):
        # DRFM case: the second source is a scaled copy of the first
        rng = np.random.default_rng(6)
        m, n = 8, 4096
        arr = ReceiveArray(m)
        a1, a2 = np.deg2rad(-10.0), np.deg2rad(30.0)
        s = _qpsk(n, rng)
        x = (
            np.outer(arr.steering(a1), s)
            + np.outer(arr.steering(a2), 0.9 * s)
            + 0.05 * (rng.normal(size=(m, n)) + 1j * rng.normal(size=(m, n)))
        )
        est = np.rad2deg(estimate_aoa(x, 2, grid_deg=0.25))
        assert np.allclose(est, [-10.0, 30.0], atol=3.0)

    def test_lcmv_nulls_interferer(self):
        rng = np.random.default_rng(7)
        m, n = 8, 4096
        arr = ReceiveArray(m)
        a1, a2 = np.deg2rad(-15.0), np.deg2rad(20.0)
        s1, s2 = _qpsk(n, rng), _qpsk(n, rng)
        x = (
            np.outer(arr.steering(a1), s1)
            + np.outer(arr.steering(a2), s2)
            + 0.1 * (rng.normal(size=(m, n)) + 1j * rng.normal(size=(m, n)))
        )
        out1, out2 = separate_spatial(x, [a1, a2])
        leak1 = np.mean(np.abs(out1 - s1) ** 2)
        leak2 = np.mean(np.abs(out2 - s2) ** 2)
        assert leak1 < 0.05 and leak2 < 0.05

    def test_lcmv_rejects_close_angles(self):
        x = np.zeros((8, 64), dtype=complex)
        with pytest.raises(SeparationFailure):
            separate_spatial(x, [0.0, np.deg2rad(2.0)])


class TestTemporalPartition:
    def test_fraction(self):
        start, burst, frac = partition_temporal(4096, 2048)
        assert (start, burst) == (0, 2048)
        assert frac == pytest.approx(0.5)

    def test_cycle_limits_burst(self):
        _, burst, frac = partition_temporal(4096, 3000, CycleTracker(0, 1000))
        assert burst == 1000
        assert frac == pytest.approx(1000 / 4096)

    def test_zero_tau_raises(self):
        with pytest.raises(ReceiverError):
            partition_temporal(4096, 0)


class TestClassification:
    def _streams(self, model, rng, n=2048, snr_db=15.0):
        x = _qpsk(n, rng)
        spec = JammerSpec(model=model, amp_gain=1.5, delay_samples=0)
        jam = jammer_transform(spec, x, rng)[:n]
        jam = jam / np.sqrt(np.mean(np.abs(jam) ** 2))
        sigma = np.sqrt(10 ** (-snr_db / 10.0) / 2.0)
        noise = lambda: sigma * (rng.normal(size=n) + 1j * rng.normal(size=n))
        return x + noise(), jam + noise(), x[:64]

    def test_similarity_high_for_drfm(self):
        rng = np.random.default_rng(8)
        legit, jam, pilot = self._streams(JammerModel.DRFM, rng)
        nv = 10 ** (-1.5)
        le = equalize_stream(legit, pilot, nv)
        je = equalize_stream(jam, pilot, nv)
        m = similarity_ratio(je, le, 2000, legit_noise_var=equalized_noise_var(legit, nv))
        assert m.sim > 0.95

    def test_similarity_low_for_ps(self):
        rng = np.random.default_rng(9)
        legit, jam, pilot = self._streams(JammerModel.PS, rng)
        nv = 10 ** (-1.5)
        le = equalize_stream(legit, pilot, nv)
        je = equalize_stream(jam, pilot, nv)
        m = similarity_ratio(je, le, 2000, legit_noise_var=equalized_noise_var(legit, nv))
        assert m.sim < 0.5

    def test_threshold_rules(self):
        thr = ClassifierThresholds(0.93, 0.25)
        psk = ModScheme(Family.PSK, 4)
        ask = ModScheme(Family.ASK, 4)
        high = SimilarityMetrics(1.0, 0.95, 0.95)
        low = SimilarityMetrics(1.0, 0.1, 0.1)
        assert classify_jammer(high, 0.0, thr, psk) == JammerClass.DRFM
        assert classify_jammer(low, 0.5, thr, psk) == JammerClass.PS
        assert classify_jammer(low, 0.5, thr, ask) == JammerClass.AS
        assert classify_jammer(low, 0.05, thr, psk) == JammerClass.UNKNOWN

    def test_pilot_anomaly_fraction(self):
        ref = np.ones(8, dtype=complex)
        jam = ref.copy()
        jam[:4] = -1.0
        assert pilot_anomaly_fraction(jam, ref) == pytest.approx(0.5)
        with pytest.raises(ReceiverError):
            pilot_anomaly_fraction(np.ones(3), np.ones(4))

    def test_equalize_removes_gain(self):
        rng = np.random.default_rng(10)
        x = _qpsk(1024, rng)
        g = 3.0 * np.exp(1j * 0.7)
        eq = equalize_stream(g * x, x[:64], 0.0)
        assert np.mean(np.abs(eq - x) ** 2) < 1e-3
