"""Receiver-side defenses: decode-failure detection, cross-correlation delay
estimation, cycle tracking, AoA estimation with forward-backward spatial
smoothing, LCMV separation, temporal partitioning, and jammer classification.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np
from scipy import signal as sps

from .jammer import JammerModel
from .waveform import Family, ModScheme


class ReceiverError(ValueError):
    pass


class NoPeakError(ReceiverError):
    """Correlation has no usable maximum."""


class SeparationFailure(ReceiverError):
    """Angular separation below the array's resolution limit."""


def detect_jamming(decode_failure: bool) -> bool:
    """A jammer is declared present when the RS decoder gives up."""
    return bool(decode_failure)


@dataclass(frozen=True)
class CorrelationResult:
    lags: np.ndarray
    values: np.ndarray
    search_bound: int


def cross_correlate(y, y_ref, f_max: int, gamma_max: int) -> CorrelationResult:
    """Sliding inner product R(tau) = sum_{n<f_max} y[n] * conj(y_ref[n+tau]).

    Out-of-range reference indices contribute zero. Lags span
    [-gamma_max, gamma_max].
    """
    y = np.asarray(y, dtype=complex)
    y_ref = np.asarray(y_ref, dtype=complex)
    if y.size < f_max or y_ref.size < f_max:
        raise ReceiverError("sequences shorter than f_max")
    if gamma_max >= f_max:
        raise ReceiverError(f"gamma_max {gamma_max} must be < f_max {f_max}")
    ys = y[:f_max]
    rs = y_ref[: f_max + gamma_max]
    # full[k] = sum_n ys[n] * conj(rs[n - (k - (len(rs)-1))]); R(tau) = full at
    # offset -tau, i.e. index (len(rs)-1) - tau
    full = sps.correlate(ys, rs, mode="full", method="fft")
    center = rs.size - 1
    lags = np.arange(-gamma_max, gamma_max + 1)
    values = full[center - lags]
    return CorrelationResult(lags=lags, values=values, search_bound=gamma_max)


def estimate_delay(corr: CorrelationResult) -> int:
    """Lag of the maximum correlation magnitude; ties go to the smallest |tau|."""
    mags = np.abs(corr.values)
    peak = mags.max()
    if peak == 0.0:
        raise NoPeakError("correlation is identically zero")
    cand = corr.lags[mags >= peak * (1 - 1e-12)]
    cand = sorted(cand.tolist(), key=lambda t: (abs(t), t))
    return int(cand[0])


def secondary_peak(corr: CorrelationResult, guard: int = 1) -> tuple[int, float]:
    """Delay and relative strength of the strongest causal peak beyond `guard`.

    The primary (legitimate) peak sits at lag 0; the jammer replica shows up
    as a secondary peak at its path delay. Returns (lag, peak/primary ratio).
    """
    mags = np.abs(corr.values)
    primary = mags[corr.lags == 0]
    primary = float(primary[0]) if primary.size else float(mags.max())
    if primary == 0.0:
        primary = float(mags.max())
        if primary == 0.0:
            raise NoPeakError("correlation is identically zero")
    mask = corr.lags > guard
    if not mask.any():
        raise NoPeakError("no causal lags beyond guard")
    idx = np.argmax(mags[mask])
    lag = int(corr.lags[mask][idx])
    return lag, float(mags[mask][idx] / primary)


def estimate_onset(y, guard: int = 2) -> tuple[int, float]:
    """Change-point estimate of where extra power switches on.

    Splits the received power sequence at every candidate index and maximizes
    the after-minus-before mean difference. This works for any jammer class,
    including sign-flipping ones that leave no cross-correlation peak.
    Returns (onset index, relative power jump).
    """
    p = np.abs(np.asarray(y, dtype=complex)) ** 2
    n = p.size
    if n < 2 * guard + 2:
        raise ReceiverError("sequence too short for onset estimation")
    c = np.concatenate([[0.0], np.cumsum(p)])
    idx = np.arange(guard, n - guard)
    before = c[idx] / idx
    after = (c[-1] - c[idx]) / (n - idx)
    # generalized-likelihood weighting keeps short edge segments, whose means
    # are dominated by noise, from winning the argmax
    weight = np.sqrt(idx * (n - idx)) / n
    k = int(np.argmax((after - before) * weight))
    tau = int(idx[k])
    base = max(before[k], 1e-30)
    return tau, float((after[k] - before[k]) / base)


@dataclass(frozen=True)
class CycleTracker:
    first_attack_time: int | None = None
    cycle_estimate: int | None = None


def update_cycle(tracker: CycleTracker, attack_time: int) -> CycleTracker:
    if tracker.first_attack_time is None:
        return replace(tracker, first_attack_time=attack_time)
    if tracker.cycle_estimate is None:
        return replace(tracker, cycle_estimate=attack_time - tracker.first_attack_time)
    return tracker


# ---------------------------------------------------------------------------
# spatial processing
# ---------------------------------------------------------------------------


def _steering(m: int, aoa) -> np.ndarray:
    i = np.arange(m)
    return np.exp(-1j * np.pi * np.outer(i, np.sin(np.atleast_1d(aoa))))


def estimate_aoa(
    array_streams: np.ndarray,
    source_count: int,
    grid_deg: float = 0.25,
) -> np.ndarray:
    """MUSIC with forward-backward spatial smoothing (subarray size m-1).

    Smoothing with two forward subarrays plus the conjugate-flipped covariance
    decorrelates one coherent replica, which is exactly the DRFM situation.
    """
    x = np.asarray(array_streams)
    m = x.shape[0]
    if m <= source_count:
        raise ReceiverError(f"need more antennas ({m}) than sources ({source_count})")
    msub = m - 1
    r = np.zeros((msub, msub), dtype=complex)
    for start in (0, 1):
        sub = x[start : start + msub]
        r += sub @ sub.conj().T / sub.shape[1]
    r /= 2.0
    j = np.eye(msub)[::-1]
    r = 0.5 * (r + j @ r.conj() @ j)

    vals, vecs = np.linalg.eigh(r)
    noise_space = vecs[:, : msub - source_count]
    angles = np.deg2rad(np.arange(-90.0, 90.0 + grid_deg, grid_deg))
    a = _steering(msub, angles)
    proj = noise_space.conj().T @ a
    spectrum = 1.0 / np.maximum(np.sum(np.abs(proj) ** 2, axis=0), 1e-15)

    peaks, _ = sps.find_peaks(spectrum)
    if peaks.size < source_count:
        # fall back to the largest grid values
        order = np.argsort(spectrum)[::-1][:source_count]
        return np.sort(angles[order])
    top = peaks[np.argsort(spectrum[peaks])[::-1][:source_count]]
    return np.sort(angles[top])


def separate_spatial(
    array_streams: np.ndarray,
    aoas,
    min_separation_rad: float = np.deg2rad(5.0),
    diagonal_loading: float = 1e-3,
) -> tuple[np.ndarray, np.ndarray]:
    """LCMV beamformer: unit gain toward each AoA, a null toward the other.

    Returns (stream at aoas[0], stream at aoas[1]).
    """
    x = np.asarray(array_streams)
    m = x.shape[0]
    aoas = np.asarray(aoas, dtype=float)
    if aoas.size != 2:
        raise ReceiverError("exactly two angles expected")
    if abs(aoas[0] - aoas[1]) < min_separation_rad:
        raise SeparationFailure(
            f"angles {np.rad2deg(aoas)} deg closer than the resolution limit"
        )
    c = _steering(m, aoas)
    r = x @ x.conj().T / x.shape[1]
    r += diagonal_loading * np.trace(r).real / m * np.eye(m)
    rinv_c = np.linalg.solve(r, c)
    w = rinv_c @ np.linalg.inv(c.conj().T @ rinv_c)  # column k: unit gain to aoas[k]
    out = w.conj().T @ x
    return out[0], out[1]


def partition_temporal(frame_len: int, tau_hat: int, cycle: CycleTracker | None = None):
    """Shorten the burst so the replica lands in a disjoint slot.

    Returns (burst_start, burst_len, payload_fraction).
    """
    if tau_hat <= 0:
        raise ReceiverError("no temporal separation possible for tau_hat <= 0")
    burst = min(int(tau_hat), int(frame_len))
    if cycle is not None and cycle.cycle_estimate:
        burst = min(burst, int(cycle.cycle_estimate))
    return 0, burst, burst / frame_len


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SimilarityMetrics:
    sc_max: float
    cc_max: float
    sim: float


@dataclass(frozen=True)
class ClassifierThresholds:
    sim_threshold: float = 0.93
    inversion_threshold: float = 0.25

    def __post_init__(self):
        if not (0 < self.sim_threshold < 1 and 0 < self.inversion_threshold < 1):
            raise ReceiverError("thresholds must lie in (0, 1)")


def similarity_ratio(
    jam_est, legit_est, f_max: int, legit_noise_var: float = 0.0
) -> SimilarityMetrics:
    """Sim = max|R_jy| / max|R_yy| with both peaks normalized by f_max.

    The legitimate autocorrelation peak at lag 0 carries the stream's own
    noise power on top of the signal energy; `legit_noise_var` (the noise
    variance after equalization) is subtracted there so the ratio compares
    signal against signal. Cross terms in R_jy average out on their own.
    """
    jam_est = np.asarray(jam_est, dtype=complex)
    legit_est = np.asarray(legit_est, dtype=complex)
    if jam_est.size < f_max or legit_est.size < f_max:
        raise ReceiverError("sequences shorter than f_max")
    gamma = max(1, f_max // 2)
    sc = cross_correlate(legit_est, legit_est, f_max, gamma)
    sc_mags = np.abs(sc.values).astype(float)
    zero = np.nonzero(sc.lags == 0)[0]
    if zero.size:
        sc_mags[zero[0]] = max(sc_mags[zero[0]] - legit_noise_var * f_max, 0.0)
    sc_max = float(sc_mags.max()) / f_max
    if sc_max == 0.0:
        raise ReceiverError("zero-energy legitimate estimate")
    cc = cross_correlate(jam_est, legit_est, f_max, gamma)
    cc_max = float(np.max(np.abs(cc.values))) / f_max
    return SimilarityMetrics(sc_max=sc_max, cc_max=cc_max, sim=cc_max / sc_max)


class JammerClass(str, Enum):
    DRFM = "drfm"
    PS = "ps"
    AS = "as"
    UNKNOWN = "unknown"


def classify_jammer(
    metrics: SimilarityMetrics,
    pilot_inversions: float,
    thresholds: ClassifierThresholds,
    active_scheme: ModScheme | None = None,
) -> JammerClass:
    """Threshold rule: high similarity means DRFM; otherwise a high pilot
    anomaly fraction means PS under a phase-bearing scheme and AS under an
    amplitude-bearing one (QAM carries both, so it stays Unknown)."""
    if metrics.sim >= thresholds.sim_threshold:
        return JammerClass.DRFM
    if pilot_inversions >= thresholds.inversion_threshold:
        family = active_scheme.family if active_scheme is not None else Family.PSK
        if family == Family.PSK:
            return JammerClass.PS
        if family == Family.ASK:
            return JammerClass.AS
        return JammerClass.UNKNOWN
    return JammerClass.UNKNOWN


def pilot_anomaly_fraction(jam_pilot_syms, ref_pilot_syms) -> float:
    """Fraction of channel-equalized pilot symbols too far from the reference.

    A symbol counts as anomalous when its deviation from the expected pilot
    point exceeds half the unit-energy symbol scale, which catches both
    180-degree inversions (PS) and amplitude excursions (AS).
    """
    jam = np.asarray(jam_pilot_syms, dtype=complex)
    ref = np.asarray(ref_pilot_syms, dtype=complex)
    if jam.shape != ref.shape or jam.size == 0:
        raise ReceiverError("pilot sequences must match and be non-empty")
    return float(np.mean(np.abs(jam - ref) > 0.5))


def equalize_stream(
    stream: np.ndarray,
    pilot_syms: np.ndarray,
    noise_var: float,
) -> np.ndarray:
    """Remove the complex channel gain from a separated stream.

    Phase comes from pilot least squares (the Gaussian ML estimate); the
    magnitude comes from a noise-debiased RMS over the whole stream, which is
    robust to the PS jammer's sign flips cancelling the pilot average.
    """
    stream = np.asarray(stream, dtype=complex)
    p = np.asarray(pilot_syms, dtype=complex)
    ls = np.vdot(p, stream[: p.size]) / np.vdot(p, p)
    power = max(np.mean(np.abs(stream) ** 2) - noise_var, _power_floor(noise_var))
    gain = np.sqrt(power) * np.exp(1j * np.angle(ls))
    return stream / gain


def _power_floor(noise_var: float) -> float:
    # keeps a near-noise stream from being amplified into a fake signal
    return 0.1 * noise_var if noise_var > 0.0 else 1e-30


def equalized_noise_var(stream, noise_var: float) -> float:
    """Noise variance of `stream` after equalize_stream's gain removal."""
    stream = np.asarray(stream, dtype=complex)
    power = max(np.mean(np.abs(stream) ** 2) - noise_var, _power_floor(noise_var))
    return noise_var / power
