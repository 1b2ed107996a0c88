"""Link adaptation: SNR combining, analytic AWGN error curves, modulation
remapping per jammer class, Reed-Solomon code selection through the residual
symbol-error criterion, and throughput/JSR/gain metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import erfc

from .receiver import JammerClass
from .waveform import DEFAULT_RS_TABLE, Family, ModScheme, RsCode


class AdaptationError(ValueError):
    pass


ORDERS = (2, 4, 8, 16, 32, 64)


def _q(x):
    return 0.5 * erfc(np.asarray(x, dtype=float) / np.sqrt(2.0))


@dataclass(frozen=True)
class LinkSnrs:
    gamma_e: float
    gamma_j: float
    gamma_l: float

    def __post_init__(self):
        if min(self.gamma_e, self.gamma_j, self.gamma_l) < 0:
            raise AdaptationError("SNRs must be non-negative")


def snr_jamming(gamma_e: float, gamma_j: float) -> float:
    """Two-hop jamming SNR: gamma_e*gamma_j / (gamma_e + gamma_j + 1)."""
    if gamma_e < 0 or gamma_j < 0:
        raise AdaptationError("SNRs must be non-negative")
    return gamma_e * gamma_j / (gamma_e + gamma_j + 1.0)


# ---------------------------------------------------------------------------
# analytic AWGN error curves (symbol SNR, unit average symbol energy)
# ---------------------------------------------------------------------------


def ser_awgn(family: Family, order: int, snr) -> np.ndarray | float:
    """Approximate symbol error rate on AWGN at linear symbol SNR."""
    snr = np.asarray(snr, dtype=float)
    m = order
    if family == Family.PSK:
        if m == 2:
            ser = _q(np.sqrt(2.0 * snr))
        else:
            ser = 2.0 * _q(np.sqrt(2.0 * snr) * np.sin(np.pi / m))
    elif family == Family.ASK:
        # positive levels c*{1..M}, adjacent spacing c
        c = np.sqrt(6.0 / ((m + 1) * (2 * m + 1)))
        ser = 2.0 * (m - 1) / m * _q(c * np.sqrt(snr / 2.0))
    else:
        mi = 1 << ((int(np.log2(m)) + 1) // 2)
        mq = m // mi
        scale = np.sqrt(3.0 / (mi * mi + mq * mq - 2.0))
        pi = 2.0 * (1 - 1.0 / mi) * _q(scale * np.sqrt(2.0 * snr))
        pq = 2.0 * (1 - 1.0 / mq) * _q(scale * np.sqrt(2.0 * snr)) if mq > 1 else 0.0
        ser = 1.0 - (1.0 - pi) * (1.0 - pq)
    out = np.minimum(ser, 1.0)
    return float(out) if out.ndim == 0 else out


def ber_awgn(family: Family, order: int, snr) -> np.ndarray | float:
    """Gray-coded bit error rate (SER spread over log2(order) bits)."""
    k = np.log2(order)
    if family == Family.PSK and order == 2:
        return ser_awgn(family, order, snr)
    return ser_awgn(family, order, snr) / k


_GL_NODES, _GL_WEIGHTS = leggauss(48)
_AS_V = np.minimum(_GL_NODES + 1.0, 1.0)  # U[0,2] factor, limiter-capped at 1
_AS_W = _GL_WEIGHTS / 2.0


def effective_ber(
    jammer_class: JammerClass | None,
    family: Family,
    order: int,
    snr_l: float,
    snr_j: float,
) -> float:
    """Post-separation BER when the jam replica is combined with the legit
    stream.

    DRFM replays coherently, so powers add. The AS factor V ~ U[0, 2] scales
    the replica per symbol; the combiner input is limiter-capped at the
    nominal amplitude, so the per-symbol SNR is snr_l + min(v, 1)^2 * snr_j,
    averaged over V by quadrature. PS sign flips are folded out by the
    positive-real ASK constellation, leaving full power. An unclassified
    jammer contributes nothing.
    """
    if jammer_class in (None, JammerClass.UNKNOWN):
        return float(ber_awgn(family, order, snr_l))
    if jammer_class == JammerClass.AS:
        bers = ber_awgn(family, order, snr_l + _AS_V**2 * snr_j)
        return float(np.sum(_AS_W * bers))
    return float(ber_awgn(family, order, snr_l + snr_j))


def remap_modulation(jammer_class: JammerClass, current: ModScheme) -> ModScheme:
    """AS pushes to PSK (amplitude-free), PS to ASK (fold-correctable),
    DRFM and Unknown keep the current family."""
    if jammer_class == JammerClass.AS:
        return ModScheme(Family.PSK, current.order)
    if jammer_class == JammerClass.PS:
        return ModScheme(Family.ASK, current.order)
    return current


@dataclass(frozen=True)
class AdaptationDecision:
    scheme: ModScheme
    code: RsCode
    residual: float
    delta: float
    compliant: bool


def residual_symbol_error(ser: float, code: RsCode) -> float:
    """P_res = (n*SER - t) / n; negative when the code absorbs the errors."""
    return (code.n * ser - code.t) / code.n


def select_code(
    snr: float,
    scheme: ModScheme,
    delta: float,
    table=DEFAULT_RS_TABLE,
    ber: float | None = None,
) -> AdaptationDecision:
    """Highest-rate code whose residual stays below delta at this SNR.

    `ber` overrides the analytic curve (used for jammer-aware effective BER).
    Falls back to the lowest-rate entry, flagged non-compliant, when nothing
    qualifies.
    """
    if not table:
        raise AdaptationError("empty code table")
    if delta >= 0:
        raise AdaptationError("delta must be negative")
    if ber is None:
        ber = float(ber_awgn(scheme.family, scheme.order, snr))
    ser = 1.0 - (1.0 - ber) ** scheme.bits_per_symbol
    codes = sorted(table, key=lambda c: c.rate, reverse=True)
    for code in codes:
        res = residual_symbol_error(ser, code)
        if res <= delta:
            return AdaptationDecision(scheme, code, res, delta, True)
    worst = codes[-1]
    return AdaptationDecision(scheme, worst, residual_symbol_error(ser, worst), delta, False)


def select_link(
    jammer_class: JammerClass | None,
    snr_l: float,
    snr_j: float,
    base_family: Family = Family.PSK,
    delta: float = -0.005,
    table=DEFAULT_RS_TABLE,
    fixed_rate: float | None = None,
    max_order: int = 64,
) -> AdaptationDecision:
    """Pick the compliant (order, code) pair with the highest spectral
    efficiency rate*log2(order) within the remapped family; ties go to the
    higher order.

    With `fixed_rate` set, only that single code is on the table (fixed-rate
    operating mode); the modulation order still adapts.
    """
    family = remap_modulation(
        jammer_class if jammer_class is not None else JammerClass.UNKNOWN,
        ModScheme(base_family, 2),
    ).family
    if fixed_rate is not None:
        matches = [c for c in table if abs(c.rate - fixed_rate) < 5e-3]
        if not matches:
            raise AdaptationError(f"no table code with rate {fixed_rate}")
        table = tuple(matches)
    best: AdaptationDecision | None = None
    best_eff = -1.0
    for order in ORDERS:
        if order > max_order:
            break
        scheme = ModScheme(family, order)
        ber = effective_ber(jammer_class, family, order, snr_l, snr_j)
        decision = select_code(snr_l + snr_j, scheme, delta, table, ber=ber)
        if decision.compliant:
            eff = decision.code.rate * scheme.bits_per_symbol
            if eff >= best_eff:
                best, best_eff = decision, eff
    if best is not None:
        return best
    scheme = ModScheme(family, 2)
    ber = effective_ber(jammer_class, family, 2, snr_l, snr_j)
    return select_code(snr_l + snr_j, scheme, delta, table, ber=ber)


def throughput(
    bandwidth: float,
    code: RsCode,
    scheme: ModScheme,
    payload_fraction: float = 1.0,
) -> float:
    """T = B * R_c * log2(order) * payload_fraction."""
    if not 0.0 < payload_fraction <= 1.0:
        raise AdaptationError(f"payload_fraction out of (0, 1]: {payload_fraction}")
    return bandwidth * code.rate * np.log2(scheme.order) * payload_fraction


def jsr_db(p_j: float, p_l: float) -> float:
    """JSR = 10 log10(P_J) - 10 log10(P_L)."""
    if p_j <= 0 or p_l <= 0:
        raise AdaptationError("powers must be positive")
    return 10.0 * np.log10(p_j) - 10.0 * np.log10(p_l)


def antifragile_gain(t_jammed: float, t_baseline: float) -> float:
    if t_baseline <= 0:
        raise AdaptationError("baseline throughput must be positive")
    return t_jammed / t_baseline


def dbm_to_watt(p_dbm: float) -> float:
    return 10.0 ** (p_dbm / 10.0) / 1000.0


def watt_to_dbm(p_watt: float) -> float:
    if p_watt <= 0:
        raise AdaptationError("power must be positive")
    return 10.0 * np.log10(p_watt * 1000.0)
