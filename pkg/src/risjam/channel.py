"""RIS link channel models: correlated fading, Rician draws, cascaded coefficient.

The cascaded source->RIS->destination coefficient is
    c = h_sr @ R^{1/2} @ diag(exp(j*phi)) @ R^{1/2} @ h_rd
which equals the element-wise triple sum over (a, k, l) of
    rho_{a,k}^{1/2} rho_{a,l}^{1/2} h_sr[k] h_rd[l] exp(j*phi[a]).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class ChannelError(ValueError):
    """Invalid channel parameter or dimension mismatch."""


@dataclass(frozen=True)
class RisLinkConfig:
    """Geometry and statistics of one RIS-assisted hop."""

    element_count: int
    d_sr: float = 18.0
    d_rd: float = 7.0
    path_loss_exp: float = 2.7
    corr_rate: float = 0.05
    carrier_hz: float = 28e9

    def __post_init__(self):
        if self.element_count < 1:
            raise ChannelError(f"element_count must be >= 1, got {self.element_count}")
        if self.d_sr <= 0 or self.d_rd <= 0:
            raise ChannelError("distances must be positive")
        if self.path_loss_exp <= 0:
            raise ChannelError("path_loss_exp must be positive")
        if self.corr_rate < 0:
            raise ChannelError("corr_rate must be non-negative")


@dataclass(frozen=True)
class RicianParams:
    """Rician scalar-channel parameters (kappa=0 degenerates to Rayleigh)."""

    rician_k: float = 0.0
    avg_amp: float = 1.0
    path_count: int = 1

    def __post_init__(self):
        if self.rician_k < 0:
            raise ChannelError("rician_k must be >= 0")
        if self.avg_amp <= 0:
            raise ChannelError("avg_amp must be positive")
        if self.path_count < 1:
            raise ChannelError("path_count must be >= 1")


@dataclass(frozen=True)
class CorrelationMatrix:
    entries: np.ndarray
    sqrt_form: np.ndarray


@dataclass(frozen=True)
class PhaseMatrix:
    """Per-element RIS phases, each in [0, 2*pi)."""

    phases: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "phases", np.mod(np.asarray(self.phases, dtype=float), 2 * np.pi))

    @property
    def diagonal(self) -> np.ndarray:
        return np.exp(1j * self.phases)


@dataclass(frozen=True)
class ChannelRealization:
    """One Monte Carlo draw of every fading vector/scalar in the topology."""

    h_sr: np.ndarray
    h_rd: np.ndarray
    h_rj: np.ndarray
    h_e1: complex
    h_j1: complex
    h_j2: complex
    extras: dict = field(default_factory=dict)


def path_loss(d: float, delta: float) -> float:
    """Linear power attenuation d**(-delta)."""
    if d <= 0:
        raise ChannelError(f"distance must be positive, got {d}")
    if delta <= 0:
        raise ChannelError(f"path loss exponent must be positive, got {delta}")
    return float(d) ** (-delta)


def build_correlation(cfg: RisLinkConfig) -> CorrelationMatrix:
    """Exponential element correlation rho_ij = exp(-corr_rate * |i - j|).

    The square root is taken by eigendecomposition with negative eigenvalues
    clamped to zero, so the result stays PSD at any size.
    """
    m = cfg.element_count
    idx = np.arange(m)
    entries = np.exp(-cfg.corr_rate * np.abs(idx[:, None] - idx[None, :]))
    vals, vecs = np.linalg.eigh(entries)
    vals = np.clip(vals, 0.0, None)
    sqrt_form = (vecs * np.sqrt(vals)) @ vecs.T
    sqrt_form = 0.5 * (sqrt_form + sqrt_form.T)
    if not np.allclose(sqrt_form @ sqrt_form, entries, atol=1e-9 * m):
        raise ChannelError("correlation square root failed numerical check")
    return CorrelationMatrix(entries=entries, sqrt_form=sqrt_form)


def sample_rician(p: RicianParams, rng: np.random.Generator) -> complex:
    """Draw one Rician scalar: LOS term plus a sum of Rayleigh-amplitude paths.

    Each diffuse path has E[R^2] = avg_amp^2, phases uniform on [0, 2*pi).
    """
    k = p.rician_k
    theta_los = rng.uniform(0.0, 2 * np.pi)
    los = np.sqrt(k / (k + 1)) * p.avg_amp * np.exp(1j * theta_los)
    amps = rng.rayleigh(scale=p.avg_amp / np.sqrt(2), size=p.path_count)
    phases = rng.uniform(0.0, 2 * np.pi, size=p.path_count)
    diffuse = np.sqrt(1.0 / (k + 1)) * np.sum(amps * np.exp(1j * phases))
    return complex(los + diffuse)


def _rayleigh_vector(m: int, amp_scale: float, rng: np.random.Generator) -> np.ndarray:
    # amplitude Rayleigh with E[g^2] = 1, phase uniform
    g = rng.rayleigh(scale=1.0 / np.sqrt(2), size=m)
    theta = rng.uniform(0.0, 2 * np.pi, size=m)
    return amp_scale * g * np.exp(-1j * theta)


def sample_realization(
    cfg: RisLinkConfig,
    jp: RicianParams,
    rng: np.random.Generator,
    d_rj: float | None = None,
    eaves_corr: float = 0.0,
) -> ChannelRealization:
    """Draw all fading vectors for one trial.

    `eaves_corr` in [0, 1] correlates the RIS->jammer vector with the
    RIS->destination vector (a jammer sitting next to the destination sees
    nearly the same reflected beam).
    """
    if not 0.0 <= eaves_corr <= 1.0:
        raise ChannelError("eaves_corr must lie in [0, 1]")
    m = cfg.element_count
    delta = cfg.path_loss_exp
    a_sr = np.sqrt(path_loss(cfg.d_sr, delta))
    a_rd = np.sqrt(path_loss(cfg.d_rd, delta))
    a_rj = np.sqrt(path_loss(d_rj if d_rj is not None else cfg.d_rd, delta))

    h_sr = _rayleigh_vector(m, a_sr, rng)
    h_rd = _rayleigh_vector(m, a_rd, rng)
    h_rj_ind = _rayleigh_vector(m, a_rj, rng)
    if eaves_corr > 0.0:
        h_rj = np.sqrt(eaves_corr) * (a_rj / a_rd) * h_rd + np.sqrt(1 - eaves_corr) * h_rj_ind
    else:
        h_rj = h_rj_ind

    return ChannelRealization(
        h_sr=h_sr,
        h_rd=h_rd,
        h_rj=h_rj,
        h_e1=sample_rician(jp, rng),
        h_j1=sample_rician(jp, rng),
        h_j2=sample_rician(jp, rng),
    )


def cascaded_coefficient(
    h_in: np.ndarray,
    h_out: np.ndarray,
    corr: CorrelationMatrix,
    phi: PhaseMatrix,
) -> complex:
    """Matrix form of the cascaded RIS coefficient (see module docstring)."""
    h_in = np.asarray(h_in)
    h_out = np.asarray(h_out)
    m = corr.sqrt_form.shape[0]
    if h_in.shape != (m,) or h_out.shape != (m,) or phi.phases.shape != (m,):
        raise ChannelError(
            f"length mismatch: h_in {h_in.shape}, h_out {h_out.shape}, "
            f"phi {phi.phases.shape}, R {corr.sqrt_form.shape}"
        )
    return complex(h_in @ corr.sqrt_form @ (phi.diagonal * (corr.sqrt_form @ h_out)))


def optimize_phases(
    h_sr: np.ndarray,
    h_rd: np.ndarray,
    corr: CorrelationMatrix,
) -> PhaseMatrix:
    """Per-element phase alignment maximizing |cascaded_coefficient|.

    With c = sum_a u_a v_a exp(j*phi_a), u = h_sr @ R^{1/2}, v = R^{1/2} @ h_rd,
    the optimum is phi_a = -arg(u_a * v_a), giving |c| = sum_a |u_a v_a|.
    """
    u = np.asarray(h_sr) @ corr.sqrt_form
    v = corr.sqrt_form @ np.asarray(h_rd)
    return PhaseMatrix(phases=-np.angle(u * v))
