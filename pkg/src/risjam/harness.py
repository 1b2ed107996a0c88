"""Experiment harness: INI configuration, noise calibration, the Monte Carlo
sweep over (jammer, RIS size, JSR), and CSV/summary emission.

Seeding is hierarchical: every trial derives its generator from
SeedSequence(master, spawn_key=(jammer, ris, jsr, trial)), so results are
byte-identical for any worker count.
"""

from __future__ import annotations

import configparser
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import adaptation as ad
from . import channel as ch
from . import jammer as jm
from . import pipeline as pl
from . import waveform as wf

CSV_HEADER = (
    "jsr_db,jammer,topology,ris_size,t_baseline,t_jammed,gain,detect_rate,"
    "classify_rate,tau_err,modulation,code_rate,payload_fraction,stderr_gain"
)

CALIBRATION_DRAWS = 256
_CAL_KEY = 0x5EED


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    jammers: tuple[jm.JammerModel, ...] = (
        jm.JammerModel.DRFM,
        jm.JammerModel.PS,
        jm.JammerModel.AS,
    )
    topology: jm.PathTopology = jm.PathTopology.SOURCE_AWARE
    orthogonality: pl.OrthogonalityMode = pl.OrthogonalityMode.TEMPORAL
    ris_sizes: tuple[int, ...] = (64,)
    jsr_grid_db: tuple[float, ...] = tuple(np.arange(-10.0, 20.5, 2.5))
    trials: int = 200
    seed: int = 1
    jobs: int = 1
    settings: pl.TrialSettings = field(
        default_factory=lambda: pl.TrialSettings(
            link=ch.RisLinkConfig(element_count=64),
            rician=ch.RicianParams(),
            topology=jm.PathTopology.SOURCE_AWARE,
            orthogonality=pl.OrthogonalityMode.TEMPORAL,
        )
    )

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not self.ris_sizes or min(self.ris_sizes) < 1:
            raise ConfigError("ris_sizes must be positive")
        if not self.jsr_grid_db:
            raise ConfigError("jsr grid is empty")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")


def _parse_list(raw: str, cast):
    """Comma list, or a start:stop:step range (stop inclusive)."""
    raw = raw.strip()
    if ":" in raw:
        parts = [float(p) for p in raw.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise ConfigError(f"bad range spec {raw!r}, want start:stop:step")
        vals = np.arange(parts[0], parts[1] + parts[2] / 2, parts[2])
        return tuple(cast(v) for v in vals)
    return tuple(cast(p.strip()) for p in raw.split(",") if p.strip())


def _enum(value: str, enum_cls, name: str):
    try:
        return enum_cls(value.strip().lower())
    except ValueError:
        opts = ", ".join(e.value for e in enum_cls)
        raise ConfigError(f"{name} must be one of {opts}, got {value!r}") from None


_SWEEP_KEYS = {
    "jammers", "topology", "orthogonality", "ris_sizes", "jsr_db", "trials",
    "seed", "jobs",
}
_LINK_KEYS = {
    "d_sr", "d_rd", "path_loss_exp", "corr_rate", "carrier_hz", "rician_k",
    "path_count", "baseline_snr_db", "bandwidth_hz", "tx_power_dbm", "snr_mode",
}
_JAMMER_KEYS = {
    "power_cap_dbm", "power_floor_dbm", "eavesdrop_snr_db", "eaves_corr",
    "d_e1", "d_j1", "d_j2", "delay", "drfm_gain",
}
_RECEIVER_KEYS = {
    "frame_len", "pilot_len", "antennas", "sim_threshold",
    "inversion_threshold", "peak_significance", "flip_threshold",
}
_ADAPT_KEYS = {"delta", "fixed_rate", "max_order", "base_family"}
_SECTIONS = {
    "sweep": _SWEEP_KEYS,
    "link": _LINK_KEYS,
    "jammer": _JAMMER_KEYS,
    "receiver": _RECEIVER_KEYS,
    "adaptation": _ADAPT_KEYS,
}


def load_config(path: str) -> ExperimentConfig:
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(parser)


def loads_config(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser()
    try:
        parser.read_file(io.StringIO(text))
    except configparser.Error as exc:
        raise ConfigError(f"bad config: {exc}") from exc
    return parse_config(parser)


def parse_config(parser: configparser.ConfigParser) -> ExperimentConfig:
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
        for key in parser[section]:
            if key not in _SECTIONS[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")

    def get(section, key, cast, default):
        if parser.has_option(section, key):
            raw = parser.get(section, key)
            try:
                return cast(raw)
            except ConfigError:
                raise
            except ValueError as exc:
                raise ConfigError(f"[{section}] {key}: {exc}") from exc
        return default

    sw = "sweep"
    jammers = get(
        sw, "jammers",
        lambda r: tuple(_enum(p, jm.JammerModel, "jammer") for p in r.split(",")),
        ExperimentConfig.jammers,
    )
    topology = get(sw, "topology", lambda r: _enum(r, jm.PathTopology, "topology"),
                   jm.PathTopology.SOURCE_AWARE)
    ortho = get(sw, "orthogonality",
                lambda r: _enum(r, pl.OrthogonalityMode, "orthogonality"),
                pl.OrthogonalityMode.TEMPORAL)
    ris_sizes = get(sw, "ris_sizes", lambda r: _parse_list(r, lambda v: int(float(v))),
                    ExperimentConfig.ris_sizes)
    jsr = get(sw, "jsr_db", lambda r: _parse_list(r, float),
              tuple(np.arange(-10.0, 20.5, 2.5)))
    trials = get(sw, "trials", int, 200)
    seed = get(sw, "seed", int, 1)
    jobs = get(sw, "jobs", int, 1)

    link = ch.RisLinkConfig(
        element_count=ris_sizes[0],
        d_sr=get("link", "d_sr", float, 18.0),
        d_rd=get("link", "d_rd", float, 7.0),
        path_loss_exp=get("link", "path_loss_exp", float, 2.7),
        corr_rate=get("link", "corr_rate", float, 0.05),
        carrier_hz=get("link", "carrier_hz", float, 28e9),
    )
    rician = ch.RicianParams(
        rician_k=get("link", "rician_k", float, 0.0),
        path_count=get("link", "path_count", int, 1),
    )
    fixed_rate_raw = get("adaptation", "fixed_rate", str, "")
    fixed_rate = float(fixed_rate_raw) if fixed_rate_raw.strip() else None
    delay_raw = get("jammer", "delay", str, "")
    jam_delay = int(delay_raw) if delay_raw.strip() else None

    settings = pl.TrialSettings(
        link=link,
        rician=rician,
        topology=topology,
        orthogonality=ortho,
        frame_len=get("receiver", "frame_len", int, 4096),
        pilot_len=get("receiver", "pilot_len", int, 64),
        jam_delay=jam_delay,
        tx_power_dbm=get("link", "tx_power_dbm", float, 20.0),
        jam_power_cap_dbm=get("jammer", "power_cap_dbm", float, 40.0),
        jam_power_floor_dbm=get("jammer", "power_floor_dbm", float, 0.0),
        eavesdrop_snr_db=get("jammer", "eavesdrop_snr_db", float, 25.0),
        eaves_corr=get("jammer", "eaves_corr", float, 0.5),
        d_e1=get("jammer", "d_e1", float, 25.0),
        d_j1=get("jammer", "d_j1", float, 7.0),
        d_j2=get("jammer", "d_j2", float, 7.0),
        baseline_snr_db=get("link", "baseline_snr_db", float, 7.0),
        bandwidth_hz=get("link", "bandwidth_hz", float, 1.0),
        base_family=get("adaptation", "base_family",
                        lambda r: _enum(r, wf.Family, "base_family"), wf.Family.PSK),
        fixed_rate=fixed_rate,
        delta=get("adaptation", "delta", float, -0.005),
        max_order=get("adaptation", "max_order", int, 64),
        antennas=get("receiver", "antennas", int, 8),
        drfm_gain=get("jammer", "drfm_gain", float, 1.5),
        sim_threshold=get("receiver", "sim_threshold", float, 0.93),
        inversion_threshold=get("receiver", "inversion_threshold", float, 0.25),
        peak_significance=get("receiver", "peak_significance", float, 0.15),
        snr_mode=get("link", "snr_mode", str, "pinned"),
    )
    if settings.snr_mode not in ("pinned", "faded"):
        raise ConfigError(f"snr_mode must be pinned or faded, got {settings.snr_mode!r}")
    return ExperimentConfig(
        jammers=jammers, topology=topology, orthogonality=ortho,
        ris_sizes=ris_sizes, jsr_grid_db=jsr, trials=trials, seed=seed,
        jobs=jobs, settings=settings,
    )


# ---------------------------------------------------------------------------
# calibration
# ---------------------------------------------------------------------------


def calibrate_noise(cfg: ExperimentConfig) -> tuple[float, float]:
    """Noise floors (destination, jammer receiver) in watts.

    The destination floor is set so the mean legitimate SNR at the first
    (reference) RIS size equals the configured baseline; larger arrays then
    see a proportionally stronger link. The jammer floor pins its mean
    source->jammer eavesdropping SNR at the configured value.
    """
    s = cfg.settings
    link = replace(s.link, element_count=cfg.ris_sizes[0])
    p_t = ad.dbm_to_watt(s.tx_power_dbm)
    corr = pl._corr_cached(link.element_count, link.corr_rate)
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(_CAL_KEY,)))
    powers = []
    for _ in range(CALIBRATION_DRAWS):
        real = ch.sample_realization(link, s.rician, rng)
        phi = ch.optimize_phases(real.h_sr, real.h_rd, corr)
        h = ch.cascaded_coefficient(real.h_sr, real.h_rd, corr, phi)
        powers.append(p_t * abs(h) ** 2)
    noise_var = float(np.mean(powers)) / 10.0 ** (s.baseline_snr_db / 10.0)

    mean_eaves = p_t * ch.path_loss(s.d_e1, link.path_loss_exp) * s.rician.path_count
    eaves_var = mean_eaves / 10.0 ** (s.eavesdrop_snr_db / 10.0)
    return noise_var, eaves_var


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepRow:
    jsr_db: float
    jammer: jm.JammerModel
    topology: jm.PathTopology
    ris_size: int
    t_baseline: float
    t_jammed: float
    gain: float
    detect_rate: float
    classify_rate: float
    tau_err: float
    modulation: str
    code_rate: float
    payload_fraction: float
    stderr_gain: float
    clamped_fraction: float = 0.0


def _trial_seed(cfg, ji, ri, ki, t):
    return np.random.SeedSequence(cfg.seed, spawn_key=(ji, ri, ki, t))


def _run_cell(args):
    cfg, ji, ri, ki, noise_var, eaves_var = args
    model = cfg.jammers[ji]
    ris = cfg.ris_sizes[ri]
    jsr = cfg.jsr_grid_db[ki]
    settings = replace(cfg.settings, link=replace(cfg.settings.link, element_count=ris))
    results = []
    for t in range(cfg.trials):
        rng = np.random.default_rng(_trial_seed(cfg, ji, ri, ki, t))
        results.append(pl.run_trial(settings, jsr, model, rng, noise_var, eaves_var))
    return (ji, ri, ki), _aggregate(jsr, model, cfg.topology, ris, results)


def _modal(values):
    uniq, counts = np.unique(np.asarray(values), return_counts=True)
    return uniq[np.argmax(counts)]


def _aggregate(jsr, model, topology, ris, results) -> SweepRow:
    t_l = np.array([r.t_baseline for r in results])
    t_j = np.array([r.t_jammed for r in results])
    gains = t_j / t_l
    detected = np.array([r.detected for r in results], dtype=float)
    attempted = [r for r in results if r.jammer_class is not None]
    classify = (
        float(np.mean([r.classified_correct for r in attempted])) if attempted else 0.0
    )
    tau_errs = [r.tau_err for r in results if r.tau_hat is not None]
    tau_err = float(np.mean(tau_errs)) if tau_errs else float("nan")
    stderr = float(np.std(gains, ddof=1) / np.sqrt(gains.size)) if gains.size > 1 else 0.0
    return SweepRow(
        jsr_db=float(jsr),
        jammer=model,
        topology=topology,
        ris_size=int(ris),
        t_baseline=float(np.mean(t_l)),
        t_jammed=float(np.mean(t_j)),
        gain=float(np.mean(t_j) / np.mean(t_l)),
        detect_rate=float(np.mean(detected)),
        classify_rate=classify,
        tau_err=tau_err,
        modulation=str(_modal([str(r.scheme) for r in results])),
        code_rate=float(_modal([r.code_rate for r in results])),
        payload_fraction=float(np.mean([r.payload_fraction for r in results])),
        stderr_gain=stderr,
        clamped_fraction=float(np.mean([r.clamped for r in results])),
    )


def run_sweep(cfg: ExperimentConfig, jobs: int | None = None) -> list[SweepRow]:
    jobs = cfg.jobs if jobs is None else jobs
    noise_var, eaves_var = calibrate_noise(cfg)
    cells = [
        (cfg, ji, ri, ki, noise_var, eaves_var)
        for ji in range(len(cfg.jammers))
        for ri in range(len(cfg.ris_sizes))
        for ki in range(len(cfg.jsr_grid_db))
    ]
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            keyed = list(pool.map(_run_cell, cells, chunksize=1))
    else:
        keyed = [_run_cell(c) for c in cells]
    keyed.sort(key=lambda kv: kv[0])
    return [row for _, row in keyed]


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _fmt(v: float) -> str:
    return format(v, ".6g")


def rows_to_csv(rows: list[SweepRow]) -> str:
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(
            ",".join(
                [
                    _fmt(r.jsr_db), r.jammer.value, r.topology.value,
                    str(r.ris_size), _fmt(r.t_baseline), _fmt(r.t_jammed),
                    _fmt(r.gain), _fmt(r.detect_rate), _fmt(r.classify_rate),
                    _fmt(r.tau_err), r.modulation, _fmt(r.code_rate),
                    _fmt(r.payload_fraction), _fmt(r.stderr_gain),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def summarize(rows: list[SweepRow]) -> str:
    """Per (jammer, RIS size) curve: crossover JSR and peak gain."""
    out = []
    keys = sorted({(r.jammer, r.ris_size) for r in rows}, key=lambda k: (k[0].value, k[1]))
    for jammer, ris in keys:
        curve = sorted(
            (r for r in rows if r.jammer == jammer and r.ris_size == ris),
            key=lambda r: r.jsr_db,
        )
        above = [r for r in curve if r.gain > 1.0]
        peak = max(curve, key=lambda r: r.gain)
        label = f"{jammer.value:5s} ris={ris:<4d}"
        if above:
            out.append(
                f"{label} crossover at {above[0].jsr_db:+.1f} dB JSR, "
                f"peak gain {peak.gain:.3f} at {peak.jsr_db:+.1f} dB"
            )
        else:
            out.append(f"{label} no antifragile region (peak gain {peak.gain:.3f})")
    return "\n".join(out) + "\n"
