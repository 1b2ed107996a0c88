"""Harness tests: INI parsing, calibration, sweep aggregation, CSV output,
and seed-stable parallel execution."""

import numpy as np
import pytest

from risjam.harness import (
    CSV_HEADER,
    ConfigError,
    ExperimentConfig,
    calibrate_noise,
    loads_config,
    rows_to_csv,
    run_sweep,
    summarize,
)
from risjam.jammer import JammerModel, PathTopology
from risjam.pipeline import OrthogonalityMode

SMALL_CONFIG = """
[sweep]
jammers = drfm, ps
topology = source_aware
orthogonality = temporal
ris_sizes = 16
jsr_db = 0, 10
trials = 3
seed = 7

[link]
baseline_snr_db = 7.0

[adaptation]
fixed_rate = 0.94
"""


class TestConfigParsing:
    def test_defaults(self):
        cfg = loads_config("[sweep]\ntrials = 2\n")
        assert cfg.trials == 2
        assert cfg.seed == 1
        assert cfg.jammers == (JammerModel.DRFM, JammerModel.PS, JammerModel.AS)
        assert cfg.topology == PathTopology.SOURCE_AWARE
        assert cfg.orthogonality == OrthogonalityMode.TEMPORAL
        assert cfg.ris_sizes == (64,)
        assert cfg.settings.snr_mode == "pinned"

    def test_full_round_trip(self):
        cfg = loads_config(SMALL_CONFIG)
        assert cfg.jammers == (JammerModel.DRFM, JammerModel.PS)
        assert cfg.jsr_grid_db == (0.0, 10.0)
        assert cfg.ris_sizes == (16,)
        assert cfg.settings.fixed_rate == pytest.approx(0.94)
        assert cfg.settings.link.element_count == 16

    def test_range_syntax(self):
        cfg = loads_config("[sweep]\njsr_db = -10:20:2.5\n")
        grid = np.asarray(cfg.jsr_grid_db)
        assert grid[0] == -10.0 and grid[-1] == 20.0
        assert np.allclose(np.diff(grid), 2.5)

    def test_unknown_section_rejected(self):
        with pytest.raises(ConfigError):
            loads_config("[nope]\nx = 1\n")

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            loads_config("[sweep]\nwidgets = 3\n")

    def test_bad_enum_rejected(self):
        with pytest.raises(ConfigError):
            loads_config("[sweep]\njammers = laser\n")

    def test_bad_snr_mode_rejected(self):
        with pytest.raises(ConfigError):
            loads_config("[link]\nsnr_mode = wobbly\n")

    def test_bad_value_rejected(self):
        with pytest.raises(ConfigError):
            loads_config("[sweep]\ntrials = many\n")

    def test_invalid_counts_rejected(self):
        with pytest.raises(ConfigError):
            loads_config("[sweep]\ntrials = 0\n")
        with pytest.raises(ConfigError):
            loads_config("[sweep]\njobs = 0\n")


class TestCalibration:
    def test_noise_floor_hits_baseline(self):
        cfg = loads_config("[sweep]\ntrials = 1\n")
        noise_var, eaves_var = calibrate_noise(cfg)
        assert noise_var > 0 and eaves_var > 0
        # stronger baseline demands a lower noise floor
        cfg_hi = loads_config("[sweep]\ntrials = 1\n[link]\nbaseline_snr_db = 17\n")
        assert calibrate_noise(cfg_hi)[0] < noise_var

    def test_deterministic(self):
        cfg = loads_config(SMALL_CONFIG)
        assert calibrate_noise(cfg) == calibrate_noise(cfg)


@pytest.fixture(scope="module")
def rows():
    return run_sweep(loads_config(SMALL_CONFIG))


class TestSweep:
    def test_grid_coverage(self, rows):
        assert len(rows) == 4  # 2 jammers x 1 ris x 2 jsr
        combos = {(r.jammer, r.jsr_db) for r in rows}
        assert combos == {
            (JammerModel.DRFM, 0.0),
            (JammerModel.DRFM, 10.0),
            (JammerModel.PS, 0.0),
            (JammerModel.PS, 10.0),
        }

    def test_rates_are_fractions(self, rows):
        for r in rows:
            assert 0.0 <= r.detect_rate <= 1.0
            assert 0.0 <= r.classify_rate <= 1.0
            assert 0.0 < r.payload_fraction <= 1.0
            assert r.t_baseline > 0

    def test_parallel_matches_serial(self, rows):
        par = run_sweep(loads_config(SMALL_CONFIG), jobs=2)
        assert rows_to_csv(par) == rows_to_csv(rows)

    def test_repeat_is_identical(self, rows):
        again = run_sweep(loads_config(SMALL_CONFIG))
        assert rows_to_csv(again) == rows_to_csv(rows)


class TestOutput:
    def test_csv_header_exact(self):
        assert CSV_HEADER == (
            "jsr_db,jammer,topology,ris_size,t_baseline,t_jammed,gain,"
            "detect_rate,classify_rate,tau_err,modulation,code_rate,"
            "payload_fraction,stderr_gain"
        )

    def test_csv_shape(self):
        rows = run_sweep(loads_config(SMALL_CONFIG))
        text = rows_to_csv(rows)
        lines = text.strip().split("\n")
        assert lines[0] == CSV_HEADER
        assert len(lines) == 1 + len(rows)
        assert all(len(line.split(",")) == 14 for line in lines[1:])

    def test_summary_mentions_each_curve(self):
        rows = run_sweep(loads_config(SMALL_CONFIG))
        text = summarize(rows)
        assert "drfm" in text and "ps" in text

    def test_config_validation(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(trials=0)
        with pytest.raises(ConfigError):
            ExperimentConfig(ris_sizes=())
