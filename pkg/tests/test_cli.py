"""CLI tests: argument handling, exit codes, CSV emission, and overrides."""

import numpy as np

from risjam.cli import main
from risjam.harness import CSV_HEADER

CONFIG = """
[sweep]
jammers = drfm
ris_sizes = 16
jsr_db = 0, 10
trials = 2
seed = 3

[adaptation]
fixed_rate = 0.94
"""


def _write_config(tmp_path, text=CONFIG):
    path = tmp_path / "exp.ini"
    path.write_text(text)
    return str(path)


class TestCli:
    def test_success_writes_csv(self, tmp_path):
        cfg = _write_config(tmp_path)
        out = tmp_path / "out.csv"
        assert main(["--config", cfg, "--out", str(out)]) == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0] == CSV_HEADER
        assert len(lines) == 3

    def test_missing_config_is_exit_1(self, tmp_path, capsys):
        code = main(["--config", str(tmp_path / "nope.ini"), "--out", str(tmp_path / "o.csv")])
        assert code == 1
        assert "config error" in capsys.readouterr().err

    def test_bad_key_is_exit_1(self, tmp_path):
        cfg = _write_config(tmp_path, "[sweep]\nbogus = 1\n")
        assert main(["--config", cfg, "--out", str(tmp_path / "o.csv")]) == 1

    def test_unwritable_output_is_exit_2(self, tmp_path):
        cfg = _write_config(tmp_path)
        assert main(["--config", cfg, "--out", str(tmp_path / "no" / "dir" / "o.csv")]) == 2

    def test_summary_flag_prints(self, tmp_path, capsys):
        cfg = _write_config(tmp_path)
        assert main(["--config", cfg, "--out", str(tmp_path / "o.csv"), "--summary"]) == 0
        assert "drfm" in capsys.readouterr().out

    def test_seed_override_changes_output(self, tmp_path):
        # faded mode keeps per-seed channel variation visible in the averages
        cfg = _write_config(tmp_path, CONFIG + "\n[link]\nsnr_mode = faded\n")
        a, b, c = (tmp_path / n for n in ("a.csv", "b.csv", "c.csv"))
        assert main(["--config", cfg, "--out", str(a)]) == 0
        assert main(["--config", cfg, "--out", str(b), "--seed", "99"]) == 0
        assert main(["--config", cfg, "--out", str(c), "--seed", "3"]) == 0
        assert a.read_text() != b.read_text()
        assert a.read_text() == c.read_text()

    def test_trials_and_jobs_overrides(self, tmp_path):
        cfg = _write_config(tmp_path)
        serial, parallel = tmp_path / "s.csv", tmp_path / "p.csv"
        assert main(["--config", cfg, "--out", str(serial), "--trials", "3"]) == 0
        assert main([
            "--config", cfg, "--out", str(parallel), "--trials", "3", "--jobs", "2",
        ]) == 0
        assert serial.read_text() == parallel.read_text()
