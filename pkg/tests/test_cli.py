"""Config parsing, subcommand plumbing, manifests and CSV determinism."""

import json
from pathlib import Path

import numpy as np
import pytest

from chradial import cli
from chradial.errors import ConfigError


def write_cfg(tmp_path: Path, text: str, name="run.cfg") -> Path:
    p = tmp_path / name
    p.write_text(text)
    return p


class TestParseConfig:
    def test_file_values(self, tmp_path):
        cfg_file = write_cfg(tmp_path, "gamma=4\ndelta=0.01\n")
        cfg = cli.parse_config("stationary", cfg_file)
        assert cfg["gamma"] == 4.0
        assert cfg["delta"] == 0.01

    def test_comments_and_blanks(self, tmp_path):
        cfg_file = write_cfg(tmp_path, "# a comment\n\ngamma=6\n")
        assert cli.parse_config("stationary", cfg_file)["gamma"] == 6.0

    def test_override_wins(self, tmp_path):
        cfg_file = write_cfg(tmp_path, "gamma=4\n")
        cfg = cli.parse_config("stationary", cfg_file, {"gamma": "8"})
        assert cfg["gamma"] == 8.0

    def test_unknown_key_names_line(self, tmp_path):
        cfg_file = write_cfg(tmp_path, "gamma=4\nfooo=1\n")
        with pytest.raises(ConfigError, match=r":2"):
            cli.parse_config("stationary", cfg_file)

    def test_validation_names_precondition(self, tmp_path):
        cfg_file = write_cfg(tmp_path, "gamma=0.5\n")
        with pytest.raises(ConfigError, match="gamma must exceed 1"):
            cli.parse_config("stationary", cfg_file)

    def test_malformed_line(self, tmp_path):
        cfg_file = write_cfg(tmp_path, "gamma 4\n")
        with pytest.raises(ConfigError, match=r":1"):
            cli.parse_config("stationary", cfg_file)

    def test_empty_config_uses_defaults(self):
        cfg = cli.parse_config("limit")
        assert cfg["mass"] == 0.4

    def test_key_foreign_to_subcommand(self, tmp_path):
        cfg_file = write_cfg(tmp_path, "dt=1e-7\n")
        with pytest.raises(ConfigError, match="does not apply"):
            cli.parse_config("limit", cfg_file)


class TestSubcommands:
    def test_limit_outputs(self, tmp_path):
        out = tmp_path / "o"
        rc = cli.main(["limit", "--mass", "0.4", "--delta", "0.01",
                       "--out", str(out)])
        assert rc == 0
        summary = (out / "limit_summary.csv").read_text().splitlines()
        header = summary[0].split(",")
        row = dict(zip(header, map(float, summary[1].split(","))))
        # jump equals the multiplier exactly
        assert row["jump"] == row["lambda_c"]
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["error"] is None
        names = {f["name"] for f in manifest["files"]}
        emitted = {p.name for p in out.iterdir()} - {"manifest.json"}
        assert names == emitted  # every emitted file is listed

    def test_general_matches_limit(self, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        # same (R, delta) through both pipelines
        assert cli.main(["general", "--potential", "quadratic", "--R", "1.0",
                         "--delta", "1e-4", "--out", str(out1)]) == 0
        lam_gen = float((out1 / "general_summary.csv").read_text()
                        .splitlines()[1].split(",")[3])
        from chradial import limit
        lam_c = 0.5 * limit.solve_xc(1.0, 1e-4)
        assert abs(lam_gen - lam_c) < 1e-10

    def test_stationary_run(self, tmp_path):
        out = tmp_path / "s"
        rc = cli.main(["stationary", "--R", "1.0", "--n_nodes", "128",
                       "--out", str(out)])
        assert rc == 0
        lines = (out / "profile.csv").read_text().splitlines()
        assert lines[0] == "r,n,p,mu"
        assert len(lines) == 129

    def test_evolve_zero_ic(self, tmp_path):
        out = tmp_path / "e"
        rc = cli.main(["evolve", "--ic", "constant", "--ic_amplitude", "0",
                       "--potential", "zero", "--dt", "1e-6", "--t_end",
                       "1e-4", "--n_nodes", "64", "--output_every", "50",
                       "--out", str(out)])
        assert rc == 0
        data = np.genfromtxt(out / "snapshots.csv", delimiter=",", names=True)
        assert np.all(data["n"] == 0.0)

    def test_evolve_guard_error_exit_code(self, tmp_path):
        out = tmp_path / "g"
        rc = cli.main(["evolve", "--potential", "zero", "--dt", "1.0",
                       "--t_end", "2.0", "--n_nodes", "64",
                       "--adaptive_guard", "false", "--out", str(out)])
        assert rc == 3
        manifest = json.loads((out / "manifest.json").read_text())
        assert "StabilityError" in manifest["error"]

    def test_config_error_exit_code(self, tmp_path):
        rc = cli.main(["stationary", "--gamma", "0.5",
                       "--out", str(tmp_path / "x")])
        assert rc == 2

    def test_sweep_outputs_ratio_band(self, tmp_path):
        out = tmp_path / "w"
        rc = cli.main(["sweep", "--gammas", "10,50", "--n_nodes", "96",
                       "--deltas", "1e-5,1e-6,1e-7", "--out", str(out)])
        assert rc == 0
        rows = (out / "delta_sweep.csv").read_text().splitlines()[1:]
        for row in rows:
            delta, xc, lam_c, asym, ratio = map(float, row.split(","))
            if 6**4 * 8 * delta < 1.0:
                assert 0.94 <= ratio <= 1.0


class TestDeterminismAndRoundTrip:
    def test_byte_identical_reruns(self, tmp_path):
        outs = []
        for name in ("r1", "r2"):
            out = tmp_path / name
            assert cli.main(["limit", "--mass", "0.4", "--delta", "0.01",
                             "--out", str(out)]) == 0
            outs.append(out)
        for fname in ("limit_profile.csv", "limit_summary.csv",
                      "config_resolved.cfg"):
            assert (outs[0] / fname).read_bytes() == (outs[1] / fname).read_bytes()

    def test_manifest_echo_round_trips(self, tmp_path):
        out = tmp_path / "rt"
        assert cli.main(["limit", "--mass", "0.5", "--delta", "1e-3",
                         "--out", str(out)]) == 0
        cfg1 = cli.parse_config("limit", out / "config_resolved.cfg")
        cfg2 = cli.parse_config("limit", None,
                                {"mass": "0.5", "delta": "1e-3"})
        assert cfg1 == cfg2


class TestVerify:
    def test_corrupted_tolerance_names_failures(self):
        # squeezing every tolerance by 1e9 must produce named failures
        from chradial.verify import run_checks
        fast = {"AC1", "AC3", "AC5", "AC6", "AC7"}
        results = run_checks(tol_scale=1e-9, only=fast)
        failed = [name for name, ok, _ in results if not ok]
        assert failed  # the corrupted suite cannot be all green
        assert {name for name, _, _ in results} == fast

    def test_default_scale_fast_subset_passes(self):
        from chradial.verify import run_checks
        results = run_checks(only={"AC1", "AC3", "AC5", "AC6", "AC7"})
        assert all(ok for _, ok, _ in results), results
