import json
import os

import numpy as np
import pytest

from fvdsim.cli import main
from fvdsim.config import parse_config
from fvdsim.errors import ConfigError, OutputExistsError
from fvdsim.output import (content_hash, format_value, prepare_out_dir,
                           write_csv, write_json)


def write_toml(tmp_path, text, name="run.toml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


class TestParseConfig:
    def test_minimal_decay_config(self, tmp_path):
        path = write_toml(tmp_path, """
[system]
n_s = 16
rb_over_a = 1.2
alpha = 2.5
beta = 0.3
""")
        cfg = parse_config(path, use_env=False)
        p = cfg.physical_params()
        assert p.n_s == 16
        assert p.beta == pytest.approx(0.3)
        assert cfg.experiment["kind"] == "decay"
        assert cfg.experiment["sg_window"] == 21  # documented default

    def test_json_accepted(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"system": {"n_s": 8, "beta": 0.25}}))
        cfg = parse_config(str(path), use_env=False)
        assert cfg.system["n_s"] == 8

    def test_unknown_key_rejected_with_path(self, tmp_path):
        path = write_toml(tmp_path, "[system]\nn_z = 12\n")
        with pytest.raises(ConfigError, match="system.n_z"):
            parse_config(path, use_env=False)

    def test_unknown_section_rejected(self, tmp_path):
        path = write_toml(tmp_path, "[rocket]\nthrust = 1\n")
        with pytest.raises(ConfigError, match="rocket"):
            parse_config(path, use_env=False)

    def test_type_mismatch(self, tmp_path):
        path = write_toml(tmp_path, '[system]\nn_s = "sixteen"\n')
        with pytest.raises(ConfigError, match="system.n_s"):
            parse_config(path, use_env=False)

    def test_odd_ns_rejected(self, tmp_path):
        path = write_toml(tmp_path, "[system]\nn_s = 15\n")
        with pytest.raises(ConfigError, match="even"):
            parse_config(path, use_env=False)

    def test_decay_needs_positive_beta(self, tmp_path):
        path = write_toml(tmp_path, """
[system]
beta = 0.0
[experiment]
kind = "decay"
""")
        with pytest.raises(ConfigError, match="beta"):
            parse_config(path, use_env=False)

    def test_flags_override_file(self, tmp_path):
        path = write_toml(tmp_path, "[system]\nbeta = 0.3\n")
        cfg = parse_config(path, overrides={"system": {"beta": 0.5}},
                           use_env=False)
        assert cfg.system["beta"] == 0.5

    def test_env_override(self, tmp_path, monkeypatch):
        monkeypatch.setenv("FVDSIM_COMPUTE_THREADS", "3")
        cfg = parse_config(None)
        assert cfg.compute["threads"] == 3

    def test_env_unknown_key(self, monkeypatch):
        monkeypatch.setenv("FVDSIM_SYSTEM_BOGUS", "1")
        with pytest.raises(ConfigError, match="BOGUS"):
            parse_config(None)

    def test_missing_file(self):
        with pytest.raises(ConfigError, match="not found"):
            parse_config("/nonexistent/run.toml", use_env=False)


class TestOutput:
    def test_format_value_15_digits(self):
        assert format_value(np.pi) == "3.14159265358979"
        assert format_value(1.0) == "1"
        assert format_value(True) == "true"
        assert format_value(7) == "7"

    def test_write_csv_header_only(self, tmp_path):
        path = str(tmp_path / "empty.csv")
        write_csv(path, ["a", "b"], [])
        assert open(path).read() == "a,b\n"

    def test_csv_deterministic(self, tmp_path):
        rows = [[0.1, 2], [np.e, 4]]
        p1, p2 = str(tmp_path / "x.csv"), str(tmp_path / "y.csv")
        write_csv(p1, ["u", "v"], rows)
        write_csv(p2, ["u", "v"], rows)
        assert open(p1, "rb").read() == open(p2, "rb").read()

    def test_json_canonical_and_hash_stable(self, tmp_path):
        payload = {"b": [1, 2], "a": {"y": np.float64(0.5), "x": np.int64(3)}}
        path = str(tmp_path / "p.json")
        write_json(path, payload)
        text = open(path).read()
        assert text.index('"a"') < text.index('"b"')
        assert content_hash(payload) == content_hash({"a": {"x": 3, "y": 0.5},
                                                      "b": [1, 2]})

    def test_refuses_overwrite_without_force(self, tmp_path):
        out = str(tmp_path / "out")
        prepare_out_dir(out)
        write_json(os.path.join(out, "meta.json"), {"done": True})
        with pytest.raises(OutputExistsError):
            prepare_out_dir(out)
        prepare_out_dir(out, force=True)  # allowed


class TestCli:
    def run_cli(self, *argv):
        return main(list(argv))

    def test_version(self, capsys):
        with pytest.raises(SystemExit) as exc:
            self.run_cli("--version")
        assert exc.value.code == 0
        assert "fvdsim" in capsys.readouterr().out

    def test_decay_smoke(self, tmp_path, capsys):
        out = str(tmp_path / "decay")
        code = self.run_cli("decay", "--ns", "6", "--beta", "0.3",
                            "--n-samples", "121", "--out", out)
        assert code == 0
        assert os.path.exists(os.path.join(out, "trajectory.csv"))
        assert os.path.exists(os.path.join(out, "fits.json"))
        meta = json.load(open(os.path.join(out, "meta.json")))
        assert meta["config"]["system"]["n_s"] == 6
        assert "inputs_hash" in meta
        header = open(os.path.join(out, "trajectory.csv")).readline().strip()
        assert header.startswith("t_us,omega_t_over_2pi,neel,sigma_1,sigma_2,"
                                 "sigma_ns,fidelity_z2p,fidelity_z2m,fidelity_zero")

    def test_io_formats_gate_emission(self, tmp_path):
        cfgfile = tmp_path / "run.toml"
        cfgfile.write_text('[system]\nn_s = 4\n[io]\nformats = ["csv"]\n')
        out = str(tmp_path / "decay")
        code = self.run_cli("decay", "--config", str(cfgfile),
                            "--n-samples", "61", "--out", out)
        assert code == 0
        assert os.path.exists(os.path.join(out, "trajectory.csv"))
        assert not os.path.exists(os.path.join(out, "fits.json"))

    def test_bad_format_rejected(self, tmp_path):
        cfgfile = tmp_path / "run.toml"
        cfgfile.write_text('[io]\nformats = ["parquet"]\n')
        with pytest.raises(ConfigError, match="parquet"):
            parse_config(str(cfgfile), use_env=False)

    def test_decay_refuses_rerun_without_force(self, tmp_path):
        out = str(tmp_path / "decay")
        assert self.run_cli("decay", "--ns", "4", "--n-samples", "61",
                            "--out", out) == 0
        assert self.run_cli("decay", "--ns", "4", "--n-samples", "61",
                            "--out", out) == 2
        assert self.run_cli("decay", "--ns", "4", "--n-samples", "61",
                            "--out", out, "--force") == 0

    def test_config_error_exit_code(self, tmp_path):
        out = str(tmp_path / "x")
        code = self.run_cli("decay", "--ns", "7", "--out", out)
        assert code == 2

    def test_two_atom_csv(self, tmp_path):
        out = str(tmp_path / "two")
        code = self.run_cli("two-atom", "--tau", "4.0", "--out", out)
        assert code == 0
        header = open(os.path.join(out, "two_atom.csv")).readline().strip()
        assert header == "t,E1,E2,E3,p00,p01,p10,p_phi3"

    def test_protocol_report(self, tmp_path, capsys):
        out = str(tmp_path / "proto")
        code = self.run_cli("protocol", "--ns", "16", "--a", "8.27",
                            "--b", "10.0", "--out", out)
        assert code == 0
        report = json.load(open(os.path.join(out, "validation.json")))
        assert report["ok"] is True
        layout = json.load(open(os.path.join(out, "layout.json")))
        assert len([a for a in layout["atoms"] if a["role"] == "main"]) == 16
        assert len([a for a in layout["atoms"] if a["role"] == "ancilla"]) == 8

    def test_protocol_spacing_violation_exit(self, tmp_path):
        out = str(tmp_path / "proto-bad")
        code = self.run_cli("protocol", "--ns", "16", "--a", "3.9",
                            "--b", "10.0", "--out", out)
        assert code == 3

    def test_sweep_threads_byte_identical(self, tmp_path):
        a, b = str(tmp_path / "s1"), str(tmp_path / "s8")
        args = ["sweep", "--ns", "6", "--beta", "0.25",
                "--alpha-values", "2.5,3.0", "--rba-values", "1.2,1.26",
                "--n-samples", "81"]
        assert self.run_cli(*args, "--threads", "1", "--out", a) == 0
        assert self.run_cli(*args, "--threads", "8", "--out", b) == 0
        csv_a = open(os.path.join(a, "grid.csv"), "rb").read()
        csv_b = open(os.path.join(b, "grid.csv"), "rb").read()
        assert csv_a == csv_b

    def test_phase_diagram_outputs(self, tmp_path):
        out = str(tmp_path / "phase")
        code = self.run_cli("phase-diagram", "--ns", "6",
                            "--alpha-range", "0,5", "--rba-range", "1.1,1.5",
                            "--resolution", "6", "--out", out)
        assert code == 0
        assert os.path.exists(os.path.join(out, "grid.csv"))
        sidecar = json.load(open(os.path.join(out, "boundary_points.json")))
        assert "boundary_points" in sidecar
