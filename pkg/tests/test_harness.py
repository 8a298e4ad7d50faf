import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aoptenc.harness import cli
from aoptenc.harness.config import SCHEMA, ConfigError, ExperimentConfig, parse_config, parse_value
from aoptenc.harness.output import StudyOutput, format_value, read_csv, read_meta, write_csv
from aoptenc.harness.seeds import base_seed, derive_seed, task_seed

SMALL = ["--set", "mesh.n=4", "--set", "helmholtz.kappa=5.5"]


class TestConfig:
    def test_defaults(self):
        cfg = ExperimentConfig()
        assert cfg["mesh.n"] == 12
        assert cfg["helmholtz.kappa"] == pytest.approx(2 * np.pi)
        assert cfg.explicit == {}

    def test_parse_sections_comments_and_types(self):
        cfg = parse_config("""
            seed = 7   # master
            [prior]
            gamma = 2e-3
            [study]
            s_values = [0, 0.25]
            media = ['medium1']
            [aopt]
            renormalize = false
        """)
        assert cfg["seed"] == 7
        assert cfg["prior.gamma"] == 2e-3
        assert cfg["study.s_values"] == [0.0, 0.25]
        assert cfg["study.media"] == ["medium1"]
        assert cfg["aopt.renormalize"] is False

    @pytest.mark.parametrize("text", [
        "nonsense.key = 1",
        "mesh.n = 4\nmesh.n = 5",
        "mesh.n = 4.5",
        "mesh.n",
        "prior.gamma = abc",
        "aopt.renormalize = 1",
        "geometry.preset = hexagon",
        "geometry.sources = [[0.1, 0.2, 0.3]]",
        "[]\nseed = 1",
        "seed =",
    ])
    def test_strict(self, text):
        with pytest.raises(ConfigError):
            parse_config(text)

    def test_error_names_source_and_line(self):
        with pytest.raises(ConfigError, match=r"exp\.cfg:2"):
            parse_config("seed = 1\nseed = 2", "exp.cfg")

    def test_overrides_do_not_mutate(self):
        a = ExperimentConfig({"mesh.n": 6})
        b = a.with_overrides(**{"mesh.n": 8})
        assert a["mesh.n"] == 6 and b["mesh.n"] == 8

    def test_hash_depends_on_effective_values(self):
        assert ExperimentConfig().hash() == ExperimentConfig({"mesh.n": 12}).hash()
        assert ExperimentConfig().hash() != ExperimentConfig({"mesh.n": 8}).hash()

    def test_list_defaults_are_copies(self):
        cfg = ExperimentConfig()
        cfg["study.media"].append("x")
        assert cfg["study.media"] == ["medium1", "medium2"]

    @pytest.mark.parametrize("text,value", [("true", True), ("None", None), ("3", 3), ("2.5", 2.5),
                                            ("[1, 2]", [1, 2]), ("medium1", "medium1")])
    def test_parse_value(self, text, value):
        assert parse_value(text) == value

    def test_every_default_validates(self):
        cfg = ExperimentConfig({k: d for k, (_, d) in SCHEMA.items()})
        assert cfg.hash() == ExperimentConfig().hash()


class TestSeeds:
    def test_purpose_override(self):
        cfg = ExperimentConfig({"seed": 3, "aopt.seed_trace": 99})
        assert base_seed(cfg, "trace") == 99
        assert base_seed(cfg, "weights") == 3

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2 ** 31), st.integers(0, 1000), st.integers(0, 1000))
    def test_deterministic_distinct_and_in_range(self, base, i, j):
        a = derive_seed(base, "weights", i, j)
        assert a == derive_seed(base, "weights", i, j)
        assert 0 <= a < 2 ** 63
        assert a != derive_seed(base, "init", i, j)
        assert a != derive_seed(base, "weights", i, j + 1)

    def test_task_seed_uses_config(self):
        assert task_seed(ExperimentConfig({"seed": 1}), "init", 0) != task_seed(ExperimentConfig({"seed": 2}),
                                                                                "init", 0)


class TestOutput:
    @pytest.mark.parametrize("value,text", [(True, "1"), (np.int64(3), "3"), (0.1, "0.10000000000000001"),
                                            (float("nan"), "nan"), (-np.inf, "-inf"), ("a", "a")])
    def test_format_value(self, value, text):
        assert format_value(value) == text

    @settings(max_examples=50, deadline=None)
    @given(st.floats(allow_nan=False, allow_infinity=False))
    def test_floats_roundtrip_exactly(self, x):
        assert float(format_value(x)) == x

    def test_csv_layout(self, tmp_path):
        path = tmp_path / "t.csv"
        write_csv(path, ["a", "b"], [[1, 0.5], ["x,y", 2.0]])
        raw = path.read_bytes()
        assert b"\r" not in raw
        assert raw == b'a,b\n1,0.5\n"x,y",2\n'
        header, rows = read_csv(path)
        assert header == ["a", "b"] and rows[1] == ["x,y", "2"]

    def test_row_width_checked(self, tmp_path):
        with pytest.raises(ValueError):
            write_csv(tmp_path / "t.csv", ["a"], [[1, 2]])

    def test_sidecar(self, tmp_path):
        out = StudyOutput(str(tmp_path), meta={"command": "x"})
        out.add_table("t.csv", ["a"], [[1], [2]], flagged=[1], extra_meta={"medium": "medium1"})
        out.finalize()
        meta = read_meta(str(tmp_path / "t.csv.meta"))
        assert meta == {"command": "x", "columns": "a", "flagged_count": "1", "flagged_rows": "1",
                        "medium": "medium1", "rows": "2"}


class TestCli:
    def test_parser_lists_every_study(self):
        for name in ("sweep1d", "gn-robustness", "trace-effect", "random-vs-optimal", "variability",
                     "gradcheck", "counter-audit", "forward", "map"):
            assert name in cli.STUDIES

    def test_missing_config_file(self, tmp_path):
        assert cli.main(["forward", "--config", str(tmp_path / "none.cfg"), "--out", str(tmp_path)]) == 2

    def test_bad_config_file(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("mesh.n = 4\nunknown = 1\n")
        assert cli.main(["forward", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2

    def test_bad_override(self, tmp_path):
        assert cli.main(["forward", "--out", str(tmp_path), "--set", "mesh.n"]) == 2
        assert cli.main(["forward", "--out", str(tmp_path), "--set", "mesh.n=-1"]) == 2

    def test_usage_error(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            cli.main(["forward"])
        assert exc.value.code == 2

    def test_solver_failure(self, tmp_path, monkeypatch):
        def boom(config, out_dir):
            raise np.linalg.LinAlgError("singular")

        monkeypatch.setitem(cli.STUDIES, "forward", boom)
        assert cli.main(["forward", "--out", str(tmp_path)]) == 3

    def test_forward_then_map_from_saved_data(self, tmp_path, capsys):
        fwd = tmp_path / "fwd"
        assert cli.main(["forward", "--out", str(fwd), "--seed", "4", *SMALL]) == 0
        header, rows = read_csv(fwd / "observations.csv")
        assert header == ["source", "receiver", "x", "y", "noiseless", "observed"]
        assert len(rows) == 2 * 20
        meta = read_meta(str(fwd / "observations.csv.meta"))
        for key in ("config_hash", "version", "kernel_backend", "seed.noise", "solves_total", "wall_time_s"):
            assert key in meta
        out = tmp_path / "map"
        assert cli.main(["map", "--out", str(out), "--set", f"data.path={fwd / 'data.csv'}", *SMALL]) == 0
        header, rows = read_csv(out / "map.csv")
        assert header == ["x", "y", "m_map", "m_true", "m0"]
        assert len(rows) == 25

    def test_mismatched_data_is_config_error(self, tmp_path):
        fwd = tmp_path / "fwd"
        assert cli.main(["forward", "--out", str(fwd), *SMALL]) == 0
        args = ["map", "--out", str(tmp_path / "m"), "--set", f"data.path={fwd / 'data.csv'}",
                "--set", "geometry.preset=ten_source", *SMALL]
        assert cli.main(args) == 2

    def test_counter_audit_passes(self, tmp_path, capsys):
        assert cli.main(["counter-audit", "--out", str(tmp_path), "--set", "check.mesh_n=4"]) == 0
        assert "FAIL" not in capsys.readouterr().out

    def test_corrupted_gradient_fails_check(self, tmp_path):
        args = ["gradcheck", "--out", str(tmp_path), "--set", "check.mesh_n=3", "--set", "check.kinds=['gn_ref']",
                "--set", "check.n_points=1", "--set", "check.n_directions=1", "--set", "check.corrupt=true"]
        assert cli.main(args) == 4

    def test_entry_point(self, tmp_path):
        res = subprocess.run([sys.executable, "-m", "aoptenc.harness.cli", "forward", "--out", str(tmp_path),
                              "--set", "unknown.key=1"], capture_output=True, text=True)
        assert res.returncode == 2
        assert "unknown config key" in res.stderr


class TestDeterminism:
    def test_forward_and_map_byte_identical(self, tmp_path):
        for name in ("a", "b"):
            assert cli.main(["map", "--out", str(tmp_path / name), "--seed", "3", *SMALL]) == 0
        for f in os.listdir(tmp_path / "a"):
            if f.endswith(".csv"):
                assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes(), f

    def test_seed_changes_data(self, tmp_path):
        for s in ("1", "2"):
            assert cli.main(["forward", "--out", str(tmp_path / s), "--seed", s, *SMALL]) == 0
        assert (tmp_path / "1" / "data.csv").read_bytes() != (tmp_path / "2" / "data.csv").read_bytes()
