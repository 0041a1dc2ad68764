import json
from pathlib import Path

import numpy as np
import pytest

from quditlearn.cli import main, parse_config
from quditlearn.errors import ConfigError
from quditlearn.experiments import bloch_coordinates



def write_config(path, iris_path, out_dir, extra=""):
    path.write_text(f"""
[experiment]
kind = train_eval
seed = 11
out = {out_dir}

[dataset]
name = iris
path = {iris_path}

[model]
d = 3
layers = 1
encoding = g2
method = explicit
centers = orthonormal

[train]
restarts = 3
max_epochs = 60
{extra}
""")


class TestConfigParsing:
    def test_round_trip(self, tmp_path, iris_path):
        cfg_path = tmp_path / "exp.ini"
        write_config(cfg_path, iris_path, tmp_path / "out")
        cfg = parse_config(cfg_path)
        assert cfg.kind == "train_eval"
        assert cfg.seed == 11
        assert cfg.d == (3,)
        assert cfg.encodings == ("g2",)
        assert cfg.restarts == 3

    def test_overrides(self, tmp_path, iris_path):
        cfg_path = tmp_path / "exp.ini"
        write_config(cfg_path, iris_path, tmp_path / "out")
        cfg = parse_config(cfg_path, seed_override=99, jobs_override=2,
                           out_override="elsewhere")
        assert cfg.seed == 99 and cfg.jobs == 2 and cfg.out_dir == "elsewhere"

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            parse_config(tmp_path / "nope.ini")

    def test_missing_section(self, tmp_path):
        p = tmp_path / "broken.ini"
        p.write_text("[dataset]\nname = iris\n")
        with pytest.raises(ConfigError):
            parse_config(p)

    def test_invalid_dimension(self, tmp_path, iris_path):
        p = tmp_path / "exp.ini"
        write_config(p, iris_path, tmp_path / "out")
        text = p.read_text().replace("d = 3", "d = 1")
        p.write_text(text)
        with pytest.raises(ConfigError):
            parse_config(p)

    def test_data_dir_env(self, tmp_path, iris_path, monkeypatch):
        monkeypatch.setenv("QUDITLEARN_DATA", str(Path(iris_path).parent))
        p = tmp_path / "exp.ini"
        write_config(p, "iris.csv", tmp_path / "out")
        cfg = parse_config(p)
        assert Path(cfg.data_path).exists()


class TestRunCommand:
    def test_train_eval_writes_artifacts(self, tmp_path, iris_path):
        cfg_path = tmp_path / "exp.ini"
        out = tmp_path / "out"
        write_config(cfg_path, iris_path, out)
        rc = main(["run", "--config", str(cfg_path)])
        assert rc == 0
        rows = (out / "results.csv").read_text().strip().splitlines()
        assert len(rows) == 1 + 3  # header + one row per restart
        summary = json.loads((out / "summary.json").read_text())
        assert summary["config"]["seed"] == 11
        assert "version" in summary
        assert 0.0 <= summary["median_accuracy"] <= 1.0
        assert (out / "model.txt").exists()

    def test_rerun_is_byte_identical(self, tmp_path, iris_path):
        cfg_path = tmp_path / "exp.ini"
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        write_config(cfg_path, iris_path, out1)
        assert main(["run", "--config", str(cfg_path)]) == 0
        assert main(["run", "--config", str(cfg_path), "--out", str(out2)]) == 0
        assert (out1 / "results.csv").read_bytes() == (out2 / "results.csv").read_bytes()

    def test_jobs_do_not_change_results(self, tmp_path, iris_path):
        cfg_path = tmp_path / "exp.ini"
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        write_config(cfg_path, iris_path, out1)
        assert main(["run", "--config", str(cfg_path)]) == 0
        assert main(["run", "--config", str(cfg_path), "--out", str(out2),
                     "--jobs", "2"]) == 0
        assert (out1 / "results.csv").read_bytes() == (out2 / "results.csv").read_bytes()

    def test_config_error_exit_code(self, tmp_path):
        p = tmp_path / "broken.ini"
        p.write_text("[experiment]\nkind = bogus\n")
        assert main(["run", "--config", str(p)]) == 2

    def test_data_error_exit_code(self, tmp_path, iris_path):
        bad_csv = tmp_path / "iris.csv"
        bad_csv.write_text("5.1,3.5,1.4\n")
        cfg_path = tmp_path / "exp.ini"
        write_config(cfg_path, bad_csv, tmp_path / "out")
        assert main(["run", "--config", str(cfg_path)]) == 3

    def test_validate_config(self, tmp_path, iris_path, capsys):
        cfg_path = tmp_path / "exp.ini"
        write_config(cfg_path, iris_path, tmp_path / "out")
        assert main(["validate-config", "--config", str(cfg_path)]) == 0
        echoed = json.loads(capsys.readouterr().out)
        assert echoed["kind"] == "train_eval"


class TestNoiseSweepRows:
    def test_noise_rows_reproducible_excluding_wall_time(self, tmp_path, iris_path):
        mos_path = tmp_path / "trine.txt"
        assert main(["mos", "--d", "2", "--k", "3", "--generations", "100",
                     "--seed", "5", "--out", str(mos_path)]) == 0
        cfg_path = tmp_path / "noise.ini"
        cfg_path.write_text(f"""
[experiment]
kind = noise_sweep
seed = 2
out = {tmp_path / 'n1'}

[dataset]
name = iris
path = {iris_path}

[model]
encoding = g2
centers = mos_file
mos_file = {mos_path}

[noise]
d = 2
layers = 1
t2 = 1e-5
runs = 2
epochs = 3
""")
        assert main(["run", "--config", str(cfg_path)]) == 0
        assert main(["run", "--config", str(cfg_path), "--out",
                     str(tmp_path / "n2")]) == 0

        def strip_wall(path):
            lines = path.read_text().strip().splitlines()
            cols = lines[0].split(",")
            keep = [i for i, c in enumerate(cols) if c != "wall_time"]
            return ["," .join(np.array(l.split(","))[keep]) for l in lines]

        a = strip_wall(tmp_path / "n1" / "results.csv")
        b = strip_wall(tmp_path / "n2" / "results.csv")
        assert a == b
        rows = (tmp_path / "n1" / "results.csv").read_text().strip().splitlines()
        assert rows[0] == "t2,run,final_train_loss,test_accuracy,warm_started,wall_time"
        assert len(rows) == 1 + 2


class TestMosCommand:
    def test_generates_states_and_gram(self, tmp_path):
        out = tmp_path / "mos.txt"
        gram = tmp_path / "gram.csv"
        rc = main(["mos", "--d", "2", "--k", "3", "--generations", "120",
                   "--seed", "5", "--out", str(out), "--gram", str(gram)])
        assert rc == 0
        from quditlearn.mos import load_mos

        states = load_mos(out)
        assert states.shape == (3, 2)
        rows = gram.read_text().strip().splitlines()
        assert len(rows) == 3


class TestBlochExport:
    def test_known_coordinates(self):
        assert np.allclose(bloch_coordinates(np.array([1, 0], dtype=complex)),
                           [0, 0, 1])
        plus = np.array([1, 1], dtype=complex) / np.sqrt(2)
        assert np.allclose(bloch_coordinates(plus), [1, 0, 0], atol=1e-15)

    def test_export_counts_rows(self, tmp_path, iris_path):
        # full pipeline: MOS centers for 3 classes on a qubit, train, export
        mos_path = tmp_path / "trine.txt"
        assert main(["mos", "--d", "2", "--k", "3", "--generations", "120",
                     "--seed", "5", "--out", str(mos_path)]) == 0
        cfg_path = tmp_path / "exp.ini"
        out = tmp_path / "out"
        write_config(cfg_path, iris_path, out)
        text = cfg_path.read_text().replace("d = 3", "d = 2").replace(
            "centers = orthonormal",
            f"centers = mos_file\nmos_file = {mos_path}",
        )
        cfg_path.write_text(text)
        assert main(["run", "--config", str(cfg_path)]) == 0
        bloch_path = tmp_path / "bloch.csv"
        rc = main(["bloch-export", "--model", str(out / "model.txt"),
                   "--config", str(cfg_path), "--split", "test",
                   "--out", str(bloch_path)])
        assert rc == 0
        rows = bloch_path.read_text().strip().splitlines()
        # header + 120 test points + the 3 trine centers
        assert rows[0].startswith("kind,label,predicted,x,y,z")
        assert len(rows) == 1 + 120 + 3
        kinds = [r.split(",")[0] for r in rows[1:]]
        assert kinds.count("center") == 3

    def test_amplitudes_for_higher_dimensions(self, tmp_path, iris_path):
        cfg_path = tmp_path / "exp.ini"
        out = tmp_path / "out"
        write_config(cfg_path, iris_path, out)
        assert main(["run", "--config", str(cfg_path)]) == 0
        bloch_path = tmp_path / "bloch.csv"
        rc = main(["bloch-export", "--model", str(out / "model.txt"),
                   "--config", str(cfg_path), "--out", str(bloch_path)])
        assert rc == 0
        header = bloch_path.read_text().splitlines()[0]
        assert "re0" in header and "im2" in header
