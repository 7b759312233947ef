import json
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pytest

from stabsel.cli import load_run_config, main
from stabsel.errors import ConfigError
from stabsel.simgen import DesignSpec, gen_design


def write_two_signal_csv(path, seed=0, n=100, p=100, rho=0.35):
    """A small decoy-design CSV with beta = (1, 1, 0, ...) on the raw scale."""
    spec = DesignSpec("two_correlated", n=n, p=p, rho=rho)
    child = np.random.SeedSequence(entropy=seed, spawn_key=(0,))
    rng_design, rng_noise = [np.random.default_rng(s) for s in child.spawn(2)]
    raw = gen_design(spec, rng_design, normalized=False)
    y = raw.X[:, 0] + raw.X[:, 1] + rng_noise.normal(0, 0.5, n)
    lines = [",".join([f"v{j + 1}" for j in range(p)] + ["y"])]
    for i in range(n):
        lines.append(",".join(f"{v:.17g}" for v in raw.X[i]) + f",{y[i]:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")


class TestCalibrate:
    def test_reference_value(self, capsys):
        assert main(["calibrate", "--p", "1000", "--pi", "0.9", "--ev", "1"]) == 0
        out = capsys.readouterr().out
        assert "q=28.2843" in out

    def test_threshold_from_q(self, capsys):
        assert main(["calibrate", "--p", "1000", "--q", "28.2842712474619", "--ev", "4"]) == 0
        assert "threshold=0.6" in capsys.readouterr().out

    def test_bound_from_pair(self, capsys):
        assert main(["calibrate", "--p", "100", "--pi", "0.9", "--q", "4"]) == 0
        assert "ev_bound=0.2" in capsys.readouterr().out

    def test_needs_exactly_two(self, capsys):
        assert main(["calibrate", "--p", "100", "--pi", "0.9"]) == 2
        assert main(["calibrate", "--p", "100", "--pi", "0.9", "--q", "1", "--ev", "1"]) == 2


class TestDiagnose:
    def test_two_correlated_population(self, capsys):
        assert main(["diagnose", "--design", "two_correlated", "--rho", "0.6",
                     "--p", "50", "--signs", "+,+"]) == 0
        out = capsys.readouterr().out
        assert "irc_value\t1.2" in out
        assert "irc_violation_count\t1" in out

    def test_no_violation_below_half(self, capsys):
        assert main(["diagnose", "--design", "two_correlated", "--rho", "0.4",
                     "--p", "30", "--signs", "+,+"]) == 0
        assert "irc_violation_count\t0" in capsys.readouterr().out

    def test_csv_requires_support(self, tmp_path, capsys):
        f = tmp_path / "d.csv"
        f.write_text("a,b\n1,0\n0,1\n1,1\n")
        assert main(["diagnose", "--csv", str(f)]) == 2

    def test_numerical_failure_exits_4(self, tmp_path, capsys):
        # duplicated support columns make the support gram singular
        f = tmp_path / "d.csv"
        f.write_text("a,b,c\n1,1,0\n2,2,1\n3,3,0\n0,0,1\n")
        assert main(["diagnose", "--csv", str(f), "--support", "1,2",
                     "--signs", "+,+"]) == 4


class TestSimulate:
    def test_deterministic_bytes(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for out in (a, b):
            assert main(["simulate", "--preset", "B-desk", "--seed", "7",
                         "--s", "4", "--snr", "2", "--out", str(out)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_ggm_and_permute(self, tmp_path):
        out = tmp_path / "g.csv"
        assert main(["simulate", "--kind", "ggm", "--d", "6", "--n", "30",
                     "--seed", "1", "--permute", "--out", str(out)]) == 0
        header = out.read_text().splitlines()[0]
        assert header.count(",") == 5

    def test_unknown_preset(self, tmp_path, capsys):
        assert main(["simulate", "--preset", "nope", "--out", str(tmp_path / "x.csv")]) == 2


@pytest.fixture(scope="module")
def outdir(tmp_path_factory):
    """One full `select` run on a decoy-design CSV, shared by the checks below."""
    tmp = tmp_path_factory.mktemp("select")
    csv = tmp / "data.csv"
    write_two_signal_csv(csv, seed=3, n=200, p=200)
    cfg = tmp / "cfg.json"
    cfg.write_text(json.dumps({
        "schema": 1, "selector": "randomised-lasso", "weakness": 0.2,
        "p_w": 0.1, "threshold": 0.9, "target_ev": 1.0, "subsamples": 60,
        "grid_size": 60, "grid_min_ratio": 0.002, "seed": 0, "threads": 2,
    }))
    out = tmp / "out"
    code = main(["select", str(csv), "--config", str(cfg), "--out", str(out)])
    assert code == 0
    return out


class TestSelect:

    def test_outputs_exist(self, outdir):
        for name in ("frequencies.tsv", "stable_set.tsv", "control.json",
                     "stability_paths.svg"):
            assert (outdir / name).exists()
        assert not list(outdir.glob("*.tmp"))

    def test_recovers_true_pair(self, outdir):
        meta = json.loads((outdir / "control.json").read_text())
        assert meta["selected_names"] == ["v1", "v2"]
        assert meta["control"]["derived"] == "q"
        assert meta["control"]["lambda_min"] is not None

    def test_svg_structure(self, outdir):
        root = ET.parse(outdir / "stability_paths.svg").getroot()
        tags = [el.tag.split("}")[-1] for el in root.iter()]
        assert tags.count("path") == 200  # one per variable
        assert tags.count("line") == 1  # the threshold rule

    def test_frequencies_tsv_shape(self, outdir):
        lines = (outdir / "frequencies.tsv").read_text().strip().splitlines()
        assert len(lines) == 201
        assert lines[0].startswith("variable\t")

    def test_malformed_csv_exits_3_without_outputs(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b,y\n1,2,3\n4,oops,6\n")
        out = tmp_path / "out"
        assert main(["select", str(bad), "--threshold", "0.9", "--target-ev", "1",
                     "--out", str(out)]) == 3
        assert not out.exists() or not any(out.iterdir())

    def test_overdetermined_control_exits_2(self, tmp_path):
        csv = tmp_path / "d.csv"
        write_two_signal_csv(csv, seed=1, n=30, p=10)
        assert main(["select", str(csv), "--threshold", "0.9", "--q", "3",
                     "--target-ev", "1", "--out", str(tmp_path / "o")]) == 2

    def test_forward_selection_variant(self, tmp_path):
        csv = tmp_path / "d.csv"
        write_two_signal_csv(csv, seed=1, n=60, p=30)
        out = tmp_path / "o"
        code = main(["select", str(csv), "--selector", "omp", "--threshold", "0.9",
                     "--target-ev", "1", "--subsamples", "20", "--out", str(out)])
        assert code == 0
        meta = json.loads((out / "control.json").read_text())
        assert meta["selected_names"] == ["v1", "v2"]


class TestRunConfig:
    def test_unknown_key_rejected(self, tmp_path):
        f = tmp_path / "cfg.json"
        f.write_text(json.dumps({"schema": 1, "selectr": "lasso"}))
        with pytest.raises(ConfigError, match="unknown config keys"):
            load_run_config(f)

    def test_schema_checked(self, tmp_path):
        f = tmp_path / "cfg.json"
        f.write_text(json.dumps({"schema": 99}))
        with pytest.raises(ConfigError, match="schema"):
            load_run_config(f)

    def test_overrides_take_precedence(self, tmp_path):
        f = tmp_path / "cfg.json"
        f.write_text(json.dumps({"schema": 1, "threshold": 0.7, "seed": 5}))
        cfg = load_run_config(f, {"threshold": 0.9, "seed": None})
        assert cfg["threshold"] == 0.9
        assert cfg["seed"] == 5

    def test_cli_exit_code_on_bad_config(self, tmp_path):
        f = tmp_path / "cfg.json"
        f.write_text(json.dumps({"schema": 1, "bogus": True}))
        csv = tmp_path / "d.csv"
        write_two_signal_csv(csv, seed=2, n=30, p=10)
        assert main(["select", str(csv), "--config", str(f),
                     "--out", str(tmp_path / "o")]) == 2


class TestExperimentCommand:
    def test_recovery_report_roundtrip(self, tmp_path):
        out = tmp_path / "report.json"
        code = main(["experiment", "--kind", "recovery", "--design", "A-desk",
                     "--s", "3", "--replicates", "2", "--subsamples", "10",
                     "--seed", "1", "--out", str(out)])
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["kind"] == "recovery"
        assert "runtime_seconds" not in payload
        tsv = (tmp_path / "report.tsv").read_text().splitlines()
        assert len(tsv) == 2  # header plus the single scenario row
        assert "success_probability" in tsv[0]
