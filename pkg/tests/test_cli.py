import json
import math

import numpy as np
import pytest

from mkteff.cli import EXIT_CONFIG, EXIT_DATA, EXIT_OK, main


def write_price_csv(path, start_price, returns, start="2020-01-01"):
    """Geometric price path from a return sequence, ISO dates, no weekends skipped."""
    from datetime import date, timedelta

    d0 = date.fromisoformat(start)
    price = start_price
    lines = ["date,price", f"{d0.isoformat()},{price}"]
    for t, r in enumerate(returns, start=1):
        price *= math.exp(r)
        lines.append(f"{(d0 + timedelta(days=t)).isoformat()},{price}")
    path.write_text("\n".join(lines) + "\n")


@pytest.fixture
def market_files(tmp_path):
    rng = np.random.default_rng(314)
    T = 160
    paths = []
    for i, name in enumerate(("alpha", "beta")):
        p = tmp_path / f"{name}.csv"
        write_price_csv(p, 100.0 * (i + 1), rng.normal(0, 0.01, T))
        paths.append((str(p), name.upper()))
    return paths


def config_file(tmp_path, inputs, **extra):
    doc = {
        "inputs": [{"path": p, "asset_id": a} for p, a in inputs],
        "unit_root": {"max_lag": 4},
        "var": {"p_max": 3},
        "tv": {"q": 1, "lambda": 1.0},
        "bootstrap": {"replications": 0, "master_seed": 7},
        "output_dir": str(tmp_path / "out"),
    }
    doc.update(extra)
    cfg = tmp_path / "config.json"
    cfg.write_text(json.dumps(doc))
    return str(cfg)


class TestDescribe:
    def test_writes_reports(self, tmp_path, market_files):
        cfg = config_file(tmp_path, market_files)
        assert main(["describe", "--config", cfg]) == EXIT_OK
        out = tmp_path / "out"
        assert (out / "summary.txt").exists()
        assert (out / "summary.csv").exists()
        doc = json.loads((out / "summary.json").read_text())
        assert set(doc["assets"]) == {"ALPHA", "BETA"}
        assert "unit_root" in doc
        assert (out / "manifest.json").exists()

    def test_single_asset_is_data_error(self, tmp_path, market_files):
        cfg = config_file(tmp_path, market_files[:1])
        assert main(["describe", "--config", cfg]) == EXIT_DATA

    def test_empty_date_range(self, tmp_path, market_files):
        cfg = config_file(tmp_path, market_files, date_range={"start": "2031-01-01", "end": None})
        assert main(["describe", "--config", cfg]) == EXIT_DATA

    def test_nonstationary_gate(self, tmp_path):
        rng = np.random.default_rng(5)
        # random-walk log prices: returns are white, but build a trending
        # price whose returns are a random walk to trip the gate
        steps = np.cumsum(rng.normal(0, 0.002, 200))
        files = []
        for name in ("one", "two"):
            p = tmp_path / f"{name}.csv"
            write_price_csv(p, 50.0, steps)
            files.append((str(p), name))
        cfg = config_file(tmp_path, files)
        assert main(["describe", "--config", cfg]) == EXIT_DATA
        assert main(["describe", "--config", cfg, "--allow-nonstationary"]) == EXIT_OK


class TestVar:
    def test_report_contents(self, tmp_path, market_files):
        cfg = config_file(tmp_path, market_files)
        assert main(["var", "--config", cfg]) == EXIT_OK
        doc = json.loads((tmp_path / "out" / "var_report.json").read_text())
        assert doc["selected_p"] >= 1
        assert set(doc["granger"]) == {"ALPHA", "BETA"}
        assert "lc" in doc["hansen_lc"]
        text = (tmp_path / "out" / "var_report.txt").read_text()
        assert "granger_F" in text and "Lc" in text

    def test_zero_p_max_is_config_error(self, tmp_path, market_files):
        cfg = config_file(tmp_path, market_files, var={"p_max": 0})
        assert main(["var", "--config", cfg]) == EXIT_CONFIG


class TestEfficiency:
    def test_zeta_without_bands(self, tmp_path, market_files):
        cfg = config_file(tmp_path, market_files)
        assert main(["efficiency", "--config", cfg]) == EXIT_OK
        out = tmp_path / "out"
        lines = (out / "efficiency.csv").read_text().splitlines()
        assert lines[0] == "date,zeta,band_low,band_high,singular"
        assert len(lines) == 160  # T - q data rows + header
        assert all(line.split(",")[2] == "" for line in lines[1:])  # no bands
        assert (out / "efficiency.svg").read_text().startswith("<svg")
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["bands"] is False
        assert manifest["lambda_effective"] == 1.0

    def test_bands_and_event_marker(self, tmp_path, market_files):
        cfg = config_file(
            tmp_path, market_files,
            bootstrap={"replications": 100, "master_seed": 9},
            event_date="2020-03-11",
        )
        assert main(
            ["efficiency", "--config", cfg, "--export-coefficients", "--dump-replications"]
        ) == EXIT_OK
        out = tmp_path / "out"
        lines = (out / "efficiency.csv").read_text().splitlines()
        cells = lines[1].split(",")
        assert cells[2] != "" and cells[3] != ""
        svg = (out / "efficiency.svg").read_text()
        assert "stroke-dasharray" in svg  # dashed bands and dotted marker
        assert "2020-03-11" in svg
        assert (out / "coefficients.csv").read_text().startswith("date,lag,row,col,value")
        dumps = list((out / "replications").iterdir())
        assert dumps and all(p.name.startswith("replications_") for p in dumps)

    def test_byte_identical_reruns_and_worker_counts(self, tmp_path, market_files):
        outputs = []
        for run, jobs in ((1, 1), (2, 1), (3, 2)):
            out_dir = str(tmp_path / f"out{run}")
            cfg = config_file(
                tmp_path, market_files,
                bootstrap={"replications": 100, "master_seed": 33, "n_jobs": jobs},
                output_dir=out_dir,
            )
            assert main(["efficiency", "--config", cfg]) == EXIT_OK
            outputs.append((tmp_path / f"out{run}" / "efficiency.csv").read_bytes())
        assert outputs[0] == outputs[1] == outputs[2]

    def test_partial_outputs_removed_on_failure(self, tmp_path, market_files, monkeypatch):
        import mkteff.cli as cli_mod
        from mkteff.errors import NumericalError

        def boom(*args, **kwargs):
            raise NumericalError("plot stage failure")

        monkeypatch.setattr(cli_mod, "render_line_plot", boom)
        cfg = config_file(tmp_path, market_files)
        assert main(["efficiency", "--config", cfg]) == 4
        assert not (tmp_path / "out" / "efficiency.csv").exists()

    def test_flag_overrides_beat_config(self, tmp_path, market_files):
        cfg = config_file(tmp_path, market_files)
        out2 = str(tmp_path / "other")
        assert main(["efficiency", "--config", cfg, "--output-dir", out2, "--lambda", "5.0"]) == EXIT_OK
        manifest = json.loads((tmp_path / "other" / "manifest.json").read_text())
        assert manifest["config"]["tv"]["lambda"] == 5.0
        assert manifest["lambda_effective"] == 5.0


class TestSimulate:
    def spec_file(self, tmp_path, doc):
        p = tmp_path / "spec.json"
        p.write_text(json.dumps(doc))
        return str(p)

    def test_writes_panel_and_truth(self, tmp_path):
        spec = self.spec_file(
            tmp_path, {"kind": "white-noise", "n": 2, "T": 40, "seed": 5}
        )
        out = str(tmp_path / "sim")
        assert main(["simulate", "--spec", spec, "--output-dir", out]) == EXIT_OK
        panel_lines = (tmp_path / "sim" / "panel.csv").read_text().splitlines()
        truth_lines = (tmp_path / "sim" / "truth.csv").read_text().splitlines()
        assert len(panel_lines) == 41 and len(truth_lines) == 41
        assert panel_lines[0] == "date,asset1,asset2"
        assert truth_lines[0].startswith("date,zeta,a1_0_0")

    def test_bad_kind_names_field(self, tmp_path, capsys):
        spec = self.spec_file(tmp_path, {"kind": "fractal", "n": 1, "T": 10})
        assert main(["simulate", "--spec", spec, "--output-dir", str(tmp_path / "s")]) == EXIT_CONFIG
        assert "kind" in capsys.readouterr().err

    def test_rerun_byte_identical(self, tmp_path):
        spec = self.spec_file(tmp_path, {"kind": "constant-var", "n": 1, "T": 30, "coefficients": 0.3, "seed": 12})
        a, b = str(tmp_path / "a"), str(tmp_path / "b")
        assert main(["simulate", "--spec", spec, "--output-dir", a]) == EXIT_OK
        assert main(["simulate", "--spec", spec, "--output-dir", b]) == EXIT_OK
        assert (tmp_path / "a" / "panel.csv").read_bytes() == (tmp_path / "b" / "panel.csv").read_bytes()
        assert (tmp_path / "a" / "truth.csv").read_bytes() == (tmp_path / "b" / "truth.csv").read_bytes()


class TestErrors:
    def test_missing_config_file(self, tmp_path, capsys):
        assert main(["describe", "--config", str(tmp_path / "nope.json")]) == EXIT_CONFIG

    def test_non_object_config(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("[1, 2, 3]")
        assert main(["describe", "--config", str(bad)]) == EXIT_CONFIG

    def test_unknown_config_field(self, tmp_path, market_files):
        cfg = config_file(tmp_path, market_files, plotting={"dpi": 300})
        assert main(["describe", "--config", cfg]) == EXIT_CONFIG

    def test_missing_input_file(self, tmp_path):
        cfg = config_file(tmp_path, [(str(tmp_path / "ghost.csv"), "G"), (str(tmp_path / "g2.csv"), "H")])
        assert main(["describe", "--config", cfg]) == EXIT_DATA

    def test_input_flag_format(self, tmp_path):
        assert main(["describe", "--input", "justapath"]) == EXIT_CONFIG

    def test_all_runs_pipeline(self, tmp_path, market_files):
        cfg = config_file(tmp_path, market_files)
        assert main(["all", "--config", cfg]) == EXIT_OK
        out = tmp_path / "out"
        for name in ("summary.txt", "var_report.txt", "efficiency.csv", "efficiency.svg"):
            assert (out / name).exists()
