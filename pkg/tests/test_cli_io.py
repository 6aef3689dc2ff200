import json
import warnings

import numpy as np
import pytest

from filippov_harvest import PRESETS, scan_sp_plane
from filippov_harvest.cli import main
from filippov_harvest.output import (format_number, grid_to_csv,
                                     read_grid_csv, write_csv)


def run_cli(*argv):
    return main(list(argv))


class TestNumberFormatting:
    def test_twelve_significant_digits(self):
        assert format_number(1.0 / 3.0) == "0.333333333333"
        assert format_number(1234567.89123456) == "1234567.89123"
        assert format_number(2) == "2"
        assert format_number(True) == "1"
        assert format_number(np.float64(0.25)) == "0.25"

    def test_empty_grid_is_header_only(self, tmp_path):
        path = tmp_path / "empty.csv"
        write_csv(str(path), ["a", "b"], [])
        assert path.read_text() == "a,b\n"

    def test_unix_line_endings(self, tmp_path):
        path = tmp_path / "rows.csv"
        write_csv(str(path), ["a"], [[1.5]])
        assert path.read_bytes() == b"a\n1.5\n"


class TestGridRoundTrip:
    def test_region_grid_reingestion_is_exact(self, a1, tmp_path):
        grid = scan_sp_plane(a1, (0.05, 0.8), (0.05, 0.9), (7, 9))
        path = tmp_path / "grid.csv"
        grid_to_csv(grid, str(path))
        assert read_grid_csv(str(path)) == grid

    def test_basin_grid_reingestion_is_exact(self, a2, tmp_path):
        from filippov_harvest import SimOptions, compute_basins
        sim = SimOptions(t_end=60.0, rtol=1e-6, atol=1e-9,
                         attractor_radius=1e-3, attractor_dwell=1.0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            grid = compute_basins(a2, (1.0, 8.0), (1.0, 7.0), (4, 4), sim=sim, n_jobs=1)
        path = tmp_path / "basins.csv"
        grid_to_csv(grid, str(path))
        assert read_grid_csv(str(path)) == grid


class TestParameterSources:
    def test_preset_resolves_published_values(self, capsys):
        assert run_cli("equilibria", "--preset", "A1") == 0
        out = capsys.readouterr().out
        assert out.splitlines()[0].startswith("mode,x,y,kind")
        assert "0.400509" in out and "0.141598" in out

    def test_params_file_source(self, tmp_path, capsys):
        path = tmp_path / "params.json"
        path.write_text(PRESETS["A2"].to_json())
        assert run_cli("sliding", "--params", str(path)) == 0
        out = capsys.readouterr().out
        assert out.startswith("S,y_lower,y_upper,y_pseudo,exists,phi_prime,stability")

    def test_set_overrides_preset(self, capsys):
        assert run_cli("sliding", "--preset", "A1", "--set", "S=0.1") == 0
        row = capsys.readouterr().out.splitlines()[1]
        assert row.startswith("0.1,")
        assert row.split(",")[4] == "0"  # pseudo-equilibrium absent at S=0.1

    def test_both_sources_is_config_error(self, tmp_path):
        path = tmp_path / "params.json"
        path.write_text(PRESETS["A1"].to_json())
        assert run_cli("equilibria", "--preset", "A1", "--params", str(path)) == 2

    def test_no_source_is_config_error(self):
        assert run_cli("equilibria") == 2

    def test_unknown_preset(self):
        assert run_cli("equilibria", "--preset", "A9") == 2

    def test_malformed_set(self):
        assert run_cli("equilibria", "--preset", "A1", "--set", "S:0.1") == 2
        assert run_cli("equilibria", "--preset", "A1", "--set", "zz=1") == 2
        assert run_cli("equilibria", "--preset", "A1", "--set", "S=abc") == 2

    def test_invalid_parameter_value(self):
        assert run_cli("equilibria", "--preset", "A1", "--set", "m=1.5") == 2

    def test_schema_violation_in_file(self, tmp_path):
        path = tmp_path / "params.json"
        data = json.loads(PRESETS["A1"].to_json())
        del data["b"]
        path.write_text(json.dumps(data))
        assert run_cli("equilibria", "--params", str(path)) == 2

    def test_output_to_directory_is_io_error(self, tmp_path):
        assert run_cli("equilibria", "--preset", "A1", "--out", str(tmp_path)) == 4

    def test_missing_output_directory_is_config_error(self, tmp_path):
        assert run_cli("equilibria", "--preset", "A1",
                       "--out", str(tmp_path / "no" / "such" / "dir.csv")) == 2


class TestSubcommands:
    def test_simulate_csv_and_svg(self, tmp_path):
        out = tmp_path / "traj.csv"
        assert run_cli("simulate", "--preset", "A1", "--x0", "0.5", "--y0", "1.0",
                       "--t-end", "60", "--out", str(out), "--svg") == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "t,x,y,regime"
        regimes = {line.split(",")[3] for line in lines[1:]}
        assert "sliding" in regimes
        svg = (tmp_path / "traj.svg").read_text()
        assert svg.startswith("<svg")
        assert "switching line" in svg and "sliding segment" in svg

    def test_svg_is_byte_deterministic(self, tmp_path):
        paths = []
        for name in ("one", "two"):
            out = tmp_path / f"{name}.csv"
            assert run_cli("simulate", "--preset", "A1", "--x0", "0.5", "--y0",
                           "1.0", "--t-end", "40", "--out", str(out), "--svg") == 0
            paths.append(tmp_path / f"{name}.svg")
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_svg_without_out_is_config_error(self):
        assert run_cli("simulate", "--preset", "A1", "--x0", "0.5", "--y0", "1.0",
                       "--svg") == 2

    def test_scan_sp_writes_grid_and_heatmap(self, tmp_path):
        out = tmp_path / "scan.csv"
        assert run_cli("scan-sp", "--preset", "A1", "--resolution", "12",
                       "--out", str(out), "--svg") == 0
        grid = read_grid_csv(str(out))
        assert grid.axes[0].name == "S" and grid.axes[1].name == "p"
        assert len(grid.cells) == 144
        assert (tmp_path / "scan.svg").read_text().count("<rect") > 144

    def test_bifurcations_csv(self, capsys):
        assert run_cli("bifurcations", "--preset", "A1",
                       "--s-range", "0.05:0.8") == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0].startswith("S,mode,observed_type")
        values = sorted(float(line.split(",")[0]) for line in lines[1:])
        assert values == pytest.approx([0.1416, 0.4005], abs=1e-3)

    def test_sweep_m_summary_and_grids(self, tmp_path):
        out = tmp_path / "sweep.csv"
        assert run_cli("sweep-m", "--preset", "A1", "--m-values", "0.4,0.8",
                       "--resolution", "8", "--out", str(out)) == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith("m,existence_p_nonharvest")
        assert (tmp_path / "sweep_m0.4.csv").exists()
        assert (tmp_path / "sweep_m0.8.csv").exists()
        rows = [line.split(",") for line in lines[1:]]
        assert float(rows[1][1]) > float(rows[0][1])

    def test_basins_small_grid(self, tmp_path):
        out = tmp_path / "basins.csv"
        assert run_cli("basins", "--preset", "A2", "--resolution", "6",
                       "--x-range", "0.5:8.5", "--y-range", "0.5:8.0",
                       "--t-end", "120", "--out", str(out), "--svg") == 0
        grid = read_grid_csv(str(out))
        assert set(grid.cells) <= {"ER1", "ER2", "PSEUDO", "UNDETERMINED"}
        assert "ER1" in grid.cells and "ER2" in grid.cells
        assert (tmp_path / "basins.svg").exists()

    def test_unknown_subcommand_exits_2(self):
        assert run_cli("frobnicate") == 2

    def test_numerical_failure_exits_3(self, a1):
        # A degenerate pseudo-equilibrium denominator is a numerical failure.
        bws = a1.b * (1.0 - a1.m) * a1.S
        q2_star = a1.q1 * a1.r2 * (1.0 + bws) / (a1.k2 * a1.p * (1.0 - a1.m))
        assert run_cli("sliding", "--preset", "A1",
                       "--set", f"q2={q2_star!r}") == 3

    def test_seed_flag_is_accepted(self, capsys):
        assert run_cli("sliding", "--preset", "A1", "--seed", "7") == 0
        capsys.readouterr()
