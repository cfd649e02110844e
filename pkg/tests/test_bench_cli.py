import random

import numpy as np
import pytest

from losstomo import fixtures
from losstomo.bench import (ExperimentGrid, GridCell, GridError, mse, parse_grid,
                            run_grid)
from losstomo.cli import main
from losstomo.topology import serialize_topology

STAR_DATA = """\
data star-fixture
probes 1 5
receivers 1 : 2 3
pattern 1 11 2
pattern 1 10 1
pattern 1 01 1
pattern 1 00 1
"""


@pytest.fixture
def star_files(tmp_path):
    topo = tmp_path / "star3.topo"
    topo.write_text(serialize_topology(fixtures.star3()), encoding="utf-8")
    data = tmp_path / "star3.data"
    data.write_text(STAR_DATA, encoding="utf-8")
    return topo, data


class TestMse:
    def test_identical_vectors(self):
        assert mse({1: 0.2, 2: 0.4}, {1: 0.2, 2: 0.4}) == 0.0

    def test_single_link(self):
        assert mse({1: 0.11}, {1: 0.10}) == pytest.approx(1e-4)

    def test_matches_second_implementation(self):
        rng = random.Random(0)
        est = {i: rng.random() for i in range(20)}
        truth = {i: rng.random() for i in range(20)}
        alt = float(np.mean([(est[i] - truth[i]) ** 2 for i in sorted(est)]))
        assert mse(est, truth) == pytest.approx(alt, rel=1e-12)

    def test_skips_missing_and_rejects_disjoint(self):
        assert mse({1: None, 2: 0.3}, {1: 0.1, 2: 0.3}) == 0.0
        with pytest.raises(ValueError):
            mse({1: None}, {1: 0.1})
        with pytest.raises(ValueError):
            mse({1: 0.5}, {2: 0.5})


class TestGrid:
    def test_parse_grid_cells(self):
        grid = parse_grid("cell 1 100 50 3 le-xi,pcem\ncell 2 1000 100 2 mvwa\n")
        cells = grid.cells()
        assert cells[0] == GridCell(1.0, 100.0, 50, 3, ("le-xi", "pcem"))
        assert cells[1].methods == ("mvwa",)

    @pytest.mark.parametrize("text", [
        "", "cell 1 100 50 3\n", "cell one 100 50 3 pcem\n",
        "cell 1 100 50 3 bogus\n", "row 1 100 50 3 pcem\n",
    ])
    def test_parse_grid_errors(self, text):
        with pytest.raises(GridError):
            parse_grid(text)

    def test_product_grid_expands(self):
        grid = ExperimentGrid([(1, 100), (1, 1000)], [50, 100], replicates=7,
                              methods=("le-xi",))
        cells = grid.cells()
        assert len(cells) == 4
        assert all(c.replicates == 7 for c in cells)

    def test_run_grid_rows_and_determinism(self):
        net = fixtures.twotree12()
        grid = parse_grid("cell 2 60 80 3 le-xi,pcem,mvwa\n", master_seed=5)
        rep_a = run_grid(grid, net)
        rep_b = run_grid(grid, net)
        assert len(rep_a.rows) == 9
        strip = lambda rows: [{k: v for k, v in r.items() if k != "runtime_ms"}
                              for r in rows]
        assert strip(rep_a.rows) == strip(rep_b.rows)
        csv = rep_a.to_csv()
        header, first = csv.splitlines()[:2]
        assert header == ("setting,beta_a,beta_b,n,replicate,method,"
                          "mse,runtime_ms,iterations,violations")
        assert first.startswith("Beta(2,60),2,60,80,0,")
        assert "mean_mse" in rep_a.summary()

    def test_run_grid_worker_invariance(self):
        net = fixtures.star3()
        grid = parse_grid("cell 1 30 40 4 le-xi\n", master_seed=9)
        strip = lambda rows: [{k: v for k, v in r.items() if k != "runtime_ms"}
                              for r in rows]
        assert strip(run_grid(grid, net).rows) == strip(run_grid(grid, net, workers=4).rows)

    def test_nem_refused_above_guard_is_recorded(self):
        net = fixtures.layered49()
        grid = parse_grid("cell 1 50 20 1 nem\n", master_seed=1)
        rows = run_grid(grid, net).rows
        assert rows[0]["mse"] is None and rows[0]["violations"] == -1


class TestCli:
    def test_estimate_golden_star(self, star_files, tmp_path):
        topo, data = star_files
        out = tmp_path / "est.csv"
        code = main(["estimate", "--topology", str(topo), "--data", str(data),
                     "--method", "le-xi", "--out", str(out)])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "link_id,theta_hat,xi_hat,flag,estimable"
        rows = {int(l.split(",")[0]): l.split(",") for l in lines[1:]}
        assert float(rows[1][1]) == pytest.approx(0.1, abs=1e-9)
        assert float(rows[2][1]) == pytest.approx(1 / 3, abs=1e-9)
        assert float(rows[3][1]) == pytest.approx(1 / 3, abs=1e-9)
        assert rows[1][3] == "ok" and rows[1][4] == "yes"

    def test_estimate_methods_agree(self, star_files, tmp_path):
        topo, data = star_files
        outs = {}
        for method in ("le-xi", "pcem", "nem", "mvwa"):
            out = tmp_path / f"{method}.csv"
            code = main(["estimate", "--topology", str(topo), "--data", str(data),
                         "--method", method, "--tol", "1e-12", "--out", str(out)])
            assert code == 0
            outs[method] = out.read_text()
        le = [l.split(",")[1] for l in outs["le-xi"].splitlines()[1:]]
        for method in ("pcem", "nem", "mvwa"):
            vals = [l.split(",")[1] for l in outs[method].splitlines()[1:]]
            for a, b in zip(le, vals):
                assert float(a) == pytest.approx(float(b), abs=1e-7)

    def test_simulate_deterministic_and_estimatable(self, star_files, tmp_path):
        topo, _ = star_files
        out_a, out_b = tmp_path / "a.data", tmp_path / "b.data"
        args = ["simulate", "--topology", str(topo), "--beta", "1,9",
                "--probes", "400", "--seed", "7", "--replicate", "1"]
        assert main(args + ["--out", str(out_a),
                            "--theta-out", str(tmp_path / "truth.rates")]) == 0
        assert main(args + ["--out", str(out_b)]) == 0
        assert out_a.read_text() == out_b.read_text()
        assert (tmp_path / "truth.rates").read_text().startswith("theta 1 ")
        est = tmp_path / "est.csv"
        assert main(["estimate", "--topology", str(topo), "--data", str(out_a),
                     "--method", "pcem", "--out", str(est)]) == 0

    def test_simulate_with_explicit_theta_file(self, star_files, tmp_path):
        topo, _ = star_files
        rates = tmp_path / "theta.rates"
        rates.write_text("theta 1 0.0\ntheta 2 0.0\ntheta 3 0.0\n")
        out = tmp_path / "sim.data"
        assert main(["simulate", "--topology", str(topo), "--theta", str(rates),
                     "--probes", "25", "--seed", "3", "--out", str(out)]) == 0
        assert "pattern 1 11 25" in out.read_text()

    def test_bench_one_cell(self, star_files, tmp_path, capsys):
        topo, _ = star_files
        grid = tmp_path / "grid.txt"
        grid.write_text("cell 1 20 60 5 le-xi,pcem\n")
        out = tmp_path / "bench.csv"
        code = main(["bench", "--topology", str(topo), "--grid", str(grid),
                     "--out", str(out), "--seed", "11"])
        assert code == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 1 + 5 * 2
        assert "mean_mse" in capsys.readouterr().out

    def test_exit_codes(self, star_files, tmp_path):
        topo, data = star_files
        assert main(["estimate", "--topology", str(topo), "--data", str(data),
                     "--method", "nope", "--out", "x"]) == 2
        assert main(["bogus-command"]) == 2
        bad_topo = tmp_path / "bad.topo"
        bad_topo.write_text("network x\nlink 1 0 1\n")
        assert main(["estimate", "--topology", str(bad_topo), "--data", str(data),
                     "--method", "pcem", "--out", str(tmp_path / "o.csv")]) == 2
        assert main(["simulate", "--topology", str(topo), "--probes", "5",
                     "--seed", "1", "--out", str(tmp_path / "x.data")]) == 2

    def test_non_estimable_links_written_empty(self, tmp_path):
        topo = tmp_path / "star.topo"
        topo.write_text(serialize_topology(fixtures.star3()), encoding="utf-8")
        dark = tmp_path / "dark.data"
        dark.write_text("data dark\nprobes 1 4\nreceivers 1 : 2 3\n"
                        "pattern 1 00 4\n")
        out = tmp_path / "est.csv"
        assert main(["estimate", "--topology", str(topo), "--data", str(dark),
                     "--method", "le-xi", "--out", str(out)]) == 0
        rows = {l.split(",")[0]: l.split(",") for l in out.read_text().splitlines()[1:]}
        assert rows["2"][1] == "" and rows["2"][4] == "no"
        assert rows["2"][3] == "non_estimable"
