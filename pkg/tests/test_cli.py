import json
import math

import pytest

from flatheights.cli import main

STRETCH_CONFIG = {"tau": [0.0, 1.0], "tau_prime": [0.0, 2.0], "B": [[1, 0], [0, 1]]}

SLOW_CHAIN_CONFIG = {
    "chain": {
        "generator": {
            "a": "1",
            "b": "2^-n",
            "lambda": "2-1/(n+1)",
            "sup": 2,
            "sup_attained": False,
            "monotone": "increasing",
            "total_norm": 1,
        }
    },
    "n_max": 100,
}


def write_config(tmp_path, obj, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


class TestTorusCommand:
    def test_stretch_scenario(self, tmp_path):
        cfg = write_config(tmp_path, STRETCH_CONFIG)
        out = tmp_path / "reports"
        assert main(["torus", "--config", cfg, "--out", str(out)]) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["L"] == pytest.approx(2.0, abs=1e-12)
        assert summary["c_conjugate"] == pytest.approx(0.25, abs=1e-12)
        assert summary["homotopic"] is True
        assert summary["theta_star"] == pytest.approx(math.pi, abs=1e-12)
        sweep = (out / "theta_sweep.csv").read_text().splitlines()
        assert sweep[0] == "theta,ratio,inv_ratio"
        assert len(sweep) == 721

    def test_malformed_marking_exits_1(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path, {"tau": [0, 1], "tau_prime": [0, 1], "B": [[2, 0], [0, 1]]}
        )
        assert main(["torus", "--config", cfg, "--out", str(tmp_path / "r")]) == 1
        assert "not an orientation-preserving marking" in capsys.readouterr().err

    def test_missing_config_exits_3(self, tmp_path):
        assert main(["torus", "--config", str(tmp_path / "nope.json")]) == 3

    def test_bad_json_exits_1(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        assert main(["torus", "--config", str(path)]) == 1

    def test_determinism(self, tmp_path):
        cfg = write_config(tmp_path, STRETCH_CONFIG)
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        assert main(["torus", "--config", cfg, "--out", str(out1)]) == 0
        assert main(["torus", "--config", cfg, "--out", str(out2)]) == 0
        assert (out1 / "summary.json").read_bytes() == (out2 / "summary.json").read_bytes()
        assert (out1 / "theta_sweep.csv").read_bytes() == (out2 / "theta_sweep.csv").read_bytes()

    def test_plot_writes_svg(self, tmp_path):
        cfg = write_config(tmp_path, STRETCH_CONFIG)
        out = tmp_path / "r"
        assert main(["torus", "--config", cfg, "--out", str(out), "--plot"]) == 0
        assert (out / "theta_sweep.svg").exists()


class TestCylinderCommand:
    def test_non_attained_scenario(self, tmp_path):
        cfg = write_config(tmp_path, SLOW_CHAIN_CONFIG)
        out = tmp_path / "r"
        assert main(["cylinder", "--config", cfg, "--out", str(out)]) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["attained"] is False
        assert summary["L"] == 2.0
        assert summary["gap_100"] == pytest.approx(1.0 / 101.0)
        assert summary["gap_100_exact"] == "1/101"
        gaps = (out / "cone_gaps.csv").read_text().splitlines()
        assert gaps[0] == "N,gap"
        assert len(gaps) == 101

    def test_full_scenario_file(self, tmp_path):
        scenario = {
            "kind": "cylinder",
            "payload": SLOW_CHAIN_CONFIG,
            "output": str(tmp_path / "from_file"),
            "plot": False,
            "seed": 7,
        }
        cfg = write_config(tmp_path, scenario)
        assert main(["cylinder", "--config", cfg]) == 0
        assert (tmp_path / "from_file" / "summary.json").exists()

    def test_kind_mismatch_exits_1(self, tmp_path):
        scenario = {"kind": "torus", "payload": STRETCH_CONFIG}
        cfg = write_config(tmp_path, scenario)
        assert main(["cylinder", "--config", cfg]) == 1


class TestExhaustionCommand:
    def test_geometric_table(self, tmp_path):
        cfg = write_config(
            tmp_path,
            {
                "chain": {
                    "generator": {
                        "a": "1", "b": "2^-n", "lambda": "2",
                        "sup": 2, "sup_attained": True,
                        "inf": 2, "inf_attained": True,
                        "total_norm": 1,
                    }
                },
                "n_max": 10,
            },
        )
        out = tmp_path / "r"
        assert main(["exhaustion", "--config", cfg, "--out", str(out)]) == 0
        rows = (out / "exhaustion.csv").read_text().splitlines()
        assert rows[0] == "N,L_N,trunc_norm,gap"
        assert len(rows) == 11
        last = rows[-1].split(",")
        assert float(last[3]) == pytest.approx(2.0**-10)
        summary = json.loads((out / "summary.json").read_text())
        assert summary["final_gap_exact"] == "1/1024"

    def test_divergent_chain_exits_2(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path,
            {"chain": {"generator": {"a": "1", "b": "1", "lambda": "2",
                                     "sup": 2, "sup_attained": True,
                                     "inf": 2, "inf_attained": True}},
             "n_max": 5},
        )
        assert main(["exhaustion", "--config", cfg, "--out", str(tmp_path / "r")]) == 2
        assert "converge" in capsys.readouterr().err


class TestVariationalCommand:
    def test_combined_report(self, tmp_path):
        cfg = write_config(
            tmp_path,
            {
                "t_grid": [0.0, 0.25, 0.5, 0.75, 1.0],
                "torus": {"tau": [0.0, 1.0], "mu": [0.3, 0.0], "q": [1.0, 0.0]},
                "chain": {
                    "chain": {
                        "cylinders": [
                            {"a": 1, "b": 1, "lambda": 2},
                            {"a": 2, "b": 1, "lambda": 3},
                        ]
                    },
                    "n_max": 1,
                },
            },
        )
        out = tmp_path / "r"
        assert main(["variational", "--config", cfg, "--out", str(out), "--plot"]) == 0
        rows = (out / "path.csv").read_text().splitlines()
        assert rows[0] == "t,h,h_analytic,h_numeric,A,bound"
        assert len(rows) == 6
        first = rows[1].split(",")
        assert float(first[1]) == pytest.approx(1.0)  # h(0) = |q|
        assert first[2] == "" and first[3] == ""  # derivative refused at t = 0
        assert float(first[4]) == 0.0  # A(0) = 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["max_h_prime_discrepancy"] <= 1e-5
        assert (out / "path.svg").exists()

    def test_gauge_flag(self, tmp_path):
        payload = {
            "t_grid": [0.0, 0.5, 1.0],
            "torus": {"tau": [0.0, 1.0], "mu": [0.2, 0.1], "q": [0.0, 1.0]},
        }
        cfg = write_config(tmp_path, payload)
        for gauge in ("fix1", "fix1tau", "area"):
            out = tmp_path / gauge
            assert main(["variational", "--config", cfg, "--out", str(out),
                         "--gauge", gauge]) == 0
            summary = json.loads((out / "summary.json").read_text())
            assert summary["gauge"] == gauge
            assert summary["max_h_prime_discrepancy"] <= 1e-5

    def test_needs_some_section(self, tmp_path):
        cfg = write_config(tmp_path, {"t_grid": 5})
        assert main(["variational", "--config", cfg, "--out", str(tmp_path / "r")]) == 1


class TestDirichletCommand:
    def test_perturbed_form(self, tmp_path):
        cfg = write_config(
            tmp_path,
            {
                "n": 8,
                "tau": [0.0, 1.0],
                "periods": [1.0, 1.0],
                "potential_amplitude": 0.2,
                "map": {"tau_prime": [0.0, 2.0], "B": [[1, 0], [0, 1]]},
            },
        )
        out = tmp_path / "r"
        assert main(["dirichlet", "--config", cfg, "--out", str(out),
                     "--seed", "5", "--plot"]) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["harmonic_minimum"] == pytest.approx(2.0, abs=1e-12)
        assert summary["realizing_norm"] == pytest.approx(2.0, abs=1e-12)
        assert summary["gap"] > 0.0
        assert summary["energy_bound_holds"] is True
        rows = (out / "form.csv").read_text().splitlines()
        assert rows[0] == "cell,P,Q"
        assert len(rows) == 65
        assert (out / "form.svg").exists()

    def test_form_csv_round_trip(self, tmp_path):
        payload = {"n": 6, "tau": [0.2, 1.1], "periods": [1.0, 0.5],
                   "potential_amplitude": 0.3}
        cfg = write_config(tmp_path, payload)
        out1 = tmp_path / "gen"
        assert main(["dirichlet", "--config", cfg, "--out", str(out1), "--seed", "9"]) == 0
        reread = {"n": 6, "tau": [0.2, 1.1], "form_csv": str(out1 / "form.csv")}
        cfg2 = write_config(tmp_path, reread, "reread.json")
        out2 = tmp_path / "reread"
        assert main(["dirichlet", "--config", cfg2, "--out", str(out2)]) == 0
        s1 = json.loads((out1 / "summary.json").read_text())
        s2 = json.loads((out2 / "summary.json").read_text())
        assert s2["energy"] == pytest.approx(s1["energy"], rel=1e-9)
        assert s2["gap"] == pytest.approx(s1["gap"], rel=1e-9)
        assert s2["periods"][0] == pytest.approx(1.0, abs=1e-9)

    def test_form_csv_excludes_periods(self, tmp_path):
        cfg = write_config(tmp_path, {"n": 4, "tau": [0, 1], "periods": [1, 0],
                                      "form_csv": "whatever.csv"})
        assert main(["dirichlet", "--config", cfg, "--out", str(tmp_path / "r")]) == 1

    def test_seed_changes_potential(self, tmp_path):
        payload = {"n": 6, "tau": [0.0, 1.0], "periods": [1.0, 0.0],
                   "potential_amplitude": 0.5}
        cfg = write_config(tmp_path, payload)
        outs = []
        for seed in ("1", "2"):
            out = tmp_path / f"s{seed}"
            assert main(["dirichlet", "--config", cfg, "--out", str(out),
                         "--seed", seed]) == 0
            outs.append((out / "form.csv").read_bytes())
        assert outs[0] != outs[1]
        # same seed reproduces bitwise
        out = tmp_path / "s1b"
        assert main(["dirichlet", "--config", cfg, "--out", str(out), "--seed", "1"]) == 0
        assert (out / "form.csv").read_bytes() == outs[0]


class TestSelftest:
    def test_passes_and_prints_table(self, capsys, tmp_path):
        code = main(["selftest", "--out", str(tmp_path)])
        out = capsys.readouterr().out
        assert code == 0
        assert out.count("PASS") == 8
        assert "8/8 criteria passed" in out
        report = json.loads((tmp_path / "selftest.json").read_text())
        assert report["passed"] is True
        assert len(report["criteria"]) == 8
