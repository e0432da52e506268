import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

from s1dirac.cli import main
from s1dirac.config import SOLVER_DEFAULTS, ConfigError, parse_config
from s1dirac.experiment import ExperimentError, run_collapse_experiment
from s1dirac.output import CHECKS_HEADER, SPECTRUM_HEADER, emit_results, fmt

CONFIGS = Path(__file__).resolve().parent.parent / "demos" / "configs"

MINIMAL = {
    "geometry": {"type": "flat_torus", "periods": [1.0], "profile": {"constant": 1.0}},
    "spin": {"fiber": "projectable"},
    "collapse": {"stages": [1, 2]},
}


def cfg(**over):
    d = json.loads(json.dumps(MINIMAL))
    for path, value in over.items():
        node = d
        keys = path.split("__")
        for k in keys[:-1]:
            node = node.setdefault(k, {})
        node[keys[-1]] = value
    return d


class TestParse:
    def test_defaults(self):
        c = parse_config(json.dumps(MINIMAL))
        assert c.solver["grid"] == 256
        assert c.solver["k_range"] == [-3, 3]
        assert c.solver["j_count"] == 20
        assert c.solver == SOLVER_DEFAULTS
        assert c.data["spin"]["base_twists"] == [0]

    def test_nonprojectable_convergence_rejected(self):
        with pytest.raises(ConfigError) as e:
            parse_config(cfg(spin__fiber="nonprojectable", checks=["thm1_convergence"]))
        assert any("projectable" in msg for msg in e.value.errors)

    def test_under_resolved_grid(self):
        d = cfg(geometry__type="warped_torus", geometry__profile={"constant": 1.0, "sin": [[32, 0.1]]},
                solver__grid=64)
        with pytest.raises(ConfigError) as e:
            parse_config(d)
        assert any("G >= 256" in msg for msg in e.value.errors)

    def test_all_errors_reported(self):
        d = cfg(bogus=1, spin__fiber="sideways", solver__j_count="many")
        with pytest.raises(ConfigError) as e:
            parse_config(d)
        assert len(e.value.errors) >= 3

    def test_unknown_key_in_block(self):
        with pytest.raises(ConfigError, match="colour"):
            parse_config(cfg(geometry__colour="red"))

    def test_bad_json(self):
        with pytest.raises(ConfigError, match="JSON"):
            parse_config("{not json")

    def test_flux_rules(self):
        d = {"geometry": {"type": "flux_bundle", "area": 1.0, "flux": 1, "profile": {"constant": 0.1}},
             "spin": {"fiber": "nonprojectable"}, "collapse": {"stages": [1]}}
        with pytest.raises(ConfigError, match="non-integral"):
            parse_config(d)
        d["geometry"]["flux"] = 2
        assert parse_config(d).base_geometry().connection.euler_number == 2

    def test_round_trip(self):
        for path in sorted(CONFIGS.glob("*.json")):
            c = parse_config(path.read_text())
            assert parse_config(c.to_json()) == c

    def test_summary_echo_round_trip(self, tmp_path):
        c = parse_config(MINIMAL)
        res = run_collapse_experiment(c)
        emit_results(res.table, res.reports, tmp_path / "o", res.summary)
        echo = json.loads((tmp_path / "o" / "summary.json").read_text())["config"]
        assert parse_config(echo) == c


class TestExperiment:
    def test_projectable_torus_passes(self):
        res = run_collapse_experiment((CONFIGS / "flat_torus_projectable.json").read_text())
        assert res.passed
        assert {r.check for r in res.reports} == {"thm1_lower", "thm1_upper", "thm1_convergence"}

    def test_nonprojectable_torus_passes(self):
        d = cfg(spin__fiber="nonprojectable", checks=["thm2", "thm3"],
                collapse__stages=[1, 2, 4, 8], solver__k_range=[-2.5, 2.5])
        res = run_collapse_experiment(d)
        assert res.passed and len(res.reports) == 2

    def test_alpha_violation_before_solve(self, monkeypatch):
        import s1dirac.experiment as ex

        def boom(*a, **k):
            raise AssertionError("solver reached")

        monkeypatch.setattr(ex, "build_table", boom)
        d = {"geometry": {"type": "warped_torus", "profile": {"constant": 2.0, "sin": [[1, 0.8]]}},
             "spin": {"fiber": "nonprojectable"},
             "collapse": {"rule": "shrink_oscillate", "stages": [4, 8, 16]},
             "solver": {"grid": "auto"}, "checks": ["thm2"]}
        with pytest.raises(ExperimentError, match="alpha"):
            run_collapse_experiment(d)

    def test_first_spectrum_row(self):
        res = run_collapse_experiment(MINIMAL)
        rows = res.table.select(1, 0)
        assert rows[0].j == 0
        assert rows[0].lam == -max(-r.lam for r in rows if r.lam < 0) or rows[0].lam == min(r.lam for r in rows)
        assert rows[0].lam == min(r.lam for r in rows)


class TestOutput:
    def test_headers(self, tmp_path):
        res = run_collapse_experiment(cfg(checks=["thm1_lower"]))
        out = tmp_path / "run"
        emit_results(res.table, res.reports, out, res.summary)
        spec = (out / "spectrum.csv").read_text().splitlines()
        assert spec[0] == ",".join(SPECTRUM_HEADER) == "n,k,j,lambda,lambda_sq,encl_lo,encl_hi"
        checks = (out / "checks.csv").read_text().splitlines()
        assert checks[0] == ",".join(CHECKS_HEADER) == "check,n,k,j,value,bound,margin,pass"
        assert len(spec) == 1 + len(res.table.rows)
        assert sorted((out / "series").glob("*.csv"))
        summary = json.loads((out / "summary.json").read_text())
        assert {"alpha", "sup_series", "clifford_series", "checks"} <= summary.keys()
        assert "n0" in summary["checks"]["thm1_lower"]

    def test_empty_k_range(self, tmp_path):
        res = run_collapse_experiment(cfg(solver__k_range=[0.25, 0.75]))
        emit_results(res.table, res.reports, tmp_path / "e", res.summary)
        assert (tmp_path / "e" / "spectrum.csv").read_text() == ",".join(SPECTRUM_HEADER) + "\n"
        assert (tmp_path / "e" / "checks.csv").read_text() == ",".join(CHECKS_HEADER) + "\n"

    def test_fmt(self):
        assert fmt(-0.0) == "0"
        assert fmt(math.pi) == "3.14159265359"
        assert fmt(True) == "1" or fmt(True) == "true"

    def test_refuses_foreign_directory(self, tmp_path):
        (tmp_path / "notes.txt").write_text("keep me")
        res = run_collapse_experiment(MINIMAL)
        with pytest.raises(OSError):
            emit_results(res.table, res.reports, tmp_path, res.summary)
        assert (tmp_path / "notes.txt").read_text() == "keep me"


class TestCli:
    def test_exit_codes(self, tmp_path, capsys):
        good = CONFIGS / "flat_torus_projectable.json"
        assert main(["validate", str(good)]) == 0
        assert main(["run", str(good), "--out", str(tmp_path / "a")]) == 0
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(cfg(spin__fiber="nonprojectable", checks=["thm1_lower"])))
        assert main(["validate", str(bad)]) == 1
        # a check that fails: an upper window too wide for the non-uniform bound
        failing = tmp_path / "fail.json"
        failing.write_text(json.dumps(cfg(checks=["thm1_upper"], solver__upper_window=20)))
        assert main(["run", str(failing), "--out", str(tmp_path / "f")]) == 2
        assert main(["run", str(tmp_path / "missing.json"), "--out", str(tmp_path / "m")]) == 1

    def test_spectrum_stdout(self, tmp_path, capsys):
        p = tmp_path / "c.json"
        p.write_text(json.dumps(MINIMAL))
        assert main(["spectrum", str(p)]) == 0
        assert capsys.readouterr().out.startswith(",".join(SPECTRUM_HEADER) + "\n")

    def test_module_entry_byte_identical(self, tmp_path):
        conf = CONFIGS / "oscillating_projectable.json"
        outs = []
        for name in ("r1", "r2"):
            proc = subprocess.run([sys.executable, "-m", "s1dirac", "run", str(conf), "--out",
                                   str(tmp_path / name)], capture_output=True, text=True)
            assert proc.returncode == 0, proc.stderr
            outs.append(tmp_path / name)
        for f in ("spectrum.csv", "checks.csv", "summary.json"):
            assert (outs[0] / f).read_bytes() == (outs[1] / f).read_bytes()
