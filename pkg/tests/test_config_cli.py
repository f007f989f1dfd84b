import json

import pytest

from quasifem.cli import EXIT_INPUT, EXIT_OK, EXIT_SOLVER, EXIT_UNCERTIFIED, main, rates_within_bands
from quasifem.config import RunConfig, load_config, parse_config
from quasifem.errors import ConfigError
from quasifem.models import counterexample_1d


class TestParseConfig:
    def test_values_and_comments(self):
        cfg = parse_config("# run\nproblem = sin  # inline\nnonlinear_tol = 1e-8\nrounds=3\n\n")
        assert cfg.problem == "sin" and cfg.nonlinear_tol == 1e-8 and cfg.rounds == 3

    def test_defaults(self):
        cfg = parse_config("")
        assert cfg == RunConfig()
        assert cfg.l2_rate_min == 1.8 and cfg.h1_rate_max == 1.2

    @pytest.mark.parametrize("text,line", [
        ("problem = sin\nbogus = 1\n", 2),
        ("rounds = 2\n\nrounds = 3\n", 3),
        ("# c\nproblem sin\n", 2),
        ("rounds = two\n", 1),
    ])
    def test_errors_carry_line(self, text, line):
        with pytest.raises(ConfigError) as exc:
            parse_config(text)
        assert exc.value.line == line and f"line {line}" in str(exc.value)

    def test_update_ignores_none(self):
        cfg = RunConfig(problem="sin").update(problem=None, rounds=4)
        assert cfg.problem == "sin" and cfg.rounds == 4

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "none.cfg")


def run(tmp_path, *args, config=None):
    argv = list(args) + ["--out", str(tmp_path / "out")]
    if config is not None:
        p = tmp_path / "run.cfg"
        p.write_text(config)
        argv += ["--config", str(p)]
    return main(argv)


class TestSolveCommand:
    def test_sin_writes_outputs(self, tmp_path):
        assert run(tmp_path, "solve", "--problem", "sin") == EXIT_OK
        lines = (tmp_path / "out" / "field.csv").read_text().splitlines()
        assert lines[0] == "vertex_id,x,u" and len(lines) == 10
        rows = [json.loads(l) for l in (tmp_path / "out" / "solve_report.jsonl").read_text().splitlines()]
        assert rows[-1]["converged"]
        assert (tmp_path / "out" / "field.vtk").read_text().startswith("# vtk DataFile")

    def test_solver_failure(self, tmp_path):
        assert run(tmp_path, "solve", "--problem", "sin", config="nonlinear_max_iter = 1\n") == EXIT_SOLVER
        last = (tmp_path / "out" / "solve_report.jsonl").read_text().splitlines()[-1]
        assert "error" in json.loads(last)

    def test_config_problem_with_mesh(self, tmp_path):
        assert run(tmp_path, "solve", "--mesh", "square 1", config="model = atan\nsource = 1.0\n") == EXIT_OK

    @pytest.mark.parametrize("args", [
        ["solve", "--problem", "nope"],
        ["solve", "--mesh", "no/such/file"],
        ["solve"],
        ["frobnicate"],
        ["solve", "--problem", "sin", "--mesh", "interval 0"],
    ])
    def test_input_errors(self, tmp_path, args):
        assert run(tmp_path, *args) == EXIT_INPUT

    def test_bad_config(self, tmp_path):
        assert run(tmp_path, "solve", "--problem", "sin", config="frob = 1\n") == EXIT_INPUT


class TestCertifyCommand:
    def test_round_trip_of_solved_field(self, tmp_path):
        assert run(tmp_path, "solve", "--problem", "sin") == EXIT_OK
        field = tmp_path / "out" / "field.csv"
        assert main(["certify", "--problem", "sin", "--mesh", "interval 8", "--field", str(field),
                     "--out", str(tmp_path / "cert")]) == EXIT_OK
        text = (tmp_path / "cert" / "certificate.csv").read_text().splitlines()
        assert text[0] == "element_id,variation,threshold,margin,pass" and len(text) == 10
        assert text[-1].startswith("# global_pass=true")

    def test_counterexample_regime_is_uncertified(self, tmp_path):
        # k = 1/3, u1 = 1: the jump from 0 to u1 exceeds 2k/L0 = 1/2
        a = counterexample_1d(1 / 3, 1.0)
        field = tmp_path / "f.csv"
        field.write_text("vertex_id,x,u\n0,0,0\n1,0.5,1\n2,1,1\n")
        cfg = f"k_alpha = {1 / 3!r}\nlipschitz = {a.lipschitz_bound!r}\n"
        assert run(tmp_path, "certify", "--mesh", "interval 2", "--field", str(field), config=cfg) == EXIT_UNCERTIFIED
        lines = (tmp_path / "out" / "certificate.csv").read_text().splitlines()
        assert lines[1].endswith(",false") and lines[2].endswith(",true")

    def test_missing_field(self, tmp_path):
        assert run(tmp_path, "certify", "--mesh", "interval 2", "--field", str(tmp_path / "x.csv")) == EXIT_INPUT

    def test_field_mesh_mismatch(self, tmp_path):
        field = tmp_path / "f.csv"
        field.write_text("vertex_id,x,u\n0,0,0\n1,1,0\n")
        assert run(tmp_path, "certify", "--mesh", "interval 2", "--field", str(field)) == EXIT_INPUT

    def test_2d_global_bound_reported(self, tmp_path, capsys):
        assert run(tmp_path, "solve", "--mesh", "equilateral 2", config="model = atan\nsource = 0.5\n") == EXIT_OK
        field = tmp_path / "out" / "field.csv"
        capsys.readouterr()
        cfg = tmp_path / "t.cfg"
        cfg.write_text("model = atan\nt_min = 1.0471975511965976\n")
        code = main(["certify", "--mesh", "equilateral 2", "--field", str(field), "--out", str(tmp_path / "c"),
                     "--config", str(cfg)])
        summary = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert "global_bound" in summary
        assert code in (EXIT_OK, EXIT_UNCERTIFIED)


class TestAdaptCommand:
    def test_steep_certifies(self, tmp_path):
        assert run(tmp_path, "adapt", "--problem", "steep") == EXIT_OK
        hist = [json.loads(l) for l in (tmp_path / "out" / "history.jsonl").read_text().splitlines()]
        assert hist[-1]["status"] == "Certified"
        assert (tmp_path / "out" / "mesh.txt").is_file()

    def test_budget_limited(self, tmp_path):
        assert run(tmp_path, "adapt", "--problem", "steep", config="budget = 20\n") == EXIT_UNCERTIFIED

    def test_budget_below_initial(self, tmp_path):
        assert run(tmp_path, "adapt", "--problem", "steep", config="budget = 5\n") == EXIT_INPUT

    def test_solver_failure(self, tmp_path):
        assert run(tmp_path, "adapt", "--problem", "steep", config="nonlinear_max_iter = 1\n") == EXIT_SOLVER


class TestCounterexampleCommand:
    def test_violated(self, tmp_path, capsys):
        assert run(tmp_path, "counterexample", "--k", "0.25", "--u1", "2") == EXIT_UNCERTIFIED
        out = json.loads(capsys.readouterr().out)
        assert out["violated"] is True

    def test_2d(self, tmp_path, capsys):
        assert run(tmp_path, "counterexample", "--k", "0.25", "--dim", "2") == EXIT_UNCERTIFIED
        out = json.loads(capsys.readouterr().out)
        assert out["threshold"] == pytest.approx(1 / 14, abs=1e-15)

    @pytest.mark.parametrize("args", [["--k", "0.6"], [], ["--k", "0.25", "--dim", "3"]])
    def test_invalid(self, tmp_path, args):
        assert run(tmp_path, "counterexample", *args) == EXIT_INPUT


class TestConvergenceCommand:
    def test_sin_rates(self, tmp_path, capsys):
        assert run(tmp_path, "convergence", "--problem", "sin", "--rounds", "4") == EXIT_OK
        rows = [json.loads(l) for l in (tmp_path / "out" / "convergence.jsonl").read_text().splitlines()]
        assert len(rows) == 4 and rows[0]["l2_rate"] is None
        assert 1.8 <= rows[-1]["l2_rate"] <= 2.2

    def test_affine_exact(self, tmp_path):
        assert run(tmp_path, "convergence", "--problem", "affine", "--rounds", "2") == EXIT_OK

    def test_needs_two_levels(self, tmp_path):
        assert run(tmp_path, "convergence", "--problem", "sin", "--rounds", "1") == EXIT_INPUT

    def test_tight_band_fails(self, tmp_path):
        cfg = "l2_rate_min = 2.5\nl2_rate_max = 3.0\n"
        assert run(tmp_path, "convergence", "--problem", "sin", "--rounds", "3", config=cfg) == EXIT_UNCERTIFIED

    def test_band_logic(self):
        cfg = RunConfig()
        row = {"l2": 1e-3, "h1": 1e-2, "l2_rate": 2.0, "h1_rate": 1.0}
        assert rates_within_bands([row], cfg)
        assert not rates_within_bands([dict(row, h1_rate=1.3)], cfg)
        assert rates_within_bands([{"l2": 0.0, "h1": 0.0, "l2_rate": None, "h1_rate": None}], cfg)


class TestMeshInfoCommand:
    def test_square(self, tmp_path, capsys):
        assert run(tmp_path, "mesh-info", "--mesh", "square 1") == EXIT_OK
        info = json.loads(capsys.readouterr().out)
        assert info["dim"] == 2 and info["acute"] and info["conforming"]
        assert info["elements"] == 104

    def test_interval(self, tmp_path, capsys):
        assert run(tmp_path, "mesh-info", "--mesh", "interval 4 N D") == EXIT_OK
        info = json.loads(capsys.readouterr().out)
        assert info["bc"] == ["N", "D"] and info["h_max"] == 0.25

    def test_missing(self, tmp_path):
        assert run(tmp_path, "mesh-info") == EXIT_INPUT
