import json
import math

import pytest

from mixheat import cli
from mixheat.checks import CheckResult
from mixheat.coefficients import DiracDerivativeTerm, DiracTerm
from mixheat.config import default_config, emit_config, parse_config, run_id
from mixheat.errors import IoError, ParseError, ValidationError
from mixheat.evolve import TRACE_COLUMNS
from mixheat.reports import Report, emit_reports

MINIMAL = """\
command = "solve"

[grid]
points = 32

[operator.a]
floor = 1.0

[operator.b]
floor = 1.0

[operator.c]
floor = 1.0

[initial]
smooth = ["cos(x)"]

[run]
T = 0.2
dt = 0.1
"""

SINGULAR = """\
command = "net"
seed = 3

[grid]
dimension = 1
points = 4096

[operator]
s = 0.5

[operator.a]
floor = 1.0
smooth = ["1 + sin(x)"]

[operator.b]
floor = 1.0
smooth = ["0.5 + 0.5*cos(x)"]

[operator.c]
floor = 1.0
dirac = [{location = [3.141592653589793], weight = 1.0}]

[initial]
smooth = ["gauss(x, pi, 0.5)"]
dirac_derivative = [{location = [2.0], weight = 0.1, order = 1}]

[mollifier]
profile = "bump"

[run]
T = 0.1
dt = 0.01
"""


def errors_of(text, **kw):
    with pytest.raises(ValidationError) as info:
        parse_config(text, **kw)
    return info.value.errors


class TestParse:
    def test_minimal_round_trip(self):
        cfg = parse_config(MINIMAL)
        assert cfg.command == "solve" and cfg.grid.points == 32
        assert parse_config(emit_config(cfg)) == cfg

    def test_singular_round_trip(self):
        cfg = parse_config(SINGULAR)
        assert any(isinstance(t, DiracTerm) for t in cfg.coeff_c.singular.terms)
        assert any(isinstance(t, DiracDerivativeTerm) for t in cfg.u0.terms)
        assert parse_config(emit_config(cfg)) == cfg

    def test_default_config(self):
        cfg = default_config()
        assert cfg.command == "check"
        assert parse_config(emit_config(cfg)) == cfg

    def test_dt_zero(self):
        errs = errors_of(MINIMAL.replace("dt = 0.1", "dt = 0.0"))
        assert any(e.startswith("run.dt:") for e in errs)

    def test_unresolved_epsilon(self):
        text = MINIMAL + "\n[net]\nepsilons = [0.5, 0.01]\n"
        errs = errors_of(text)
        assert any(e.startswith("net.epsilons[1]:") and "UnresolvedKernel" in e for e in errs)

    def test_collects_every_error(self):
        text = MINIMAL.replace("dt = 0.1", "dt = -1.0").replace("[initial]", '[initial]\ncolour = "red"')
        text = text.replace('smooth = ["cos(x)"]', 'smooth = ["cos(x) + foo"]')
        errs = errors_of(text.replace("T = 0.2", 'T = 0.2\nscheme = "rk4"'))
        paths = sorted(e.split(":")[0] for e in errs)
        assert paths == ["initial.colour", "initial.smooth[0]", "run.dt", "run.scheme"]

    def test_parse_error(self):
        with pytest.raises(ParseError) as info:
            parse_config("points = = 3")
        assert "line 1" in info.value.errors[0]

    def test_negative_coefficient(self):
        errs = errors_of(MINIMAL.replace("[operator.b]\nfloor = 1.0", '[operator.b]\nfloor = 1.0\nsmooth = ["sin(x)"]'))
        assert any(e.startswith("operator.b.smooth") and "PositivityViolation" in e for e in errs)

    def test_derivative_in_coefficient(self):
        text = MINIMAL.replace(
            "[operator.c]\nfloor = 1.0", "[operator.c]\nfloor = 1.0\ndirac_derivative = [{location = [1.0]}]"
        )
        assert any(e.startswith("operator.c.dirac_derivative") for e in errors_of(text))

    def test_location_outside_box(self):
        text = MINIMAL.replace('smooth = ["cos(x)"]', "dirac = [{location = [7.0]}]")
        text = text.replace("[run]", "[mollifier]\nepsilon = 0.5\n\n[run]")
        assert any(e.startswith("initial.dirac[0]") for e in errors_of(text))

    def test_solve_needs_epsilon_for_singular_data(self):
        errs = errors_of(SINGULAR, command="solve")
        assert any(e.startswith("mollifier.epsilon") for e in errs)

    def test_consistency_needs_regular_data(self):
        errs = errors_of(SINGULAR, command="consistency")
        assert any("NotRegularData" in e for e in errs)

    def test_default_epsilons_clamped(self):
        cfg = parse_config(SINGULAR.replace("points = 4096", "points = 2048"))
        assert cfg.clamped_epsilons == (2.0**-8,)
        assert len(cfg.net_config().epsilons) == 5

    def test_run_id(self):
        cfg = parse_config(MINIMAL)
        assert run_id(cfg) == run_id(parse_config('output_dir = "elsewhere"\n' + MINIMAL))
        assert run_id(cfg) != run_id(parse_config("seed = 1\n" + MINIMAL))
        assert len(run_id(cfg)) == 12


class TestReports:
    def test_missing_directory(self, tmp_path):
        missing = tmp_path / "nope"
        with pytest.raises(IoError, match=str(missing)):
            emit_reports(Report("solve", "abc", {}), missing)

    def test_names_and_nan(self, tmp_path):
        rep = Report("net", "0123", {"rate": math.nan}, {"main": (("a",), [(1.5,)]), "extra": (("b",), [(True,)])})
        paths = emit_reports(rep, tmp_path)
        assert sorted(p.name for p in paths) == ["net_0123.csv", "net_0123.json", "net_0123_extra.csv"]
        assert json.loads((tmp_path / "net_0123.json").read_text()) == {"rate": None}
        assert (tmp_path / "net_0123_extra.csv").read_text() == "b\ntrue\n"


def run_cli(args, capsys):
    code = cli.main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


class TestCli:
    def test_check_default(self, tmp_path, capsys):
        code, out, _ = run_cli(["check", "--output", str(tmp_path)], capsys)
        assert code == 0
        assert out.count("PASS") == 10 and "FAIL" not in out

    def test_check_failure_exit(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setattr(cli, "run_property_suite", lambda cfg: [CheckResult("x", False, 1.0, 0.0)])
        code, out, _ = run_cli(["check", "--output", str(tmp_path)], capsys)
        assert code == 4 and "FAIL x" in out

    @pytest.mark.parametrize(
        "args", [[], ["launch"], ["check", "--bogus"], ["check", "--threads", "0"], ["solve"]]
    )
    def test_usage(self, args, capsys):
        assert run_cli(args, capsys)[0] == 1

    def test_missing_config_file(self, tmp_path, capsys):
        assert run_cli(["solve", "--config", str(tmp_path / "x.toml")], capsys)[0] == 1

    def test_validation(self, tmp_path, capsys):
        path = tmp_path / "c.toml"
        path.write_text(MINIMAL.replace("dt = 0.1", "dt = 0.0"))
        code, _, err = run_cli(["solve", "--config", str(path)], capsys)
        assert code == 2 and "run.dt" in err

    def test_solver_failure(self, tmp_path, capsys):
        path = tmp_path / "c.toml"
        text = MINIMAL.replace("points = 32", "points = 64").replace("dt = 0.1", "dt = 0.2\ncg_max_iter = 1")
        path.write_text(text.replace("[operator.a]\nfloor = 1.0", '[operator.a]\nfloor = 1.0\nsmooth = ["3 + 3*sin(3*x)"]'))
        code, _, err = run_cli(["solve", "--config", str(path), "--output", str(tmp_path)], capsys)
        assert code == 3 and "CgDivergence" in err

    def test_missing_output(self, tmp_path, capsys):
        path = tmp_path / "c.toml"
        path.write_text(MINIMAL)
        code, _, err = run_cli(["solve", "--config", str(path), "--output", str(tmp_path / "nope")], capsys)
        assert code == 1 and "nope" in err

    def test_solve_outputs(self, tmp_path, capsys):
        path = tmp_path / "c.toml"
        path.write_text(MINIMAL)
        out = tmp_path / "out"
        out.mkdir()
        assert run_cli(["solve", "--config", str(path), "--output", str(out)], capsys)[0] == 0
        rid = run_id(parse_config(MINIMAL))
        trace = (out / f"solve_{rid}.csv").read_text()
        assert trace.split("\n")[0] == ",".join(TRACE_COLUMNS)
        snaps = (out / f"solve_{rid}_snapshots.csv").read_text().split("\n")
        assert len(snaps[0].split(",")) == 33 and len(snaps) == 1 + 3 + 1  # header, t = 0, 0.1, 0.2, trailing newline

    def test_net_delta_coefficient_is_moderate(self, tmp_path, capsys):
        path = tmp_path / "c.toml"
        path.write_text(SINGULAR)
        assert run_cli(["net", "--config", str(path), "--output", str(tmp_path)], capsys)[0] == 0
        rid = run_id(parse_config(SINGULAR))
        report = json.loads((tmp_path / f"net_{rid}.json").read_text())
        assert report["report"]["verdict"] == "moderate"
        assert all(r["apriori_satisfied"] for r in report["report"]["per_eps"])

    def test_byte_identical(self, tmp_path, capsys):
        path = tmp_path / "c.toml"
        path.write_text(SINGULAR)
        dirs = []
        for i, threads in enumerate(["1", "1", "3"]):
            d = tmp_path / f"run{i}"
            d.mkdir()
            assert run_cli(["net", "--config", str(path), "--output", str(d), "--threads", threads], capsys)[0] == 0
            dirs.append(d)
        contents = [{p.name: p.read_bytes() for p in d.iterdir()} for d in dirs]
        assert contents[0] == contents[1] == contents[2]
