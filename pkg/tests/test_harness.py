import json
import shutil
import xml.dom.minidom

import jsonschema
import numpy as np
import pytest

from blaschke.errors import ScenarioError
from blaschke.harness.cli import main
from blaschke.harness.plot import project
from blaschke.harness.report import run_suite, write_run
from blaschke.harness.runner import run_scenario
from blaschke.harness.scenario import (
    DEFAULT_TOLERANCES,
    bundled_scenarios_dir,
    load_scenario,
    parse_overrides,
    report_schema,
    scenario_from_dict,
    scenario_schema,
)

ELLIPSE = {
    "id": "ellipse_small", "module": "rolling", "c": 0.0, "lambda": 0.25,
    "body": {"generator": "ellipse_like", "params": {"axes": [2, 1]}},
    "resolution": 256, "seeds": {"count": 8},
}
HULL = {"id": "hull", "module": "counterexample", "c": -1.0, "lambda": 2.0,
        "resolution": 512, "options": {"separation_factor": 3.0}}
BAD_LAMBDA = {**ELLIPSE, "id": "bad_lambda", "lambda": 0.5}


def write(path, doc):
    path.write_text(json.dumps(doc))
    return path


class TestScenario:
    def test_defaults(self):
        sc = scenario_from_dict(ELLIPSE)
        assert sc.tol("inclusion") == 1e-6 and sc.tol("residual") == 1e-4
        assert sc.tol("agreement") == 1e-6 and sc.tol("quadrature") == 1e-8
        assert set(sc.tolerances) == set(DEFAULT_TOLERANCES)

    def test_overrides(self):
        sc = scenario_from_dict({**ELLIPSE, "tolerances": {"inclusion": 1e-5}}, overrides={"rac": 1e-3})
        assert sc.tol("inclusion") == 1e-5 and sc.tol("rac") == 1e-3
        assert parse_overrides(["inclusion=2e-6"]) == {"inclusion": 2e-6}
        with pytest.raises(ScenarioError):
            parse_overrides(["inclusion"])
        with pytest.raises(ScenarioError) as err:
            scenario_from_dict(ELLIPSE, overrides={"bogus": 1.0})
        assert err.value.path == "tolerances.bogus"

    @pytest.mark.parametrize("patch,path", [
        ({"c": "one"}, "c"),
        ({"module": "nope"}, "module"),
        ({"resolution": 2}, "resolution"),
        ({"body": {"generator": "torus", "params": {}}}, "body.generator"),
        ({"tolerances": {"inclusion": -1}}, "tolerances.inclusion"),
        ({"lambda": 0.5, "c": -1.0}, "lambda"),
    ])
    def test_validation_paths(self, patch, path):
        with pytest.raises(ScenarioError) as err:
            scenario_from_dict({**ELLIPSE, **patch})
        assert err.value.path == path
        assert str(err.value).startswith(path)

    def test_horoball_regime(self):
        doc = {**ELLIPSE, "module": "horoball", "c": -1.0, "lambda": 1.5}
        assert scenario_from_dict(doc).lam == 1.5
        with pytest.raises(ScenarioError, match="constraints violated") as err:
            scenario_from_dict({**doc, "c": -4.0})
        assert err.value.path == "lambda"

    def test_missing_body(self):
        doc = dict(ELLIPSE)
        doc.pop("body")
        with pytest.raises(ScenarioError, match="body"):
            scenario_from_dict(doc)

    def test_hash_and_rng(self):
        a, b = scenario_from_dict(ELLIPSE), scenario_from_dict(dict(ELLIPSE))
        assert a.input_hash == b.input_hash
        assert a.input_hash != scenario_from_dict({**ELLIPSE, "resolution": 128}).input_hash
        np.testing.assert_array_equal(a.rng().normal(size=4), b.rng().normal(size=4))

    def test_load_errors(self, tmp_path):
        with pytest.raises(ScenarioError, match="no such scenario"):
            load_scenario(tmp_path / "x.json")
        (tmp_path / "bad.json").write_text("{oops")
        with pytest.raises(ScenarioError, match="invalid JSON"):
            load_scenario(tmp_path / "bad.json")

    def test_bundled_scenarios_validate(self):
        paths = sorted(bundled_scenarios_dir().glob("*.json")) + sorted(bundled_scenarios_dir().glob("controls/*.json"))
        assert len(paths) >= 10
        for p in paths:
            assert load_scenario(p).id == p.stem

    def test_schemas_are_valid(self):
        jsonschema.Draft202012Validator.check_schema(scenario_schema())
        jsonschema.Draft202012Validator.check_schema(report_schema())


class TestRunner:
    def test_rolling_report(self, tmp_path):
        sc = scenario_from_dict(ELLIPSE)
        res = run_scenario(sc)
        names = [c.name for c in res.report.checks]
        assert names[:3] == ["certification", "rolling_min_margin", "key_inequality_excess"]
        assert "diameter" in names and "volume_margin" in names
        assert res.report.passed
        run = write_run(sc, res, tmp_path)
        report = json.loads((run / "report.json").read_text())
        jsonschema.validate(report, report_schema())
        assert "runtime" not in json.dumps(report)
        record = json.loads((run / "record.json").read_text())
        assert record["input_hash"] == report["input_hash"] and record["runtime_s"] > 0
        header = (run / "seeds.csv").read_text().splitlines()[0]
        assert header.startswith("seed_index,u0,min_margin")

    def test_failed_certification_is_named(self):
        res = run_scenario(scenario_from_dict(BAD_LAMBDA))
        assert res.report.failing == ["certification"]

    def test_counterexample(self):
        res = run_scenario(scenario_from_dict(HULL))
        assert res.report.passed
        assert res.report.checks[0].name == "penetration" and res.report.checks[0].value > 1e-3

    def test_error_becomes_check(self, tmp_path):
        # a trajectory cannot start where the radial angle vanishes
        doc = {"id": "critical", "module": "liouville", "c": 0.0,
               "body": {"generator": "geodesic_sphere", "params": {"r": 1.0}},
               "resolution": 64, "options": {"origin": [0.0, 0.0], "jitter": 0.0}}
        sc = scenario_from_dict(doc)
        res = run_scenario(sc)
        assert res.error.startswith("DomainError")
        assert res.report.failing == ["completed"]
        report = json.loads((write_run(sc, res, tmp_path) / "report.json").read_text())
        assert report["error"] == res.error and not report["passed"]


class TestCli:
    def test_run_exit_codes(self, tmp_path, capsys):
        good = write(tmp_path / "good.json", ELLIPSE)
        bad = write(tmp_path / "bad.json", BAD_LAMBDA)
        assert main(["run", str(good), "--out", str(tmp_path / "o")]) == 0
        assert main(["run", str(bad), "--out", str(tmp_path / "o")]) == 1
        assert "certification" in capsys.readouterr().out
        assert main(["run", str(tmp_path / "missing.json")]) == 2
        write(tmp_path / "invalid.json", {**ELLIPSE, "c": "x"})
        assert main(["run", str(tmp_path / "invalid.json")]) == 2
        assert "c: " in capsys.readouterr().err

    def test_tol_override(self, tmp_path):
        bad = write(tmp_path / "bad.json", BAD_LAMBDA)
        # a loose enough certification tolerance lets the overstated lambda through
        assert main(["run", str(bad), "--out", str(tmp_path), "--tol-override", "certification=0.3",
                     "--tol-override", "inclusion=10"]) in (0, 1)
        report = json.loads((tmp_path / "bad_lambda" / "report.json").read_text())
        assert report["checks"][0]["passed"]

    def test_env_out_dir(self, tmp_path, monkeypatch):
        monkeypatch.setenv("BLASCHKE_OUT", str(tmp_path / "env"))
        assert main(["run", str(write(tmp_path / "h.json", HULL))]) == 0
        assert (tmp_path / "env" / "hull" / "report.json").exists()

    def test_empty_suite(self, tmp_path, capsys):
        (tmp_path / "empty").mkdir()
        assert main(["suite", str(tmp_path / "empty"), "--out", str(tmp_path / "o")]) == 0
        assert (tmp_path / "o" / "summary.csv").read_text() == "id,module,verdict,worst_margin,failing\n"

    def test_suite_with_control(self, tmp_path):
        d = tmp_path / "s"
        d.mkdir()
        write(d / "a.json", HULL)
        write(d / "b.json", BAD_LAMBDA)
        write(d / "c.json", {"id": "broken"})
        assert main(["suite", str(d), "--out", str(tmp_path / "o")]) == 1
        rows = (tmp_path / "o" / "summary.csv").read_text().splitlines()
        assert [r.split(",")[:3] for r in rows[1:]] == [
            ["bad_lambda", "rolling", "FAIL"], ["c", "?", "ERROR"], ["hull", "counterexample", "PASS"]]

    def test_suite_workers_and_determinism(self, tmp_path):
        d = tmp_path / "s"
        d.mkdir()
        write(d / "a.json", HULL)
        write(d / "b.json", ELLIPSE)
        run_suite(d, tmp_path / "one", workers=1)
        run_suite(d, tmp_path / "two", workers=2)
        for name in ("hull/report.json", "ellipse_small/report.json", "ellipse_small/seeds.csv", "summary.csv"):
            assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "two" / name).read_bytes()

    def test_plot(self, tmp_path):
        out = tmp_path / "o"
        assert main(["run", str(write(tmp_path / "h.json", HULL)), "--out", str(out)]) == 0
        assert main(["plot", str(out / "hull")]) == 0
        svg = (out / "hull" / "plot.svg").read_text()
        xml.dom.minidom.parseString(svg)
        assert "<polygon" in svg and "<polyline" in svg
        assert main(["plot", str(tmp_path / "nothing")]) == 2

    def test_projection(self):
        # hyperboloid origin -> disk center; sphere equator point -> unit circle
        np.testing.assert_allclose(project(np.array([[1.0, 0.0, 0.0]]), -1.0), [[0.0, 0.0]])
        np.testing.assert_allclose(project(np.array([[0.0, 1.0, 0.0]]), 1.0), [[1.0, 0.0]])
        np.testing.assert_allclose(project(np.array([[0.3, 0.4]]), 0.0), [[0.3, 0.4]])


def test_bundled_dir_copy_runs(tmp_path):
    # a copied bundled file runs by path outside the package
    src = bundled_scenarios_dir() / "stadium_control.json"
    dst = tmp_path / "stadium_control.json"
    shutil.copy(src, dst)
    assert main(["run", str(dst), "--out", str(tmp_path / "o")]) == 0
