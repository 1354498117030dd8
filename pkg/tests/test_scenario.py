import json
from pathlib import Path

import numpy as np
import pytest

from condstates import formats
from condstates.errors import MalformedInputError, ScenarioError
from condstates.linalg import matrix_from_json
from condstates.measurement import Povm
from condstates.regions import RegionSpec, permute_factors
from condstates.scenario import Scenario, build_cat_scenario, run
from oracles import maxdev

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="module")
def cat_report():
    return run(build_cat_scenario())


def _entry(report, name):
    return next(r for r in report.results if r["name"] == name)


def test_cat_golden_values(cat_report):
    v = cat_report.values
    psi = np.array([0, 1, 1, 0]) / np.sqrt(2)
    half = np.eye(2) / 2
    assert maxdev(v["rho_A"].matrix, half) < 1e-12
    assert maxdev(v["rho_B"].matrix, half) < 1e-12
    assert maxdev(v["rho_B_given_A"].matrix, 2 * np.outer(psi, psi)) < 1e-12
    assert maxdev(v["rho_Y"].matrix, half) < 1e-12
    assert maxdev(v["rho_A_recovered"].matrix, half) < 1e-12
    # |y1><y1| (x) |D><D| + |y2><y2| (x) |A><A| written on (A, Y)
    want = np.diag([1.0, 0.0, 0.0, 1.0])
    assert maxdev(v["rho_Y_given_A"].matrix, want) < 1e-12
    a_given_y = v["rho_A_given_Y"]
    assert a_given_y.conditioned == {"Y"} and a_given_y.target == {"A"}
    assert maxdev(permute_factors(a_given_y.op, ["Y", "A"]).matrix, np.diag([1.0, 0, 0, 1])) < 1e-12
    assert maxdev(v["posterior_decayed"].posterior.matrix, np.diag([1, 0])) < 1e-12
    assert maxdev(v["posterior_not_decayed"].posterior.matrix, np.diag([0, 1])) < 1e-12
    assert cat_report.ok


def test_cat_report_entries(cat_report):
    e = _entry(cat_report, "rho_B_given_A")
    assert e["op"] == "conditional_from_joint"
    assert e["min_eigenvalue"] == pytest.approx(0.0, abs=1e-12)
    assert e["normalization_residual"] < 1e-12
    assert maxdev(matrix_from_json(_entry(cat_report, "posterior_decayed")["matrix"]), np.diag([1, 0])) < 1e-12
    assert _entry(cat_report, "rho_AB")["op"] == "declare"
    json.dumps(cat_report.to_dict())


def test_cat_with_noisy_povm():
    p = formats.povm_from_json(formats.read_json(FIXTURES / "povm_noisy.json"), region=RegionSpec("B", 2))
    v = run(build_cat_scenario(p)).values
    assert maxdev(v["rho_Y"].matrix, np.eye(2) / 2) < 1e-12
    assert maxdev(v["posterior_decayed"].posterior.matrix, np.diag([0.75, 0.25])) < 1e-12
    assert maxdev(v["posterior_not_decayed"].posterior.matrix, np.diag([0.25, 0.75])) < 1e-12


def test_cat_rejects_wrong_povm_size():
    p = Povm.from_effects(RegionSpec("B", 3), [("x", np.eye(3))])
    with pytest.raises(Exception):
        build_cat_scenario(p)


def test_run_is_deterministic():
    a = run(Scenario.load(FIXTURES / "scenario_channel.json")).to_dict()
    b = run(Scenario.load(FIXTURES / "scenario_channel.json")).to_dict()
    assert a == b
    report = next(r for r in a["results"] if r["name"] == "report")
    assert report["is_cptp"]
    assert all(c["passed"] for c in a["checks"])


def test_to_dict_round_trip(tmp_path):
    sc = build_cat_scenario()
    path = tmp_path / "cat.json"
    path.write_text(json.dumps(sc.to_dict()))
    again = Scenario.load(path)
    assert again.to_dict() == sc.to_dict()
    assert run(again).to_dict() == run(sc).to_dict()


def test_non_psd_state_aborts_naming_it():
    with pytest.raises(ScenarioError) as info:
        run(Scenario.load(FIXTURES / "scenario_non_psd.json"))
    assert "bad" in str(info.value)


def test_failing_step_is_named():
    doc = json.loads((FIXTURES / "scenario_channel.json").read_text())
    doc["pipeline"].append({"op": "marginalize", "args": {"joint": "rho_B_given_A", "keep": ["A"]}, "bind": "oops"})
    with pytest.raises(ScenarioError) as info:
        run(Scenario.from_dict(doc))
    assert info.value.step == "oops"


@pytest.mark.parametrize(
    "doc",
    [
        [],
        {"regions": []},
        {"regions": [{"label": "A"}], "pipeline": []},
        {"regions": [{"label": "A", "dim": 2}], "pipeline": [{"op": "teleport", "args": {}, "bind": "x"}]},
        {"regions": [{"label": "A", "dim": 2}], "states": [], "pipeline": []},
        {"regions": [{"label": "A", "dim": 2}], "extra": 1, "pipeline": []},
        {"regions": [{"label": "A", "dim": 2}],
         "states": {"s": {"regions": ["Z"], "matrix": [[1]]}}, "pipeline": []},
    ],
)
def test_malformed_documents(doc):
    with pytest.raises(MalformedInputError):
        Scenario.from_dict(doc)


def test_undeclared_reference_is_malformed():
    with pytest.raises(MalformedInputError):
        Scenario.load(FIXTURES / "scenario_undeclared.json")
