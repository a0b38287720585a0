import csv
import io
import json
import pathlib

import pytest

import rhfill

ROOT = pathlib.Path(__file__).resolve().parents[2]
PAIR = {"group": {"kind": "free", "rank": 2}, "peripherals": [["a"], ["b"]]}


def scenario(tasks, **extra):
    s = {"name": "py", "seed": 5, "pair": PAIR, "tasks": tasks}
    s.update(extra)
    return s


def test_task_kinds():
    kinds = rhfill.task_kinds()
    for k in ("cusped", "delta", "local-isometry", "edf", "limitset", "chabauty"):
        assert k in kinds


def test_groups():
    assert rhfill.describe_group({"kind": "free", "rank": 2}) == "Z * Z"
    assert rhfill.multiply({"kind": "free", "rank": 2}, "ab", "B") == "a"
    z3 = {"kind": "finite-cyclic", "order": 3}
    assert rhfill.multiply(z3, "a^2", "a^2") == "a"


def test_graph_dump():
    lines = rhfill.graph_dump(PAIR, 2).splitlines()
    vertices = [l for l in lines if l.startswith("V ")]
    edges = [l for l in lines if l.startswith("E ")]
    assert vertices[0].split() == ["V", "0", "0", "-", "id"]
    assert len(vertices) > 10 and len(edges) >= len(vertices) - 1


def test_empty_scenario():
    r = rhfill.run_scenario(scenario([]))
    assert r["exit_status"] == 0
    assert r["reports"] == {}


def test_delta_and_csv_are_deterministic():
    tasks = [{"name": "d", "kind": "delta", "params": {"radius": 3, "mode": "sampled", "samples": 500}}]
    a = rhfill.run_scenario(scenario(tasks))
    b = rhfill.run_scenario(scenario(tasks))
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)
    rows = list(csv.reader(io.StringIO(rhfill.emit_plot_data(a["reports"]["d"]))))
    assert rows[0] == ["radius", "delta"]
    assert rows[1][0] == "3"


def test_filling_verdicts():
    tasks = [
        {"name": "big", "kind": "injectivity", "params": {"kernels": {"0": ["a^21"], "1": ["b^21"]}, "radius": 5}},
        {"name": "small", "kind": "local-isometry", "assert": False,
         "params": {"kernels": {"0": ["a^3"], "1": ["b^3"]}, "r": 2, "radius": 4}},
    ]
    r = rhfill.run_scenario(scenario(tasks))
    assert r["reports"]["big"]["verdict"] == "pass"
    assert r["reports"]["small"]["verdict"] == "fail"
    assert r["exit_status"] == 0


def test_schema_error_names_field():
    bad = scenario([{"kind": "injectivity", "params": {"kernels": {"0": ["a^^5"]}, "radius": 2}}])
    with pytest.raises(rhfill.Error) as info:
        rhfill.validate_scenario(bad)
    assert info.value.code == "schema-error"
    assert info.value.exit_status == 2
    assert "tasks[0].params.kernels" in str(info.value)


def test_no_tabular_data():
    r = rhfill.run_scenario(scenario([{"name": "c", "kind": "cusped", "params": {"radius": 2}}]))
    with pytest.raises(rhfill.Error) as info:
        rhfill.emit_plot_data(r["reports"]["c"])
    assert info.value.code == "no-tabular-data"


def test_family_tasks(tmp_path):
    s = scenario(
        [
            {"name": "edf", "kind": "edf", "params": {"depth": 8}},
            {"name": "limits", "kind": "limitset", "params": {"depth": 6, "max_final": 1}},
        ],
        family={"builtin": "sanov-elliptic", "lambda": 3, "indices": [10, 20]},
    )
    path = tmp_path / "s.json"
    path.write_text(json.dumps(s))
    status, summary = rhfill.run_scenario_file(str(path), str(tmp_path / "out"))
    assert status == 0
    assert summary["verdict"] == "pass"
    table = (tmp_path / "out" / "limits.csv").read_text().splitlines()
    assert table[0] == "n,d_hausdorff,depth"
    assert len(table) == 3


def test_bundled_scenario_is_valid():
    s = json.loads((ROOT / "scenarios" / "sanov-filling.json").read_text())
    assert len(rhfill.validate_scenario(s)) == len(s["tasks"])
