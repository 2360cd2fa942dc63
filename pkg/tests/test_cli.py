import io
import json
import os
import subprocess
import sys

import pytest

from dualforge import catalog
from dualforge.cli import EXIT_LIMIT, EXIT_OK, EXIT_REFUTED, EXIT_USAGE, render_text, run


def call(*argv):
    buf = io.StringIO()
    code = run(list(argv), buf)
    return code, buf.getvalue()


def call_json(*argv):
    code, out = call(*argv)
    return code, json.loads(out)


def test_homs():
    code, data = call_json("homs", "catalog:DM4", "catalog:DM4")
    assert code == EXIT_OK and data == {"count": 2, "homs": [[0, 1, 2, 3], [0, 2, 1, 3]]}


def test_global_flags_anywhere():
    a = call("--text", "homs", "catalog:D", "catalog:D")
    b = call("homs", "catalog:D", "catalog:D", "--text")
    assert a == b and a[1].startswith("count: 1")


def test_usage_errors():
    assert call("homs", "missing.json", "catalog:D")[0] == EXIT_USAGE
    assert call("homs", "catalog:NOPE", "catalog:D")[0] == EXIT_USAGE
    assert call("nonsense")[0] == EXIT_USAGE
    assert call("conditions", "catalog:DM4_EGO", "--theorem", "strong-I")[0] == EXIT_USAGE


def test_resource_limit_exit_code():
    code, data = call_json("--max-nodes", "3", "homs", "catalog:N5", "catalog:N5")
    assert code == EXIT_LIMIT and data["kind"] == "resource-limit"


def test_env_node_limit():
    env = dict(os.environ, DUALFORGE_MAX_NODES="3")
    p = subprocess.run([sys.executable, "-m", "dualforge.cli", "homs", "catalog:N5", "catalog:N5"],
                       env=env, capture_output=True, text=True)
    assert p.returncode == EXIT_LIMIT and "resource-limit" in p.stdout


def test_piggyback_dm4_single_relation():
    code, data = call_json("piggyback", "catalog:DM4", "catalog:lattice", "--base", "D")
    assert code == EXIT_OK
    ego = data["alter_ego"]
    assert list(ego["relations"]) == ["r0"]
    prec = catalog.structure("DM4_EGO").rel("prec")
    assert [tuple(t) for t in ego["relations"]["r0"]["tuples"]] == list(prec.tuples)
    assert ego["operations"] == {"e1": {"arity": 1, "table": [0, 2, 1, 3]}}


def test_omegamax_and_carriers():
    code, data = call_json("carriers", "catalog:DM4", "catalog:lattice", "catalog:D")
    assert code == EXIT_OK and data["carriers"] == [[0, 0, 1, 1], [0, 1, 0, 1]]
    code, data = call_json("omegamax", "catalog:DM4", "catalog:lattice", "catalog:D", "--rel", "le")
    assert code == EXIT_OK and len(data["maximal"]) == 4


def test_entails():
    code, _ = call("entails", "catalog:DM4", "catalog:DM4_EGO", "catalog:DM4_EGO.prec")
    assert code == EXIT_OK


def test_conditions_verdicts():
    assert call("conditions", "catalog:DM4", "--theorem", "strong-I")[0] == EXIT_OK
    code, data = call_json("conditions", "catalog:DM4", "--theorem", "strong-II")
    assert code == EXIT_REFUTED
    failed = [c["id"] for c in data["conditions"] if c["verdict"] == "fail"]
    assert failed == ["1"]


def test_verify_and_coincide(tmp_path):
    code, data = call_json("verify", "catalog:DM4", "catalog:DM4_EGO", "--depth", "1")
    assert code == EXIT_OK and data["checked"] == 4
    om = tmp_path / "omega.json"
    om.write_text("[[0, 0, 1, 1]]")
    code, data = call_json("coincide", "catalog:DM4", "catalog:DM4_EGO", "catalog:lattice",
                           "catalog:prec", "--omega", str(om))
    assert code == EXIT_OK
    first = data["instances"][0]
    assert first["dual_size"] == first["base_dual_size"] == 2


def test_catalog_commands():
    code, data = call_json("catalog", "list")
    assert code == EXIT_OK and "DM4" in data["problems"]
    code, data = call_json("catalog", "get", "DM4")
    assert code == EXIT_OK and data["operations"]["neg"]["table"] == [3, 1, 2, 0]
    code, data = call_json("catalog", "get", "prec")
    assert code == EXIT_OK and data["target"]["rels"] == {"le": 2}
    code, out = call("--text", "catalog", "get", "KLEENE3")
    assert code == EXIT_OK and "neg:" in out


@pytest.mark.parametrize("obj,want", [
    ({"a": 1, "b": [1, 2]}, "a: 1\nb: [1,2]"),
    ([{"x": 1}, 2], "-\n  x: 1\n- 2"),
])
def test_render_text(obj, want):
    assert render_text(obj) == want


def test_omegamax_with_problem_omega(tmp_path):
    om = tmp_path / "omega.json"
    om.write_text("[0, 0, 1, 1]")
    code, data = call_json("omegamax", "catalog:DM4", "catalog:lattice", "catalog:D", "--rel", "le",
                           "--omega", str(om))
    assert code == EXIT_OK and len(data["maximal"]) == 1
    prec = catalog.structure("DM4_EGO").rel("prec")
    assert [tuple(t) for t in data["maximal"][0]["tuples"]] == list(prec.tuples)
