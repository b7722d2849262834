import json
import subprocess
import sys
from fractions import Fraction

import pytest

from dgdeform import cli
from dgdeform.algebroid import Algebroid, weil_base
from dgdeform.dgla import sl2

JACOBI_FAIL = {"kind": "dgla", "degrees": [0, 0, 0], "labels": ["a", "b", "c"],
               "brackets": [[0, 1, 0, 1], [0, 2, 1, 1]]}


def run(*args):
    return cli.run(list(args))


def run_doc(tmp_path, doc, *args, name="in.json"):
    p = tmp_path / name
    p.write_text(doc if isinstance(doc, str) else json.dumps(doc))
    return run("--input", str(p), *args)


def example(name):
    return json.loads(cli.example_text(name))


# ---------------------------------------------------------------- documents


@pytest.mark.parametrize("name", cli.example_names())
def test_bundled_examples_round_trip(name):
    doc = example(name)
    kind, obj = cli.parse_text(json.dumps(doc))
    assert kind == doc["kind"]
    assert cli.serialize(kind, obj) == doc


def test_rationals():
    assert cli.q("3/6") == Fraction(1, 2) and cli.q(-4) == -4
    for bad in ["x", "1/0", 1.5, True, None]:
        with pytest.raises(cli.ParseError):
            cli.q(bad)
    assert cli.q_out(Fraction(2, 4)) == "1/2" and cli.q_out(Fraction(3)) == 3


def test_dgla_document_matches_constructor():
    g = sl2()
    kind, h = cli.parse_text(cli.example_text("sl2"))
    assert kind == "dgla"
    assert h.degrees == g.degrees and h.labels == g.labels
    assert {k: v for k, v in h.bracket.items() if v} == {k: v for k, v in g.bracket.items() if v}


def test_algebroid_coefficients():
    doc = {"kind": "algebroid", "base": {"m": 1, "D": 2}, "degrees": [0, 1],
           "anchor": [[0, 0, 1]], "diff": [[0, 1, [[[0], "1/2"], [[2], -1]]]], "brackets": [[0, 1, 1, [[[1], 3]]]]}
    _, A = cli.parse_text(json.dumps(doc))
    B = weil_base(1, 2)
    ref = Algebroid.from_table(B, [0, 1], {0: [1]}, {(0, 1): {1: {(1,): 3}}}, {0: {1: {(0,): Fraction(1, 2), (2,): -1}}})
    assert A.diff == ref.diff and A.anchor == ref.anchor
    assert A.bracket == ref.bracket


@pytest.mark.parametrize("doc,where", [
    ({"kind": "dgla"}, "$: missing field 'degrees'"),
    ({"kind": "dgla", "degrees": [0], "diff": [[0, 3, 1]]}, "$.diff[0]"),
    ({"kind": "dgla", "degrees": [0, 0], "brackets": [[0, 1, 1]]}, "$.brackets[0]"),
    ({"kind": "torus"}, "$.kind"),
    ({"kind": "cover", "opens": [["a"]], "presheaf": {"type": "weird"}}, "$.presheaf.type"),
    ({"kind": "algebroid", "base": {"m": 1, "D": 2}, "degrees": [0], "anchor": [[0, 0, [[[1, 1], 1]]]]},
     "$.anchor[0][0]"),
])
def test_parse_errors_name_the_path(tmp_path, doc, where):
    code, out = run_doc(tmp_path, doc, "--command", "check")
    assert code == cli.EXIT_PARSE
    assert where in out


def test_invalid_json_reports_position(tmp_path):
    code, out = run_doc(tmp_path, '{"kind": "dgla",\n "degrees": [0\n}', "--command", "check")
    assert code == cli.EXIT_PARSE
    assert "line 3, column 1" in out


def test_missing_file_and_unknown_example(tmp_path):
    assert run("--input", str(tmp_path / "none.json"), "--command", "check")[0] == cli.EXIT_PARSE
    assert run("--example", "nope", "--command", "check")[0] == cli.EXIT_PARSE


def test_usage_errors():
    assert run("--command", "check")[0] == cli.EXIT_USAGE
    assert run("--example", "sl2", "--command", "frobnicate")[0] == cli.EXIT_USAGE
    assert run("--example", "sl2", "--command", "homology", "--window", "3")[0] == cli.EXIT_USAGE


# ---------------------------------------------------------------- commands


def test_sl2_homology():
    code, out = run("--example", "sl2", "--command", "homology")
    assert code == 0
    assert "H^Lie dims (1,0,0,1)" in out


def test_two_dim_homology_json():
    code, out = run("--example", "two_dim", "--command", "homology", "--window", "0:2", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert doc["dims"]["homology"] == {"0": 1, "1": 1, "2": 0}
    assert doc["params"]["window"] == "0:2"


def test_pbw_summary():
    code, out = run("--example", "pbw_rank2", "--command", "pbw")
    assert code == 0
    assert out.rstrip().endswith("PBW holds through 3")
    code, out = run("--example", "pbw_gauged", "--command", "pbw", "--N", "2")
    assert code == 0 and "PBW holds through 2" in out


@pytest.mark.parametrize("name,command", [
    ("sl2", "check"), ("sl2", "ce"), ("sl2", "envelope"), ("two_dim", "ce"),
    ("cone_two_dim", "mc"), ("cone_two_dim", "connecting"), ("cone_two_dim", "check"),
    ("ks_toy", "ks"), ("ks_toy", "check"), ("two_cover", "check"), ("two_cover", "cech"),
    ("two_cover", "thom-sullivan"), ("circle", "thom-sullivan"), ("family_toy", "check"),
    ("family_toy", "family"), ("family_toy", "universal"),
])
def test_bundled_commands_pass(name, command):
    code, out = run("--example", name, "--command", command, "--format", "json")
    doc = json.loads(out)
    assert code == 0, out
    assert "error" not in doc
    assert all(c["pass"] for c in doc["checks"])


def test_universal_stages():
    _, out = run("--example", "family_toy", "--command", "universal", "--format", "json")
    stages = json.loads(out)["dims"]["stages"]
    assert [(s["diff"], s["filtered"], s["rank"]) for s in stages] == [(k + 1,) * 3 for k in range(4)]


def test_circle_cech():
    _, out = run("--example", "circle", "--command", "cech", "--format", "json")
    assert json.loads(out)["dims"]["cohomology"] == {"0": 1, "1": 1}


def test_failed_check_exit_and_witness(tmp_path):
    code, out = run_doc(tmp_path, JACOBI_FAIL, "--command", "check", "--format", "json")
    assert code == cli.EXIT_CHECK
    (c,) = json.loads(out)["checks"]
    assert c == {"name": "Jacobi", "pass": False, "witness": ["a", "b", "c"]}


def test_rejected_input(tmp_path):
    code, out = run_doc(tmp_path, JACOBI_FAIL, "--command", "homology")
    assert code == cli.EXIT_REJECTED and "AxiomFailure" in out


def test_wrong_kind_for_command():
    code, out = run("--example", "sl2", "--command", "pbw")
    assert code == cli.EXIT_PARSE and "needs an algebroid document" in out


def test_truncation_exit():
    code, out = run("--example", "family_toy", "--command", "family", "--n", "4")
    assert code == cli.EXIT_TRUNCATION and "TruncationTooSmall" in out


def test_cocycle_failure_exit(tmp_path):
    doc = example("family_toy")
    doc["cover"]["opens"].append(["c", "d"])
    code, out = run_doc(tmp_path, doc, "--command", "family", "--format", "json")
    assert code == cli.EXIT_REJECTED
    assert json.loads(out)["error"]["witness"] == [0, 1, 2]


def test_hypothesis_exits(tmp_path):
    doc = example("family_toy")
    doc["cover"]["presheaf"] = {"type": "constant", "algebra": example("sl2")}
    assert run_doc(tmp_path, doc, "--command", "family")[0] == cli.EXIT_HYPOTHESIS
    doc = example("family_toy")
    doc["cover"]["presheaf"]["atoms"].append([["c"], ["a", "b", "c"], 0])
    code, out = run_doc(tmp_path, doc, "--command", "universal", "--format", "json")
    assert code == cli.EXIT_HYPOTHESIS
    assert json.loads(out)["dims"]["hypotheses"] == {"H^0 = 0": False, "kappa^1 bijective": True}


def test_reports_are_deterministic_without_timings():
    args = ("--example", "family_toy", "--command", "universal", "--format", "json")
    a, b = run(*args), run(*args)
    assert a == b
    assert "timings" not in json.loads(a[1])
    assert "timings" in json.loads(run(*args, "--timings")[1])


def test_list_examples():
    code, out = run("--list-examples")
    assert code == 0 and out.split() == cli.example_names()
    assert {"sl2", "two_dim", "pbw_rank2", "family_toy"} <= set(out.split())


def test_module_entry_point():
    p = subprocess.run([sys.executable, "-m", "dgdeform.cli", "--example", "sl2", "--command", "homology"],
                       capture_output=True, text=True)
    assert p.returncode == 0 and "(1,0,0,1)" in p.stdout
