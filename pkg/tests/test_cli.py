import json

import pytest

from brunn import __version__
from brunn.cli import main

H = {"m": 2, "n": 1, "gens": [{"word": "a", "trans": [0]}, {"word": "b", "trans": [0]}]}
PRODUCT = {"m": 2, "n": 1, "gens": [{"word": "a", "trans": [0]}, {"word": "b", "trans": [0]}, {"word": "", "trans": [2]}]}


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def files(tmp_path):
    paths = {}
    for name, obj in (("h", H), ("p", PRODUCT), ("single", {"m": 2, "n": 0, "gens": [{"word": "", "trans": []}]})):
        paths[name] = tmp_path / f"{name}.json"
        paths[name].write_text(json.dumps(obj))
    return paths


def test_qc_estimate_csv(capsys, files):
    code, out, _ = run(capsys, "qc-estimate", "--input", str(files["h"]), "--max-len", "3")
    assert code == 0
    rows = [line for line in out.splitlines() if not line.startswith("#")]
    assert rows[0] == "L,orbit_size,nu"
    assert [r.split(",")[2] for r in rows[1:]] == ["0.5", "0.5", "0.5"]
    assert __version__ in out


def test_qc_estimate_single_element(capsys, files):
    code, out, _ = run(capsys, "qc-estimate", "--input", str(files["single"]), "--max-len", "2")
    rows = [r for r in out.splitlines() if not r.startswith("#")][1:]
    assert all(r.endswith(",0.0") for r in rows)


def test_reports_are_deterministic(capsys, files):
    a = run(capsys, "brunn", "--space", "cone", "--seed", "4", "--count", "3")[1]
    b = run(capsys, "brunn", "--space", "cone", "--seed", "4", "--count", "3")[1]
    assert a == b
    rep = json.loads(a)
    assert rep["version"] == __version__ and rep["config"]["seed"] == 4
    assert rep["result"]["ok"]


def test_brunn_rn_and_tree(capsys, tmp_path):
    rep = json.loads(run(capsys, "brunn", "--space", "rn", "--seed", "1")[1])
    assert rep["result"]["ok"] and rep["config"]["epsilon"] == "1/20"
    t = tmp_path / "t.json"
    t.write_text(json.dumps({"m": 2, "points": ["", "ab", "Ab", "b+a@1/2"]}))
    rep = json.loads(run(capsys, "brunn", "--space", "tree", "--input", str(t))[1])
    assert rep["result"]["ok"] and rep["result"]["hausdorff"] == 0


def test_unknown_space_is_a_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["brunn", "--space", "hyperbolic"])
    assert exc.value.code == 2


def test_classify_and_hull_check(capsys, files):
    rep = json.loads(run(capsys, "classify", "--input", str(files["p"]), "--max-len", "2")[1])
    assert rep["result"]["classification"]["verdict"] == "virtually-product"
    rep = json.loads(run(capsys, "hull-check", "--input", str(files["p"]), "--max-len", "2", "--epsilon", "1/4")[1])
    assert rep["result"]["hull_check"]["violations"] == 0


def test_malformed_file_names_field(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"m": 2, "n": 1, "gens": [{"word": "a", "trans": [0, 0]}]}))
    code, _, err = run(capsys, "classify", "--input", str(bad))
    assert code == 2 and "gens[0].trans" in err


def test_cone_broom(capsys, tmp_path):
    rep = json.loads(run(capsys, "cone-broom", "--theta", "3pi", "--iters", "5")[1])
    assert rep["result"]["ok"] and len(rep["result"]["checks"]) == 5
    out = tmp_path / "r.json"
    assert main(["cone-broom", "--out", str(out), "--iters", "2"]) == 0
    assert json.loads(out.read_text())["result"]["ok"]


def test_bad_epsilon(capsys, files):
    with pytest.raises(SystemExit):
        main(["qc-estimate", "--input", str(files["h"]), "--epsilon", "-1"])
