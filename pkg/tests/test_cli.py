import io
import json
import subprocess
import sys

import pytest

from flatnorm.cli import run
from flatnorm.flat_norm import bl_dual_norm, fm_dual_norm
from flatnorm.measures import consolidate, measure, measure_from_json, measure_to_json
from flatnorm.metric_space import euclidean, matrix_space, naturals

LINE = {"kind": "euclidean", "dim": 1}


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run([str(a) for a in argv], stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return p


def atoms(*pairs):
    return {"space": LINE, "atoms": [{"point": [x], "weight": str(w)} for x, w in pairs]}


def test_tv(tmp_path):
    code, out, _ = call("tv", write(tmp_path, "m.json", atoms((0, 2), (1, -1))))
    assert (code, out) == (0, "3.0\n")


def test_dist(tmp_path):
    a = write(tmp_path, "a.json", atoms((0, 1)))
    b = write(tmp_path, "b.json", atoms((1, 1)))
    assert call("dist", "--ball", "bl", a, b)[:2] == (0, "0.666666666667\n")
    assert call("dist", "--ball", "fm", a, b)[:2] == (0, "1.0\n")
    n = write(tmp_path, "n.json", {"space": {"kind": "discrete_naturals"}, "atoms": [{"point": 1, "weight": "1"}]})
    code, _, err = call("dist", a, n)
    assert code == 2 and "space differs" in err


def test_norm_json_and_csv(tmp_path):
    m = write(tmp_path, "m.json", atoms((0, 1), (1, -1)))
    code, out, _ = call("norm", m)
    obj = json.loads(out)
    assert code == 0 and obj["ball"] == "bl" and obj["status"] == "optimal"
    assert obj["value"] == 0.666666666667
    assert [w["point"] for w in obj["witness"]] == [0.0, 1.0]
    code, out, _ = call("norm", "--format", "csv", "--ball", "fm", m)
    assert out.splitlines()[0] == "point,f" and len(out.splitlines()) == 3


def test_pair(tmp_path):
    m = write(tmp_path, "m.json", atoms((0, 2), (1, -1)))
    f = write(tmp_path, "f.json", {"kind": "hat", "lambda": 1, "centers": [[0]]})
    assert call("pair", m, f)[:2] == (0, "2.0\n")
    bad = write(tmp_path, "bad.json", {"kind": "hat", "centers": [[0]]})
    code, _, err = call("pair", m, bad)
    assert code == 2 and "lambda" in err


def test_pushforward(tmp_path):
    op = write(tmp_path, "op.json", {"kind": "ifs", "maps": [{"affine": {"a": 0.5, "b": 0.0}, "p": 0.5},
                                                            {"affine": {"a": 0.5, "b": 0.5}, "p": 0.5}]})
    m = write(tmp_path, "m.json", atoms((0, 1)))
    code, out, _ = call("pushforward", op, m, "--n", 2)
    mu = measure_from_json(json.loads(out))
    assert code == 0 and mu.atoms == [(0.0, 0.25), (0.25, 0.25), (0.5, 0.25), (0.75, 0.25)]


def test_eproperty_and_dirac_check(tmp_path):
    op = write(tmp_path, "op.json", {"kind": "pushforward", "map": {"affine": {"a": 2.0}}})
    f = write(tmp_path, "f.json", {"kind": "hat", "lambda": 1, "centers": [0]})
    code, out, _ = call("eproperty", op, f, "--n-max", 10, "--radii", "0.0001,0.001")
    obj = json.loads(out)
    assert code == 0 and all(w > 100 * r for r, w in zip(obj["radius"], obj["omega"]))
    code, out, _ = call("dirac-check", op, "--radii", "0.1,1")
    rows = json.loads(out)["rows"]
    assert [r["bl_output"] for r in rows] == [r["h_of_image"] for r in rows]


def test_demos():
    code, out, _ = call("demo", "counterexample-3-2", "--n", "1,2,4,8")
    rep = json.loads(out)
    assert code == 0 and rep["tables"]["pairing"]["pairing"] == [0.101321183642] * 4
    assert set(rep) >= {"name", "params", "tables"}
    code, out, _ = call("demo", "dirac-drift", "--n-max", 3, "--format", "csv")
    assert code == 0 and out.splitlines()[2].startswith("1,0.666666666667,")
    code, out, _ = call("demo", "clusters", "--epsilon", 1)
    assert json.loads(out)["summary"]["witnesses"] == 5
    code, out, _ = call("demo", "discrete-l1", "--n-max", 8, "--trials", 10, "--seed", 3)
    assert code == 0 and json.loads(out)["seed"] == 3
    assert call("demo", "scan", "--n-max", 8)[0] == 0


def test_identical_argv_identical_output():
    a = call("demo", "discrete-l1", "--n-max", 10, "--trials", 15, "--seed", 7)
    b = call("demo", "discrete-l1", "--n-max", 10, "--trials", 15, "--seed", 7)
    assert a == b


def test_validate_metric(tmp_path):
    good = write(tmp_path, "g.json", {"distances": [[0, 1], [1, 0]]})
    assert json.loads(call("validate-metric", good)[1])["valid"] is True
    bad = write(tmp_path, "b.json", {"distances": [[0, 1, 3], [1, 0, 1], [3, 1, 0]]})
    code, out, _ = call("validate-metric", bad)
    v = json.loads(out)["violations"]
    assert code == 2 and len(v) == 1 and v[0]["kind"] == "triangle"


def test_errors(tmp_path):
    code, _, err = call("frobnicate")
    assert code == 2 and "invalid choice" in err
    broken = write(tmp_path, "x.json", '{"space": \n')
    code, _, err = call("tv", broken)
    assert code == 2 and "line 2" in err
    code, _, err = call("tv", tmp_path / "missing.json")
    assert code == 2 and "cannot read" in err
    m = write(tmp_path, "m.json", {"space": LINE, "atoms": [{"point": [0], "weight": "abc"}]})
    code, _, err = call("tv", m)
    assert code == 2 and "atoms[0].weight" in err
    m = write(tmp_path, "m2.json", {"atoms": []})
    assert "space" in call("tv", m)[2]
    assert call("tv", "--tol", "-1", m)[0] == 2


def test_cap_exit_code(tmp_path, monkeypatch):
    m = write(tmp_path, "m.json", atoms(*[(i, 1) for i in range(5)]))
    assert call("norm", "--cap", 4, m)[0] == 3
    monkeypatch.setenv("FLATNORM_CAP", "3")
    code, _, err = call("norm", m)
    assert code == 3 and "cap 3" in err
    assert call("norm", "--cap", 10, m)[0] == 0


@pytest.mark.parametrize("space,pts", [
    (euclidean(1), [0.1, 0.7, 3.3]),
    (euclidean(2), [(0.0, 1.0), (2.5, -1.0), (0.3, 0.3)]),
    (naturals(), [0, 4, 9]),
    (matrix_space([[0, 1, 2], [1, 0, 1.5], [2, 1.5, 0]], ["x", "y", "z"]), [0, 1, 2]),
])
def test_round_trip_norms(tmp_path, space, pts):
    mu = consolidate(measure(space, list(zip(pts, [0.1 + 1e-13, -2.0 / 3.0, 1.7]))))
    p = write(tmp_path, "m.json", measure_to_json(mu))
    back = measure_from_json(json.loads(p.read_text()))
    assert abs(bl_dual_norm(back).value - bl_dual_norm(mu).value) <= 1e-12
    assert abs(fm_dual_norm(back).value - fm_dual_norm(mu).value) <= 1e-12


def test_console_script(tmp_path):
    m = write(tmp_path, "m.json", atoms((0, 2), (1, -1)))
    proc = subprocess.run([sys.executable, "-m", "flatnorm.cli", "tv", str(m)], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout == "3.0\n"
    proc = subprocess.run([sys.executable, "-m", "flatnorm.cli", "nope"], capture_output=True, text=True)
    assert proc.returncode == 2
