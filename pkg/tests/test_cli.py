import json

import numpy as np
import pytest

from convexjet.cli import main


@pytest.fixture
def quad(tmp_path):
    p = tmp_path / "q.json"
    assert main(["gen", "quadratic", "--dim", "2", "--count", "12", "--out", str(p)]) == 0
    return p


def test_validate_exit_codes(tmp_path, quad):
    assert main(["validate", str(quad)]) == 0
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"dim": 1, "jets": [{"x": [0.0], "f": 0.0, "g": [0.0]},
                                                  {"x": [1.0], "f": 0.0, "g": [1.0]}]}))
    assert main(["validate", str(bad)]) == 3


def test_e1_truncation(tmp_path):
    """The finite truncation of E1 extends as given; widening X forces augmentation."""
    p = tmp_path / "e1.json"
    main(["gen", "example-1.6-E1", "--out", str(p)])
    assert main(["validate", str(p)]) == 0
    rep = tmp_path / "r.json"
    assert main(["validate", str(p), "--widen-to-full", "--out", str(rep)]) == 2
    d = json.loads(rep.read_text())
    assert d["verdict"] == "ExtendibleAfterAugmentation" and d["plan"]["cones"]


def test_extend_verify_eval(tmp_path, quad):
    model = tmp_path / "m.json"
    assert main(["extend", str(quad), "--out", str(model), "--grid", "65",
                 "--report", str(tmp_path / "rep.json")]) == 0
    assert main(["verify", str(model), str(quad)]) == 0
    pts = tmp_path / "p.csv"
    np.savetxt(pts, [[0.1, 0.2], [-0.3, 0.4]], delimiter=",")
    out = tmp_path / "o.csv"
    assert main(["eval", str(model), str(pts), "--out", str(out)]) == 0
    A = np.loadtxt(out, delimiter=",", skiprows=1)
    assert A.shape == (2, 5)
    assert main(["eval", str(model), str(tmp_path / "rep.json")]) == 1


def test_io_errors(tmp_path):
    assert main(["validate", str(tmp_path / "missing.json")]) == 1
    broken = tmp_path / "b.json"
    broken.write_text('{"dim": 2, "jets": [{"x": [0, 0], "f": 0}]}')
    assert main(["validate", str(broken)]) == 1
    assert main(["gen", "nope", "--out", str(tmp_path / "x.json")]) == 1


def test_reports_deterministic(tmp_path, quad):
    for k in (1, 2):
        main(["validate", str(quad), "--widen-to-full", "--out", str(tmp_path / f"v{k}.json")])
        main(["extend", str(quad), "--grid", "33", "--out", str(tmp_path / f"m{k}.json")])
    assert (tmp_path / "v1.json").read_bytes() == (tmp_path / "v2.json").read_bytes()
    assert (tmp_path / "m1.json").read_bytes() == (tmp_path / "m2.json").read_bytes()


def test_surface_command(tmp_path):
    nrm = tmp_path / "n.json"
    assert main(["gen", "square-midpoints", "--out", str(nrm)]) == 0
    obj, model = tmp_path / "s.obj", tmp_path / "sm.json"
    assert main(["surface", str(nrm), "--out", str(obj), "--grid", "65",
                 "--model-out", str(model)]) == 0
    assert obj.read_text().count("\nv ") > 10
    assert main(["verify", str(model), str(nrm)]) == 0
