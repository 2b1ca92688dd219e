import json
from pathlib import Path

import numpy as np
import pytest

from itodilate.cli import execute, main
from itodilate.germ import random_dilated_model
from itodilate.jsonio import dumps, encode_model
from itodilate.semigroup import FiniteGroup

DATA = Path(__file__).parent / "data"


def run(*argv):
    code, text = execute([str(a) for a in argv])
    return code, json.loads(text)


def test_check_cpd_negative_example():
    code, doc = run("check-cpd", "--model", DATA / "z2_neg.json", "--tol", "1e-9")
    assert code == 0
    assert doc["result"]["min_eigenvalue"] == pytest.approx(1.0)
    assert doc["manifest"]["command"] == "check-cpd"
    assert doc["manifest"]["tolerances"]["tol"] == 1e-9


def test_check_cpd_positive_example():
    code, doc = run("check-cpd", "--model", DATA / "z2_pos.json", "--forward")
    assert code == 1
    np.testing.assert_allclose(doc["result"]["witness"], [[2 ** -0.5, 0], [-(2 ** -0.5), 0]], atol=1e-15)
    assert doc["result"]["forward"]["kernel_min_eigenvalue"] < 0


def test_dissipator_and_dilation_commands():
    assert run("dissipator-pd", "--model", DATA / "z2_neg.json")[0] == 0
    assert run("dissipator-pd", "--model", DATA / "z2_pos.json")[0] == 1
    code, doc = run("dilate", "--model", DATA / "z2_neg.json")
    assert code == 0 and doc["result"]["K_dim"] == 1
    code, doc = run("reconstruct", "--model", DATA / "z2_neg.json")
    assert code == 0 and doc["result"]["reconstruction_residual"] <= 1e-12
    assert run("dilate", "--model", DATA / "z2_pos.json")[0] == 1


def test_kernel_commands():
    code, doc = run("kernel", "--model", DATA / "disc.json", "--spec", DATA / "disc_kernel.json")
    e1 = np.exp(-1)
    assert code == 0
    M = np.array(doc["result"]["matrix"])[..., 0]
    np.testing.assert_allclose(M, [[e1, e1], [e1, 1]], atol=1e-12)
    code, doc = run("small-t", "--model", DATA / "disc.json", "--spec", DATA / "disc_kernel.json")
    assert code == 0 and doc["result"]["first_order"]


def test_poisson_commands():
    code, doc = run("poisson-mc", "--model", DATA / "poisson.json", "--t", "1", "--paths", "20000")
    assert code == 0 and doc["result"]["exact"] == [1.0, 0.0]
    code, doc = run("martingale", "--model", DATA / "poisson.json", "--paths", "20000")
    assert code == 0


def test_birth_verify():
    code, doc = run("birth-verify", "--model", DATA / "disc.json", "--draws", "20", "--samples", "50")
    assert code == 0
    assert doc["result"]["martingale_condition"]["mode"] == "martingale"


def test_usage_errors():
    assert run("bogus")[0] == 2
    assert run("check-cpd")[0] == 2
    assert run("check-cpd", "--model", DATA / "missing.json")[0] == 2
    assert run("check-cpd", "--model", DATA / "z2_neg.json", "--tol", "-1")[0] == 2
    assert run("poisson-mc", "--model", DATA / "z2_neg.json")[0] == 2


def test_malformed_model_file(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run("check-cpd", "--model", bad)[0] == 2
    bad.write_text(json.dumps({"semigroup": {"kind": "cyclic", "m": 2}}))
    assert run("check-cpd", "--model", bad)[0] == 2


def test_reruns_are_byte_identical(tmp_path):
    m = random_dilated_model(FiniteGroup.quaternion(), np.random.default_rng(1), n_modes=1)
    path = tmp_path / "q8.json"
    path.write_text(dumps(encode_model(m)))
    for argv in (["check-cpd", "--model", path], ["dilate", "--model", path],
                 ["martingale", "--model", DATA / "poisson.json", "--paths", "5000", "--seed", "3"]):
        a, b = run(*argv), run(*argv)
        assert dumps(a[1]["result"]) == dumps(b[1]["result"])


def test_main_writes_stdout_and_out(tmp_path, capsys):
    out = tmp_path / "report.json"
    code = main(["check-cpd", "--model", str(DATA / "z2_neg.json"), "--out", str(out)])
    assert code == 0
    printed = capsys.readouterr().out
    assert json.loads(printed) == json.loads(out.read_text())
