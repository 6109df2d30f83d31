import csv
import json
import math

import pytest
import yaml

from quadprop.cli import EXIT_IO, EXIT_NUMERICAL, EXIT_OK, EXIT_SPEC, run


def _config(tmp_path, doc, name="run.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump({"schema": 1, **doc}))
    return str(path)


def _report(out):
    return json.loads((out / "report.json").read_text())


PROPAGATE = {
    "hamiltonian": {"preset": "isotropic"},
    "grid": {"N": 128, "length": 20.0},
    "times": [0.5, 1.0],
    "initial": {"kind": "gaussian", "center": 1.0},
}


@pytest.fixture(scope="module")
def default_verify(tmp_path_factory):
    out = tmp_path_factory.mktemp("verify")
    code = run(["verify", "--out", str(out)])
    return code, out


def test_verify_default_passes(default_verify):
    code, out = default_verify
    assert code == EXIT_OK
    rep = _report(out)
    assert rep["status"] == "ok"
    assert len(rep["presets_passing"]) >= 6
    assert rep["seed"] == rep["result"]["seed"]
    assert all(c["passed"] for c in rep["result"]["checks"])
    names = {c["name"] for c in rep["result"]["checks"]}
    assert {"table1_agreement", "dual_path_agreement", "unitarity", "group_law",
            "fast_vs_direct", "strang_order", "admissibility"} <= names
    rows = list(csv.DictReader(open(out / "verify.csv")))
    assert len(rows) == len(names)


def test_printed_convention_fails_isotropic(tmp_path):
    cfg = _config(tmp_path, {"verify": {"checks": ["table1_agreement"]}})
    code = run(["verify", "--config", cfg, "--out", str(tmp_path), "--sigma-convention", "printed"])
    assert code == EXIT_NUMERICAL
    rep = _report(tmp_path)
    assert rep["status"] == "failed"
    assert "isotropic" not in rep["presets_passing"]
    assert "free" in rep["presets_passing"]


def test_propagate_to_caustic_reports_time(tmp_path, capsys):
    doc = dict(PROPAGATE, times=[math.pi])
    code = run(["propagate", "--config", _config(tmp_path, doc), "--out", str(tmp_path)])
    assert code == EXIT_NUMERICAL
    err = _report(tmp_path)["error"]
    assert err["type"] == "CausticError"
    assert err["time"] == pytest.approx(math.pi)
    assert "3.14159" in capsys.readouterr().err


def test_supercritical_nls_is_a_validation_error(tmp_path, capsys):
    doc = {"hamiltonian": {"preset": "free"}, "grid": {"N": 64, "length": 16.0},
           "initial": {"kind": "gaussian"}, "nls": {"p": 5, "h": 1.0, "T": 0.1, "dt": 0.01}}
    code = run(["nls", "--config", _config(tmp_path, doc), "--out", str(tmp_path)])
    assert code == EXIT_SPEC
    assert "0 < p - 1 < 4/d" in capsys.readouterr().err
    assert _report(tmp_path)["error"]["type"] == "SubcriticalError"


def test_unknown_key_rejected(tmp_path):
    doc = dict(PROPAGATE, grid={"N": 128, "lenght": 20.0})
    code = run(["propagate", "--config", _config(tmp_path, doc), "--out", str(tmp_path)])
    assert code == EXIT_SPEC
    assert "lenght" in _report(tmp_path)["error"]["message"]


def test_missing_schema_version_rejected(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text(yaml.safe_dump(PROPAGATE))
    assert run(["propagate", "--config", str(path), "--out", str(tmp_path)]) == EXIT_SPEC


def test_missing_config_is_io_failure(tmp_path):
    code = run(["propagate", "--config", str(tmp_path / "nope.yaml"), "--out", str(tmp_path)])
    assert code == EXIT_IO
    assert _report(tmp_path)["status"] == "error"


def test_propagate_artifacts_and_determinism(tmp_path):
    cfg = _config(tmp_path, dict(PROPAGATE, seed=7))
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(["propagate", "--config", cfg, "--out", str(a)]) == EXIT_OK
    assert run(["propagate", "--config", cfg, "--out", str(b)]) == EXIT_OK
    for name in ("state_0000.csv", "state_0001.csv", "observables.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    rows = list(csv.DictReader(open(a / "observables.csv")))
    assert float(rows[-1]["centroid_0"]) == pytest.approx(math.cos(1.0), abs=1e-6)
    assert _report(a)["result"]["max_norm_drift"] < 1e-10


# white noise is never resolved on a coarse grid
@pytest.mark.filterwarnings("ignore::quadprop.gridprop.ResolutionWarning")
def test_random_initial_state_follows_seed(tmp_path):
    doc = dict(PROPAGATE, initial={"kind": "random"})
    cfg = _config(tmp_path, doc)
    for out, seed in (("a", "1"), ("b", "1"), ("c", "2")):
        assert run(["propagate", "--config", cfg, "--out", str(tmp_path / out), "--seed", seed]) == EXIT_OK
    same = (tmp_path / "a" / "state_0000.csv").read_bytes() == (tmp_path / "b" / "state_0000.csv").read_bytes()
    diff = (tmp_path / "a" / "state_0000.csv").read_bytes() != (tmp_path / "c" / "state_0000.csv").read_bytes()
    assert same and diff


def test_binary_format(tmp_path):
    cfg = _config(tmp_path, PROPAGATE)
    assert run(["propagate", "--config", cfg, "--out", str(tmp_path), "--format", "binary"]) == EXIT_OK
    assert (tmp_path / "state_0001.bin").read_bytes()[:4] == b"QPRD"


def test_derive_artifacts(tmp_path):
    doc = {"hamiltonian": {"preset": "damped", "params": {"lam": 0.6}}, "times": {"T": 1.0, "dt": 0.25}}
    assert run(["derive", "--config", _config(tmp_path, doc), "--out", str(tmp_path)]) == EXIT_OK
    rows = list(csv.DictReader(open(tmp_path / "phases.csv")))
    assert len(rows) == 4
    assert (tmp_path / "characteristic.csv").exists()


def test_kernel_artifacts_with_closed_form_comparison(tmp_path):
    doc = {"hamiltonian": {"preset": "isotropic"}, "times": [0.3, 0.7],
           "kernel": {"y": 0.5, "points": 21, "table1": "G2"}}
    assert run(["kernel", "--config", _config(tmp_path, doc), "--out", str(tmp_path)]) == EXIT_OK
    errs = _report(tmp_path)["result"]["table1"]["max_rel_error"]
    assert max(errs.values()) < 1e-9
    assert len(list(csv.DictReader(open(tmp_path / "kernel.csv")))) == 42


def test_nls_artifacts(tmp_path):
    doc = {"hamiltonian": {"preset": "free"}, "grid": {"N": 256, "length": 40.0},
           "initial": {"kind": "soliton", "amp": 1.0, "speed": 0.5},
           "nls": {"p": 3, "h": -1.0, "T": 0.2, "dt": 0.01, "save_every": 5}}
    assert run(["nls", "--config", _config(tmp_path, doc), "--out", str(tmp_path)]) == EXIT_OK
    assert len(list(csv.DictReader(open(tmp_path / "trajectory.csv")))) == 21
    assert (tmp_path / "final.csv").exists()
    assert _report(tmp_path)["result"]["max_mass_step_change"] < 1e-8


def test_strichartz_artifacts(tmp_path):
    doc = {"hamiltonian": {"preset": "isotropic"}, "grid": {"N": 128, "length": 20.0},
           "times": [0.25, 0.5, 0.75], "initial": {"kind": "gaussian"},
           "strichartz": {"sigma": 0.5, "pairs": [["inf", 2], [6, 6], [2, 2]],
                          "weight": {"omegas": [1.0, 1.0], "deltas": [-1, 1], "k": 0}}}
    assert run(["strichartz", "--config", _config(tmp_path, doc), "--out", str(tmp_path)]) == EXIT_OK
    rows = list(csv.DictReader(open(tmp_path / "pairs.csv")))
    assert [r["classification"] for r in rows] == ["sharp", "sharp", "inadmissible"]
    assert float(rows[0]["ratio"]) == pytest.approx(1.0, abs=1e-7)
    assert _report(tmp_path)["result"]["weak_l1"]["bounded"]
    assert (tmp_path / "weak_l1.csv").exists()


def test_command_mismatch_rejected(tmp_path):
    cfg = _config(tmp_path, dict(PROPAGATE, command="nls"))
    assert run(["propagate", "--config", cfg, "--out", str(tmp_path)]) == EXIT_SPEC
