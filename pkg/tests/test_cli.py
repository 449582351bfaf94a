import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from pointcouple import FockWavepacketState, beam_splitter
from pointcouple.cli import MANIFEST_SUFFIX, dispatch
from pointcouple.formats import complex_to_json, device_to_json, fock_from_json, matrix_from_json


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.fixture
def circulator_file(tmp_path):
    perm = [[0, 1, 0], [0, 0, 1], [1, 0, 0]]
    return write(tmp_path / "circ.json", {"scattering_matrix": perm})


@pytest.fixture
def splitter_file(tmp_path):
    return write(tmp_path / "bs.json", device_to_json(beam_splitter(math.pi / 4, 0.0)))


def test_device_circulator_coupling(circulator_file, capsys):
    assert dispatch(["device", circulator_file, "--to-coupling", "--quiet"]) == 0
    doc = json.loads(capsys.readouterr().out)
    v = matrix_from_json(doc["coupling_matrix"], "v")
    np.testing.assert_allclose(v, [[0, 2j, -2j], [-2j, 0, 2j], [2j, -2j, 0]], atol=1e-12)
    assert doc["n_modes"] == 3


def test_device_roundtrip_through_files(circulator_file, tmp_path):
    out = tmp_path / "v.json"
    assert dispatch(["device", "--device", circulator_file, "--to-coupling", "--out", str(out)]) == 0
    back = tmp_path / "s.json"
    assert dispatch(["device", str(out), "--to-scattering", "--out", str(back), "--quiet"]) == 0
    s = matrix_from_json(json.loads(back.read_text())["scattering_matrix"], "s")
    np.testing.assert_allclose(s, [[0, 1, 0], [0, 0, 1], [1, 0, 0]], atol=1e-12)
    manifest = json.loads((tmp_path / ("s.json" + MANIFEST_SUFFIX)).read_text())
    assert manifest["subcommand"] == "device" and manifest["output_paths"] == [str(back)]


def test_missing_file_exits_2_naming_path(tmp_path, capsys):
    missing = str(tmp_path / "nope.json")
    assert dispatch(["feedback", "--config", missing]) == 2
    assert missing in capsys.readouterr().err


def test_unknown_field_exits_2(tmp_path, capsys):
    cfg = write(tmp_path / "c.json", {"dtt": 0.1})
    assert dispatch(["feedback", "--config", cfg]) == 2
    assert "dtt" in capsys.readouterr().err


def test_bad_arguments_exit_2(capsys):
    assert dispatch(["device", "--to-coupling", "--to-scattering"]) == 2
    assert dispatch(["nonsense"]) == 2


def test_mirror_eigenphase_pi_exits_1(tmp_path, capsys):
    dev = write(tmp_path / "m.json", {"scattering_matrix": [[{"re": -1, "im": 0}]]})
    assert dispatch(["device", dev, "--to-coupling"]) == 1
    assert "error" in capsys.readouterr().err


def test_scatter_hong_ou_mandel(splitter_file, tmp_path):
    state = {
        "photons": [{"mode": 0, "freq": 1.0}, {"mode": 1, "freq": 1.0}],
        "terms": [{"occupancy": [1, 1], "amp": complex_to_json(1.0)}],
    }
    out = tmp_path / "out.json"
    code = dispatch(["scatter", "--device", splitter_file, "--state", write(tmp_path / "in.json", state),
                     "--out", str(out), "--quiet"])
    assert code == 0
    result = fock_from_json(json.loads(out.read_text()))
    assert isinstance(result, FockWavepacketState)
    assert abs(result.fock_amplitude([(0, 1.0), (1, 1.0)])) <= 1e-12
    assert abs(result.fock_amplitude([(0, 1.0), (0, 1.0)])) ** 2 == pytest.approx(0.5)


def test_propagate(splitter_file, tmp_path, capsys):
    x = -5 + 0.01 * np.arange(1001)
    env = np.exp(-((x + 2) ** 2) / 0.18)
    state = {"x_min": -5.0, "dx": 0.01,
             "envelopes": [[complex_to_json(v) for v in env], [complex_to_json(0) for _ in env]]}
    cfg = write(tmp_path / "w.json", {"tau": 4.0})
    code = dispatch(["propagate", "--device", splitter_file, "--state", write(tmp_path / "p.json", state),
                     "--config", cfg, "--quiet"])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    out = matrix_from_json(doc["envelopes"], "e")
    np.testing.assert_allclose(np.abs(out[0, 700]), np.abs(out[1, 700]), atol=1e-12)
    assert np.abs(out[0, 700]) == pytest.approx(1 / math.sqrt(2), abs=1e-6)


def test_normal_modes_csv(splitter_file, capsys):
    code = dispatch(["normal-modes", "--device", splitter_file, "--omega", "0,1.5",
                     "--positions=-1,0,1", "--quiet"])
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert len(rows) == 2 * 2 * 3 * 2
    assert set(rows[0]) == {"normal_index", "mode", "x", "omega", "re", "im"}
    assert dispatch(["normal-modes", "--device", splitter_file, "--omega", "1", "--positions", "0",
                     "--offsets", "0"]) == 2


def test_feedback_deterministic_with_stable_hash(tmp_path):
    cfg = write(tmp_path / "fb.json", {"t_end": 2.0, "dt": 0.1})
    outs = []
    for name in ("a.csv", "b.csv"):
        out = tmp_path / name
        assert dispatch(["feedback", "--config", cfg, "--out", str(out), "--quiet"]) == 0
        outs.append(out)
    assert outs[0].read_text() == outs[1].read_text()
    m1, m2 = (json.loads((tmp_path / (o.name + MANIFEST_SUFFIX)).read_text()) for o in outs)
    assert m1["config_hash"] == m2["config_hash"]
    assert m1["extra"]["n_d"] == 20
    assert outs[0].read_text().splitlines()[0] == "t,abs_eps,pop,discarded_weight,max_bond"


def test_progress_goes_to_stderr(tmp_path, capsys):
    cfg = write(tmp_path / "fb.json", {"t_end": 1.0, "dt": 0.1})
    assert dispatch(["feedback", "--config", cfg]) == 0
    captured = capsys.readouterr()
    assert "step 10 / 10" in captured.err
    assert captured.out.startswith("t,abs_eps")
    assert dispatch(["feedback", "--config", cfg, "--quiet"]) == 0
    assert capsys.readouterr().err == ""


def test_env_bond_cap_exits_1(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("POINTCOUPLE_BOND_CAP", "1")
    cfg = write(tmp_path / "fb.json", {"t_end": 1.0, "schmidt_tol": 1e-10})
    assert dispatch(["feedback", "--config", cfg, "--quiet"]) == 1
    assert "bond" in capsys.readouterr().err.lower()


def test_benchmark(tmp_path):
    cfg = write(tmp_path / "fb.json", {"t_end": 4.0})
    sweep = write(tmp_path / "sw.json", {"dts": [0.2, 0.1], "tols": [0.01]})
    out = tmp_path / "table.csv"
    assert dispatch(["benchmark", "--config", cfg, "--sweep", sweep, "--out", str(out), "--quiet"]) == 0
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert len(rows) == 2
    manifest = json.loads((tmp_path / ("table.csv" + MANIFEST_SUFFIX)).read_text())
    assert manifest["extra"]["monotone_in_dt"] == {"0.01": True}
    bad = write(tmp_path / "bad.json", {"dts": [0.1], "tol": [0.01]})
    assert dispatch(["benchmark", "--config", cfg, "--sweep", bad]) == 2


def test_module_entry_point(circulator_file):
    proc = subprocess.run([sys.executable, "-m", "pointcouple.cli", "device", circulator_file,
                           "--to-coupling", "--quiet"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "coupling_matrix" in proc.stdout
