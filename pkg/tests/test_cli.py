import json

import pytest

from stringnet_mbqc.cli import main


@pytest.fixture
def circuit(tmp_path):
    f = tmp_path / "f.qc"
    f.write_text("wires 2\nrz 0 pi/4\ncz 0 1\nrx 1 pi/3\n")
    return str(f)


def _json(capsys):
    return json.loads(capsys.readouterr().out)


def test_describe_single_plaquette(capsys):
    assert main(["describe", "--patch", "1x1", "--json"]) == 0
    rep = _json(capsys)
    assert rep["qubit_count"] == 12 and rep["cycle_rank"] == 1


def test_verify_precoupled_example(circuit, capsys):
    assert main(["verify", "--circuit", circuit, "--patch", "2x6", "--mode", "precoupled", "--json"]) == 0
    rep = _json(capsys)
    assert rep["tvd"] < 1e-10 and rep["pass"] and rep["two_qubit_operations"] == 0
    assert rep["config"]["seed"] == 0


def test_shots_zero_is_usage_error(circuit):
    assert main(["run", "--circuit", circuit, "--shots", "0"]) == 2


def test_unknown_flag(capsys):
    assert main(["describe", "--nope"]) == 2
    assert "usage" in capsys.readouterr().err


def test_missing_subcommand():
    assert main([]) == 2


def test_help_exits_zero(capsys):
    assert main(["--help"]) == 0


def test_bad_patch_and_circuit(tmp_path, capsys):
    assert main(["describe", "--patch", "1by1"]) == 2
    bad = tmp_path / "bad.qc"
    bad.write_text("wires 1\nrz 0 nope\n")
    assert main(["compile", "--circuit", str(bad)]) == 2
    assert "2:6:" in capsys.readouterr().err
    assert main(["compile", "--circuit", str(tmp_path / "missing.qc")]) == 2


def test_patch_too_small(circuit):
    assert main(["verify", "--circuit", circuit, "--patch", "2x2"]) == 2


def test_run_sampled_records_seed(circuit, tmp_path, capsys):
    out = tmp_path / "r.json"
    argv = ["run", "--circuit", circuit, "--shots", "300", "--seed", "9", "--out", str(out)]
    assert main(argv) == 0
    first = json.loads(out.read_text())
    assert main(argv) == 0
    assert json.loads(out.read_text()) == first
    assert first["config"]["seed"] == 9 and first["shots"] == 300


def test_run_exhaustive(circuit, capsys):
    assert main(["run", "--circuit", circuit, "--json"]) == 0
    rep = _json(capsys)
    assert abs(sum(rep["distribution"].values()) - 1) < 1e-10


def test_compile_outputs(circuit, capsys):
    assert main(["compile", "--circuit", circuit, "--mode", "precoupled", "--json"]) == 0
    rep = _json(capsys)
    assert not [e for e in rep["entries"] if e["kind"] == "cz"]
    assert main(["compile", "--circuit", circuit]) == 0
    assert capsys.readouterr().out.startswith("schedule mode=live")


def test_resource(capsys):
    assert main(["resource", "--patch", "1x1", "--json"]) == 0
    rep = _json(capsys)
    assert rep["pass"] and rep["loop_count"] == 2 and abs(rep["energy"] + 13) < 1e-10
    assert main(["resource", "--patch", "2x2"]) == 2


def test_inspect_certify(capsys):
    assert main(["inspect", "--pattern", "rot_z", "--theta", "0.3", "--certify", "--json"]) == 0
    rep = _json(capsys)
    assert rep["certification"]["pass"] and rep["pattern"]["kind"] == "RotZ"


def test_verify_with_sampling(circuit, capsys):
    assert main(["verify", "--circuit", circuit, "--shots", "20000", "--seed", "3", "--json"]) == 0
    rep = _json(capsys)
    assert rep["sampled"]["tvd_vs_exhaustive"] < 0.02


def test_verification_failure_exits_one(circuit, monkeypatch, capsys):
    import stringnet_mbqc.harness as harness

    monkeypatch.setattr(harness, "ideal_distribution", lambda ir: {"00": 1.0})
    assert main(["verify", "--circuit", circuit]) == 1
    assert capsys.readouterr().out.startswith("FAIL")
