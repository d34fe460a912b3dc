import json

import pytest

from cliffdyn import cli


def run(tmp_path, command, config=None, *extra):
    args = [command, "--out", str(tmp_path / "out"), "--quiet", *extra]
    if config is not None:
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(config))
        args += ["--config", str(path)]
    return cli.main(args)


def report(tmp_path):
    return json.loads((tmp_path / "out" / "report.json").read_text())


def test_particle_example(tmp_path):
    cfg = {"m": 1.0, "einbein": {"kind": "constant", "value": 0.5}, "mu0": 0.0, "tau_span": [0, 2], "steps": 4}
    assert run(tmp_path, "particle", cfg) == 0
    rows = (tmp_path / "out" / "trajectory.csv").read_text().splitlines()[1:]
    for row in rows:
        f = row.split(",")
        assert float(f[2]) == pytest.approx(float(f[0]) ** 2 / 4, abs=1e-12)
    rep = report(tmp_path)
    assert rep["passed"] and rep["schema_version"] == 1 and rep["config"]["m"] == 1.0


@pytest.mark.parametrize("command", ["resolve", "ensemble", "string"])
def test_commands_pass(tmp_path, command):
    assert run(tmp_path, command) == 0
    assert report(tmp_path)["passed"]
    assert (tmp_path / "out" / "timing.json").exists()


def test_matmech_small_N_fails_invariant(tmp_path):
    assert run(tmp_path, "matmech", {"N": 32, "samples": 2000}) == 1
    assert not report(tmp_path)["passed"]


def test_config_errors_exit_2(tmp_path, capsys):
    assert run(tmp_path, "particle", {"m": -1, "steps": 0}) == 2
    err = capsys.readouterr().err
    assert "m:" in err and "steps:" in err
    assert run(tmp_path, "particle", {"unknown": 1}) == 2
    assert run(tmp_path, "verify", {"selection": ["no-such-suite"]}) == 2
    assert cli.main(["bogus"]) == 2
    assert cli.main(["particle", "--config", str(tmp_path / "missing.json")]) == 2


def test_verify_selection_deterministic(tmp_path):
    cfg = {"selection": ["clifford-core", "spinor-maps"]}
    assert run(tmp_path, "verify", cfg, "--seed", "3") == 0
    first = (tmp_path / "out" / "report.json").read_bytes()
    assert run(tmp_path, "verify", cfg, "--seed", "3") == 0
    assert (tmp_path / "out" / "report.json").read_bytes() == first
    assert len(report(tmp_path)["checks"]) == 10


def test_thread_cap(monkeypatch):
    monkeypatch.setenv("CLIFFDYN_THREADS", "3")
    assert cli.thread_cap() == 3
    monkeypatch.setenv("CLIFFDYN_THREADS", "junk")
    assert cli.thread_cap() == 1


def test_float_format_roundtrips():
    x = 0.1 + 0.2
    assert cli._fmt({"a": [x]})["a"][0] == x
