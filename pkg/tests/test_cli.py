import json

import pytest

from fedosov.cli import RunConfig, main

SMALL = {"order": 4, "pairs": 6, "triples": 4, "pool": 2}


def write(tmp_path, name, data):
    p = tmp_path / name
    p.write_text(json.dumps(data) if name.endswith(".json") else data)
    return str(p)


def run(tmp_path, argv, name="out.json"):
    out = tmp_path / name
    code = main(argv + ["--out", str(out)])
    return code, (json.loads(out.read_text()) if out.exists() else None), out


def test_malformed_config_exits_2(tmp_path, capsys):
    cfg = write(tmp_path, "bad.json", {"order": 0})
    assert main(["check", "--config", cfg]) == 2
    assert "N must be >= 2" in capsys.readouterr().err


@pytest.mark.parametrize("payload", ['{"order": 4', '{"colour": 1}', '{"order": "six"}', '[1, 2]'])
def test_config_errors(tmp_path, payload):
    p = tmp_path / "c.json"
    p.write_text(payload)
    assert main(["check", "--config", str(p)]) == 2


def test_missing_config_file(tmp_path):
    assert main(["check", "--config", str(tmp_path / "nope.toml")]) == 2


def test_threads_env(tmp_path, monkeypatch):
    monkeypatch.setenv("FEDOSOV_THREADS", "many")
    assert main(["check", "--order-h", "1"]) == 2
    monkeypatch.setenv("FEDOSOV_THREADS", "-1")
    assert main(["star", "--order-h", "2"]) == 2


def test_toml_config_and_determinism(tmp_path):
    cfg = write(tmp_path, "c.toml", 'scenario = "core-identities"\norder = 4\npairs = 6\ntriples = 4\nseed = 7\n')
    code1, rep1, out1 = run(tmp_path, ["check", "--config", cfg], "a.json")
    code2, rep2, out2 = run(tmp_path, ["check", "--config", cfg], "b.json")
    assert code1 == code2 == 0
    assert out1.read_bytes() == out2.read_bytes()
    assert rep1["config"]["seed"] == 7
    assert {c["name"] for c in rep1["scenarios"][0]["checks"]} >= {"moyal-involution", "associativity"}


@pytest.mark.parametrize("control,broken", [("bundle-sign", "r-equation"), ("form-involution", "r-selfadjoint")])
def test_negative_controls_fail_with_witness(tmp_path, control, broken):
    cfg = write(tmp_path, "c.json", SMALL)
    code, rep, _ = run(tmp_path, ["check", "--config", cfg, "--negative-control", control])
    assert code == 1
    failed = {c["name"]: c for c in rep["scenarios"][0]["checks"] if c["status"] == "fail"}
    assert broken in failed
    assert "witness" in failed[broken] and "h" in failed[broken]["witness"]


def test_trace_report_tables(tmp_path):
    cfg = write(tmp_path, "c.json", SMALL)
    code, rep, _ = run(tmp_path, ["trace", "--config", cfg])
    assert code == 0
    tabs = rep["scenarios"][0]["tables"]
    assert tabs["tr(A+)"] == tabs["conj tr(A)"]
    # exact rational strings
    some = next(iter(tabs["tr(A+)"].values()))
    assert set(some) == {"re", "im"} and all("." not in v for v in some.values())


def test_action_float_backend(tmp_path, monkeypatch):
    monkeypatch.setenv("FEDOSOV_THREADS", "1")
    code, rep, _ = run(tmp_path, ["action", "--backend", "float", "--order-h", "4", "--kinds", "EH2B,P"])
    assert code == 0
    table = rep["scenarios"][0]["tables"]["P"]["table"]
    assert table and all("." in v["re"] for v in table.values())


def test_star_subcommand(tmp_path):
    code, rep, _ = run(tmp_path, ["star", "--order-h", "2", "--seed", "3"])
    assert code == 0
    assert rep["scenarios"][0]["tables"]["bracket_sign"] == -1
    assert set(rep["star_product"]) == {"h^0", "h^1"}


def test_runconfig_validation():
    with pytest.raises(ValueError):
        RunConfig(backend="float", tol=0).validate()
    with pytest.raises(ValueError):
        RunConfig(kinds=["EH3"]).validate()
    assert RunConfig().validate().order == 6
