import json

from conftest import CORPUS
from synmpst.cli import main

RING = str(CORPUS / "ring.smpst")


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_check_well_typed(capsys):
    code, out, _ = run_cli(capsys, "check", RING)
    assert code == 0
    assert "3 roles well-typed" in out


def test_check_ill_typed_exit_code(capsys):
    code, out, _ = run_cli(capsys, "check", str(CORPUS / "ring_badpayload.smpst"))
    assert code == 1
    assert "PayloadMismatch" in out


def test_check_missing_file(capsys):
    code, _, err = run_cli(capsys, "check", "nonexistent.smpst")
    assert code == 2
    assert "nonexistent" in err


def test_check_multiple_files(capsys):
    code, out, _ = run_cli(capsys, "check", RING, str(CORPUS / "oauth2.smpst"))
    assert code == 0
    assert out.count("well-typed") == 2


def test_check_json_output_is_stable(capsys):
    code1, out1, _ = run_cli(capsys, "check", RING, "--format", "json")
    code2, out2, _ = run_cli(capsys, "check", RING, "--format", "json")
    assert code1 == code2 == 0
    assert out1 == out2
    doc = json.loads(out1)
    assert doc[0]["sessions"][0]["verdict"] == "well-typed"


def test_check_against_external_mlts(capsys):
    code, out, _ = run_cli(capsys, "check", str(CORPUS / "diamond.smpst"),
                           "--mlts", str(CORPUS / "diamond.mlts.json"))
    assert code == 0
    assert "3 roles well-typed" in out


def test_check_unverified_mlts_requires_flag(capsys, tmp_path):
    bad = tmp_path / "bad.mlts.json"
    bad.write_text(json.dumps({
        "states": ["s", "t1", "t2"],
        "initial": "s",
        "transitions": [
            {"from": "s", "to": "t1", "sender": "a", "receiver": "b",
             "label": "L", "payload": "Unit"},
            {"from": "s", "to": "t2", "sender": "c", "receiver": "b",
             "label": "M", "payload": "Unit"},
        ]}))
    proto = tmp_path / "p.smpst"
    proto.write_text("process P at z = end;\nsession S of Ext = { z: P };\n")
    code, _, err = run_cli(capsys, "check", str(proto), "--mlts", str(bad))
    assert code == 1
    assert "well-behaved" in err
    code, out, _ = run_cli(capsys, "check", str(proto), "--mlts", str(bad),
                           "--allow-unverified")
    assert code == 1  # roles a, b, c are active but unimplemented
    assert "RoleUnimplemented" in out


def test_lts_dot_output(capsys):
    import re
    code, out, _ = run_cli(capsys, "lts", RING, "--format", "dot")
    assert code == 0
    edges = [line for line in out.splitlines()
             if re.match(r"\s*s\d+ -> s\d+ \[", line)]
    assert len(edges) == 6


def test_lts_json_output(capsys):
    code, out, _ = run_cli(capsys, "lts", RING, "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert len(doc["states"]) == 6
    assert len(doc["transitions"]) == 6


def test_lts_unknown_global(capsys):
    code, _, err = run_cli(capsys, "lts", RING, "--global", "Nope")
    assert code == 2
    assert "Nope" in err


def test_wb_mlts_file(capsys):
    code, out, _ = run_cli(capsys, "wb", str(CORPUS / "diamond.mlts.json"))
    assert code == 0
    assert "well-behaved: yes" in out


def test_wb_detects_violations(capsys, tmp_path):
    bad = tmp_path / "bad.mlts.json"
    bad.write_text(json.dumps({
        "states": ["s", "t1", "t2"],
        "initial": "s",
        "transitions": [
            {"from": "s", "to": "t1", "sender": "a", "receiver": "b",
             "label": "L", "payload": "Unit"},
            {"from": "s", "to": "t2", "sender": "c", "receiver": "b",
             "label": "M", "payload": "Unit"},
        ]}))
    code, out, _ = run_cli(capsys, "wb", str(bad))
    assert code == 1
    assert "well-behaved: no" in out
    assert "SenderDeterminacy" in out


def test_wb_protocol_file(capsys):
    code, out, _ = run_cli(capsys, "wb", RING)
    assert code == 0
    assert "well-behaved: yes" in out


def test_simulate_deterministic(capsys):
    code1, out1, _ = run_cli(capsys, "simulate", RING, "--seed", "3")
    code2, out2, _ = run_cli(capsys, "simulate", RING, "--seed", "3")
    assert code1 == code2 == 0
    assert out1 == out2
    assert "a -> b: AppThenGet(Nat)" in out1


def test_simulate_json_lines(capsys):
    code, out, _ = run_cli(capsys, "simulate", RING, "--format", "json")
    assert code == 0
    lines = [json.loads(line) for line in out.splitlines()]
    assert lines[0]["kind"] == "comm"


def test_explore_sound(capsys):
    code, out, _ = run_cli(capsys, "explore", RING)
    assert code == 0
    assert "sound at this depth" in out


def test_explore_diamond_via_directive(capsys):
    code, out, _ = run_cli(capsys, "explore", str(CORPUS / "diamond.smpst"))
    assert code == 0
    assert "sound" in out


def test_explore_unsound_session(capsys, tmp_path):
    proto = tmp_path / "stuck.smpst"
    proto.write_text(
        "global G = a -> b: Foo(Unit) . end;\n"
        "process A at a = send b Foo(unit) . end;\n"
        "process B at b = recv a { Bar(x: Unit) . end } ;\n"
        "session S of G = { a: A, b: B };\n")
    code, out, _ = run_cli(capsys, "explore", str(proto))
    assert code == 1
    assert "violations found" in out


def test_state_cap_env_override(capsys, monkeypatch):
    monkeypatch.setenv("SYNMPST_STATE_CAP", "2")
    code, _, err = run_cli(capsys, "check", RING)
    assert code == 2
    assert "cap" in err
    monkeypatch.setenv("SYNMPST_STATE_CAP", "not-a-number")
    code, _, err = run_cli(capsys, "check", RING)
    assert code == 2


def test_state_cap_flag_beats_env(capsys, monkeypatch):
    monkeypatch.setenv("SYNMPST_STATE_CAP", "2")
    code, _, _ = run_cli(capsys, "check", RING, "--state-cap", "1000")
    assert code == 0


def test_lts_json_feeds_back_into_wb(capsys, tmp_path):
    code, out, _ = run_cli(capsys, "lts", RING, "--format", "json")
    assert code == 0
    exported = tmp_path / "ring.mlts.json"
    exported.write_text(out)
    code, out, _ = run_cli(capsys, "wb", str(exported))
    assert code == 0
    assert "well-behaved: yes" in out


def test_check_json_reports_errors(capsys):
    code, out, _ = run_cli(capsys, "check", str(CORPUS / "ring_badaction.smpst"),
                           "--format", "json")
    assert code == 1
    doc = json.loads(out)
    errors = doc[0]["sessions"][0]["errors"]
    assert errors[0]["kind"] == "UnexpectedSend"
    assert errors[0]["role"] == "a"
    assert errors[0]["span"]


def test_bench_corpus_all_rows_pass(capsys):
    code, out, _ = run_cli(capsys, "bench", str(CORPUS))
    assert code == 0
    assert "all rows pass" in out
    assert "FAIL" not in out


def test_bench_requires_directory(capsys):
    code, _, err = run_cli(capsys, "bench", RING)
    assert code == 2
