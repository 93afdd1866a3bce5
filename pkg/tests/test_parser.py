from conftest import CORPUS
from synmpst.mlts import Mlts
from synmpst.parser import (ProtocolFile, parse_file, parse_mlts,
                            pretty_file, tokenize)
from synmpst.terms import GBranch, GComm, GEnd, PayloadType

INT = PayloadType.INT


def test_trivial_global():
    pf = parse_file("global G = end;")
    assert isinstance(pf, ProtocolFile)
    assert pf.globals["G"] == GEnd()


def test_ring_file_has_two_top_level_branches(ring_pf):
    ring = ring_pf.globals["Ring"]
    assert isinstance(ring, GComm)
    assert [b.label for b in ring.branches] == ["AppThenGet", "App"]


def test_multicast_expansion():
    pf = parse_file("global G = m -> [w1, w2]: Datum(Int) . end;")
    assert isinstance(pf, ProtocolFile)
    expected = GComm("m", "w1", (GBranch("Datum", INT,
                     GComm("m", "w2", (GBranch("Datum", INT, GEnd()),))),))
    assert pf.globals["G"] == expected


def test_multicast_rejects_multiple_branches():
    out = parse_file("global G = m -> [w1, w2] { A(Int) . end, B(Int) . end };")
    assert isinstance(out, list)
    assert "one branch" in out[0].message


def test_syntax_error_carries_position():
    out = parse_file("global G = a -> ;", "file.smpst")
    assert isinstance(out, list)
    d = out[0]
    assert d.span.file == "file.smpst"
    assert d.span.start_line == 1
    assert 1 <= d.span.start_col <= len("global G = a -> ;") + 1


def test_diagnostics_within_file_bounds():
    text = "global G = end;\nprocess P at a = send b L(1) .\n"
    out = parse_file(text, "f.smpst")
    assert isinstance(out, list)
    for d in out:
        assert 1 <= d.span.start_line <= text.count("\n") + 1


def test_duplicate_declaration_rejected():
    out = parse_file("global G = end; global G = end;")
    assert isinstance(out, list)
    assert "duplicate" in out[0].message


def test_unknown_references_rejected():
    out = parse_file("process P at a = end; session S of G = { a: P };")
    assert isinstance(out, list)
    assert any("unknown global" in d.message for d in out)
    out = parse_file("global G = end; session S of G = { a: Q };")
    assert isinstance(out, list)
    assert any("unknown process" in d.message for d in out)


def test_unresolved_global_allowed_when_requested():
    text = "process P at a = end; session S of G = { a: P };"
    out = parse_file(text, allow_unresolved_globals=True)
    assert isinstance(out, ProtocolFile)


def test_role_mismatch_in_session_rejected():
    out = parse_file("global G = end; process P at a = end; session S of G = { b: P };")
    assert isinstance(out, list)
    assert any("declared" in d.message for d in out)


def test_wellformedness_diagnostics_attached():
    pf = parse_file("global G = mu X . X;")
    assert isinstance(pf, ProtocolFile)
    assert pf.diagnostics
    assert "unguarded" in pf.diagnostics[0].message


def test_int_and_nat_literals():
    pf = parse_file("process P at a = send b L(+20) . send b M(20) . end;",
                    allow_unresolved_globals=True)
    assert isinstance(pf, ProtocolFile)
    p = pf.processes["P"][1]
    from synmpst.terms import IntLit, NatLit
    assert p.payload == IntLit(20)
    assert p.cont.payload == NatLit(20)


def test_signs_after_expressions_are_operators():
    pf = parse_file("process P at a = send b L(x + 1) . end;",
                    allow_unresolved_globals=True)
    assert isinstance(pf, ProtocolFile)
    from synmpst.terms import Add, NatLit, VarRef
    assert pf.processes["P"][1].payload == Add(VarRef("x"), NatLit(1))


def test_expression_precedence():
    pf = parse_file('process P at a = send b L(x + 2 * y == z) . end;',
                    allow_unresolved_globals=True)
    assert isinstance(pf, ProtocolFile)
    from synmpst.terms import Add, Eq, Mul, NatLit, VarRef
    expected = Eq(Add(VarRef("x"), Mul(NatLit(2), VarRef("y"))), VarRef("z"))
    assert pf.processes["P"][1].payload == expected


def test_parenthesised_expressions():
    pf = parse_file('process P at a = send b L((x + 2) * y) . end;',
                    allow_unresolved_globals=True)
    assert isinstance(pf, ProtocolFile)
    from synmpst.terms import Add, Mul, NatLit, VarRef
    assert pf.processes["P"][1].payload == Mul(Add(VarRef("x"), NatLit(2)), VarRef("y"))


def _token_stream(text, path):
    return [(t.kind, t.text) for t in tokenize(text, path)]


def test_round_trip_all_corpus_files():
    for path in sorted(CORPUS.glob("*.smpst")):
        original = path.read_text()
        pf = parse_file(original, str(path), allow_unresolved_globals=True)
        assert isinstance(pf, ProtocolFile), (path, pf)
        printed = pretty_file(pf)
        assert _token_stream(printed, "printed") == _token_stream(original, "orig"), path
        again = parse_file(printed, "printed", allow_unresolved_globals=True)
        assert isinstance(again, ProtocolFile)
        assert again.globals == pf.globals
        assert again.processes == pf.processes


def test_string_escapes_round_trip():
    text = r'process P at a = send b L("he \"quoted\" \\ here") . end;'
    pf = parse_file(text, allow_unresolved_globals=True)
    assert isinstance(pf, ProtocolFile)
    assert pf.processes["P"][1].payload.value == 'he "quoted" \\ here'
    printed = pretty_file(pf)
    assert _token_stream(printed, "p") == _token_stream(text, "o")


# -- MLTS JSON -----------------------------------------------------------------


def test_parse_mlts_diamond(diamond_m):
    assert isinstance(diamond_m, Mlts)
    assert diamond_m.labels[diamond_m.initial] == "S1"
    assert len(diamond_m.transitions) == 4


def test_parse_mlts_minimal():
    m = parse_mlts('{"states": ["only"], "initial": "only", "transitions": []}')
    assert isinstance(m, Mlts)
    assert len(m.labels) == 1 and not m.transitions


def test_parse_mlts_rejects_self_communication():
    doc = ('{"states": ["s", "t"], "initial": "s", "transitions": ['
           '{"from": "s", "to": "t", "sender": "a", "receiver": "a",'
           ' "label": "L", "payload": "Unit"}]}')
    out = parse_mlts(doc)
    assert isinstance(out, list)
    assert "sender and receiver" in out[0].message


def test_parse_mlts_rejects_dangling_and_bad_payload():
    doc = ('{"states": ["s"], "initial": "s", "transitions": ['
           '{"from": "s", "to": "gone", "sender": "a", "receiver": "b",'
           ' "label": "L", "payload": "Float"}]}')
    out = parse_mlts(doc)
    assert isinstance(out, list)
    assert "gone" in out[0].message and "Float" in out[0].message


def test_parse_mlts_rejects_bad_json_and_schema():
    out = parse_mlts("{not json", "m.json")
    assert isinstance(out, list) and out[0].span.file == "m.json"
    out = parse_mlts('{"states": [], "initial": "x"}')
    assert isinstance(out, list)
    out = parse_mlts('{"states": ["a", "a"], "initial": "a"}')
    assert isinstance(out, list)
    out = parse_mlts('{"states": ["a"], "initial": "b"}')
    assert isinstance(out, list)


def test_keywords_are_reserved():
    out = parse_file("global end = end;")
    assert isinstance(out, list)
    out = parse_file("process P at send = end;", allow_unresolved_globals=True)
    assert isinstance(out, list)
