import pathlib

import pytest

from synmpst.lts import build_lts
from synmpst.mlts import as_mlts
from synmpst.parser import ProtocolFile, parse_file, parse_mlts

CORPUS = pathlib.Path(__file__).resolve().parent.parent / "corpus"
GOLDEN = pathlib.Path(__file__).resolve().parent / "golden"


def load_protocol(name: str, *, allow_unresolved: bool = False) -> ProtocolFile:
    path = CORPUS / name
    result = parse_file(path.read_text(), str(path),
                        allow_unresolved_globals=allow_unresolved)
    assert isinstance(result, ProtocolFile), result
    assert not result.diagnostics, result.diagnostics
    return result


@pytest.fixture(scope="session")
def ring_pf():
    return load_protocol("ring.smpst")


@pytest.fixture(scope="session")
def ring_lts(ring_pf):
    return build_lts(ring_pf.globals["Ring"])


@pytest.fixture(scope="session")
def ring_m(ring_lts):
    return as_mlts(ring_lts)


@pytest.fixture(scope="session")
def ring_states(ring_pf, ring_lts):
    """Traditional names G1..G6 for the Ring states."""
    ring = ring_pf.globals["Ring"]
    g2 = ring.branches[0].cont          # after a->b:AppThenGet
    g5 = ring.branches[1].cont          # after a->b:App
    g3 = g2.branches[0].cont            # c->a:Val . end
    g6 = g5.branches[0].cont            # a->c:Get . c->a:Val . end
    g4 = g3.branches[0].cont            # end
    names = {"G1": ring, "G2": g2, "G3": g3, "G4": g4, "G5": g5, "G6": g6}
    return {name: ring_lts.state_of(term) for name, term in names.items()}


@pytest.fixture(scope="session")
def lasso_pf():
    return load_protocol("lasso.smpst")


@pytest.fixture(scope="session")
def lasso_lts(lasso_pf):
    return build_lts(lasso_pf.globals["Lasso"])


@pytest.fixture(scope="session")
def diamond_m():
    path = CORPUS / "diamond.mlts.json"
    m = parse_mlts(path.read_text(), str(path))
    assert not isinstance(m, list), m
    return m
