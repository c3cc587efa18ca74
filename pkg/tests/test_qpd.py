import numpy as np
import pytest

from oracles import CX, CZ, KET, PAULI, gate_channel, operator_basis, random_density_matrix, wire_channel
from qcut.circuit import GateKind
from qcut.cutting import CutError, gate_cut_decomposition, wire_cut_decomposition

def test_wire_table_shape():
    terms = wire_cut_decomposition()
    assert len(terms) == 8
    assert all(abs(t.coefficient) == 0.5 for t in terms)
    assert [t.index for t in terms] == list(range(1, 9))
    assert all(t.basis in "IXYZ" and not t.outcome_signed for t in terms)
    assert all(len(t.ops_b) == 1 and t.ops_b[0].kind is GateKind.PREP for t in terms)


@pytest.mark.parametrize("state", ["0", "+", "+i", "1", "-", "-i"])
def test_wire_identity_on_eigenstates(state):
    rho = np.outer(KET[state], KET[state].conj())
    np.testing.assert_allclose(wire_channel(rho), rho, atol=1e-12)


def test_wire_identity_random_density_matrices():
    rng = np.random.default_rng(0)
    worst = max(np.abs(wire_channel(r) - r).max() for r in (random_density_matrix(rng) for _ in range(100)))
    assert worst < 1e-12


@pytest.mark.parametrize("kind, unitary", [("cz", CZ), ("cx", CX)])
def test_gate_channel_on_operator_basis(kind, unitary):
    worst = max(np.abs(gate_channel(kind, e) - unitary @ e @ unitary.conj().T).max() for e in operator_basis())
    assert worst < 1e-12


def test_gate_table_shape():
    terms = gate_cut_decomposition("cz")
    assert len(terms) == 6
    assert sum(abs(t.coefficient) for t in terms) == pytest.approx(3.0)
    assert all(abs(t.coefficient) == 0.5 for t in terms)
    assert sum(t.outcome_signed for t in terms) == 4
    allowed = {GateKind.H, GateKind.Z, GateKind.RZ, GateKind.RY, GateKind.MEAS_Z}
    for kind in ("cz", "cx"):
        for t in gate_cut_decomposition(kind):
            assert {g.kind for g in t.ops_a + t.ops_b} <= allowed
            # a measured term measures exactly one side
            assert t.outcome_signed == any(g.kind is GateKind.MEAS_Z for g in t.ops_a + t.ops_b)


def test_unsupported_gate_kind():
    with pytest.raises(CutError):
        gate_cut_decomposition("h")


def test_oracle_is_sensitive():
    # flipping one coefficient must break the identity, or the oracle proves nothing
    rho = np.outer(KET["+"], KET["+"].conj())
    terms = wire_cut_decomposition()
    out = np.zeros((2, 2), dtype=complex)
    for i, t in enumerate(terms):
        c = -t.coefficient if i == 2 else t.coefficient
        ket = KET[t.ops_b[0].state]
        out += c * np.trace(PAULI[t.basis] @ rho) * np.outer(ket, ket.conj())
    assert np.abs(out - rho).max() > 0.1
