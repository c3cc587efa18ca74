import pytest

from qcut.circuit import CircuitError, GateKind, to_dag
from qcut.generators import generate_hea, generate_random, generate_rc, grid_couplers


@pytest.mark.parametrize("n", range(2, 13))
@pytest.mark.parametrize("layers", range(1, 5))
def test_hea_depth(n, layers):
    assert generate_hea(n, layers, seed=0).depth() == (2 + n) * layers


def test_hea_gate_count_and_ring():
    c = generate_hea(4, 1)
    assert len(c) == 12
    assert [g.qubits for g in c.gates if g.kind is GateKind.CZ] == [(0, 1), (1, 2), (2, 3), (3, 0)]
    assert c.count(GateKind.RY) == 4 and c.count(GateKind.RZ) == 4


def test_hea_seeding():
    assert generate_hea(4, 2, 5) == generate_hea(4, 2, 5)
    a = [g.params for g in generate_hea(4, 2, 5).gates]
    b = [g.params for g in generate_hea(4, 2, 6).gates]
    assert a != b


def test_hea_angles_in_range():
    for g in generate_hea(6, 3, 1).gates:
        assert all(0 <= p < 2 * 3.141592653589794 for p in g.params)


def test_hea_rejects_small():
    with pytest.raises(CircuitError):
        generate_hea(1, 1)
    with pytest.raises(CircuitError):
        generate_hea(3, 0)


def test_rc_only_cz_two_qubit_gates():
    c = generate_rc(2, 2, 1, seed=0)
    two = [g for g in c.gates if len(g.qubits) == 2]
    assert two and all(g.kind is GateKind.CZ for g in two)
    assert all(g.kind in (GateKind.RX, GateKind.RY, GateKind.RZ, GateKind.CZ) for g in c.gates)


def test_rc_pairs_are_grid_adjacent():
    rows, cols = 3, 4
    c = generate_rc(rows, cols, 12, seed=2)
    for g in c.gates:
        if g.kind is GateKind.CZ:
            (r0, c0), (r1, c1) = (divmod(q, cols) for q in g.qubits)
            assert abs(r0 - r1) + abs(c0 - c1) == 1


def test_rc_20_qubits_depth_22_cycles():
    c = generate_rc(4, 5, 22, seed=0)
    assert c.n_qubits == 20
    singles = [g for g in c.gates if len(g.qubits) == 1]
    assert len(singles) == 22 * 20
    # every cycle is one single-qubit layer plus one coupler layer
    assert c.depth() == 2 * 22


def test_rc_patterns_cycle_abcd():
    patterns = grid_couplers(4, 5)
    assert len(patterns) == 4
    c = generate_rc(4, 5, 8, seed=0)
    cz = [g.qubits for g in c.gates if g.kind is GateKind.CZ]
    expected = [pair for cycle in range(8) for pair in patterns[cycle % 4]]
    assert cz == expected


def test_rc_patterns_cover_each_coupler_once():
    patterns = grid_couplers(3, 3)
    flat = [p for pat in patterns for p in pat]
    assert len(flat) == len(set(flat)) == 12
    for pat in patterns:
        used = [q for pair in pat for q in pair]
        assert len(used) == len(set(used))


def test_rc_rejects_small_grid():
    with pytest.raises(CircuitError):
        generate_rc(1, 1, 3)
    with pytest.raises(CircuitError):
        generate_rc(2, 2, 0)


def test_generated_dags_are_acyclic():
    import networkx as nx

    for c in (generate_hea(5, 2), generate_rc(3, 3, 6), generate_random(5, 50, 1)):
        assert nx.is_directed_acyclic_graph(to_dag(c).to_networkx())
