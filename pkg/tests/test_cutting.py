import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import signed_expectation
from qcut.circuit import Circuit, GateKind, gate, to_dag
from qcut.cutting import (
    CutError,
    CutKind,
    CutPlan,
    CutPoint,
    ReconstructionError,
    VariantResult,
    apply_cuts,
    bootstrap_stderr,
    cut_points_from_json,
    enumerate_variants,
    job_id,
    reconstruct,
)
from qcut.generators import generate_hea, generate_random
from qcut.simulator import exact_signed_expectation, expectation, signed_samples


def quiet_cuts(circuit, cuts):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return apply_cuts(circuit, cuts)


def run_exact(plan, obs):
    return {j.job_id: exact_signed_expectation(j.circuit, j.observable)
            for j in enumerate_variants(plan, obs, 0, 0)}


def ring_cz(circuit, a, b):
    return next(g.id for g in circuit.gates if g.kind is GateKind.CZ and g.qubits == (a, b))


def test_empty_cut_list_is_passthrough():
    c = generate_hea(4, 1)
    plan = apply_cuts(c, [])
    assert len(plan.fragments) == 1 and plan.fragment_widths == [4]
    jobs = list(enumerate_variants(plan, "ZZZZ", 0, 0))
    assert len(jobs) == 1 and jobs[0].circuit.gates == c.gates
    assert reconstruct(plan, run_exact(plan, "ZZZZ")) == pytest.approx(expectation(c, "ZZZZ"), abs=1e-14)


def test_single_qubit_wire_cut():
    c = Circuit.from_gates(1, [gate("ry", [0], [0.7]), gate("rz", [0], [1.3])])
    plan = apply_cuts(c, [CutPoint.wire(0, 1, 0)])
    assert plan.fragment_widths == [1, 1]
    assert plan.fragment_qubit_maps == [(0,), (0,)]
    assert plan.n_jobs == 16
    assert reconstruct(plan, run_exact(plan, "Z")) == pytest.approx(expectation(c, "Z"), abs=1e-14)


def test_identity_wire_cut_reconstructs_one():
    # U1 = U2 = identity, realised as RZ(0)
    c = Circuit.from_gates(1, [gate("rz", [0], [0.0]), gate("rz", [0], [0.0])])
    plan = apply_cuts(c, [CutPoint.wire(0, 1, 0)])
    assert reconstruct(plan, run_exact(plan, "Z")) == pytest.approx(1.0, abs=1e-14)


def test_hea8_single_ring_cut_stays_connected():
    c = generate_hea(8, 1)
    with pytest.warns(UserWarning, match="does not disconnect"):
        plan = apply_cuts(c, [CutPoint.gate_cut(ring_cz(c, 3, 4))])
    assert plan.fragment_widths == [8]


def test_hea8_two_ring_cuts_give_two_halves():
    c = generate_hea(8, 1)
    plan = apply_cuts(c, [CutPoint.gate_cut(ring_cz(c, 3, 4)), CutPoint.gate_cut(ring_cz(c, 7, 0))])
    assert sorted(plan.fragment_widths) == [4, 4]
    assert sorted(map(sorted, plan.fragment_qubit_maps)) == [[0, 1, 2, 3], [4, 5, 6, 7]]
    assert reconstruct(plan, run_exact(plan, "Z" * 8)) == pytest.approx(expectation(c, "Z" * 8), abs=1e-12)


def test_graph_state_gate_cut():
    c = Circuit.from_gates(2, [gate("h", [0]), gate("h", [1]), gate("cz", [0, 1])])
    plan = apply_cuts(c, [CutPoint.gate_cut(2)])
    assert plan.fragment_widths == [1, 1] and plan.n_assignments == 6
    for obs in ("ZZ", "XZ", "ZX", "XX", "YY"):
        assert reconstruct(plan, run_exact(plan, obs)) == pytest.approx(expectation(c, obs), abs=1e-14)


def test_cx_gate_cut():
    c = Circuit.from_gates(2, [gate("ry", [0], [0.4]), gate("rx", [1], [1.1]), gate("cx", [0, 1]),
                               gate("h", [1])])
    plan = apply_cuts(c, [CutPoint.gate_cut(2)])
    for obs in ("ZZ", "XZ", "ZX", "YI", "IY"):
        assert reconstruct(plan, run_exact(plan, obs)) == pytest.approx(expectation(c, obs), abs=1e-13)


def test_cut_validation():
    c = Circuit.from_gates(2, [gate("h", [0]), gate("cz", [0, 1]), gate("h", [1]), gate("x", [0])])
    with pytest.raises(CutError, match="dangling"):
        apply_cuts(c, [CutPoint.gate_cut(99)])
    with pytest.raises(CutError, match="two-qubit"):
        apply_cuts(c, [CutPoint.gate_cut(0)])
    with pytest.raises(CutError, match="not adjacent"):
        apply_cuts(c, [CutPoint.wire(0, 2, 0)])
    with pytest.raises(CutError, match="dangling"):
        apply_cuts(c, [CutPoint.wire(0, 42, 0)])
    with pytest.raises(CutError, match="duplicate"):
        apply_cuts(c, [CutPoint.gate_cut(1), CutPoint.gate_cut(1)])


def test_accepts_dag_input():
    c = generate_hea(4, 1)
    plan = quiet_cuts(to_dag(c), [CutPoint.gate_cut(ring_cz(c, 1, 2)), CutPoint.gate_cut(ring_cz(c, 3, 0))])
    assert sorted(plan.fragment_widths) == [2, 2]


@pytest.mark.parametrize("n_wire, n_gate", [(1, 0), (0, 1), (2, 0), (0, 2), (1, 1)])
def test_variant_count_law(n_wire, n_gate):
    c = generate_hea(6, 2, seed=1)
    cz = [g.id for g in c.gates if g.kind is GateKind.CZ]
    d = to_dag(c)
    wires = [e for e in d.edges if d.nodes[e[0]].kind is GateKind.RY]
    cuts = [CutPoint.gate_cut(g) for g in cz[:n_gate]] + [CutPoint.wire(*e) for e in wires[:n_wire]]
    plan = quiet_cuts(c, cuts)
    assert plan.n_assignments == 8**n_wire * 6**n_gate
    jobs = list(enumerate_variants(plan, "Z" * 6))
    assert len(jobs) == plan.n_assignments * len(plan.fragments)


def test_enumeration_order_and_ids():
    c = Circuit.from_gates(2, [gate("h", [0]), gate("cz", [0, 1]), gate("h", [0])])
    plan = apply_cuts(c, [CutPoint.gate_cut(1), CutPoint.wire(1, 2, 0)])
    jobs = list(enumerate_variants(plan, "ZZ", 0, 0))
    assert plan.n_assignments == 48
    assert [j.job_id for j in jobs[:4]] == [job_id(0, 0), job_id(0, 1), job_id(0, 2), job_id(1, 0)]
    assert jobs[3].assignment == 1 and jobs[3].fragment == 0
    assert len({j.job_id for j in jobs}) == len(jobs)
    # lexicographic: the last cut's term index varies fastest
    coeffs = plan.coefficients()
    assert coeffs[:8].tolist() == [0.25, 0.25, 0.25, -0.25, 0.25, -0.25, 0.25, -0.25]


def test_seeds_are_job_bound():
    c = generate_hea(4, 1)
    plan = quiet_cuts(c, [CutPoint.gate_cut(ring_cz(c, 1, 2))])
    a = [j.seed for j in enumerate_variants(plan, "ZZZZ", 1024, 7)]
    b = [j.seed for j in enumerate_variants(plan, "ZZZZ", 1024, 7)]
    assert a == b and len(set(a)) == len(a)
    assert a != [j.seed for j in enumerate_variants(plan, "ZZZZ", 1024, 8)]


def test_wire_cut_observable_letters():
    c = Circuit.from_gates(2, [gate("h", [0]), gate("cz", [0, 1]), gate("h", [0])])
    plan = apply_cuts(c, [CutPoint.wire(0, 1, 0)])
    up = next(i for i, f in enumerate(plan.fragments) if f.final == (False,))
    letters = {j.observable for j in enumerate_variants(plan, "ZZ") if j.fragment == up}
    assert letters == {"I", "X", "Y", "Z"}


def test_reconstruct_errors():
    c = Circuit.from_gates(2, [gate("h", [0]), gate("h", [1]), gate("cz", [0, 1])])
    plan = apply_cuts(c, [CutPoint.gate_cut(2)])
    results = run_exact(plan, "ZZ")
    missing = dict(results)
    missing.pop(job_id(3, 1))
    with pytest.raises(ReconstructionError, match="missing"):
        reconstruct(plan, missing)
    results[job_id(0, 0)] = float("nan")
    with pytest.raises(ReconstructionError, match="NaN"):
        reconstruct(plan, results)


def test_reconstruct_accepts_variant_results_in_any_order():
    c = generate_hea(4, 1, seed=2)
    plan = quiet_cuts(c, [CutPoint.gate_cut(ring_cz(c, 1, 2)), CutPoint.gate_cut(ring_cz(c, 3, 0))])
    values = run_exact(plan, "ZZZZ")
    forward = {k: VariantResult(k, v) for k, v in values.items()}
    backward = {k: forward[k] for k in reversed(list(forward))}
    assert reconstruct(plan, forward) == reconstruct(plan, backward)


def test_plan_json_round_trip():
    c = generate_hea(4, 2, seed=3)
    d = to_dag(c)
    wire = next(e for e in d.edges if d.nodes[e[0]].kind is GateKind.CZ and d.nodes[e[1]].kind is GateKind.CZ)
    plan = quiet_cuts(c, [CutPoint.gate_cut(ring_cz(c, 1, 2)), CutPoint.wire(*wire)])
    back = CutPlan.from_dict(plan.to_dict())
    assert back.cuts == plan.cuts and back.to_dict() == plan.to_dict()
    assert reconstruct(back, run_exact(back, "ZZZZ")) == reconstruct(plan, run_exact(plan, "ZZZZ"))


def test_cut_points_from_json_forms():
    cuts = cut_points_from_json([["gate", 3], ["wire", 1, 2, 0], {"kind": "gate", "gate": 4}])
    assert [c.kind for c in cuts] == [CutKind.GATE, CutKind.WIRE, CutKind.GATE]
    with pytest.raises(CutError):
        cut_points_from_json([["bogus"]])
    with pytest.raises(CutError):
        cut_points_from_json({"kind": "gate"})


def test_fragment_circuits_match_density_oracle():
    c = generate_random(4, 18, seed=5)
    d = to_dag(c)
    cz = next(g.id for g in c.gates if len(g.qubits) == 2)
    plan = quiet_cuts(c, [CutPoint.gate_cut(cz), CutPoint.wire(*d.edges[0])])
    for j in enumerate_variants(plan, "ZZZZ"):
        assert exact_signed_expectation(j.circuit, j.observable) == pytest.approx(
            signed_expectation(j.circuit, j.observable), abs=1e-12)


def random_cuts(circuit, rng, k):
    d = to_dag(circuit)
    two = [g.id for g in circuit.gates if len(g.qubits) == 2]
    options = [CutPoint.gate_cut(g) for g in two] + [CutPoint.wire(*e) for e in d.edges]
    picks = rng.choice(len(options), size=min(k, len(options)), replace=False)
    return [options[i] for i in sorted(picks)]


@settings(max_examples=25, deadline=None)
@given(n=st.integers(2, 6), seed=st.integers(0, 2**31), k=st.integers(1, 2))
def test_end_to_end_exact(n, seed, k):
    rng = np.random.default_rng(seed)
    c = generate_random(n, int(rng.integers(n, 4 * n)), seed)
    if not c.gates:
        return
    obs = "".join(rng.choice(list("IXYZ"), size=n))
    plan = quiet_cuts(c, random_cuts(c, rng, k))
    # fragments only share original qubits across wire cuts
    owners = {}
    for f, qmap in enumerate(plan.fragment_qubit_maps):
        for q in qmap:
            owners.setdefault(q, set()).add(f)
    wired = {cut.qubit for cut in plan.cuts if cut.kind is CutKind.WIRE}
    assert all(len(fs) == 1 for q, fs in owners.items() if q not in wired)
    assert reconstruct(plan, run_exact(plan, obs)) == pytest.approx(expectation(c, obs), abs=1e-8)


def test_shot_mode_within_bootstrap_error():
    c = generate_hea(4, 1, seed=4)
    plan = quiet_cuts(c, [CutPoint.gate_cut(ring_cz(c, 1, 2)), CutPoint.gate_cut(ring_cz(c, 3, 0))])
    exact = expectation(c, "ZZZZ")
    jobs = list(enumerate_variants(plan, "ZZZZ", 1024, 11))
    samples = {j.job_id: signed_samples(j.circuit, j.observable, j.shots, j.seed) for j in jobs}
    value = reconstruct(plan, {k: s.mean() for k, s in samples.items()})
    se = bootstrap_stderr(plan, samples, n_boot=100, seed=1)
    assert se > 0
    assert abs(value - exact) <= 5 * se


def test_coefficients_match_term_products():
    c = Circuit.from_gates(2, [gate("h", [0]), gate("cz", [0, 1]), gate("h", [0])])
    plan = apply_cuts(c, [CutPoint.gate_cut(1), CutPoint.wire(1, 2, 0)])
    from itertools import product
    expected = [math.prod(t.coefficient for t in choice) for choice in product(*plan.terms)]
    assert plan.coefficients().tolist() == expected
