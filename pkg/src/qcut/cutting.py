"""Wire and gate cuts: decompositions, fragment construction, variants and reconstruction.

A wire cut replaces the identity channel on a wire by

    rho = sum_i c_i Tr(O_i rho) rho_i

with eight (observable, preparation, coefficient) rows. The upstream side
is measured in the row's Pauli basis (it becomes a letter of the fragment
observable) and the downstream side starts from the row's eigenstate on a
fresh fragment qubit.

A CZ gate cut uses CZ = e^{i pi/4} (RZ(pi/2) x RZ(pi/2)) exp(i pi/4 Z x Z)
and the six-term quasi-probability expansion of exp(i theta A x B) at
theta = pi/4, whose cross terms are products of a signed projective
measurement of A on one side and a +-pi/2 rotation about B on the other.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from itertools import product
from typing import Iterator, Mapping, Sequence

import numpy as np

from .circuit import (
    TWO_QUBIT,
    Circuit,
    CircuitDag,
    Gate,
    GateKind,
    from_dag,
    from_document,
    pauli_string,
    to_dag,
    to_document,
)
from .simulator import derive_seed, make_rng


class CutError(ValueError):
    pass


class CutKind(str, Enum):
    WIRE = "wire"
    GATE = "gate"


@dataclass(frozen=True)
class CutPoint:
    kind: CutKind
    gate: int | None = None
    upstream: int | None = None
    downstream: int | None = None
    qubit: int | None = None

    @classmethod
    def wire(cls, upstream: int, downstream: int, qubit: int) -> CutPoint:
        return cls(CutKind.WIRE, upstream=int(upstream), downstream=int(downstream), qubit=int(qubit))

    @classmethod
    def gate_cut(cls, gate_id: int) -> CutPoint:
        return cls(CutKind.GATE, gate=int(gate_id))

    def to_dict(self) -> dict:
        if self.kind is CutKind.GATE:
            return {"kind": "gate", "gate": self.gate}
        return {"kind": "wire", "upstream": self.upstream, "downstream": self.downstream, "qubit": self.qubit}

    @classmethod
    def from_dict(cls, d) -> CutPoint:
        """Accepts ``{"kind": ...}`` objects or the short forms
        ``["gate", id]`` and ``["wire", upstream, downstream, qubit]``."""
        if isinstance(d, (list, tuple)):
            if len(d) == 2 and d[0] == "gate":
                return cls.gate_cut(d[1])
            if len(d) == 4 and d[0] == "wire":
                return cls.wire(*d[1:])
            raise CutError(f"malformed cut {d!r}")
        try:
            if d["kind"] == "gate":
                return cls.gate_cut(d["gate"])
            if d["kind"] == "wire":
                return cls.wire(d["upstream"], d["downstream"], d["qubit"])
        except (KeyError, TypeError):
            pass
        raise CutError(f"malformed cut {d!r}")


@dataclass(frozen=True)
class QpdTerm:
    """One term of a quasi-probability decomposition.

    Operations are written on qubit 0 and moved onto the real wire when a
    fragment is instantiated. ``ops_a`` acts on the upstream side of a wire
    cut or the first qubit of a cut gate, ``ops_b`` on the downstream side
    or the second qubit. ``basis`` is the Pauli measured on the upstream end
    of a wire cut. ``outcome_signed`` marks terms whose measurement outcome
    ``m`` multiplies the estimate by ``(-1)**m``.
    """

    index: int
    coefficient: float
    ops_a: tuple[Gate, ...] = ()
    ops_b: tuple[Gate, ...] = ()
    basis: str | None = None
    outcome_signed: bool = False


def _g(kind: GateKind, *params: float, state: str | None = None) -> Gate:
    return Gate(kind, (0,), params, state=state)


_WIRE_ROWS = (
    ("I", "0", +0.5),
    ("I", "1", +0.5),
    ("X", "+", +0.5),
    ("X", "-", -0.5),
    ("Y", "+i", +0.5),
    ("Y", "-i", -0.5),
    ("Z", "0", +0.5),
    ("Z", "1", -0.5),
)

WIRE_TERMS = tuple(
    QpdTerm(i + 1, c, ops_b=(_g(GateKind.PREP, state=s),), basis=b)
    for i, (b, s, c) in enumerate(_WIRE_ROWS)
)


def wire_cut_decomposition() -> list[QpdTerm]:
    return list(WIRE_TERMS)


_HALF_PI = math.pi / 2
_MZ = _g(GateKind.MEAS_Z)
_CZ_TERMS = (
    QpdTerm(1, +0.5, (_g(GateKind.RZ, _HALF_PI),), (_g(GateKind.RZ, _HALF_PI),)),
    QpdTerm(2, +0.5, (_g(GateKind.RZ, -_HALF_PI),), (_g(GateKind.RZ, -_HALF_PI),)),
    QpdTerm(3, +0.5, (_MZ,), (), outcome_signed=True),
    QpdTerm(4, -0.5, (_MZ,), (_g(GateKind.Z),), outcome_signed=True),
    QpdTerm(5, +0.5, (), (_MZ,), outcome_signed=True),
    QpdTerm(6, -0.5, (_g(GateKind.Z),), (_MZ,), outcome_signed=True),
)


def _conjugate_by_h(ops: tuple[Gate, ...]) -> tuple[Gate, ...]:
    h = _g(GateKind.H)
    return (h, *ops, h) if ops else ()


_CX_TERMS = tuple(
    QpdTerm(t.index, t.coefficient, t.ops_a, _conjugate_by_h(t.ops_b), outcome_signed=t.outcome_signed)
    for t in _CZ_TERMS
)


def gate_cut_decomposition(kind: GateKind | str) -> list[QpdTerm]:
    """Six-term decomposition of a CZ, or of a CX (control first)."""
    kind = GateKind(kind)
    if kind is GateKind.CZ:
        return list(_CZ_TERMS)
    if kind is GateKind.CX:
        return list(_CX_TERMS)
    raise CutError(f"gate cutting is not supported for {kind.value}")


# ---- cut plans -------------------------------------------------------------


@dataclass(frozen=True)
class Slot:
    """Placeholder filled by the chosen term of cut number ``cut``.

    ``role`` is ``"meas"``/``"prep"`` for the two ends of a wire cut and
    ``"a"``/``"b"`` for the two qubits of a cut gate.
    """

    cut: int
    role: str
    qubit: int


@dataclass(frozen=True)
class Fragment:
    n_qubits: int
    ops: tuple[Gate | Slot, ...]
    qubit_map: tuple[int, ...]
    # False where the fragment qubit is a wire segment ending in a cut
    final: tuple[bool, ...]

    def instantiate(self, terms: Sequence[QpdTerm], observable: str) -> tuple[Circuit, str]:
        """Concrete circuit and observable for one choice of term per cut."""
        letters = [observable[q] if fin else "I" for q, fin in zip(self.qubit_map, self.final)]
        gates = []
        for op in self.ops:
            if isinstance(op, Gate):
                gates.append(op)
                continue
            term = terms[op.cut]
            if op.role == "meas":
                letters[op.qubit] = term.basis
            elif op.role == "a":
                gates.extend(g.on(op.qubit) for g in term.ops_a)
            else:
                gates.extend(g.on(op.qubit) for g in term.ops_b)
        return Circuit.from_gates(self.n_qubits, gates), "".join(letters)

    def to_dict(self) -> dict:
        ops = []
        for op in self.ops:
            if isinstance(op, Slot):
                ops.append({"slot": op.cut, "role": op.role, "qubit": op.qubit})
            else:
                entry = [op.name, list(op.qubits)]
                if op.params:
                    entry.append(list(op.params))
                ops.append(entry)
        return {"qubits": self.n_qubits, "qubit_map": list(self.qubit_map),
                "final": list(self.final), "ops": ops}

    @classmethod
    def from_dict(cls, d: dict) -> Fragment:
        ops = []
        gate_entries = []
        for op in d["ops"]:
            if isinstance(op, dict):
                ops.append(Slot(int(op["slot"]), op["role"], int(op["qubit"])))
            else:
                ops.append(None)
                gate_entries.append(op)
        gates = iter(from_document({"qubits": d["qubits"], "gates": gate_entries}).gates)
        ops = [next(gates) if op is None else op for op in ops]
        return cls(int(d["qubits"]), tuple(ops), tuple(d["qubit_map"]), tuple(bool(x) for x in d["final"]))


@dataclass(frozen=True)
class CutPlan:
    original: Circuit
    cuts: tuple[CutPoint, ...]
    fragments: tuple[Fragment, ...]
    terms: tuple[tuple[QpdTerm, ...], ...] = field(repr=False)

    @property
    def fragment_qubit_maps(self) -> list[tuple[int, ...]]:
        return [f.qubit_map for f in self.fragments]

    @property
    def fragment_widths(self) -> list[int]:
        return [f.n_qubits for f in self.fragments]

    @property
    def n_assignments(self) -> int:
        return math.prod(len(t) for t in self.terms)

    @property
    def n_jobs(self) -> int:
        return self.n_assignments * len(self.fragments)

    def coefficients(self) -> np.ndarray:
        """Product of term coefficients for every assignment, in enumeration order."""
        out = np.ones(1)
        for terms in self.terms:
            out = np.multiply.outer(out, [t.coefficient for t in terms]).reshape(-1)
        return out

    def to_dict(self) -> dict:
        return {
            "original": to_document(self.original),
            "cuts": [c.to_dict() for c in self.cuts],
            "fragments": [f.to_dict() for f in self.fragments],
            "fragment_qubit_maps": [list(m) for m in self.fragment_qubit_maps],
        }

    @classmethod
    def from_dict(cls, d: dict) -> CutPlan:
        original = from_document(d["original"])
        cuts = tuple(CutPoint.from_dict(c) for c in d["cuts"])
        fragments = tuple(Fragment.from_dict(f) for f in d["fragments"])
        return cls(original, cuts, fragments, _terms_for(original, cuts))


def _terms_for(circuit: Circuit, cuts: Sequence[CutPoint]) -> tuple[tuple[QpdTerm, ...], ...]:
    out = []
    for c in cuts:
        if c.kind is CutKind.WIRE:
            out.append(WIRE_TERMS)
        else:
            out.append(tuple(gate_cut_decomposition(circuit.gate_by_id(c.gate).kind)))
    return tuple(out)


def _validate(dag: CircuitDag, cuts: Sequence[CutPoint]) -> None:
    edges = set(dag.edges)
    if len(set(cuts)) != len(cuts):
        raise CutError("duplicate cut")
    for c in cuts:
        if c.kind is CutKind.GATE:
            if c.gate not in dag.nodes:
                raise CutError(f"dangling gate id {c.gate}")
            if dag.nodes[c.gate].kind not in TWO_QUBIT:
                raise CutError(f"gate {c.gate} is not a two-qubit gate")
        else:
            for gid in (c.upstream, c.downstream):
                if gid not in dag.nodes:
                    raise CutError(f"dangling gate id {gid}")
            if (c.upstream, c.downstream, c.qubit) not in edges:
                raise CutError(
                    f"wire cut endpoints {c.upstream}->{c.downstream} are not adjacent on qubit {c.qubit}")


class _UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra


@dataclass
class _Layout:
    segment_of: dict[tuple[int, int], tuple[int, int]]  # (gate id, qubit) -> (qubit, segment)
    n_segments: list[int]
    components: list[list[tuple[int, int]]]


def fragment_layout(dag: CircuitDag, cuts: Sequence[CutPoint]) -> _Layout:
    """Split wires into segments and group them into connected fragments."""
    wire_cuts = {(c.upstream, c.qubit) for c in cuts if c.kind is CutKind.WIRE}
    gate_cuts = {c.gate for c in cuts if c.kind is CutKind.GATE}
    segment_of = {}
    n_segments = []
    for q in range(dag.n_qubits):
        s = 0
        for gid in dag.wire(q):
            segment_of[(gid, q)] = (q, s)
            if (gid, q) in wire_cuts:
                s += 1
        n_segments.append(s + 1)
    segments = [(q, s) for q in range(dag.n_qubits) for s in range(n_segments[q])]
    uf = _UnionFind(segments)
    for gid, g in dag.nodes.items():
        if len(g.qubits) == 2 and gid not in gate_cuts:
            uf.union(segment_of[(gid, g.qubits[0])], segment_of[(gid, g.qubits[1])])
    groups: dict = {}
    for seg in segments:
        groups.setdefault(uf.find(seg), []).append(seg)
    components = sorted((sorted(v) for v in groups.values()), key=lambda v: v[0])
    return _Layout(segment_of, n_segments, components)


def apply_cuts(dag: CircuitDag | Circuit, cuts: Sequence[CutPoint]) -> CutPlan:
    """Cut a circuit into fragments with placeholder slots at the cuts."""
    if isinstance(dag, Circuit):
        dag = to_dag(dag)
    cuts = tuple(cuts)
    _validate(dag, cuts)
    original = from_dag(dag)
    terms = _terms_for(original, cuts)
    if not cuts:
        frag = Fragment(original.n_qubits, original.gates, tuple(range(original.n_qubits)),
                        (True,) * original.n_qubits)
        return CutPlan(original, cuts, (frag,), terms)

    layout = fragment_layout(dag, cuts)
    home = {}  # segment -> (fragment index, fragment qubit)
    for f, comp in enumerate(layout.components):
        for fq, seg in enumerate(comp):
            home[seg] = (f, fq)
    ops: list[list] = [[] for _ in layout.components]
    tail: list[list] = [[] for _ in layout.components]
    gate_cut_index = {c.gate: i for i, c in enumerate(cuts) if c.kind is CutKind.GATE}

    for i, c in enumerate(cuts):
        if c.kind is CutKind.WIRE:
            f, fq = home[layout.segment_of[(c.upstream, c.qubit)]]
            tail[f].append(Slot(i, "meas", fq))
            f, fq = home[layout.segment_of[(c.downstream, c.qubit)]]
            ops[f].append(Slot(i, "prep", fq))

    for g in original.gates:
        mapped = [home[layout.segment_of[(g.id, q)]] for q in g.qubits]
        if g.id in gate_cut_index:
            for role, (f, fq) in zip("ab", mapped):
                ops[f].append(Slot(gate_cut_index[g.id], role, fq))
        else:
            f = mapped[0][0]
            ops[f].append(g.on(*(fq for _, fq in mapped)))

    fragments = []
    for f, comp in enumerate(layout.components):
        fragments.append(Fragment(
            n_qubits=len(comp),
            ops=tuple(ops[f] + tail[f]),
            qubit_map=tuple(q for q, _ in comp),
            final=tuple(s == layout.n_segments[q] - 1 for q, s in comp),
        ))
    if len(fragments) == 1:
        warnings.warn("cut set does not disconnect the circuit; plan has a single fragment", stacklevel=2)
    return CutPlan(original, cuts, tuple(fragments), terms)


# ---- variants --------------------------------------------------------------


@dataclass(frozen=True)
class VariantJob:
    job_id: str
    circuit: Circuit
    observable: str
    shots: int
    seed: int
    assignment: int = 0
    fragment: int = 0

    @property
    def width(self) -> int:
        return self.circuit.n_qubits

    @property
    def needs_midmeas(self) -> bool:
        return self.circuit.has_measurements


@dataclass(frozen=True)
class VariantResult:
    job_id: str
    value: float
    backend: str = "local"
    wall_ms: float = 0.0


def job_id(assignment: int, fragment: int) -> str:
    return f"a{assignment}f{fragment}"


def enumerate_variants(plan: CutPlan, observable: str, shots: int = 0, seed: int = 0) -> Iterator[VariantJob]:
    """Yield one job per (assignment, fragment), assignments in lexicographic order."""
    observable = pauli_string(observable, plan.original.n_qubits)
    for a, choice in enumerate(product(*plan.terms)):
        for f, frag in enumerate(plan.fragments):
            circuit, obs = frag.instantiate(choice, observable)
            jid = job_id(a, f)
            yield VariantJob(jid, circuit, obs, shots, derive_seed(seed, jid), a, f)


class ReconstructionError(RuntimeError):
    pass


def _value(r) -> float:
    return float(r.value if isinstance(r, VariantResult) else r)


def reconstruct(plan: CutPlan, results: Mapping[str, VariantResult | float]) -> float:
    """Signed sum over assignments of coefficient times the fragment product."""
    coeffs = plan.coefficients()
    n_frag = len(plan.fragments)
    terms = []
    for a, c in enumerate(coeffs):
        prod = c
        for f in range(n_frag):
            jid = job_id(a, f)
            if jid not in results:
                raise ReconstructionError(f"missing result for job {jid}")
            v = _value(results[jid])
            if math.isnan(v):
                raise ReconstructionError(f"NaN estimate for job {jid}")
            prod *= v
        terms.append(prod)
    return math.fsum(terms)


def bootstrap_stderr(plan: CutPlan, samples: Mapping[str, np.ndarray], n_boot: int = 200, seed: int = 0) -> float:
    """Bootstrap standard error of the reconstruction from per-shot samples."""
    rng = make_rng(seed)
    coeffs = plan.coefficients()
    n_frag = len(plan.fragments)
    ids = [[job_id(a, f) for f in range(n_frag)] for a in range(len(coeffs))]
    boots = np.empty(n_boot)
    for b in range(n_boot):
        means = {}
        for row in ids:
            for jid in row:
                s = samples[jid]
                means[jid] = s[rng.integers(0, len(s), size=len(s))].mean()
        boots[b] = sum(c * math.prod(means[j] for j in row) for c, row in zip(coeffs, ids))
    return float(boots.std(ddof=1))


def cut_points_from_json(data) -> list[CutPoint]:
    if not isinstance(data, list):
        raise CutError("cut list must be a JSON array")
    return [CutPoint.from_dict(d) for d in data]

