"""Circuit intermediate representation, JSON documents and DAG conversion."""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence


class CircuitError(ValueError):
    """Raised for malformed circuits or circuit documents."""


class GateKind(str, Enum):
    H = "h"
    X = "x"
    Y = "y"
    Z = "z"
    S = "s"
    SDG = "sdg"
    RX = "rx"
    RY = "ry"
    RZ = "rz"
    CZ = "cz"
    CX = "cx"
    MEAS_Z = "mz"
    MEAS_X = "mx"
    MEAS_Y = "my"
    PREP = "prep"


TWO_QUBIT = frozenset({GateKind.CZ, GateKind.CX})
ROTATIONS = frozenset({GateKind.RX, GateKind.RY, GateKind.RZ})
MEASUREMENTS = frozenset({GateKind.MEAS_Z, GateKind.MEAS_X, GateKind.MEAS_Y})

# the six Pauli eigenstates a wire may be prepared in
PREP_STATES = ("0", "1", "+", "-", "+i", "-i")

PAULI_LETTERS = frozenset("IXYZ")


@dataclass(frozen=True)
class Gate:
    """A single operation of a circuit.

    ``state`` is only used by ``PREP`` gates and holds one of
    :data:`PREP_STATES`.
    """

    kind: GateKind
    qubits: tuple[int, ...]
    params: tuple[float, ...] = ()
    id: int = 0
    state: str | None = None

    def __post_init__(self):
        kind = GateKind(self.kind)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        arity = 2 if kind in TWO_QUBIT else 1
        if len(self.qubits) != arity:
            raise CircuitError(f"{kind.value} acts on {arity} qubit(s), got {len(self.qubits)}")
        if arity == 2 and self.qubits[0] == self.qubits[1]:
            raise CircuitError(f"{kind.value} needs two distinct qubits")
        if any(q < 0 for q in self.qubits):
            raise CircuitError("qubit index out of range")
        n_params = 1 if kind in ROTATIONS else 0
        if len(self.params) != n_params:
            raise CircuitError(f"wrong parameter arity for {kind.value}: expected {n_params}")
        if kind is GateKind.PREP:
            if self.state not in PREP_STATES:
                raise CircuitError(f"unknown preparation state {self.state!r}")
        elif self.state is not None:
            raise CircuitError("only prep gates carry a state label")

    @property
    def name(self) -> str:
        """Lowercase document name, e.g. ``"cz"`` or ``"prep+i"``."""
        if self.kind is GateKind.PREP:
            return "prep" + self.state
        return self.kind.value

    def with_id(self, gid: int) -> Gate:
        return Gate(self.kind, self.qubits, self.params, gid, self.state)

    def on(self, *qubits: int) -> Gate:
        """Copy of this gate acting on other qubits."""
        return Gate(self.kind, qubits, self.params, self.id, self.state)


def gate(name: str, qubits: Sequence[int], params: Sequence[float] = (), gid: int = 0) -> Gate:
    """Build a gate from its document name."""
    name = str(name).lower()
    if name.startswith("prep"):
        return Gate(GateKind.PREP, qubits, params, gid, state=name[4:])
    try:
        kind = GateKind(name)
    except ValueError:
        raise CircuitError(f"unknown gate kind {name!r}") from None
    if kind is GateKind.PREP:
        raise CircuitError("prep gate needs a state label")
    return Gate(kind, qubits, params, gid)


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: tuple[Gate, ...] = ()
    name: str | None = None

    def __post_init__(self):
        if int(self.n_qubits) < 1:
            raise CircuitError("a circuit needs at least one qubit")
        object.__setattr__(self, "n_qubits", int(self.n_qubits))
        object.__setattr__(self, "gates", tuple(self.gates))
        seen = set()
        for g in self.gates:
            if any(q >= self.n_qubits for q in g.qubits):
                raise CircuitError("qubit index out of range")
            if g.id in seen:
                raise CircuitError(f"duplicate gate id {g.id}")
            seen.add(g.id)

    @classmethod
    def from_gates(cls, n_qubits: int, gates: Iterable[Gate], name: str | None = None) -> Circuit:
        """Build a circuit, assigning dense sequential gate ids."""
        return cls(n_qubits, tuple(g.with_id(i) for i, g in enumerate(gates)), name)

    def __len__(self):
        return len(self.gates)

    def gate_by_id(self, gid: int) -> Gate:
        for g in self.gates:
            if g.id == gid:
                return g
        raise KeyError(gid)

    def depth(self) -> int:
        """Number of layers in the as-soon-as-possible schedule."""
        level = [0] * self.n_qubits
        for g in self.gates:
            d = max(level[q] for q in g.qubits) + 1
            for q in g.qubits:
                level[q] = d
        return max(level, default=0)

    def restricted_to(self, qubit: int) -> list[Gate]:
        return [g for g in self.gates if qubit in g.qubits]

    @property
    def has_measurements(self) -> bool:
        return any(g.kind in MEASUREMENTS for g in self.gates)

    def count(self, kind: GateKind) -> int:
        return sum(g.kind is kind for g in self.gates)


def pauli_string(ops: str, n_qubits: int | None = None) -> str:
    """Validate a Pauli string; letter ``i`` acts on qubit ``i``."""
    ops = str(ops).upper()
    if not ops or set(ops) - PAULI_LETTERS:
        raise CircuitError(f"invalid Pauli string {ops!r}")
    if n_qubits is not None and len(ops) != n_qubits:
        raise CircuitError(f"observable length {len(ops)} does not match {n_qubits} qubits")
    return ops


# ---- documents -------------------------------------------------------------


def to_document(circuit: Circuit) -> dict:
    doc: dict = {"qubits": circuit.n_qubits}
    if circuit.name is not None:
        doc["name"] = circuit.name
    gates = []
    for g in circuit.gates:
        entry = [g.name, list(g.qubits)]
        if g.params:
            entry.append(list(g.params))
        gates.append(entry)
    doc["gates"] = gates
    return doc


def from_document(doc: dict) -> Circuit:
    if not isinstance(doc, dict) or "qubits" not in doc or "gates" not in doc:
        raise CircuitError("malformed document: expected keys 'qubits' and 'gates'")
    n = doc["qubits"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise CircuitError("malformed document: 'qubits' must be a positive integer")
    name = doc.get("name")
    gates = []
    for i, entry in enumerate(doc["gates"]):
        if not isinstance(entry, (list, tuple)) or len(entry) not in (2, 3):
            raise CircuitError(f"malformed document: gate entry {i}")
        kind, qubits = entry[0], entry[1]
        params = entry[2] if len(entry) == 3 else ()
        if not isinstance(kind, str) or not isinstance(qubits, list) or not isinstance(params, (list, tuple)):
            raise CircuitError(f"malformed document: gate entry {i}")
        if any(not isinstance(q, int) or isinstance(q, bool) for q in qubits):
            raise CircuitError(f"malformed document: qubit indices of entry {i}")
        if any(q >= n or q < 0 for q in qubits):
            raise CircuitError("qubit index out of range")
        gates.append(gate(kind, qubits, params, gid=i))
    return Circuit(n, tuple(gates), name)


def parse_circuit(text: str) -> Circuit:
    """Parse a JSON circuit document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CircuitError(f"malformed document: {exc}") from None
    return from_document(doc)


def serialize_circuit(circuit: Circuit) -> str:
    return json.dumps(to_document(circuit))


# ---- DAG -------------------------------------------------------------------


@dataclass(frozen=True)
class CircuitDag:
    """Gate-dependency graph.

    An edge ``(u, v, q)`` says that gate ``v`` is the next gate touching
    qubit ``q`` after gate ``u``.
    """

    n_qubits: int
    nodes: dict[int, Gate]
    edges: tuple[tuple[int, int, int], ...]
    name: str | None = None
    order: tuple[int, ...] = field(default=(), compare=False)

    def wire(self, qubit: int) -> list[int]:
        """Gate ids on ``qubit`` in execution order."""
        succ = {u: v for u, v, q in self.edges if q == qubit}
        pred = {v for u, v, q in self.edges if q == qubit}
        touching = [gid for gid, g in self.nodes.items() if qubit in g.qubits]
        heads = [gid for gid in touching if gid not in pred]
        if not heads:
            return []
        path = [heads[0]]
        while path[-1] in succ:
            path.append(succ[path[-1]])
        return path

    def successors(self, gid: int) -> list[tuple[int, int]]:
        return [(v, q) for u, v, q in self.edges if u == gid]

    def to_networkx(self):
        import networkx as nx

        g = nx.MultiDiGraph()
        for gid, gt in self.nodes.items():
            g.add_node(gid, gate=gt)
        for u, v, q in self.edges:
            g.add_edge(u, v, qubit=q)
        return g


def to_dag(circuit: Circuit) -> CircuitDag:
    last: dict[int, int] = {}
    edges = []
    for g in circuit.gates:
        for q in g.qubits:
            if q in last:
                edges.append((last[q], g.id, q))
            last[q] = g.id
    nodes = {g.id: g for g in circuit.gates}
    return CircuitDag(circuit.n_qubits, nodes, tuple(edges), circuit.name, tuple(nodes))


def from_dag(dag: CircuitDag) -> Circuit:
    """Linearize a DAG; ready gates are emitted smallest id first."""
    indeg = {gid: 0 for gid in dag.nodes}
    succ: dict[int, list[int]] = {gid: [] for gid in dag.nodes}
    for u, v, _ in dag.edges:
        if u not in dag.nodes or v not in dag.nodes:
            raise CircuitError(f"edge ({u}, {v}) references a missing node")
        indeg[v] += 1
        succ[u].append(v)
    ready = [gid for gid, d in indeg.items() if d == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        gid = heapq.heappop(ready)
        order.append(gid)
        for v in succ[gid]:
            indeg[v] -= 1
            if indeg[v] == 0:
                heapq.heappush(ready, v)
    if len(order) != len(dag.nodes):
        raise CircuitError("cycle detected in circuit DAG")
    return Circuit(dag.n_qubits, tuple(dag.nodes[gid] for gid in order), dag.name)
