"""Automatic search for cut locations under user constraints."""

from __future__ import annotations

import csv
import io
import math
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import networkx as nx

from .circuit import TWO_QUBIT, Circuit, CircuitDag, to_dag
from .cutting import CutKind, CutPlan, CutPoint, apply_cuts, fragment_layout
from .partition import METHODS, Partition, PartitionError, finish_partition, partition_all


class InfeasibleError(ValueError):
    """No candidate satisfies the hard constraints."""

    def __init__(self, message: str, binding: list[str]):
        super().__init__(message)
        self.binding = binding


@dataclass(frozen=True)
class Constraints:
    max_qubits: int | None = None
    max_components: int | None = None
    max_cuts: int | None = None
    wire_cut: bool = True
    gate_cut: bool = True
    alpha: float = 1.0
    beta: float = 0.1
    gamma: float = 0.5

    def __post_init__(self):
        if not (self.wire_cut or self.gate_cut):
            raise ValueError("at least one of wire_cut / gate_cut must be enabled")
        if min(self.alpha, self.beta, self.gamma) < 0:
            raise ValueError("loss weights must be non-negative")

    @property
    def weights(self) -> tuple[float, float, float]:
        return self.alpha, self.beta, self.gamma

    @classmethod
    def parse(cls, text: str) -> Constraints:
        """Parse ``"max_qubits=4,gate_cut=true,alpha=2"``."""
        kwargs: dict = {}
        for item in filter(None, (s.strip() for s in text.split(","))):
            key, sep, value = item.partition("=")
            key = key.strip()
            if not sep:
                raise ValueError(f"expected key=value, got {item!r}")
            if key in ("max_qubits", "max_components", "max_cuts"):
                kwargs[key] = int(value)
            elif key in ("wire_cut", "gate_cut"):
                if value.lower() not in ("true", "false", "1", "0"):
                    raise ValueError(f"{key} must be true or false")
                kwargs[key] = value.lower() in ("true", "1")
            elif key in ("alpha", "beta", "gamma"):
                kwargs[key] = float(value)
            else:
                raise ValueError(f"unknown constraint {key!r}")
        return cls(**kwargs)


@dataclass(frozen=True)
class CutGraph:
    """Graph view of a circuit for partitioning.

    GATE mode: one node per qubit, one edge per interacting qubit pair with
    the number of two-qubit gates as weight (edge attribute ``cuts`` lists
    the gate cuts). WIRE mode: one node per two-qubit gate, edges between
    gates that follow each other on a wire once single-qubit gates are
    dropped (``cuts`` lists the wire cuts).
    """

    mode: CutKind
    graph: nx.Graph
    dag: CircuitDag

    def cut_points(self, part: Partition) -> list[CutPoint]:
        cuts = []
        for u, v in part.cut_edges:
            cuts.extend(self.graph.edges[u, v]["cuts"])
        return sorted(cuts, key=_cut_sort_key)


def _cut_sort_key(c: CutPoint):
    return (c.kind.value, c.gate or 0, c.upstream or 0, c.qubit or 0)


def build_cut_graph(dag: CircuitDag | Circuit, mode: CutKind | str) -> CutGraph:
    if isinstance(dag, Circuit):
        dag = to_dag(dag)
    mode = mode if isinstance(mode, CutKind) else CutKind(str(mode).lower())
    g = nx.Graph()
    if mode is CutKind.GATE:
        g.add_nodes_from(range(dag.n_qubits))
        for gid in sorted(dag.nodes):
            gt = dag.nodes[gid]
            if gt.kind in TWO_QUBIT:
                a, b = gt.qubits
                if g.has_edge(a, b):
                    g.edges[a, b]["weight"] += 1
                    g.edges[a, b]["cuts"].append(CutPoint.gate_cut(gid))
                else:
                    g.add_edge(a, b, weight=1, cuts=[CutPoint.gate_cut(gid)])
    else:
        two_qubit = sorted(gid for gid, gt in dag.nodes.items() if gt.kind in TWO_QUBIT)
        if not two_qubit:
            raise ValueError("wire-mode cut graph needs at least one two-qubit gate")
        g.add_nodes_from(two_qubit)
        for q in range(dag.n_qubits):
            wire = dag.wire(q)
            nxt = dict(zip(wire, wire[1:]))
            chain = [gid for gid in wire if dag.nodes[gid].kind in TWO_QUBIT]
            for a, b in zip(chain, chain[1:]):
                cut = CutPoint.wire(a, nxt[a], q)
                if g.has_edge(a, b):
                    g.edges[a, b]["weight"] += 1
                    g.edges[a, b]["cuts"].append(cut)
                else:
                    g.add_edge(a, b, weight=1, cuts=[cut])
    return CutGraph(mode, g, dag)


def loss(n_cuts: float, n_components: float, max_fragment_qubits: float,
         weights: tuple[float, float, float] = (1.0, 0.1, 0.5)) -> float:
    """Lower is better: cuts and fragment width are penalised, components rewarded."""
    alpha, beta, gamma = weights
    return alpha * n_cuts - beta * n_components + gamma * max_fragment_qubits


@dataclass
class Candidate:
    mode: CutKind
    method: str
    components: int
    cuts: list[CutPoint] = field(default_factory=list)
    n_fragments: int = 0
    max_fragment_qubits: int = 0
    loss: float = math.inf
    feasible: bool = False
    reason: str = ""

    @property
    def n_cuts(self) -> int:
        return len(self.cuts)

    def sort_key(self, scale: float):
        return (round(self.loss / scale, 9), self.n_cuts, self.max_fragment_qubits,
                METHODS.index(self.method), self.mode is CutKind.WIRE, self.components)


@dataclass
class SearchResult:
    plan: CutPlan
    best: Candidate
    candidates: list[Candidate]
    wall_time: float

    def report_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["mode", "method", "components", "cuts", "fragments",
                         "max_fragment_qubits", "loss", "feasible", "selected", "reason"])
        for c in self.candidates:
            writer.writerow([c.mode.value, c.method, c.components, c.n_cuts, c.n_fragments,
                             c.max_fragment_qubits, f"{c.loss:.6g}", int(c.feasible),
                             int(c is self.best), c.reason])
        return buf.getvalue()


def _violations(c: Candidate, cons: Constraints) -> list[str]:
    out = []
    if cons.max_qubits is not None and c.max_fragment_qubits > cons.max_qubits:
        out.append("max_qubits")
    if cons.max_components is not None and c.n_fragments > cons.max_components:
        out.append("max_components")
    if cons.max_cuts is not None and c.n_cuts > cons.max_cuts:
        out.append("max_cuts")
    return out


def _component_range(n_nodes: int, cons: Constraints, n_qubits: int) -> list[int]:
    if cons.max_components is not None:
        top = cons.max_components
    else:
        top = 4
        if cons.max_qubits:
            top = max(top, math.ceil(n_qubits / cons.max_qubits))
    return list(range(2, min(top, n_nodes) + 1))


REFINE_MAX_NODES = 400
FM_MAX_NODES = 48


def _gate_stats(edges: list[tuple[int, int, int]], n: int, label: list[int]) -> tuple[int, int, int]:
    """Cut weight, fragment count and widest fragment of a qubit labelling."""
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    cut = 0
    for u, v, w in edges:
        if label[u] != label[v]:
            cut += w
        else:
            parent[find(u)] = find(v)
    sizes: dict[int, int] = {}
    for x in range(n):
        r = find(x)
        sizes[r] = sizes.get(r, 0) + 1
    return cut, len(sizes), max(sizes.values())


def refine_gate_partition(graph: nx.Graph, part: Partition, cons: Constraints, max_labels: int) -> Partition:
    """Greedy single-qubit moves that lower (constraint excess, loss).

    Partitioners balance part sizes; the loss does not, so a lopsided split
    with fewer cuts is often better. Moves may open a new label up to
    ``max_labels``.
    """
    nodes = sorted(graph.nodes)
    if len(nodes) > REFINE_MAX_NODES:
        return part
    index = {u: i for i, u in enumerate(nodes)}
    edges = [(index[u], index[v], w) for u, v, w in graph.edges(data="weight", default=1)]
    label = [part.assignment[u] for u in nodes]

    def score(lab):
        cut, comps, width = _gate_stats(edges, len(nodes), lab)
        excess = 0
        if cons.max_qubits is not None:
            excess += max(0, width - cons.max_qubits)
        if cons.max_cuts is not None:
            excess += max(0, cut - cons.max_cuts)
        if cons.max_components is not None:
            excess += max(0, comps - cons.max_components)
        return excess, round(loss(cut, comps, width, cons.weights), 9)

    def moves(lab, locked):
        used = sorted(set(lab))
        for i in range(len(nodes)):
            own = lab[i]
            if i in locked or (lab.count(own) == 1 and len(used) == 2):
                continue  # keep at least two labels
            for p in used + ([used[-1] + 1] if len(used) < max_labels else []):
                if p != own and not (lab.count(own) == 1 and p > used[-1]):
                    yield i, p

    best = score(label)
    while True:
        # one pass: move every node once, uphill allowed, keep the best prefix
        lab, locked = list(label), set()
        pass_best, pass_label = best, None
        limit = len(nodes) if len(nodes) <= FM_MAX_NODES else 1
        for _ in range(limit):
            step = None
            for i, p in moves(lab, locked):
                own, lab[i] = lab[i], p
                s = score(lab)
                lab[i] = own
                if step is None or s < step[0]:
                    step = (s, i, p)
            if step is None:
                break
            s, i, p = step
            lab[i] = p
            locked.add(i)
            if s < pass_best:
                pass_best, pass_label = s, list(lab)
        if pass_label is None:
            break
        best, label = pass_best, pass_label
    groups: dict[int, list] = {}
    for u, p in zip(nodes, label):
        groups.setdefault(p, []).append(u)
    if len(groups) < 2:
        return part
    return finish_partition(graph, list(groups.values()), part.method)


def _evaluate(cg: CutGraph, method: str, ks: list[int], cons: Constraints, seed: int) -> list[Candidate]:
    try:
        parts = partition_all(cg.graph, method, ks, seed)
    except PartitionError as exc:
        return [Candidate(cg.mode, method, k, reason=str(exc)) for k in ks]
    out = []
    for k in ks:
        if cg.mode is CutKind.GATE:
            parts[k] = refine_gate_partition(cg.graph, parts[k], cons, max(ks))
        cuts = cg.cut_points(parts[k])
        if cuts:
            layout = fragment_layout(cg.dag, cuts)
            cand = Candidate(cg.mode, method, k, cuts, len(layout.components),
                             max(len(c) for c in layout.components))
        else:
            # an empty cut list runs the circuit whole
            cand = Candidate(cg.mode, method, k, cuts, 1, cg.dag.n_qubits)
        cand.loss = loss(cand.n_cuts, cand.n_fragments, cand.max_fragment_qubits, cons.weights)
        bad = _violations(cand, cons)
        cand.feasible = not bad
        cand.reason = ",".join(bad)
        out.append(cand)
    return out


def search(circuit: Circuit, constraints: Constraints = Constraints(), seed: int = 0) -> SearchResult:
    """Run every method for every component count and cut mode; keep the lowest loss."""
    start = time.perf_counter()
    dag = to_dag(circuit)
    graphs = []
    if constraints.gate_cut:
        graphs.append(build_cut_graph(dag, CutKind.GATE))
    if constraints.wire_cut and any(g.kind in TWO_QUBIT for g in circuit.gates):
        graphs.append(build_cut_graph(dag, CutKind.WIRE))
    tasks = []
    for cg in graphs:
        ks = _component_range(cg.graph.number_of_nodes(), constraints, circuit.n_qubits)
        if ks:
            tasks.extend((cg, m, ks) for m in METHODS)
    with ThreadPoolExecutor(max_workers=max(1, len(tasks))) as pool:
        batches = list(pool.map(lambda t: _evaluate(t[0], t[1], t[2], constraints, seed), tasks))
    candidates = [c for batch in batches for c in batch]
    feasible = [c for c in candidates if c.feasible]
    if not feasible:
        counts: dict[str, int] = {}
        for c in candidates:
            for r in filter(None, c.reason.split(",")):
                counts[r] = counts.get(r, 0) + 1
        binding = sorted(counts, key=lambda r: -counts[r])
        detail = ", ".join(f"{r}={getattr(constraints, r, '?')} rejects {counts[r]}/{len(candidates)}"
                           for r in binding) or "no candidate partitions"
        raise InfeasibleError(f"no feasible cut: {detail}", binding)
    scale = sum(constraints.weights) or 1.0
    best = min(feasible, key=lambda c: c.sort_key(scale))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        plan = apply_cuts(dag, best.cuts)
    return SearchResult(plan, best, candidates, time.perf_counter() - start)


def find_cut(circuit: Circuit, constraints: Constraints = Constraints(), seed: int = 0) -> CutPlan:
    return search(circuit, constraints, seed).plan
