"""Graph partitioning heuristics used by the cut search.

All methods take an undirected ``networkx.Graph`` whose edges carry an
integer ``weight`` and return a :class:`Partition` with exactly the
requested number of non-empty parts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import networkx as nx
import numpy as np

METHODS = ("KL", "GN", "SPECTRAL", "MULTILEVEL")

GN_MAX_NODES = 200
SPECTRAL_TOL = 1e-8
SPECTRAL_MAX_ITER = 10_000


class PartitionError(ValueError):
    pass


@dataclass(frozen=True)
class Partition:
    assignment: dict
    method: str
    cut_edges: tuple

    @property
    def n_parts(self) -> int:
        return len(set(self.assignment.values()))

    def parts(self) -> list[list]:
        out: dict = {}
        for node, p in self.assignment.items():
            out.setdefault(p, []).append(node)
        return [sorted(out[p]) for p in sorted(out)]


def finish_partition(graph: nx.Graph, groups: list, method: str) -> Partition:
    order = {node: i for i, node in enumerate(sorted(graph.nodes))}
    groups = sorted((sorted(g, key=order.get) for g in groups if g), key=lambda g: order[g[0]])
    assignment = {node: p for p, g in enumerate(groups) for node in g}
    cut = tuple(sorted((u, v) if order[u] < order[v] else (v, u)
                       for u, v in graph.edges if assignment[u] != assignment[v]))
    return Partition(assignment, method, cut)


def cut_weight(graph: nx.Graph, partition: Partition) -> int:
    return sum(graph.edges[u, v].get("weight", 1) for u, v in partition.cut_edges)


# ---- Kernighan-Lin -----------------------------------------------------------


def _kl_bisect(sub: nx.Graph, seed: int) -> list[list]:
    a, b = nx.community.kernighan_lin_bisection(sub, weight="weight", seed=seed)
    return [sorted(a), sorted(b)]


# ---- spectral ----------------------------------------------------------------


def fiedler_vector(sub: nx.Graph, seed: int = 0) -> np.ndarray:
    """Eigenvector of the second-smallest Laplacian eigenvalue.

    Power iteration on ``c*I - L`` with the constant vector projected out;
    ``c`` bounds the largest Laplacian eigenvalue so the iteration matrix is
    positive semidefinite.
    """
    nodes = sorted(sub.nodes)
    lap = nx.laplacian_matrix(sub, nodelist=nodes, weight="weight").astype(float)
    lap = lap.toarray() if len(nodes) <= 512 else lap.tocsr()
    shift = 2.0 * max((d for _, d in sub.degree(weight="weight")), default=1.0) + 1.0
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(len(nodes))
    v -= v.mean()
    v /= np.linalg.norm(v)
    for _ in range(SPECTRAL_MAX_ITER):
        w = shift * v - lap @ v
        w -= w.mean()
        norm = np.linalg.norm(w)
        if norm == 0:
            break
        w /= norm
        done = np.linalg.norm(w - v) < SPECTRAL_TOL
        v = w
        if done:
            break
    return v


def _spectral_bisect(sub: nx.Graph, seed: int) -> list[list]:
    nodes = sorted(sub.nodes)
    v = fiedler_vector(sub, seed)
    pos = [n for n, x in zip(nodes, v) if x > 0]
    neg = [n for n, x in zip(nodes, v) if x <= 0]
    if not pos or not neg:
        order = np.argsort(v, kind="stable")
        half = len(nodes) // 2
        neg = [nodes[i] for i in order[:half]]
        pos = [nodes[i] for i in order[half:]]
    return [neg, pos]


def _recursive_bisection(graph: nx.Graph, k: int, bisect, seed: int) -> list[list]:
    parts = [sorted(graph.nodes)]
    step = 0
    while len(parts) < k:
        splittable = [p for p in parts if len(p) > 1]
        if not splittable:
            break
        target = max(splittable, key=len)
        parts.remove(target)
        parts.extend(bisect(graph.subgraph(target), seed + step))
        step += 1
    return parts


# ---- Girvan-Newman -------------------------------------------------------------


def girvan_newman_levels(graph: nx.Graph, k_max: int) -> dict[int, list[list]]:
    """Components after removing highest-betweenness edges, for each count up to ``k_max``.

    Betweenness is recomputed after every removal. Among equal scores the
    lighter edge (fewer parallel gates) goes first.
    """
    if graph.number_of_nodes() > GN_MAX_NODES:
        raise PartitionError(f"Girvan-Newman is capped at {GN_MAX_NODES} nodes")
    g = nx.Graph(graph)
    levels = {}
    comps = nx.number_connected_components(g)
    while comps < k_max and g.number_of_edges():
        score = nx.edge_betweenness_centrality(g, normalized=False)
        edge = max(sorted(score), key=lambda e: score[e] / g.edges[e].get("weight", 1))
        g.remove_edge(*edge)
        new = nx.number_connected_components(g)
        if new > comps:
            comps = new
            levels[comps] = [sorted(c) for c in nx.connected_components(g)]
    return levels


# ---- multilevel ------------------------------------------------------------------


def _coarsen(adj: list[dict], vw: list[int], rng) -> tuple[list[dict], list[int], list[int]]:
    n = len(adj)
    match = [-1] * n
    for u in rng.permutation(n):
        if match[u] != -1:
            continue
        best, best_w = u, 0
        for v, w in sorted(adj[u].items()):
            if match[v] == -1 and v != u and w > best_w:
                best, best_w = v, w
        match[u] = best
        match[best] = u
    coarse = [-1] * n
    c = 0
    for u in range(n):
        if coarse[u] == -1:
            coarse[u] = coarse[match[u]] = c
            c += 1
    cadj: list[dict] = [dict() for _ in range(c)]
    cvw = [0] * c
    for u in range(n):
        cvw[coarse[u]] += vw[u]
        for v, w in adj[u].items():
            a, b = coarse[u], coarse[v]
            if a != b:
                cadj[a][b] = cadj[a].get(b, 0) + w
    return cadj, cvw, coarse


def _grow(adj: list[dict], vw: list[int], k: int, rng) -> list[int]:
    n = len(adj)
    target = sum(vw) / k
    part = [-1] * n
    for p in range(k - 1):
        free = [u for u in range(n) if part[u] == -1]
        if len(free) <= k - 1 - p:
            break
        start = free[int(rng.integers(len(free)))]
        part[start] = p
        weight = vw[start]
        while weight < target:
            conn: dict = {}
            for u in range(n):
                if part[u] == p:
                    for v, w in adj[u].items():
                        if part[v] == -1:
                            conn[v] = conn.get(v, 0) + w
            if not conn:
                free = [u for u in range(n) if part[u] == -1]
                if len(free) <= k - 1 - p:
                    break
                conn = {free[0]: 0}
            v = max(sorted(conn), key=conn.get)
            if weight + vw[v] > target * 1.5 and weight > 0:
                break
            part[v] = p
            weight += vw[v]
    for u in range(n):
        if part[u] == -1:
            part[u] = k - 1
    return part


def _refine(adj: list[dict], vw: list[int], part: list[int], k: int, passes: int = 10) -> list[int]:
    part = list(part)
    loads = [0] * k
    for u, p in enumerate(part):
        loads[p] += vw[u]
    cap = math.ceil(1.1 * sum(vw) / k)
    for _ in range(passes):
        moved = False
        for u in range(len(adj)):
            own = part[u]
            if loads[own] - vw[u] <= 0:
                continue
            conn = [0] * k
            for v, w in adj[u].items():
                conn[part[v]] += w
            best, best_gain = own, 0
            for p in range(k):
                if p == own or loads[p] + vw[u] > max(cap, loads[own] - vw[u]):
                    continue
                gain = conn[p] - conn[own]
                if gain > best_gain or (gain == best_gain and best != own and loads[p] < loads[best]):
                    best, best_gain = p, gain
                elif gain == 0 and best == own and loads[p] + vw[u] < loads[own]:
                    best, best_gain = p, 0
            if best != own:
                part[u] = best
                loads[own] -= vw[u]
                loads[best] += vw[u]
                moved = True
        if not moved:
            break
    return part


def _cut_of(adj: list[dict], part: list[int]) -> int:
    return sum(w for u in range(len(adj)) for v, w in adj[u].items() if part[u] != part[v]) // 2


def multilevel(graph: nx.Graph, k: int, seed: int = 0, trials: int = 4) -> list[list]:
    """Heavy-edge-matching coarsening, greedy growing, refinement while uncoarsening."""
    nodes = sorted(graph.nodes)
    index = {u: i for i, u in enumerate(nodes)}
    adj = [dict() for _ in nodes]
    for u, v, w in graph.edges(data="weight", default=1):
        adj[index[u]][index[v]] = w
        adj[index[v]][index[u]] = w
    rng = np.random.default_rng(seed)
    best_part, best_cut = None, None
    for _ in range(trials):
        levels = [(adj, [1] * len(nodes), None)]
        while len(levels[-1][0]) > max(4 * k, 8):
            cadj, cvw, mapping = _coarsen(levels[-1][0], levels[-1][1], rng)
            if len(cadj) > 0.9 * len(levels[-1][0]):
                break
            levels.append((cadj, cvw, mapping))
        cadj, cvw, _ = levels[-1]
        part = _refine(cadj, cvw, _grow(cadj, cvw, k, rng), k)
        for i in range(len(levels) - 1, 0, -1):
            mapping = levels[i][2]
            fine_adj, fine_vw, _ = levels[i - 1]
            part = _refine(fine_adj, fine_vw, [part[mapping[u]] for u in range(len(fine_adj))], k)
        if len(set(part)) < k:
            continue
        cut = _cut_of(adj, part)
        if best_cut is None or cut < best_cut:
            best_part, best_cut = part, cut
    if best_part is None:
        best_part = [min(i, k - 1) for i in range(len(nodes))]
    groups: dict = {}
    for u, p in zip(nodes, best_part):
        groups.setdefault(p, []).append(u)
    return list(groups.values())


# ---- entry points ----------------------------------------------------------------


def _split_components(graph: nx.Graph, k: int) -> list[list] | None:
    comps = sorted((sorted(c) for c in nx.connected_components(graph)), key=lambda c: (-len(c), c[0]))
    if len(comps) < k:
        return None
    bins: list[list] = [[] for _ in range(k)]
    for c in comps:
        min(bins, key=len).extend(c)
    return bins


def partition_all(graph, method: str, ks, seed: int = 0) -> dict[int, Partition]:
    """Partitions of ``graph`` into each part count in ``ks``."""
    if not isinstance(graph, nx.Graph):
        graph = graph.graph  # CutGraph
    method = str(method).upper()
    if method not in METHODS:
        raise PartitionError(f"unknown partition method {method!r}")
    n = graph.number_of_nodes()
    ks = sorted(set(int(k) for k in ks))
    if n < 2:
        raise PartitionError("cannot partition a graph with fewer than two nodes")
    for k in ks:
        if not 2 <= k <= n:
            raise PartitionError(f"target components must be in [2, {n}], got {k}")
    out = {}
    gn_levels = None
    for k in ks:
        groups = _split_components(graph, k)
        if groups is None:
            if method == "KL":
                groups = _recursive_bisection(graph, k, _kl_bisect, seed)
            elif method == "SPECTRAL":
                groups = _recursive_bisection(graph, k, _spectral_bisect, seed)
            elif method == "MULTILEVEL":
                groups = multilevel(graph, k, seed)
            else:
                if gn_levels is None:
                    gn_levels = girvan_newman_levels(graph, max(ks))
                groups = gn_levels.get(k)
                if groups is None:
                    raise PartitionError(f"Girvan-Newman did not reach {k} components")
        out[k] = finish_partition(graph, groups, method)
    return out


def partition(graph, method: str, target_components: int, seed: int = 0) -> Partition:
    return partition_all(graph, method, [target_components], seed)[target_components]
