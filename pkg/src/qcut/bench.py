"""Worker-count sweeps over generated circuits."""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass
from itertools import islice

from .circuit import Circuit, GateKind
from .cutting import CutPlan, CutPoint, apply_cuts, enumerate_variants
from .execution import local_backend, submit
from .findcut import Constraints, find_cut
from .generators import generate_hea, generate_rc

BENCH_COLUMNS = ["suite", "qubits", "cuts", "workers", "jobs", "makespan_s", "speedup",
                 "max_fragment_qubits"]


def hea_cuts(circuit: Circuit, cuts_per_layer: int) -> list[CutPoint]:
    """Gate cuts on evenly spaced ring edges, the same edges in every layer.

    Cutting the same edges in every layer splits the ring into
    ``cuts_per_layer`` arcs (a single cut leaves it connected).
    """
    n = circuit.n_qubits
    if not 0 <= cuts_per_layer <= n:
        raise ValueError(f"cuts per layer must be in [0, {n}]")
    edges = {(round((i + 1) * n / cuts_per_layer) - 1) % n for i in range(cuts_per_layer)}
    cuts = []
    for g in circuit.gates:
        if g.kind is GateKind.CZ and g.qubits[0] in edges and g.qubits[1] == (g.qubits[0] + 1) % n:
            cuts.append(CutPoint.gate_cut(g.id))
    return cuts


def hea_plan(n: int, layers: int, cuts_per_layer: int, seed: int = 0) -> CutPlan:
    circuit = generate_hea(n, layers, seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return apply_cuts(circuit, hea_cuts(circuit, cuts_per_layer))


def rc_plan(rows: int, cols: int, depth: int, max_qubits: int, seed: int = 0) -> CutPlan:
    return find_cut(generate_rc(rows, cols, depth, seed), Constraints(max_qubits=max_qubits), seed)


@dataclass
class BenchRow:
    suite: str
    qubits: int
    cuts: int
    workers: int
    jobs: int
    makespan_s: float
    speedup: float
    max_fragment_qubits: int


def sweep(plan: CutPlan, suite: str, workers: list[int], shots: int = 1024, seed: int = 0,
          max_jobs: int | None = 512, observable: str | None = None) -> list[BenchRow]:
    """Time the same job list on a local backend for every worker count.

    Only the first ``max_jobs`` variants (enumeration order) are run, so the
    sweep stays bounded when the variant family is huge.
    """
    if not workers or min(workers) < 1:
        raise ValueError("worker counts must be positive")
    obs = observable or "Z" * plan.original.n_qubits
    jobs = list(islice(enumerate_variants(plan, obs, shots, seed), max_jobs))
    rows = []
    for w in workers:
        report = submit(jobs, [local_backend(w)])
        rows.append(BenchRow(suite, plan.original.n_qubits, len(plan.cuts), w, len(jobs),
                             report.makespan_s, 0.0, max(plan.fragment_widths)))
    # relative to the single-worker row when present, else to the first row
    ref = next((r.makespan_s for r in rows if r.workers == 1), rows[0].makespan_s)
    for r in rows:
        r.speedup = ref / r.makespan_s if r.makespan_s > 0 else float("inf")
    return rows


def rows_to_csv(rows: list[BenchRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(BENCH_COLUMNS)
    for r in rows:
        writer.writerow([r.suite, r.qubits, r.cuts, r.workers, r.jobs, f"{r.makespan_s:.6f}",
                         f"{r.speedup:.4f}", r.max_fragment_qubits])
    return buf.getvalue()
