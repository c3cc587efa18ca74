"""Capability-aware parallel execution of variant jobs.

Every backend contributes ``parallelism`` slots. Each slot is a thread that
pulls the next job it is able to run from one shared queue, so idle slots
take work as soon as they free up. Local slots hand the simulation to a
process pool; remote slots talk to a socket worker.
"""

from __future__ import annotations

import json
import multiprocessing
import threading
import time
from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum

from .cutting import VariantJob, VariantResult
from .remote import RemoteClient, RemoteError
from .simulator import MAX_QUBITS, RunSpec, estimate_signed_expectation

MAX_RETRIES = 2


class BackendKind(str, Enum):
    LOCAL_SIM = "LOCAL_SIM"
    REMOTE_SIM = "REMOTE_SIM"


@dataclass(frozen=True)
class BackendDescriptor:
    id: str
    kind: BackendKind = BackendKind.LOCAL_SIM
    max_qubits: int = MAX_QUBITS
    supports_midmeas: bool = True
    parallelism: int = 1
    endpoint: str | None = None
    latency: float = 0.0  # artificial seconds per job, e.g. to mimic a cloud queue

    def __post_init__(self):
        object.__setattr__(self, "kind", BackendKind(self.kind))
        if self.parallelism < 1:
            raise ValueError(f"backend {self.id}: parallelism must be >= 1")
        if self.max_qubits < 1:
            raise ValueError(f"backend {self.id}: max_qubits must be >= 1")
        if self.kind is BackendKind.REMOTE_SIM and not self.endpoint:
            raise ValueError(f"backend {self.id}: remote backends need an endpoint")
        if self.latency < 0:
            raise ValueError(f"backend {self.id}: latency must be non-negative")

    def accepts(self, job: VariantJob) -> bool:
        return job.width <= self.max_qubits and (self.supports_midmeas or not job.needs_midmeas)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["kind"] = self.kind.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> BackendDescriptor:
        known = {"id", "kind", "max_qubits", "supports_midmeas", "parallelism", "endpoint", "latency"}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown backend fields: {sorted(extra)}")
        return cls(**d)


def load_backends(text: str) -> list[BackendDescriptor]:
    """Parse a JSON list of backend objects (or ``{"backends": [...]}``)."""
    data = json.loads(text)
    if isinstance(data, dict):
        data = data.get("backends")
    if not isinstance(data, list) or not data:
        raise ValueError("backend file must hold a non-empty list of backends")
    backends = [BackendDescriptor.from_dict(d) for d in data]
    ids = [b.id for b in backends]
    if len(set(ids)) != len(ids):
        raise ValueError("backend ids must be unique")
    return backends


class UnroutableJobError(ValueError):
    def __init__(self, job_ids: list[str], reason: str):
        super().__init__(f"unroutable jobs ({len(job_ids)}): {', '.join(job_ids[:5])}"
                         f"{' ...' if len(job_ids) > 5 else ''}: {reason}")
        self.job_ids = job_ids


class ExecutionError(RuntimeError):
    def __init__(self, job_id: str, backend: str, cause: Exception):
        super().__init__(f"job {job_id} failed on backend {backend}: {cause}")
        self.job_id = job_id
        self.backend = backend


@dataclass
class BackendStats:
    jobs: int = 0
    busy_s: float = 0.0
    retries: int = 0


@dataclass
class ExecutionReport:
    results: dict[str, VariantResult]
    backends: dict[str, BackendStats]
    makespan_s: float
    queue: dict = field(default_factory=dict)

    @property
    def values(self) -> dict[str, float]:
        return {k: r.value for k, r in self.results.items()}

    def stats_dict(self) -> dict:
        return {k: asdict(v) for k, v in self.backends.items()}


# ---- policies ------------------------------------------------------------------

Policy = Callable[[list[VariantJob]], list[VariantJob]]


def largest_first(jobs: list[VariantJob]) -> list[VariantJob]:
    """Widest jobs first; branching jobs before plain ones of the same width."""
    return sorted(jobs, key=lambda j: (-j.width, not j.needs_midmeas))


def fifo(jobs: list[VariantJob]) -> list[VariantJob]:
    return list(jobs)


# ---- job execution ------------------------------------------------------------------


def run_job(job: VariantJob) -> float:
    return estimate_signed_expectation(RunSpec(job.circuit, job.observable, job.shots, job.seed))


def _run_timed(job: VariantJob) -> tuple[float, float]:
    start = time.perf_counter()
    value = run_job(job)
    return value, (time.perf_counter() - start) * 1000


def _noop() -> int:
    return 0


def _make_pool(workers: int) -> ProcessPoolExecutor:
    # fork needs no __main__ guard in caller scripts; every worker is started
    # here, before any slot thread exists, and is never replaced
    method = "fork" if "fork" in multiprocessing.get_all_start_methods() else "spawn"
    pool = ProcessPoolExecutor(max_workers=workers, mp_context=multiprocessing.get_context(method))
    for f in [pool.submit(_noop) for _ in range(workers)]:
        f.result()
    return pool


def check_routable(jobs: Sequence[VariantJob], backends: Sequence[BackendDescriptor]) -> None:
    if not backends:
        raise ValueError("no backends given")
    stranded = [j.job_id for j in jobs if not any(b.accepts(j) for b in backends)]
    if stranded:
        widest = max(j.width for j in jobs if j.job_id in set(stranded))
        caps = ", ".join(f"{b.id}(max_qubits={b.max_qubits}, midmeas={b.supports_midmeas})"
                         for b in backends)
        raise UnroutableJobError(stranded, f"widest {widest} qubits; backends {caps}")


class _Queue:
    """Shared pending list; a slot takes the first job its backend can run."""

    def __init__(self, jobs: list[VariantJob]):
        self._jobs = list(jobs)
        self._lock = threading.Lock()
        self.failed = threading.Event()
        self.t0 = time.perf_counter()
        self.max_wait = 0.0

    def take(self, backend: BackendDescriptor) -> VariantJob | None:
        with self._lock:
            if self.failed.is_set():
                return None
            for i, job in enumerate(self._jobs):
                if backend.accepts(job):
                    self.max_wait = max(self.max_wait, time.perf_counter() - self.t0)
                    return self._jobs.pop(i)
            return None


def submit(jobs: Sequence[VariantJob], backends: Sequence[BackendDescriptor],
           policy: Policy = largest_first) -> ExecutionReport:
    """Run every job exactly once across the backends' slots."""
    jobs = list(jobs)
    ids = [j.job_id for j in jobs]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate job ids")
    check_routable(jobs, backends)
    ids_seen = [b.id for b in backends]
    if len(set(ids_seen)) != len(ids_seen):
        raise ValueError("backend ids must be unique")

    stats = {b.id: BackendStats() for b in backends}
    if not jobs:
        return ExecutionReport({}, stats, 0.0, {"jobs": 0, "slots": 0, "max_wait_s": 0.0, "retries": 0})
    results: dict[str, VariantResult] = {}
    sink = threading.Lock()
    errors: list[ExecutionError] = []
    pools = {b.id: _make_pool(b.parallelism) for b in backends if b.kind is BackendKind.LOCAL_SIM}

    def record(b: BackendDescriptor, job: VariantJob, value: float, wall_ms: float, busy: float):
        with sink:
            results[job.job_id] = VariantResult(job.job_id, value, b.id, wall_ms)
            stats[b.id].jobs += 1
            stats[b.id].busy_s += busy

    def fail(b: BackendDescriptor, job: VariantJob, exc: Exception):
        with sink:
            errors.append(ExecutionError(job.job_id, b.id, exc))
        queue.failed.set()

    def local_slot(b: BackendDescriptor):
        pool = pools[b.id]
        while (job := queue.take(b)) is not None:
            start = time.perf_counter()
            try:
                value, wall_ms = pool.submit(_run_timed, job).result()
            except Exception as exc:  # noqa: BLE001 - reported with the job id
                fail(b, job, exc)
                return
            if b.latency:
                time.sleep(b.latency)
            record(b, job, value, wall_ms, time.perf_counter() - start)

    def remote_slot(b: BackendDescriptor):
        client = RemoteClient(b.endpoint)
        try:
            while (job := queue.take(b)) is not None:
                start = time.perf_counter()
                for attempt in range(MAX_RETRIES + 1):
                    try:
                        value, wall_ms = client.run(job)
                        break
                    except (RemoteError, ValueError) as exc:
                        client.close()
                        if attempt == MAX_RETRIES:
                            fail(b, job, exc)
                            return
                        with sink:
                            stats[b.id].retries += 1
                        time.sleep(0.05 * (attempt + 1))
                if b.latency:
                    time.sleep(b.latency)
                record(b, job, value, wall_ms, time.perf_counter() - start)
        finally:
            client.close()

    queue = _Queue(policy(jobs))
    threads = []
    for b in backends:
        target = local_slot if b.kind is BackendKind.LOCAL_SIM else remote_slot
        threads += [threading.Thread(target=target, args=(b,), daemon=True) for _ in range(b.parallelism)]
    try:
        queue.t0 = start = time.perf_counter()
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        makespan = time.perf_counter() - start
    finally:
        for pool in pools.values():
            pool.shutdown(cancel_futures=True)
    if errors:
        raise errors[0]
    missing = [j for j in ids if j not in results]
    if missing:
        raise ExecutionError(missing[0], "-", RuntimeError("job never completed"))
    queue_stats = {"jobs": len(jobs), "slots": len(threads), "max_wait_s": queue.max_wait,
                   "retries": sum(s.retries for s in stats.values())}
    return ExecutionReport(results, stats, makespan, queue_stats)


def local_backend(workers: int = 1, max_qubits: int = MAX_QUBITS, id: str = "local") -> BackendDescriptor:
    return BackendDescriptor(id, BackendKind.LOCAL_SIM, max_qubits, True, workers)
