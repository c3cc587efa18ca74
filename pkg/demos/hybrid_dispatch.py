"""
Hybrid dispatch
===============

Run the variants of a cut circuit on a mix of backends: a socket worker
capped at 5 qubits (a small quantum device stand-in, with some queue
latency) and a local process pool for everything else.
"""

from qcut.cutting import enumerate_variants, reconstruct
from qcut.execution import BackendDescriptor, BackendKind, local_backend, submit
from qcut.findcut import Constraints, find_cut
from qcut.generators import generate_hea
from qcut.remote import WorkerConfig, WorkerServer
from qcut.simulator import expectation

circuit = generate_hea(10, 1, seed=3)
obs = "Z" * 10
plan = find_cut(circuit, Constraints(max_qubits=6), seed=0)
jobs = list(enumerate_variants(plan, obs, shots=0, seed=3))
print(f"fragments {plan.fragment_widths}, {len(jobs)} jobs")

# In production the worker runs as `qcut worker --listen host:port --max-qubits 5`.
server = WorkerServer(("127.0.0.1", 0), WorkerConfig("small-qpu", max_qubits=5, latency=0.002)).start()
backends = [
    BackendDescriptor("small-qpu", BackendKind.REMOTE_SIM, max_qubits=5, endpoint=server.endpoint, latency=0.002),
    local_backend(workers=2, id="cpu"),
]

report = submit(jobs, backends)
print(f"makespan {report.makespan_s:.2f}s")
for name, stats in report.stats_dict().items():
    print(f"  {name:10} jobs={stats['jobs']:4} busy={stats['busy_s']:.2f}s retries={stats['retries']}")
print("widest job seen by the worker:", max(server.received_widths, default=0))

value = reconstruct(plan, report.results)
print(f"reconstructed {value:+.12f}")
print(f"uncut         {expectation(circuit, obs):+.12f}")

# Values are seed-bound, not backend-bound: a local-only run agrees exactly.
again = reconstruct(plan, submit(jobs, [local_backend(1)]).results)
print("identical to local-only run:", again == value)
server.shutdown()
