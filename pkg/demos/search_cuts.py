"""
Searching for cuts
==================

Let the cut finder pick cut locations for a random grid circuit under a
fragment-width bound, then inspect the candidate table it scored.
"""

import csv
import io

from qcut.findcut import Constraints, search
from qcut.generators import generate_rc

circuit = generate_rc(4, 5, 22, seed=0)
print(f"random grid circuit: {circuit.n_qubits} qubits, {len(circuit.gates)} gates")

result = search(circuit, Constraints(max_qubits=15), seed=0)
best = result.best
print(f"chosen: {best.method} in {best.mode.value} mode, {best.n_cuts} cuts, "
      f"fragments {result.plan.fragment_widths}, loss {best.loss:.2f}, {result.wall_time:.2f}s")

# Every (mode, method, components) candidate is kept in the report.
rows = list(csv.DictReader(io.StringIO(result.report_csv())))
print(f"{len(rows)} candidates scored; five lowest-loss feasible ones:")
feasible = sorted((r for r in rows if r["feasible"] == "1"), key=lambda r: (float(r["loss"]), int(r["cuts"])))
for r in feasible[:5]:
    print(f"  {r['mode']:5} {r['method']:10} k={r['components']} cuts={r['cuts']:>3} "
          f"width={r['max_fragment_qubits']:>2} loss={float(r['loss']):.2f}")

# Tightening the bound costs cuts.
for mq in (15, 12, 10, 8):
    r = search(circuit, Constraints(max_qubits=mq), seed=0)
    print(f"max_qubits={mq:2}: {r.best.n_cuts:3} cuts, widths {r.plan.fragment_widths}")
