"""Benchmark circuit generators."""

from __future__ import annotations

import numpy as np

from .circuit import Circuit, CircuitError, Gate, GateKind

TWO_PI = 2 * np.pi


def generate_hea(n: int, layers: int, seed: int = 0) -> Circuit:
    """Hardware-efficient ansatz with a closed CZ ring.

    Every layer is RY on all qubits, RZ on all qubits, then
    CZ(0,1), CZ(1,2), ..., CZ(n-1,0). The ring is sequential, so each
    layer adds ``2 + n`` to the circuit depth.
    """
    if n < 2:
        raise CircuitError("HEA needs at least 2 qubits")
    if layers < 1:
        raise CircuitError("HEA needs at least one layer")
    rng = np.random.default_rng(seed)
    gates = []
    for _ in range(layers):
        for kind in (GateKind.RY, GateKind.RZ):
            angles = rng.uniform(0.0, TWO_PI, size=n)
            gates.extend(Gate(kind, (q,), (a,)) for q, a in enumerate(angles))
        gates.extend(Gate(GateKind.CZ, (q, (q + 1) % n)) for q in range(n))
    return Circuit.from_gates(n, gates, name=f"hea_{n}_{layers}")


def grid_couplers(rows: int, cols: int) -> list[list[tuple[int, int]]]:
    """The four coupler patterns A, B, C, D of a rows x cols grid.

    A/B pair horizontal neighbours starting at even/odd columns, C/D pair
    vertical neighbours starting at even/odd rows. Qubit ``(r, c)`` has
    index ``r * cols + c``.
    """
    def idx(r, c):
        return r * cols + c

    horizontal = [[(idx(r, c), idx(r, c + 1)) for r in range(rows) for c in range(start, cols - 1, 2)]
                  for start in (0, 1)]
    vertical = [[(idx(r, c), idx(r + 1, c)) for r in range(start, rows - 1, 2) for c in range(cols)]
                for start in (0, 1)]
    return horizontal + vertical


def generate_rc(rows: int, cols: int, depth: int, seed: int = 0) -> Circuit:
    """Random grid circuit with CZ entanglers.

    Each cycle applies a random RX/RY/RZ with a random angle to every qubit,
    followed by the next coupler pattern in the cycle A, B, C, D.
    """
    if rows < 1 or cols < 1 or rows * cols < 2:
        raise CircuitError("grid too small: need rows*cols >= 2")
    if depth < 1:
        raise CircuitError("depth must be at least 1")
    n = rows * cols
    patterns = [p for p in grid_couplers(rows, cols) if p]
    rng = np.random.default_rng(seed)
    kinds = (GateKind.RX, GateKind.RY, GateKind.RZ)
    gates = []
    for cycle in range(depth):
        choice = rng.integers(0, 3, size=n)
        angles = rng.uniform(0.0, TWO_PI, size=n)
        gates.extend(Gate(kinds[k], (q,), (a,)) for q, (k, a) in enumerate(zip(choice, angles)))
        gates.extend(Gate(GateKind.CZ, pair) for pair in patterns[cycle % len(patterns)])
    return Circuit.from_gates(n, gates, name=f"rc_{rows}x{cols}_{depth}")


_RANDOM_1Q = (GateKind.H, GateKind.X, GateKind.Y, GateKind.Z, GateKind.S, GateKind.SDG,
              GateKind.RX, GateKind.RY, GateKind.RZ)


def generate_random(n: int, n_gates: int, seed: int = 0, two_qubit_fraction: float = 0.35) -> Circuit:
    """Unstructured random circuit over the full unitary gate set (no measurements)."""
    if n < 1:
        raise CircuitError("need at least one qubit")
    rng = np.random.default_rng(seed)
    gates = []
    for _ in range(n_gates):
        if n >= 2 and rng.random() < two_qubit_fraction:
            a, b = rng.choice(n, size=2, replace=False)
            kind = GateKind.CZ if rng.random() < 0.5 else GateKind.CX
            gates.append(Gate(kind, (int(a), int(b))))
        else:
            kind = _RANDOM_1Q[rng.integers(len(_RANDOM_1Q))]
            params = (rng.uniform(0.0, TWO_PI),) if kind in (GateKind.RX, GateKind.RY, GateKind.RZ) else ()
            gates.append(Gate(kind, (int(rng.integers(n)),), params))
    return Circuit.from_gates(n, gates, name=f"random_{n}_{n_gates}")
