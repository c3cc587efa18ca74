"""Statevector simulation with mid-circuit measurement.

The state of ``n`` qubits is kept as a tensor of shape ``(2,) * n`` whose
axis ``q`` is qubit ``q``; flattened, qubit 0 is the most significant bit.

Mid-circuit measurements are handled by branching. In exact mode
(``shots=0``) both outcomes are followed with their probabilities. In shot
mode the shots reaching a measurement are split binomially between the two
outcomes, which has the same distribution as collapsing one shot at a time.
"""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .circuit import MEASUREMENTS, Circuit, CircuitError, Gate, GateKind, pauli_string

MAX_QUBITS = 26

_R2 = 1 / np.sqrt(2)
_FIXED = {
    GateKind.H: np.array([[_R2, _R2], [_R2, -_R2]], dtype=complex),
    GateKind.X: np.array([[0, 1], [1, 0]], dtype=complex),
    GateKind.Y: np.array([[0, -1j], [1j, 0]], dtype=complex),
    GateKind.Z: np.diag([1, -1]).astype(complex),
    GateKind.S: np.diag([1, 1j]),
    GateKind.SDG: np.diag([1, -1j]),
}

# unitaries taking |0> to each preparation state
_PREP = {
    "0": np.eye(2, dtype=complex),
    "1": _FIXED[GateKind.X],
    "+": _FIXED[GateKind.H],
    "-": _FIXED[GateKind.H] @ _FIXED[GateKind.X],
    "+i": _FIXED[GateKind.S] @ _FIXED[GateKind.H],
    "-i": _FIXED[GateKind.SDG] @ _FIXED[GateKind.H],
}

# basis change mapping the eigenbasis of a Pauli onto the computational basis
_TO_Z_BASIS = {
    "X": _FIXED[GateKind.H],
    "Y": _FIXED[GateKind.H] @ _FIXED[GateKind.SDG],
}
_MEAS_BASIS = {GateKind.MEAS_X: "X", GateKind.MEAS_Y: "Y", GateKind.MEAS_Z: "Z"}


class SimulationError(RuntimeError):
    pass


def gate_matrix(g: Gate) -> np.ndarray:
    """2x2 unitary of a single-qubit gate (PREP gives its preparation unitary)."""
    if g.kind in _FIXED:
        return _FIXED[g.kind]
    if g.kind is GateKind.PREP:
        return _PREP[g.state]
    theta = g.params[0]
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    if g.kind is GateKind.RX:
        return np.array([[c, -1j * s], [-1j * s, c]])
    if g.kind is GateKind.RY:
        return np.array([[c, -s], [s, c]], dtype=complex)
    if g.kind is GateKind.RZ:
        return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])
    raise SimulationError(f"no single-qubit matrix for {g.kind.value}")


def _sl(n: int, pairs: dict[int, int]) -> tuple:
    idx = [slice(None)] * n
    for q, b in pairs.items():
        idx[q] = b
    return tuple(idx)


def apply_1q(psi: np.ndarray, u: np.ndarray, q: int) -> None:
    """Apply a 2x2 unitary to qubit ``q`` in place."""
    n = psi.ndim
    s0, s1 = _sl(n, {q: 0}), _sl(n, {q: 1})
    if u[0, 1] == 0 and u[1, 0] == 0:
        if u[0, 0] != 1:
            psi[s0] *= u[0, 0]
        if u[1, 1] != 1:
            psi[s1] *= u[1, 1]
        return
    a0 = psi[s0].copy()
    a1 = psi[s1]
    psi[s0] = u[0, 0] * a0 + u[0, 1] * a1
    psi[s1] = u[1, 0] * a0 + u[1, 1] * a1


def apply_gate(psi: np.ndarray, g: Gate) -> None:
    n = psi.ndim
    if g.kind is GateKind.CZ:
        a, b = g.qubits
        psi[_sl(n, {a: 1, b: 1})] *= -1
    elif g.kind is GateKind.CX:
        c, t = g.qubits
        s10, s11 = _sl(n, {c: 1, t: 0}), _sl(n, {c: 1, t: 1})
        tmp = psi[s10].copy()
        psi[s10] = psi[s11]
        psi[s11] = tmp
    elif g.kind in MEASUREMENTS:
        raise SimulationError("measurements need the branching simulator")
    else:
        apply_1q(psi, gate_matrix(g), g.qubits[0])


def zero_state(n: int) -> np.ndarray:
    if n > MAX_QUBITS:
        raise SimulationError(f"{n} qubits exceeds the simulator cap of {MAX_QUBITS}")
    psi = np.zeros((2,) * n, dtype=complex)
    psi[(0,) * n] = 1.0
    return psi


def _check_preps(circuit: Circuit) -> None:
    touched = set()
    for g in circuit.gates:
        if g.kind is GateKind.PREP and g.qubits[0] in touched:
            raise CircuitError(f"prep on qubit {g.qubits[0]} after another gate on that qubit")
        touched.update(g.qubits)


def simulate_statevector(circuit: Circuit) -> np.ndarray:
    """Final state as a flat vector of length ``2**n``."""
    if circuit.has_measurements:
        raise SimulationError("exact statevector path does not accept measurements")
    _check_preps(circuit)
    psi = zero_state(circuit.n_qubits)
    for g in circuit.gates:
        apply_gate(psi, g)
    return psi.reshape(-1)


def _parity_signs(n: int, support: list[int]) -> np.ndarray:
    mask = 0
    for q in support:
        mask |= 1 << (n - 1 - q)
    idx = np.arange(2**n, dtype=np.int64)
    return 1.0 - 2.0 * (np.bitwise_count(idx & mask) & 1)


def _rotate_to_observable(psi: np.ndarray, observable: str) -> list[int]:
    support = []
    for q, letter in enumerate(observable):
        if letter == "I":
            continue
        support.append(q)
        if letter in _TO_Z_BASIS:
            apply_1q(psi, _TO_Z_BASIS[letter], q)
    return support


def pauli_expectation(state: np.ndarray, observable: str) -> float:
    """``<psi|P|psi>`` without forming the operator matrix."""
    n = int(np.log2(state.size))
    observable = pauli_string(observable, n)
    psi = state.reshape((2,) * n).copy()
    support = _rotate_to_observable(psi, observable)
    probs = np.abs(psi.reshape(-1)) ** 2
    if not support:
        return float(probs.sum())
    return float(probs @ _parity_signs(n, support))


def expectation(circuit: Circuit, observable: str) -> float:
    observable = pauli_string(observable, circuit.n_qubits)
    return pauli_expectation(simulate_statevector(circuit), observable)


# ---- branching simulation --------------------------------------------------


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator (Philox) keyed by ``seed``."""
    return np.random.Generator(np.random.Philox(key=int(seed) % 2**64))


def derive_seed(master_seed: int, tag: str) -> int:
    """Stable 63-bit seed for a named task."""
    digest = hashlib.blake2b(f"{int(master_seed)}:{tag}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little") >> 1


@dataclass
class _Leaf:
    weight: float  # probability (exact mode) or shot count (shot mode)
    bits: tuple[int, ...]
    psi: np.ndarray


def _measure_split(psi: np.ndarray, g: Gate) -> list[tuple[int, float, np.ndarray]]:
    q = g.qubits[0]
    basis = _MEAS_BASIS[g.kind]
    n = psi.ndim
    if basis != "Z":
        apply_1q(psi, _TO_Z_BASIS[basis], q)
    out = []
    for m in (0, 1):
        branch = psi.copy()
        branch[_sl(n, {q: 1 - m})] = 0.0
        p = float(np.vdot(branch, branch).real)
        if p > 1e-15:
            branch /= np.sqrt(p)
            if basis != "Z":
                apply_1q(branch, _TO_Z_BASIS[basis].conj().T, q)
        out.append((m, p, branch))
    return out


def _branches(circuit: Circuit, shots: int, rng: np.random.Generator | None) -> list[_Leaf]:
    _check_preps(circuit)
    leaves: list[_Leaf] = []
    # depth-first, outcome 0 before outcome 1, so rng draws are reproducible
    stack = [(0, zero_state(circuit.n_qubits), 1.0 if shots == 0 else shots, ())]
    gates = circuit.gates
    while stack:
        start, psi, weight, bits = stack.pop()
        for i in range(start, len(gates)):
            g = gates[i]
            if g.kind in MEASUREMENTS:
                split = _measure_split(psi, g)
                if shots == 0:
                    children = [(m, weight * p, b) for m, p, b in split if p > 1e-15]
                else:
                    k1 = int(rng.binomial(weight, min(max(split[1][1], 0.0), 1.0)))
                    children = [(m, k, b) for (m, _, b), k in zip(split, (weight - k1, k1)) if k > 0]
                for m, w, b in reversed(children):
                    stack.append((i + 1, b, w, bits + (m,)))
                break
            apply_gate(psi, g)
        else:
            leaves.append(_Leaf(weight, bits, psi))
    return leaves


@dataclass(frozen=True)
class RunSpec:
    circuit: Circuit
    observable: str
    shots: int = 0
    seed: int = 0


def signed_samples(circuit: Circuit, observable: str, shots: int, seed: int) -> np.ndarray:
    """Per-shot values ``(-1)**(sum of mid-circuit bits) * eigenvalue``.

    Shots are grouped by measurement branch, not in draw order.
    """
    if shots < 1:
        raise SimulationError("shots must be positive")
    observable = pauli_string(observable, circuit.n_qubits)
    n = circuit.n_qubits
    rng = make_rng(seed)
    out = []
    for leaf in _branches(circuit, shots, rng):
        sign = -1.0 if sum(leaf.bits) % 2 else 1.0
        support = _rotate_to_observable(leaf.psi, observable)
        probs = np.abs(leaf.psi.reshape(-1)) ** 2
        counts = rng.multinomial(int(leaf.weight), probs / probs.sum())
        eig = _parity_signs(n, support) if support else np.ones(2**n)
        hit = np.nonzero(counts)[0]
        out.append(np.repeat(sign * eig[hit], counts[hit]))
    return np.concatenate(out)


def exact_signed_expectation(circuit: Circuit, observable: str) -> float:
    observable = pauli_string(observable, circuit.n_qubits)
    total = 0.0
    for leaf in _branches(circuit, 0, None):
        sign = -1.0 if sum(leaf.bits) % 2 else 1.0
        total += leaf.weight * sign * pauli_expectation(leaf.psi.reshape(-1), observable)
    return total


def estimate_signed_expectation(spec: RunSpec) -> float:
    """Signed expectation of a fragment run; ``shots=0`` is exact."""
    if spec.shots < 0:
        raise SimulationError("shots must be non-negative")
    if spec.shots == 0:
        return exact_signed_expectation(spec.circuit, spec.observable)
    return float(signed_samples(spec.circuit, spec.observable, spec.shots, spec.seed).mean())


def sample(circuit: Circuit, shots: int, seed: int) -> Counter:
    """Z-basis outcome counts.

    Keys are terminal bitstrings (qubit 0 first); when the circuit has
    mid-circuit measurements the key is ``"<mid bits> <terminal bits>"``.
    """
    if shots < 1:
        raise SimulationError("shots must be positive")
    n = circuit.n_qubits
    rng = make_rng(seed)
    counts: Counter = Counter()
    for leaf in _branches(circuit, shots, rng):
        probs = np.abs(leaf.psi.reshape(-1)) ** 2
        drawn = rng.multinomial(int(leaf.weight), probs / probs.sum())
        prefix = "".join(map(str, leaf.bits)) + " " if circuit.has_measurements else ""
        for idx in np.nonzero(drawn)[0]:
            counts[prefix + format(int(idx), f"0{n}b")] += int(drawn[idx])
    return counts
