"""Layered Bernstein-Vazirani circuits with noise and basis decorations.

Secret convention: the secret is written as a left-to-right string, and the
bit belonging to qubit i is the character at distance i from the RIGHT end.
Secret "1000" therefore puts its single CNOT control on qubit 3, and the
noiseless readout of the 5-qubit register is the bitstring "00010"
(qubit 0 leftmost, ancilla last).

A basis-circuit index k in [0, 16^m * 2^n) decodes into one Pauli pair per
CNOT plus a pre-measurement X mask:

    k = spam_mask * 16^m + sum_j code_j * 16^(m-1-j),  code = 4*idx(P_C) + idx(P_T)

with idx over (I, X, Y, Z), CNOT j = 0 owning the highest base-16 digit, and
bit q of spam_mask flagging an X on qubit q. k = 0 means no decoration.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .noise import NoiseParams, PAULI_LABELS, cnot_depol_channel, spam_channel
from .qsim import (
    PAULI,
    HADAMARD,
    CountsTable,
    DensityMatrix,
    UnitaryGate,
    apply_kraus,
    apply_unitary,
    computational_distribution,
    sample_counts,
)

_CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)


def validate_secret(secret: str) -> None:
    if not secret or any(c not in "01" for c in secret):
        raise ValueError(f"secret must be a nonempty 0/1 string, got {secret!r}")


def secret_bit(secret: str, i: int) -> int:
    """Bit r_i of the secret; i counts from the right end of the string."""
    return int(secret[len(secret) - 1 - i])


def cnot_controls(secret: str) -> tuple[int, ...]:
    """Control qubits of the oracle CNOTs, ascending."""
    return tuple(i for i in range(len(secret)) if secret_bit(secret, i) == 1)


@dataclass(frozen=True)
class CircuitSpec:
    """A (possibly decorated) Bernstein-Vazirani circuit.

    layer1 and layer3 are ordered gate lists; layer 2 is the CNOT list with
    a depolarizing channel and an optional Pauli-pair decoration after each
    CNOT. premeasure_x_mask flags qubits that get an X right before
    measurement (bit q of the mask, in integer bit order).
    """

    secret: str
    n_qubits: int
    layer1: tuple[UnitaryGate, ...]
    cnot_pairs: tuple[tuple[int, int], ...]
    layer3: tuple[UnitaryGate, ...]
    cnot_decorations: tuple[tuple[str, str], ...] = ()
    premeasure_x_mask: int = 0

    def __post_init__(self):
        if self.cnot_decorations and len(self.cnot_decorations) != len(self.cnot_pairs):
            raise ValueError("one decoration pair required per CNOT")

    @property
    def n_cnots(self) -> int:
        return len(self.cnot_pairs)

    @property
    def n_basis_circuits(self) -> int:
        return 16**self.n_cnots * 2**self.n_qubits

    @property
    def ancilla(self) -> int:
        return self.n_qubits - 1


def build_bv(secret: str) -> CircuitSpec:
    """Layered circuit for a secret: n = len(secret) + 1 qubits incl. ancilla."""
    validate_secret(secret)
    n = len(secret) + 1
    ancilla = n - 1
    layer1 = tuple(UnitaryGate(HADAMARD, (q,)) for q in range(n)) + (
        UnitaryGate(PAULI["Z"], (ancilla,)),
    )
    pairs = tuple((c, ancilla) for c in cnot_controls(secret))
    layer3 = (UnitaryGate(PAULI["Z"], (ancilla,)),) + tuple(
        UnitaryGate(HADAMARD, (q,)) for q in range(n)
    )
    return CircuitSpec(secret, n, layer1, pairs, layer3)


def ideal_bits(secret: str) -> np.ndarray:
    """Noiseless measured bit per qubit (ancilla reads 0)."""
    validate_secret(secret)
    n = len(secret) + 1
    return np.array([secret_bit(secret, i) for i in range(n - 1)] + [0])


def ideal_expectations(secret: str) -> np.ndarray:
    """Noiseless per-qubit observable means: -1 where the secret bit is 1."""
    return 1 - 2 * ideal_bits(secret)


def ideal_outcome_index(secret: str) -> int:
    """Computational-basis index of the noiseless readout."""
    bits = ideal_bits(secret)
    n = bits.size
    return int(sum(int(b) << (n - 1 - q) for q, b in enumerate(bits)))


@dataclass(frozen=True)
class BasisCircuitIndex:
    """Decoded form of a basis-circuit index."""

    k: int
    cnot_pairs: tuple[tuple[str, str], ...]
    spam_mask: int


def decode_basis_index(k: int, n_cnots: int, n_qubits: int) -> BasisCircuitIndex:
    n_total = 16**n_cnots * 2**n_qubits
    if not 0 <= k < n_total:
        raise ValueError(f"basis index {k} outside [0, {n_total})")
    spam_mask, code = divmod(k, 16**n_cnots)
    pairs = []
    for j in range(n_cnots):
        digit = (code // 16 ** (n_cnots - 1 - j)) % 16
        pairs.append((PAULI_LABELS[digit // 4], PAULI_LABELS[digit % 4]))
    return BasisCircuitIndex(k, tuple(pairs), spam_mask)


def encode_basis_index(
    cnot_pairs: tuple[tuple[str, str], ...], spam_mask: int, n_qubits: int
) -> int:
    m = len(cnot_pairs)
    if not 0 <= spam_mask < 2**n_qubits:
        raise ValueError(f"spam mask {spam_mask} outside [0, 2^{n_qubits})")
    code = 0
    for pc, pt in cnot_pairs:
        code = code * 16 + 4 * PAULI_LABELS.index(pc) + PAULI_LABELS.index(pt)
    return spam_mask * 16**m + code


def decorate(circuit: CircuitSpec, k: int) -> CircuitSpec:
    """Insert the decoded decorations of index k into the circuit.

    Pauli pairs go right after their CNOT (after its noise channel); masked
    qubits get an X immediately before measurement. For the symmetric
    readout channel the pre-measurement X commutes with the channel, so
    this is the decorated-readout map exactly.
    """
    decoded = decode_basis_index(k, circuit.n_cnots, circuit.n_qubits)
    return replace(
        circuit,
        cnot_decorations=decoded.cnot_pairs,
        premeasure_x_mask=decoded.spam_mask,
    )


def _initial_state(n_qubits: int) -> DensityMatrix:
    return DensityMatrix.computational_basis(n_qubits, 0)


def _apply_layer2(
    rho: DensityMatrix, circuit: CircuitSpec, xc: float, xt: float
) -> DensityMatrix:
    decorations = circuit.cnot_decorations or (("I", "I"),) * circuit.n_cnots
    for (control, target), (pc, pt) in zip(circuit.cnot_pairs, decorations):
        rho = apply_unitary(rho, UnitaryGate(_CNOT, (control, target)))
        rho = apply_kraus(rho, cnot_depol_channel(xc, xt, control, target))
        if pc != "I":
            rho = apply_unitary(rho, UnitaryGate(PAULI[pc], (control,)))
        if pt != "I":
            rho = apply_unitary(rho, UnitaryGate(PAULI[pt], (target,)))
    return rho


def _apply_spam_and_mask(
    rho: DensityMatrix, circuit: CircuitSpec, spam: tuple[float, ...]
) -> DensityMatrix:
    for q in range(circuit.n_qubits):
        rho = apply_kraus(rho, spam_channel(spam[q], q))
    for q in range(circuit.n_qubits):
        if (circuit.premeasure_x_mask >> q) & 1:
            rho = apply_unitary(rho, UnitaryGate(PAULI["X"], (q,)))
    return rho


def exact_distribution_raw(
    circuit: CircuitSpec, spam: tuple[float, ...], xc: float, xt: float
) -> np.ndarray:
    """Exact outcome distribution for raw channel parameters.

    Accepts any spam fidelities in [0, 1] and depolarizing rates in [0, 1];
    used directly by the forward-map fit, which probes the full box.
    """
    if len(spam) != circuit.n_qubits:
        raise ValueError(
            f"{len(spam)} spam fidelities for a {circuit.n_qubits}-qubit circuit"
        )
    rho = _initial_state(circuit.n_qubits)
    for gate in circuit.layer1:
        rho = apply_unitary(rho, gate)
    rho = _apply_layer2(rho, circuit, xc, xt)
    for gate in circuit.layer3:
        rho = apply_unitary(rho, gate)
    rho = _apply_spam_and_mask(rho, circuit, tuple(spam))
    return computational_distribution(rho)


def exact_noisy_distribution(circuit: CircuitSpec, params: NoiseParams) -> np.ndarray:
    """Exact outcome distribution of a (possibly decorated) circuit."""
    if params.n_qubits != circuit.n_qubits:
        raise ValueError(
            f"params cover {params.n_qubits} qubits, circuit has {circuit.n_qubits}"
        )
    return exact_distribution_raw(circuit, params.spam, params.xc, params.xt)


def run_circuit(
    circuit: CircuitSpec, params: NoiseParams, shots: int, rng: np.random.Generator
) -> CountsTable:
    """Sampled counts from the exact distribution."""
    return sample_counts(exact_noisy_distribution(circuit, params), shots, rng)


def all_exact_distributions(circuit: CircuitSpec, params: NoiseParams) -> np.ndarray:
    """Exact distributions of every basis circuit, shape (16^m * 2^n, 2^n).

    Row k matches exact_noisy_distribution(decorate(circuit, k), params).
    Only the 16^m CNOT-decoration variants are simulated; a pre-measurement
    X on qubit q is a deterministic bit flip, i.e. an XOR permutation of
    the outcome axis, and is applied as such.
    """
    if params.n_qubits != circuit.n_qubits:
        raise ValueError("parameter/circuit qubit count mismatch")
    n = circuit.n_qubits
    m = circuit.n_cnots
    dim = 2**n
    out = np.empty((16**m * 2**n, dim))
    outcome_idx = np.arange(dim)

    rho1 = _initial_state(n)
    for gate in circuit.layer1:
        rho1 = apply_unitary(rho1, gate)

    for code in range(16**m):
        decorations = decode_basis_index(code, m, n).cnot_pairs
        work = replace(circuit, cnot_decorations=decorations, premeasure_x_mask=0)
        rho = _apply_layer2(rho1, work, params.xc, params.xt)
        for gate in circuit.layer3:
            rho = apply_unitary(rho, gate)
        rho = _apply_spam_and_mask(rho, work, params.spam)
        dist = computational_distribution(rho)
        for mask in range(2**n):
            flip = sum(1 << (n - 1 - q) for q in range(n) if (mask >> q) & 1)
            out[mask * 16**m + code] = dist[outcome_idx ^ flip]
    return out


def correlated_qubits(circuit: CircuitSpec) -> tuple[int, ...]:
    """Qubits whose outcomes mix several noise parameters: the CNOT
    controls plus the ancilla (empty when the secret has no CNOTs)."""
    if circuit.n_cnots == 0:
        return ()
    controls = sorted({c for c, _ in circuit.cnot_pairs})
    return tuple(controls) + (circuit.ancilla,)


def uncorrelated_qubits(circuit: CircuitSpec) -> tuple[int, ...]:
    corr = set(correlated_qubits(circuit))
    return tuple(q for q in range(circuit.n_qubits) if q not in corr)
