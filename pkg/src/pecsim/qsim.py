"""Dense density-matrix simulation of few-qubit registers.

Bit convention used everywhere in this package: character position j of a
bitstring refers to qubit j, with qubit 0 written leftmost. Equivalently,
qubit 0 is the most significant bit of a computational-basis index, so
index ``i`` encodes the bitstring ``format(i, f"0{n}b")``.

States are exact 2^n x 2^n complex matrices (n <= 8); gates act by
conjugation and channels by Kraus sums. Everything is a pure function of
its inputs except :func:`sample_counts`, which consumes an explicit seeded
generator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MAX_QUBITS = 8

TRACE_TOL = 1e-12
HERMITICITY_TOL = 1e-12
PSD_TOL = 1e-10

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0)


def index_to_bitstring(i: int, n_qubits: int) -> str:
    return format(i, f"0{n_qubits}b")


def bitstring_to_index(bits: str) -> int:
    if not bits or any(c not in "01" for c in bits):
        raise ValueError(f"not a bitstring: {bits!r}")
    return int(bits, 2)


def outcome_bits(n_qubits: int) -> np.ndarray:
    """(2^n, n) array of outcome bits; column q holds the bit of qubit q."""
    idx = np.arange(2**n_qubits)
    return np.stack([(idx >> (n_qubits - 1 - q)) & 1 for q in range(n_qubits)], axis=1)


def observable_signs(n_qubits: int) -> np.ndarray:
    """(2^n, n) array of +-1; column q is the single-qubit observable
    eigenvalue of each outcome (+1 for bit 0, -1 for bit 1)."""
    return 1 - 2 * outcome_bits(n_qubits)


@dataclass(frozen=True)
class UnitaryGate:
    """A k-qubit unitary applied to an ordered tuple of target qubits."""

    matrix: np.ndarray
    targets: tuple[int, ...]

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        k = len(self.targets)
        if len(set(self.targets)) != k:
            raise ValueError(f"duplicate targets: {self.targets}")
        if mat.shape != (2**k, 2**k):
            raise ValueError(f"matrix shape {mat.shape} does not act on {k} qubit(s)")
        dev = np.max(np.abs(mat @ mat.conj().T - np.eye(2**k)))
        if dev > 1e-12:
            raise ValueError(f"matrix is not unitary (|UU+ - I| = {dev:.3g})")


@dataclass(frozen=True)
class KrausChannel:
    """A CPTP map given by Kraus operators on an ordered tuple of targets."""

    operators: tuple[np.ndarray, ...]
    targets: tuple[int, ...]

    def __post_init__(self):
        ops = tuple(np.asarray(m, dtype=complex) for m in self.operators)
        object.__setattr__(self, "operators", ops)
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        k = len(self.targets)
        if len(set(self.targets)) != k:
            raise ValueError(f"duplicate targets: {self.targets}")
        dim = 2**k
        if not ops:
            raise ValueError("channel needs at least one Kraus operator")
        for m in ops:
            if m.shape != (dim, dim):
                raise ValueError(f"Kraus operator shape {m.shape}, expected {(dim, dim)}")
        total = sum(m.conj().T @ m for m in ops)
        dev = np.max(np.abs(total - np.eye(dim)))
        if dev > 1e-12:
            raise ValueError(f"Kraus completeness violated (|sum M+M - I| = {dev:.3g})")


class DensityMatrix:
    """2^n x 2^n Hermitian, unit-trace, PSD state of an n-qubit register.

    Trace and Hermiticity are checked on construction; positive
    semidefiniteness costs an eigendecomposition and is only checked by
    :meth:`validate`.
    """

    __slots__ = ("n_qubits", "data")

    def __init__(self, n_qubits: int, data: np.ndarray):
        if not 1 <= n_qubits <= MAX_QUBITS:
            raise ValueError(f"n_qubits must be in 1..{MAX_QUBITS}, got {n_qubits}")
        data = np.asarray(data, dtype=complex)
        dim = 2**n_qubits
        if data.shape != (dim, dim):
            raise ValueError(f"state shape {data.shape}, expected {(dim, dim)}")
        if abs(np.trace(data) - 1.0) > TRACE_TOL:
            raise ValueError(f"trace {np.trace(data)} is not 1 within {TRACE_TOL}")
        if np.max(np.abs(data - data.conj().T)) > HERMITICITY_TOL:
            raise ValueError("state is not Hermitian")
        data.setflags(write=False)
        self.n_qubits = n_qubits
        self.data = data

    @classmethod
    def computational_basis(cls, n_qubits: int, outcome: int | str) -> "DensityMatrix":
        """Pure state |outcome><outcome|; outcome as index or bitstring."""
        if isinstance(outcome, str):
            if len(outcome) != n_qubits:
                raise ValueError(f"bitstring {outcome!r} does not match {n_qubits} qubits")
            outcome = bitstring_to_index(outcome)
        dim = 2**n_qubits
        if not 0 <= outcome < dim:
            raise ValueError(f"outcome {outcome} out of range for {n_qubits} qubits")
        data = np.zeros((dim, dim), dtype=complex)
        data[outcome, outcome] = 1.0
        return cls(n_qubits, data)

    @classmethod
    def maximally_mixed(cls, n_qubits: int) -> "DensityMatrix":
        dim = 2**n_qubits
        return cls(n_qubits, np.eye(dim, dtype=complex) / dim)

    def validate(self) -> None:
        """Full invariant check including the PSD eigenvalue test."""
        min_eig = float(np.linalg.eigvalsh(self.data)[0])
        if min_eig < -PSD_TOL:
            raise ValueError(f"state is not PSD (min eigenvalue {min_eig:.3g})")


def pauli_matrix(label: str) -> UnitaryGate:
    """Single-qubit Pauli gate for label in {I, X, Y, Z}."""
    if label not in PAULI:
        raise ValueError(f"invalid Pauli label {label!r}")
    return UnitaryGate(PAULI[label], (0,))


def _embed(op: np.ndarray, targets: tuple[int, ...], n_qubits: int) -> np.ndarray:
    """Expand an operator on `targets` to the full register (identity elsewhere)."""
    k = len(targets)
    if any(not 0 <= t < n_qubits for t in targets):
        raise ValueError(f"targets {targets} out of range for {n_qubits} qubits")
    rest = [q for q in range(n_qubits) if q not in targets]
    perm = list(targets) + rest
    inv = np.argsort(perm)
    full = np.kron(op, np.eye(2 ** (n_qubits - k), dtype=complex))
    tensor = full.reshape((2,) * (2 * n_qubits))
    axes = list(inv) + [n_qubits + a for a in inv]
    return tensor.transpose(axes).reshape(2**n_qubits, 2**n_qubits)


def apply_unitary(rho: DensityMatrix, gate: UnitaryGate) -> DensityMatrix:
    """G rho G+ with the gate embedded on its targets."""
    u = _embed(gate.matrix, gate.targets, rho.n_qubits)
    return DensityMatrix(rho.n_qubits, u @ rho.data @ u.conj().T)


def apply_kraus(rho: DensityMatrix, channel: KrausChannel) -> DensityMatrix:
    """sum_j M_j rho M_j+ with operators embedded on the channel targets."""
    out = np.zeros_like(rho.data)
    for m in channel.operators:
        full = _embed(m, channel.targets, rho.n_qubits)
        out += full @ rho.data @ full.conj().T
    return DensityMatrix(rho.n_qubits, out)


def computational_distribution(rho: DensityMatrix) -> np.ndarray:
    """Outcome probabilities p_i = <i|rho|i>, clamped to [0, 1].

    Small negative diagonal entries (floating-point dust above -PSD_TOL)
    are clamped to zero; anything more negative is a real bug and raises.
    """
    p = np.real(np.diag(rho.data)).copy()
    if p.min() < -PSD_TOL:
        raise ValueError(f"diagonal entry {p.min():.3g} below -{PSD_TOL}")
    np.clip(p, 0.0, 1.0, out=p)
    return p


@dataclass(frozen=True)
class CountsTable:
    """Aggregated measurement outcomes of one circuit execution batch.

    Keys are n-character bitstrings (qubit 0 leftmost); only outcomes with
    nonzero counts are stored, ordered by outcome index.
    """

    n_qubits: int
    entries: dict[str, int]
    total_shots: int

    def __post_init__(self):
        for key, count in self.entries.items():
            if len(key) != self.n_qubits or any(c not in "01" for c in key):
                raise ValueError(f"invalid bitstring key {key!r}")
            if count < 0:
                raise ValueError(f"negative count for {key!r}")
        if sum(self.entries.values()) != self.total_shots:
            raise ValueError("counts do not sum to total_shots")

    @classmethod
    def from_vector(cls, counts: np.ndarray, n_qubits: int) -> "CountsTable":
        counts = np.asarray(counts)
        if counts.shape != (2**n_qubits,):
            raise ValueError(f"need 2^{n_qubits} counts, got shape {counts.shape}")
        entries = {
            index_to_bitstring(i, n_qubits): int(c)
            for i, c in enumerate(counts)
            if c
        }
        return cls(n_qubits, entries, int(counts.sum()))

    def to_vector(self) -> np.ndarray:
        vec = np.zeros(2**self.n_qubits, dtype=np.int64)
        for key, count in self.entries.items():
            vec[bitstring_to_index(key)] = count
        return vec

    def marginal(self, qubits: tuple[int, ...]) -> np.ndarray:
        """Counts aggregated onto a qubit subset.

        Output index orders the kept qubits as given, first qubit most
        significant (matching the global bitstring convention).
        """
        return marginal_vector(self.to_vector(), self.n_qubits, qubits)


def marginal_vector(vec: np.ndarray, n_qubits: int, qubits: tuple[int, ...]) -> np.ndarray:
    """Marginalize a per-outcome vector (counts or probabilities) onto `qubits`."""
    qubits = tuple(qubits)
    if len(set(qubits)) != len(qubits) or any(not 0 <= q < n_qubits for q in qubits):
        raise ValueError(f"invalid qubit subset {qubits}")
    m = len(qubits)
    bits = outcome_bits(n_qubits)
    sub_index = np.zeros(2**n_qubits, dtype=np.int64)
    for pos, q in enumerate(qubits):
        sub_index += bits[:, q] << (m - 1 - pos)
    out = np.zeros(2**m, dtype=np.asarray(vec).dtype)
    np.add.at(out, sub_index, vec)
    return out


def sample_counts(probs: np.ndarray, shots: int, rng: np.random.Generator) -> CountsTable:
    """Multinomial draw from a probability vector; deterministic given `rng`."""
    probs = np.asarray(probs, dtype=float)
    n_qubits = int(round(np.log2(probs.size)))
    if 2**n_qubits != probs.size:
        raise ValueError(f"probability vector length {probs.size} is not a power of 2")
    if shots < 0:
        raise ValueError("shots must be >= 0")
    if probs.min() < -1e-12:
        raise ValueError(f"negative probability {probs.min():.3g}")
    if abs(probs.sum() - 1.0) > 1e-9:
        raise ValueError(f"probabilities sum to {probs.sum()}, not 1 within 1e-9")
    if shots == 0:
        return CountsTable(n_qubits, {}, 0)
    p = np.clip(probs, 0.0, None)
    p /= p.sum()
    counts = rng.multinomial(shots, p)
    return CountsTable.from_vector(counts, n_qubits)


def qubit_expectation(source: CountsTable | np.ndarray, q: int) -> float:
    """Mean of the single-qubit +-1 observable on qubit q.

    Accepts a CountsTable (empirical frequencies) or an exact probability
    vector. +1 corresponds to bit 0.
    """
    if isinstance(source, CountsTable):
        if source.total_shots == 0:
            raise ValueError("expectation undefined for an empty counts table")
        vec = source.to_vector().astype(float)
        n_qubits = source.n_qubits
        total = source.total_shots
    else:
        vec = np.asarray(source, dtype=float)
        n_qubits = int(round(np.log2(vec.size)))
        if 2**n_qubits != vec.size:
            raise ValueError(f"vector length {vec.size} is not a power of 2")
        total = vec.sum()
        if abs(total - 1.0) > 1e-9:
            raise ValueError("probability vector does not sum to 1")
    if not 0 <= q < n_qubits:
        raise ValueError(f"qubit {q} out of range for {n_qubits} qubits")
    signs = observable_signs(n_qubits)[:, q]
    return float(vec @ signs / total)
