"""Quasi-probability mitigation coefficients and estimators.

Coefficients invert the noise channels: the readout (SPAM) pair solves a
four-term linear system in closed form, and the CNOT coefficients solve
the 16-term system  sum_k eta_k T(G~_k) = T(CNOT)  in the Pauli-transfer
representation, where each G~_k is a Pauli-pair conjugation composed with
the depolarizing channel and the CNOT. The numeric solve is the engine's
source of truth; the exact closed form (a tensor product of single-qubit
depolarizing inverses) is kept as an independent cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import CircuitSpec
from .errors import SingularParameterError
from .noise import NoiseParams, cnot_depol_weights
from .qsim import PAULI

_PAULI2 = tuple(
    np.kron(PAULI[a], PAULI[b]) for a in "IXYZ" for b in "IXYZ"
)  # index 4a+b, control factor first
_CNOT_MAT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)

RCOND_MIN = 1e-12


def _ptm(apply_channel) -> np.ndarray:
    """Pauli-transfer matrix T[i,j] = Tr[P_i channel(P_j)] / 4 of a 2-qubit map."""
    t = np.empty((16, 16))
    for j, pj in enumerate(_PAULI2):
        out = apply_channel(pj)
        for i, pi in enumerate(_PAULI2):
            t[i, j] = np.real(np.trace(pi @ out)) / 4.0
    return t


def _pauli_pair_ptms() -> tuple[np.ndarray, ...]:
    return tuple(_ptm(lambda r, q=q: q @ r @ q.conj().T) for q in _PAULI2)


_D_PTMS = _pauli_pair_ptms()
_C_PTM = _ptm(lambda r: _CNOT_MAT @ r @ _CNOT_MAT.conj().T)


@dataclass(frozen=True)
class SpamPec:
    """Signed coefficients inverting one qubit's readout channel."""

    eta0: float
    eta1: float
    gamma: float


def spam_coeffs(f: float) -> SpamPec:
    """eta0 = f/(2f-1), eta1 = -(1-f)/(2f-1), gamma = 1/(2f-1)."""
    if f <= 0.5 + 1e-6:
        raise SingularParameterError(
            f"spam fidelity {f} too close to 0.5; coefficients diverge"
        )
    if f > 1.0:
        raise ValueError(f"spam fidelity {f} above 1")
    denom = 2.0 * f - 1.0
    return SpamPec(f / denom, -(1.0 - f) / denom, 1.0 / denom)


@dataclass(frozen=True)
class CnotPec:
    """Signed coefficients over the 16 Pauli-pair decorated CNOT circuits."""

    eta: np.ndarray
    gamma: float

    def __post_init__(self):
        eta = np.asarray(self.eta, dtype=float)
        if eta.shape != (16,):
            raise ValueError(f"need 16 coefficients, got shape {eta.shape}")
        if abs(eta.sum() - 1.0) > 1e-10:
            raise ValueError(f"coefficients sum to {eta.sum()}, not 1 within 1e-10")
        eta.setflags(write=False)
        object.__setattr__(self, "eta", eta)


def cnot_coeffs_numeric(xc: float, xt: float) -> CnotPec:
    """Solve the Pauli-transfer linear system; residual must be <= 1e-10."""
    weights = cnot_depol_weights(xc, xt)
    # The depolarizing channel is a Pauli mixture, so its PTM is the same
    # mixture of the Pauli-pair PTMs.
    e_ptm = np.einsum("k,kij->ij", weights, np.stack(_D_PTMS))
    columns = np.stack([(d @ e_ptm @ _C_PTM).ravel() for d in _D_PTMS], axis=1)
    target = _C_PTM.ravel()
    eta, _, _, sv = np.linalg.lstsq(columns, target, rcond=None)
    if sv[-1] / sv[0] < RCOND_MIN:
        raise SingularParameterError(
            f"coefficient system singular at (xc={xc}, xt={xt})"
        )
    residual = float(np.max(np.abs(columns @ eta - target)))
    if residual > 1e-10:
        raise SingularParameterError(
            f"coefficient solve residual {residual:.3g} exceeds 1e-10"
        )
    return CnotPec(eta, float(np.abs(eta).sum()))


def _depol_inverse_pair(x: float) -> tuple[float, float]:
    """(identity, per-Pauli) coefficients inverting a single-qubit
    depolarizing channel with rate x."""
    mu = 1.0 - 4.0 * x / 3.0
    if abs(mu) < 1e-9:
        raise SingularParameterError(f"depolarizing rate {x} is not invertible")
    return (mu + 3.0) / (4.0 * mu), (mu - 1.0) / (4.0 * mu)


def cnot_coeffs_closed_form(xc: float, xt: float) -> CnotPec:
    """Exact closed form: the channel factors into independent single-qubit
    depolarizing maps, so its inverse is the tensor product of the
    single-qubit inverses. Agrees with the numeric solve to rounding."""
    ac, bc = _depol_inverse_pair(xc)
    at, bt = _depol_inverse_pair(xt)
    wc = np.array([ac, bc, bc, bc])
    wt = np.array([at, bt, bt, bt])
    eta = np.outer(wc, wt).ravel()
    return CnotPec(eta, float(np.abs(eta).sum()))


def cnot_coeffs_weight_ansatz(xc: float, xt: float) -> np.ndarray:
    """Approximate ansatz with error coefficients proportional to channel
    weights. Exact only at the noiseless point; its coefficients do not sum
    to 1 elsewhere, so it is returned as a bare array for diagnostics and
    never feeds the engine."""
    c1 = xc + xt - xc * xt - 1.0
    c0 = 3.0 / ((xt * (1.0 - xc)) ** 2 + (xc * (1.0 - xt)) ** 2 - 3.0 * c1**2)
    eta = np.full(16, c0 * xc * xt / 9.0)
    eta[0] = c0 * c1
    eta[[1, 2, 3]] = c0 * xt * (1.0 - xc) / 3.0
    eta[[4, 8, 12]] = c0 * xc * (1.0 - xt) / 3.0
    return eta


@dataclass(frozen=True)
class QuasiProbabilityDistribution:
    """Signed decomposition over all basis circuits of one target circuit.

    weights Q_k = |eta_k| / gamma form a probability distribution; signs
    carry sgn(eta_k) with 0 kept for exact zeros.
    """

    eta: np.ndarray
    gamma: float

    def __post_init__(self):
        eta = np.asarray(self.eta, dtype=float)
        if abs(eta.sum() - 1.0) > 1e-9:
            raise ValueError(f"eta sums to {eta.sum()}, not 1 within 1e-9")
        if self.gamma < 1.0 - 1e-9:
            raise ValueError(f"gamma {self.gamma} below 1")
        if abs(np.abs(eta).sum() - self.gamma) > 1e-9 * max(1.0, self.gamma):
            raise ValueError("gamma does not match sum |eta|")
        eta.setflags(write=False)
        object.__setattr__(self, "eta", eta)

    @property
    def size(self) -> int:
        return self.eta.size

    @property
    def weights(self) -> np.ndarray:
        return np.abs(self.eta) / self.gamma

    @property
    def signs(self) -> np.ndarray:
        return np.sign(self.eta)


def composite_qpd(params: NoiseParams, circuit: CircuitSpec) -> QuasiProbabilityDistribution:
    """Cartesian product of per-CNOT and per-qubit coefficient factors.

    Index layout follows the basis-circuit encoding of :mod:`pecsim.circuit`:
    eta[spam_mask * 16^m + code] multiplies the CNOT factors selected by
    `code` and, for each qubit q, the readout factor selected by bit q of
    `spam_mask`. gamma is the product of the factor gammas.
    """
    if params.n_qubits != circuit.n_qubits:
        raise ValueError("parameter/circuit qubit count mismatch")
    n = circuit.n_qubits
    m = circuit.n_cnots

    cnot = cnot_coeffs_numeric(params.xc, params.xt)
    spams = [spam_coeffs(f) for f in params.spam]

    eta_code = np.ones(16**m)
    code_idx = np.arange(16**m)
    for j in range(m):
        digits = (code_idx // 16 ** (m - 1 - j)) % 16
        eta_code *= cnot.eta[digits]

    eta_mask = np.ones(2**n)
    mask_idx = np.arange(2**n)
    for q in range(n):
        bit = (mask_idx >> q) & 1
        eta_mask *= np.where(bit, spams[q].eta1, spams[q].eta0)

    eta = np.kron(eta_mask, eta_code)
    gamma = cnot.gamma**m
    for s in spams:
        gamma *= s.gamma
    return QuasiProbabilityDistribution(eta, float(gamma))


@dataclass(frozen=True)
class PecEstimate:
    """Mitigated expectation values, from full summation or sampling."""

    values: np.ndarray
    mode: str
    n_samples: int | None = None
    std_err: np.ndarray | None = None


def full_sum_estimate(
    expectations: np.ndarray, qpd: QuasiProbabilityDistribution
) -> PecEstimate:
    """Deterministic weighted sum  sum_k eta_k <O>_k  over all basis circuits.

    `expectations` has one row per basis circuit; columns (if any) are
    separate observables.
    """
    expectations = np.asarray(expectations, dtype=float)
    if expectations.shape[0] != qpd.size:
        raise ValueError(
            f"{expectations.shape[0]} expectation rows for a size-{qpd.size} decomposition"
        )
    return PecEstimate(np.atleast_1d(qpd.eta @ expectations), "full-sum")


def monte_carlo_estimate(
    qpd: QuasiProbabilityDistribution,
    executor,
    n_samples: int,
    rng: np.random.Generator,
) -> PecEstimate:
    """Importance-sampled estimate: draw K ~ Q, average gamma * sgn(eta_K) * <O>_K.

    `executor` maps a basis index to its (scalar or vector) expectation;
    a precomputed array of per-index expectations is accepted directly.
    Unbiased for the full-sum value.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    ks = rng.choice(qpd.size, size=n_samples, p=qpd.weights)
    signs = qpd.signs
    if isinstance(executor, np.ndarray):
        table = np.asarray(executor, dtype=float)
        if table.ndim == 1:
            table = table[:, None]
        if table.shape[0] != qpd.size:
            raise ValueError("expectation table does not cover the decomposition")
        draws = qpd.gamma * signs[ks, None] * table[ks]
    else:
        draws = np.stack(
            [qpd.gamma * signs[k] * np.atleast_1d(np.asarray(executor(k), dtype=float)) for k in ks]
        )
    mean = draws.mean(axis=0)
    std_err = draws.std(axis=0, ddof=1) / np.sqrt(n_samples) if n_samples > 1 else np.zeros_like(mean)
    return PecEstimate(mean, "monte-carlo", n_samples=n_samples, std_err=std_err)
