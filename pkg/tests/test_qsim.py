import numpy as np
import pytest

from pecsim.qsim import (
    CountsTable,
    DensityMatrix,
    KrausChannel,
    UnitaryGate,
    HADAMARD,
    PAULI,
    apply_kraus,
    apply_unitary,
    bitstring_to_index,
    computational_distribution,
    index_to_bitstring,
    marginal_vector,
    pauli_matrix,
    qubit_expectation,
    sample_counts,
)


def random_state(n, rng):
    dim = 2**n
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    return DensityMatrix(n, rho / np.trace(rho))


def random_unitary(dim, rng):
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_channel(dim, rng):
    # two Kraus operators from the columns of a random isometry
    g = rng.normal(size=(2 * dim, dim)) + 1j * rng.normal(size=(2 * dim, dim))
    q, _ = np.linalg.qr(g)
    return q[:dim], q[dim:]


class TestPauli:
    def test_identity(self):
        assert np.array_equal(pauli_matrix("I").matrix, np.eye(2))

    def test_x(self):
        assert np.array_equal(pauli_matrix("X").matrix, [[0, 1], [1, 0]])

    def test_involution(self):
        for label in "IXYZ":
            m = pauli_matrix(label).matrix
            assert np.allclose(m @ m, np.eye(2))

    def test_invalid_label(self):
        with pytest.raises(ValueError):
            pauli_matrix("H")


class TestApplyUnitary:
    def test_identity_layer(self):
        rng = np.random.default_rng(0)
        rho = random_state(3, rng)
        out = apply_unitary(rho, UnitaryGate(np.eye(2), (1,)))
        assert np.allclose(out.data, rho.data, atol=1e-14)

    def test_bit_flip(self):
        rho = DensityMatrix.computational_basis(3, "000")
        out = apply_unitary(rho, UnitaryGate(PAULI["X"], (1,)))
        assert computational_distribution(out)[bitstring_to_index("010")] == pytest.approx(1.0)

    def test_hadamard_involution(self):
        rng = np.random.default_rng(1)
        rho = random_state(2, rng)
        out = apply_unitary(apply_unitary(rho, UnitaryGate(HADAMARD, (0,))), UnitaryGate(HADAMARD, (0,)))
        assert np.max(np.abs(out.data - rho.data)) < 1e-12

    def test_target_out_of_range(self):
        rho = DensityMatrix.computational_basis(2, 0)
        with pytest.raises(ValueError):
            apply_unitary(rho, UnitaryGate(PAULI["X"], (2,)))

    def test_duplicate_targets_rejected(self):
        with pytest.raises(ValueError):
            UnitaryGate(np.eye(4), (0, 0))

    def test_non_unitary_rejected(self):
        with pytest.raises(ValueError):
            UnitaryGate(np.array([[1, 0], [0, 2]]), (0,))


class TestApplyKraus:
    def test_single_identity_operator(self):
        rng = np.random.default_rng(2)
        rho = random_state(2, rng)
        ch = KrausChannel((np.eye(2),), (0,))
        assert np.allclose(apply_kraus(rho, ch).data, rho.data, atol=1e-14)

    def test_spam_noiseless_limit(self):
        from pecsim.noise import spam_channel

        rng = np.random.default_rng(3)
        rho = random_state(2, rng)
        out = apply_kraus(rho, spam_channel(1.0, qubit=1))
        assert np.max(np.abs(out.data - rho.data)) < 1e-14

    def test_spam_on_ground_state(self):
        # direct Kraus evaluation of the bit-flip pair at f = 0.9
        from pecsim.noise import spam_channel

        rho = DensityMatrix.computational_basis(1, 0)
        out = apply_kraus(rho, spam_channel(0.9))
        assert np.allclose(np.diag(out.data), [0.9, 0.1], atol=1e-15)

    def test_incomplete_channel_rejected(self):
        with pytest.raises(ValueError):
            KrausChannel((0.5 * np.eye(2),), (0,))

    def test_trace_preserved(self):
        rng = np.random.default_rng(4)
        rho = random_state(3, rng)
        m0, m1 = random_channel(4, rng)
        out = apply_kraus(rho, KrausChannel((m0, m1), (0, 2)))
        assert abs(np.trace(out.data) - 1.0) < 1e-12


class TestDistribution:
    def test_pure_basis_state(self):
        rho = DensityMatrix.computational_basis(5, "00010")
        dist = computational_distribution(rho)
        assert dist[bitstring_to_index("00010")] == 1.0
        assert dist.sum() == pytest.approx(1.0, abs=1e-12)

    def test_maximally_mixed(self):
        dist = computational_distribution(DensityMatrix.maximally_mixed(1))
        assert np.allclose(dist, [0.5, 0.5])

    def test_diagonal_readout(self):
        rho = DensityMatrix(1, np.diag([0.9, 0.1]).astype(complex))
        assert np.allclose(computational_distribution(rho), [0.9, 0.1])

    def test_random_states_normalized(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            dist = computational_distribution(random_state(3, rng))
            assert abs(dist.sum() - 1.0) < 1e-12
            assert dist.min() >= 0.0


class TestInvariantPreservation:
    def test_thousand_random_applications(self):
        rng = np.random.default_rng(6)
        rho = random_state(3, rng)
        for step in range(1000):
            if rng.random() < 0.5:
                k = rng.integers(1, 3)
                targets = tuple(rng.choice(3, size=k, replace=False))
                rho = apply_unitary(rho, UnitaryGate(random_unitary(2**k, rng), targets))
            else:
                k = rng.integers(1, 3)
                targets = tuple(rng.choice(3, size=k, replace=False))
                m0, m1 = random_channel(2**k, rng)
                rho = apply_kraus(rho, KrausChannel((m0, m1), targets))
            # trace/hermiticity are checked by the constructor on every step
            if step % 100 == 0:
                rho.validate()
        rho.validate()


class TestSampleCounts:
    def test_all_mass_on_one_outcome(self):
        table = sample_counts(np.array([1.0, 0.0]), 100, np.random.default_rng(0))
        assert table.entries == {"0": 100}

    def test_zero_shots(self):
        table = sample_counts(np.array([0.5, 0.5]), 0, np.random.default_rng(0))
        assert table.entries == {} and table.total_shots == 0

    def test_reproducible(self):
        probs = np.array([0.1, 0.2, 0.3, 0.4])
        t1 = sample_counts(probs, 5000, np.random.default_rng(42))
        t2 = sample_counts(probs, 5000, np.random.default_rng(42))
        assert t1 == t2

    def test_binomial_moments(self):
        # each bin within 5 sigma of shots/2, sigma = sqrt(shots/4)
        shots = 10**6
        table = sample_counts(np.array([0.5, 0.5]), shots, np.random.default_rng(7))
        sigma = np.sqrt(shots * 0.25)
        for count in table.entries.values():
            assert abs(count - shots / 2) < 5 * sigma

    def test_negative_probability_rejected(self):
        with pytest.raises(ValueError):
            sample_counts(np.array([1.1, -0.1]), 10, np.random.default_rng(0))

    def test_bad_sum_rejected(self):
        with pytest.raises(ValueError):
            sample_counts(np.array([0.7, 0.2]), 10, np.random.default_rng(0))


class TestQubitExpectation:
    def test_counts_minus_one(self):
        table = CountsTable(5, {"00010": 100}, 100)
        assert qubit_expectation(table, 3) == -1.0

    def test_counts_plus_one(self):
        table = CountsTable(5, {"00010": 100}, 100)
        assert qubit_expectation(table, 0) == 1.0

    def test_uniform_probs(self):
        assert qubit_expectation(np.array([0.5, 0.5]), 0) == 0.0

    def test_empty_counts(self):
        with pytest.raises(ValueError):
            qubit_expectation(CountsTable(1, {}, 0), 0)

    def test_matches_operator_contraction(self):
        # independent oracle: Tr[O_q rho] with O_q = Z embedded on qubit q
        rng = np.random.default_rng(8)
        for _ in range(10):
            rho = random_state(3, rng)
            dist = computational_distribution(rho)
            q = int(rng.integers(3))
            ops = [np.eye(2)] * 3
            ops[q] = PAULI["Z"]
            obs = np.kron(np.kron(ops[0], ops[1]), ops[2])
            expected = float(np.real(np.trace(obs @ rho.data)))
            assert qubit_expectation(dist, q) == pytest.approx(expected, abs=1e-12)


class TestCountsTable:
    def test_vector_round_trip(self):
        vec = np.array([3, 0, 5, 2])
        table = CountsTable.from_vector(vec, 2)
        assert np.array_equal(table.to_vector(), vec)
        assert table.total_shots == 10

    def test_invalid_key_rejected(self):
        with pytest.raises(ValueError):
            CountsTable(2, {"0": 5}, 5)

    def test_sum_mismatch_rejected(self):
        with pytest.raises(ValueError):
            CountsTable(1, {"0": 5}, 6)

    def test_marginal(self):
        table = CountsTable(3, {"010": 4, "011": 6, "110": 1}, 11)
        # keep qubits (0, 2): bit of qubit 0 is most significant
        assert np.array_equal(table.marginal((0, 2)), [4, 6, 1, 0])

    def test_marginal_vector_probabilities(self):
        probs = np.array([0.1, 0.2, 0.3, 0.4])
        assert np.allclose(marginal_vector(probs, 2, (1,)), [0.4, 0.6])
