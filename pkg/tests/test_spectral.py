import numpy as np
import pytest

from nandwalk.spectral import (
    PhaseEstimate,
    SpectralError,
    StateVector,
    eig_hermitian,
    eig_unitary,
    evolve,
    qpe_simulate,
    spectral_overlap_profile,
)

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]])


def random_unitary(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(a)
    return q * (np.diag(r) / np.abs(np.diag(r)))


class TestEigHermitian:
    def test_pauli_x(self):
        d = eig_hermitian(PAULI_X)
        assert np.allclose(d.eigenvalues.real, [-1.0, 1.0])

    def test_zero_matrix(self):
        d = eig_hermitian(np.zeros((3, 3)))
        assert np.allclose(d.eigenvalues, 0.0)

    def test_path3(self):
        H = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=float)
        d = eig_hermitian(H)
        # characteristic polynomial lambda^3 - 2 lambda
        assert np.allclose(d.eigenvalues.real, [-np.sqrt(2), 0.0, np.sqrt(2)])

    def test_rejects_non_hermitian(self):
        with pytest.raises(SpectralError, match="Hermitian"):
            eig_hermitian(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_reconstruction(self):
        rng = np.random.default_rng(5)
        A = rng.normal(size=(12, 12))
        H = A + A.T
        d = eig_hermitian(H)
        recon = (d.eigenvectors * d.eigenvalues) @ d.eigenvectors.conj().T
        assert np.max(np.abs(recon - H)) <= 1e-7 * np.max(np.abs(d.eigenvalues))


class TestEigUnitary:
    def test_identity(self):
        d = eig_unitary(np.eye(4))
        assert np.allclose(d.eigenvalues, 1.0)

    def test_diag_phases(self):
        d = eig_unitary(np.diag([1.0, -1.0]))
        assert sorted(np.angle(d.eigenvalues)) == pytest.approx([0.0, np.pi])

    def test_real_spectrum_conjugation_closed(self):
        rng = np.random.default_rng(7)
        a = rng.normal(size=(8, 8))
        q, _ = np.linalg.qr(a)
        lam = eig_unitary(q).eigenvalues
        for mu in lam:
            assert np.min(np.abs(lam - np.conj(mu))) < 1e-9

    def test_orthonormal_in_degenerate_clusters(self):
        U = random_unitary(6, 3)
        U2 = np.kron(np.eye(2), U)  # every eigenvalue doubly degenerate
        d = eig_unitary(U2)
        gram = d.eigenvectors.conj().T @ d.eigenvectors
        assert np.max(np.abs(gram - np.eye(12))) < 1e-8

    def test_rejects_non_unitary(self):
        with pytest.raises(SpectralError, match="unitary"):
            eig_unitary(np.eye(3) * 1.1)


class TestEvolve:
    def test_zero_time(self):
        psi = np.array([0.6, 0.8], dtype=complex)
        out = evolve(PAULI_X, 0.0, psi)
        assert np.allclose(out, psi)

    def test_pauli_x_half_period(self):
        # exp(-i pi X) = -I
        out = evolve(PAULI_X, np.pi, np.array([1.0, 0.0]))
        assert np.allclose(out, [-1.0, 0.0], atol=1e-12)

    def test_norm_preserved(self):
        rng = np.random.default_rng(11)
        A = rng.normal(size=(9, 9))
        H = A + A.T
        psi = rng.normal(size=9) + 1j * rng.normal(size=9)
        out = evolve(H, 2.7, psi)
        assert np.linalg.norm(out) == pytest.approx(np.linalg.norm(psi), abs=1e-8)

    def test_semigroup(self):
        rng = np.random.default_rng(13)
        A = rng.normal(size=(7, 7))
        H = A + A.T
        psi = rng.normal(size=7) + 1j * rng.normal(size=7)
        once = evolve(H, 0.9 + 1.4, psi)
        twice = evolve(H, 0.9, evolve(H, 1.4, psi))
        assert np.max(np.abs(once - twice)) < 1e-7

    def test_state_vector_round_trip(self):
        sv = StateVector(np.array([1.0, 0.0]), basis="tag")
        out = evolve(PAULI_X, 0.3, sv)
        assert isinstance(out, StateVector)
        assert out.basis == "tag"

    def test_dimension_mismatch(self):
        with pytest.raises(SpectralError):
            evolve(PAULI_X, 1.0, np.ones(3))


class TestOverlapProfile:
    def test_eigenvector_is_pure(self):
        d = eig_hermitian(PAULI_X)
        psi = d.eigenvectors[:, 0]
        profile = spectral_overlap_profile(d, psi)
        weights = {round(val.real, 6): w for val, w in profile}
        assert weights[-1.0] == pytest.approx(1.0)
        assert weights.get(1.0, 0.0) <= 1e-10

    def test_weights_sum_to_one(self):
        rng = np.random.default_rng(17)
        A = rng.normal(size=(10, 10))
        H = A + A.T
        psi = rng.normal(size=10) + 1j * rng.normal(size=10)
        psi /= np.linalg.norm(psi)
        profile = spectral_overlap_profile(eig_hermitian(H), psi)
        assert sum(w for _, w in profile) == pytest.approx(1.0, abs=1e-8)

    def test_degenerate_merging(self):
        H = np.diag([1.0, 1.0, 2.0])
        psi = np.array([1.0, 1.0, 0.0]) / np.sqrt(2)
        profile = spectral_overlap_profile(eig_hermitian(H), psi)
        assert len(profile) == 2
        assert profile[0][1] == pytest.approx(1.0)

    def test_requires_unit_state(self):
        with pytest.raises(SpectralError, match="unit"):
            spectral_overlap_profile(eig_hermitian(PAULI_X), np.array([2.0, 0.0]))


class TestQpe:
    def test_exact_register_phase(self):
        # eigenphase 2 pi k / 2^b lands on its register value with certainty
        U = np.diag([np.exp(2j * np.pi * 3 / 8), 1.0])
        psi = np.array([1.0, 0.0], dtype=complex)
        est = qpe_simulate(U, psi, ancilla_bits=3, shots=200, seed=1)
        assert est.samples == ((2 * np.pi * 3 / 8, 200),)

    def test_identity_all_zero(self):
        est = qpe_simulate(np.eye(3), np.array([1, 0, 0], dtype=complex), 5, 100, seed=2)
        assert est.modal_phase() == 0.0
        assert est.samples[0][1] == 100

    def test_mixture_frequencies(self):
        U = np.diag([1.0, np.exp(1j * np.pi / 2)])
        psi = np.array([np.sqrt(0.75), np.sqrt(0.25)], dtype=complex)
        shots = 10_000
        est = qpe_simulate(U, psi, ancilla_bits=6, shots=shots, seed=3)
        freq = {round(p, 6): m / shots for p, m in est.samples}
        sigma = np.sqrt(0.75 * 0.25 / shots)
        assert abs(freq[0.0] - 0.75) <= 3 * sigma
        assert abs(freq[round(np.pi / 2, 6)] - 0.25) <= 3 * sigma

    def test_concentration_at_12_bits(self):
        # the kernel has power-law tails, so concentration is about the modal
        # outcome and the bulk of the shots, not every sample
        U = random_unitary(5, 23)
        d = eig_unitary(U)
        bin_width = 2 * np.pi / 2 ** 12
        for k in range(5):
            psi = d.eigenvectors[:, k]
            est = qpe_simulate(U, psi, ancilla_bits=12, shots=400, seed=k, decomposition=d)
            true_phase = np.angle(d.eigenvalues[k])

            def dist(phase):
                return abs((phase - true_phase + np.pi) % (2 * np.pi) - np.pi)

            assert dist(est.modal_phase()) <= bin_width + 1e-12
            close = sum(m for p, m in est.samples if dist(p) <= bin_width + 1e-12)
            assert close / est.shots >= 0.7

    def test_deterministic_given_seed(self):
        U = random_unitary(4, 29)
        psi = np.zeros(4, dtype=complex)
        psi[0] = 1.0
        a = qpe_simulate(U, psi, 8, 500, seed=7)
        b = qpe_simulate(U, psi, 8, 500, seed=7)
        assert a == b

    def test_multiplicities_sum(self):
        with pytest.raises(SpectralError):
            PhaseEstimate(((0.0, 3),), ancilla_bits=2, shots=4, seed=0)

    def test_parameter_validation(self):
        with pytest.raises(SpectralError):
            qpe_simulate(np.eye(2), np.array([1, 0], dtype=complex), 0, 10, seed=0)
        with pytest.raises(SpectralError):
            qpe_simulate(np.eye(2), np.array([1, 0], dtype=complex), 3, 0, seed=0)
