"""Dense complex linear algebra for the walk simulations.

Eigendecomposition of Hermitian and unitary operators, exact time evolution
through the eigenbasis, overlap profiles, and a simulated phase-estimation
sampler drawing from the exact textbook outcome distribution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

UNIT_NORM_TOL = 1e-9


class SpectralError(ValueError):
    """Input violates an operator precondition."""


@dataclass(frozen=True)
class StateVector:
    """Complex amplitudes tagged with the basis object they index.

    ``basis`` is the graph or edge-state space the amplitudes refer to;
    operations that combine states check the tag by identity.
    """

    amplitudes: np.ndarray
    basis: object | None = None

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.ndim != 1:
            raise SpectralError("state amplitudes must be a vector")
        if not np.all(np.isfinite(amps.view(np.float64))):
            raise SpectralError("state amplitudes must be finite")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def require_unit(self) -> None:
        if abs(self.norm() - 1.0) > UNIT_NORM_TOL:
            raise SpectralError(f"state is not unit norm: |psi| = {self.norm()}")


def _as_amplitudes(psi) -> np.ndarray:
    if isinstance(psi, StateVector):
        return psi.amplitudes
    return np.asarray(psi, dtype=np.complex128)


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues with orthonormal eigenvector columns and a residual bound."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residual: float

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]


def _finish_decomposition(A, eigenvalues, vectors) -> SpectralDecomposition:
    residual = float(
        np.max(np.linalg.norm(A @ vectors - vectors * eigenvalues, axis=0))
    )
    scale = max(float(np.max(np.abs(eigenvalues))), 1e-12)
    if residual > 1e-8 * scale:
        raise SpectralError(f"eigendecomposition residual {residual} too large")
    gram = vectors.conj().T @ vectors
    gram_err = float(np.max(np.abs(gram - np.eye(vectors.shape[1]))))
    if gram_err > 1e-8:
        raise SpectralError(f"eigenvectors are not orthonormal (deviation {gram_err})")
    return SpectralDecomposition(eigenvalues, vectors, residual)


def eig_hermitian(H: np.ndarray) -> SpectralDecomposition:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending."""
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise SpectralError("matrix must be square")
    herm_err = float(np.max(np.abs(H - H.conj().T))) if H.size else 0.0
    if herm_err > 1e-10:
        raise SpectralError(f"matrix is not Hermitian (max deviation {herm_err})")
    w, v = np.linalg.eigh(H)
    return _finish_decomposition(H.astype(np.complex128), w.astype(np.complex128), v.astype(np.complex128))


def eig_unitary(U: np.ndarray) -> SpectralDecomposition:
    """Eigendecomposition of a unitary matrix, sorted by eigenphase.

    Uses the complex Schur form; for a (normal) unitary matrix the Schur
    factor is diagonal up to rounding, so the Schur vectors are an
    orthonormal eigenbasis even inside degenerate clusters.
    """
    U = np.asarray(U, dtype=np.complex128)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise SpectralError("matrix must be square")
    unit_err = float(np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0]))))
    if unit_err > 1e-8:
        raise SpectralError(f"matrix is not unitary (max deviation {unit_err})")
    T, Z = scipy.linalg.schur(U, output="complex")
    lam = np.diag(T)
    order = np.argsort(np.angle(lam), kind="stable")
    lam = lam[order]
    Z = Z[:, order]
    mod_err = float(np.max(np.abs(np.abs(lam) - 1.0)))
    if mod_err > 1e-8:
        raise SpectralError(f"unitary eigenvalues off the unit circle by {mod_err}")
    return _finish_decomposition(U, lam, Z)


def evolve(
    H: np.ndarray,
    t: float,
    psi: StateVector | np.ndarray,
    decomposition: SpectralDecomposition | None = None,
):
    """exp(-iHt) psi computed through the eigenbasis of Hermitian H."""
    amps = _as_amplitudes(psi)
    if decomposition is None:
        decomposition = eig_hermitian(H)
    if decomposition.dim != amps.shape[0]:
        raise SpectralError(
            f"dimension mismatch: operator {decomposition.dim}, state {amps.shape[0]}"
        )
    V = decomposition.eigenvectors
    phases = np.exp(-1j * decomposition.eigenvalues.real * t)
    out = V @ (phases * (V.conj().T @ amps))
    if isinstance(psi, StateVector):
        return StateVector(out, psi.basis)
    return out


def overlap_weights(D: SpectralDecomposition, psi: StateVector | np.ndarray) -> np.ndarray:
    """|<eigvec_i|psi>|^2 for every eigenvector, in decomposition order."""
    amps = _as_amplitudes(psi)
    if D.dim != amps.shape[0]:
        raise SpectralError("dimension mismatch between decomposition and state")
    return np.abs(D.eigenvectors.conj().T @ amps) ** 2


def spectral_overlap_profile(
    D: SpectralDecomposition,
    psi: StateVector | np.ndarray,
    merge_tol: float = 1e-9,
) -> list[tuple[complex, float]]:
    """Overlap weights of psi per eigenvalue, merging degenerate clusters.

    Eigenvalues closer than ``merge_tol`` (in absolute value for Hermitian
    spectra, in phase for unitary ones) are merged and their weights summed.
    Weights of a unit state sum to 1.
    """
    amps = _as_amplitudes(psi)
    nrm = np.linalg.norm(amps)
    if abs(nrm - 1.0) > UNIT_NORM_TOL:
        raise SpectralError(f"profile requires a unit state, |psi| = {nrm}")
    weights = overlap_weights(D, amps)
    lam = D.eigenvalues
    is_unitary_like = bool(np.max(np.abs(np.abs(lam) - 1)) < 1e-6) and bool(
        np.max(np.abs(lam.imag)) > 1e-12
    )
    if is_unitary_like:
        keys = np.angle(lam)
    else:
        keys = lam.real
    order = np.argsort(keys, kind="stable")
    profile: list[tuple[complex, float]] = []
    group: list[int] = []

    def flush() -> None:
        if not group:
            return
        w = float(sum(weights[i] for i in group))
        vals = np.array([lam[i] for i in group])
        rep = complex(vals.mean())
        profile.append((rep, w))
        group.clear()

    prev_key = None
    for i in order:
        if prev_key is not None and abs(keys[i] - prev_key) > merge_tol:
            flush()
        group.append(int(i))
        prev_key = keys[i]
    flush()
    # unitary phases wrap at +-pi; merge the two boundary clusters if close
    if is_unitary_like and len(profile) > 1:
        lo, hi = profile[0], profile[-1]
        if abs((np.angle(lo[0]) - np.angle(hi[0])) % (2 * np.pi)) < merge_tol:
            merged = (lo[0], lo[1] + hi[1])
            profile = [merged] + profile[1:-1]
    return profile


@dataclass(frozen=True)
class PhaseEstimate:
    """Sampled phase-estimation outcomes.

    ``samples`` holds (phase, multiplicity) pairs with phases in (-pi, pi];
    multiplicities sum to ``shots``.
    """

    samples: tuple[tuple[float, int], ...]
    ancilla_bits: int
    shots: int
    seed: int

    def __post_init__(self) -> None:
        if sum(m for _, m in self.samples) != self.shots:
            raise SpectralError("sample multiplicities must sum to shots")

    def modal_phase(self) -> float:
        return max(self.samples, key=lambda pm: (pm[1], -abs(pm[0])))[0]


def _qpe_bin_distribution(phases: np.ndarray, weights: np.ndarray, bits: int) -> np.ndarray:
    """Exact b-bit phase-estimation outcome distribution for a mixture.

    For an eigenphase phi, outcome m has probability
    |sum_k exp(ik(phi - 2 pi m / 2^b))|^2 / 4^b, the squared Dirichlet
    kernel; an exactly representable phase lands on its register value with
    probability 1.
    """
    K = 2 ** bits
    grid = 2 * np.pi * np.arange(K) / K
    dist = np.zeros(K)
    for phi, w in zip(phases, weights):
        if w == 0.0:
            continue
        delta = phi - grid
        half = delta / 2.0
        sin_half = np.sin(half)
        with np.errstate(divide="ignore", invalid="ignore"):
            amp2 = np.where(
                np.abs(sin_half) < 1e-12,
                1.0,
                (np.sin(K * half) / (K * sin_half)) ** 2,
            )
        dist += w * amp2
    total = dist.sum()
    if not 0.999 < total < 1.001:
        raise SpectralError(f"phase-estimation kernel normalization broke: {total}")
    return dist / total


def qpe_simulate(
    U: np.ndarray,
    psi: StateVector | np.ndarray,
    ancilla_bits: int,
    shots: int,
    seed: int,
    decomposition: SpectralDecomposition | None = None,
) -> PhaseEstimate:
    """Sample the exact b-bit phase-estimation distribution of U at psi."""
    if ancilla_bits < 1:
        raise SpectralError(f"ancilla_bits must be >= 1, got {ancilla_bits}")
    if shots < 1:
        raise SpectralError(f"shots must be >= 1, got {shots}")
    amps = _as_amplitudes(psi)
    if abs(np.linalg.norm(amps) - 1.0) > UNIT_NORM_TOL:
        raise SpectralError("phase estimation requires a unit state")
    if decomposition is None:
        decomposition = eig_unitary(U)
    weights = overlap_weights(decomposition, amps)
    phases = np.angle(decomposition.eigenvalues)
    dist = _qpe_bin_distribution(phases, weights, ancilla_bits)
    rng = np.random.default_rng(seed)
    K = 2 ** ancilla_bits
    hits = rng.multinomial(shots, dist)
    samples = []
    for m in np.nonzero(hits)[0]:
        phase = 2 * np.pi * m / K
        if phase > np.pi:
            phase -= 2 * np.pi
        samples.append((float(phase), int(hits[m])))
    samples.sort(key=lambda pm: pm[0])
    return PhaseEstimate(tuple(samples), ancilla_bits, shots, seed)
