"""Continuous walk on the tree with a finite tail, decided spectrally.

For F = 0 the tail start state sits almost entirely in the kernel of the
Hamiltonian; for F = 1 every eigenvector it touches has an eigenvalue
bounded away from zero. The decision runs simulated eigenvalue estimation
on exp(-iH delta) and thresholds the modal phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .formula import NandTree, QueryLedger
from .graphs import AugmentedGraph, GraphError, adjacency_matrix, build_tail_graph
from .scattering import ceil_sqrt
from .spectral import (
    PhaseEstimate,
    SpectralDecomposition,
    StateVector,
    eig_hermitian,
    overlap_weights,
    qpe_simulate,
)

DEFAULT_ZERO_TOL = 1e-10
DEFAULT_ORTH_TOL = 1e-8


class AliasingError(RuntimeError):
    """The Hamiltonian-to-unitary step maps the band outside (-pi, pi]."""


@dataclass(frozen=True)
class GapReport:
    """Overlap-weighted spectral summary at a start state.

    ``zero_weight`` is the overlap mass within ``zero_tol`` of the reference
    (eigenvalue 0, phase 0, or Re = 0 depending on the producing module);
    ``min_relevant_gap`` is the smallest spectral distance beyond
    ``zero_tol`` among eigenvectors whose overlap weight exceeds
    ``orth_tol``, or None when no such eigenvector exists.
    """

    zero_weight: float
    min_relevant_gap: float | None
    zero_tol: float
    orth_tol: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.zero_weight <= 1.0 + 1e-9:
            raise ValueError(f"zero_weight out of range: {self.zero_weight}")
        if self.min_relevant_gap is not None and self.min_relevant_gap <= 0:
            raise ValueError("min_relevant_gap must be positive when defined")


def aggregate_gap(
    values: np.ndarray,
    weights: np.ndarray,
    zero_tol: float,
    orth_tol: float,
) -> GapReport:
    """Build a GapReport from spectral distances and overlap weights."""
    values = np.abs(np.asarray(values, dtype=float))
    weights = np.asarray(weights, dtype=float)
    zero_weight = float(weights[values <= zero_tol].sum())
    relevant = (weights > orth_tol) & (values > zero_tol)
    min_gap = float(values[relevant].min()) if np.any(relevant) else None
    return GapReport(zero_weight, min_gap, zero_tol, orth_tol)


def psi_start_tail(graph: AugmentedGraph) -> StateVector:
    """Alternating even-site state (-1)^k / sqrt(L+1) on tail sites 2k."""
    if graph.kind != "tail":
        raise GraphError("psi_start_tail needs a tail graph")
    L = graph.half_length
    amps = np.zeros(graph.n_vertices, dtype=np.complex128)
    a = 1.0 / math.sqrt(L + 1)
    for k in range(L + 1):
        amps[graph.tail_site(2 * k)] = a if k % 2 == 0 else -a
    return StateVector(amps, graph)


def gap_report(
    tree: NandTree,
    x: Sequence[int],
    L: int,
    zero_tol: float = DEFAULT_ZERO_TOL,
    orth_tol: float = DEFAULT_ORTH_TOL,
    decomposition: SpectralDecomposition | None = None,
) -> GapReport:
    """Kernel weight and minimal relevant gap of H at the tail start state."""
    graph = build_tail_graph(tree, x, L, pendants=True)
    if decomposition is None:
        decomposition = eig_hermitian(adjacency_matrix(graph))
    psi = psi_start_tail(graph)
    weights = overlap_weights(decomposition, psi)
    return aggregate_gap(decomposition.eigenvalues.real, weights, zero_tol, orth_tol)


def decide_tail(
    tree: NandTree,
    x: Sequence[int],
    L: int | None = None,
    precision: float | None = None,
    ancilla_bits: int = 10,
    shots: int = 1000,
    seed: int = 0,
    ledger: QueryLedger | None = None,
) -> tuple[int, PhaseEstimate]:
    """Decide F by eigenvalue estimation on U = exp(-iH delta).

    delta = pi / (1 + max|lambda|) maps the spectral band injectively into
    (-pi, pi]. The outcome is 0 iff the modal phase sample lies within
    precision * delta of zero. Defaults: L = 2 ceil(sqrt(N)) and precision =
    1 / (2 sqrt(N)).
    """
    n = tree.leaf_count
    if L is None:
        L = 2 * ceil_sqrt(n)
    if precision is None:
        precision = 1.0 / (2.0 * math.sqrt(n))
    if precision <= 0:
        raise ValueError(f"precision must be positive, got {precision}")
    graph = build_tail_graph(tree, x, L, pendants=True)
    H = adjacency_matrix(graph)
    D = eig_hermitian(H)
    lam = D.eigenvalues.real
    max_abs = float(np.max(np.abs(lam)))
    delta = np.pi / (1.0 + max_abs)
    if max_abs * delta >= np.pi:
        raise AliasingError(f"band of radius {max_abs} aliases at step {delta}")
    V = D.eigenvectors
    U = (V * np.exp(-1j * lam * delta)) @ V.conj().T
    psi = psi_start_tail(graph)
    estimate = qpe_simulate(U, psi, ancilla_bits, shots, seed)
    if ledger is not None:
        ledger.charge(shots * (2 ** ancilla_bits - 1))
    decision = 0 if abs(estimate.modal_phase()) < precision * delta else 1
    return decision, estimate
