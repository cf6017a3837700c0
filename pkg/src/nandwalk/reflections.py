"""Discrete walk built from two reflections on the tail-graph vertex basis.

U_tree reflects about the numerical kernel of the input-free Hamiltonian,
U_input flips the sign of every leaf whose variable is 1, and the walk
operator is their product. For F = 0 a kernel vector vanishing on the
flipped leaves is a fixed point of both reflections and carries most of the
tail start state; for F = 1 every eigenvector seen by the start state is
rotated away from eigenvalue 1 by at least the minimal leaf-projection of
the kernel.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .formula import NandTree, assignment_with_value, as_bits, evaluate
from .graphs import AugmentedGraph, adjacency_matrix, build_tail_graph
from .finite_tail import GapReport, aggregate_gap, psi_start_tail
from .scattering import ceil_sqrt
from .spectral import (
    SpectralDecomposition,
    StateVector,
    eig_hermitian,
    eig_unitary,
    overlap_weights,
)

DEFAULT_KERNEL_TOL = 1e-10
DEFAULT_OVERLAP_CUTOFF = 1e-8
PHASE_ZERO_TOL = 1e-9


class AmbiguousKernelError(RuntimeError):
    """kernel-tol falls inside a spectral cluster of H_tree."""

    def __init__(self, below: float, above: float, tol: float):
        super().__init__(
            f"kernel tolerance {tol} straddles eigenvalues |{below}| and |{above}|"
        )
        self.below = below
        self.above = above


@dataclass(frozen=True)
class TreeReflection:
    """Input-independent part: reflection about ker(H_tree) plus the basis."""

    graph: AugmentedGraph
    u_tree: np.ndarray
    kernel_vectors: np.ndarray  # orthonormal columns spanning the kernel
    kernel_tol: float


@dataclass(frozen=True)
class ReflectionPair:
    """U = U_input @ U_tree on the pendant-free tail vertex basis."""

    graph: AugmentedGraph
    u_tree: np.ndarray
    u_input_diag: np.ndarray
    kernel_vectors: np.ndarray
    kernel_tol: float

    @property
    def u_input(self) -> np.ndarray:
        return np.diag(self.u_input_diag)

    @property
    def u(self) -> np.ndarray:
        return self.u_input_diag[:, None] * self.u_tree


@dataclass(frozen=True)
class ProjectionBoundReport:
    """Leaf-projection bound data for an F = 1 instance.

    ``per_kernel_vector`` lists (|P1 psi|, |<psi, psi_start>|) for the
    kernel basis vectors whose start-state overlap exceeds the cutoff.
    ``min_ratio`` is the smallest |P1 psi| / |psi| over the whole kernel
    subspace (the smallest singular value of P1 restricted to it), a valid
    premise constant for every kernel vector; ``phase_gap`` is the observed
    minimal |eigenphase| of U over eigenvectors seen by the start state.
    """

    per_kernel_vector: tuple[tuple[float, float], ...]
    min_ratio: float | None
    phase_gap: float | None


def tree_reflection(
    tree: NandTree, L: int, kernel_tol: float = DEFAULT_KERNEL_TOL
) -> TreeReflection:
    """Reflection about the numerical kernel of the pendant-free Hamiltonian.

    The chain gets one extra site on odd-depth trees. Without it the kernel
    of the input-free Hamiltonian cannot reach the chain (the alternating
    cascade that starts at a bare leaf arrives at the root with the wrong
    parity), which would make the start state an exact eigenvector for every
    input and the walk blind.
    """
    zeros = np.zeros(tree.leaf_count, dtype=np.int64)
    graph = build_tail_graph(
        tree, zeros, L, pendants=False, parity_site=tree.depth % 2 == 1
    )
    H = adjacency_matrix(graph)
    D = eig_hermitian(H)
    mags = np.abs(D.eigenvalues.real)
    inside = mags <= kernel_tol
    if np.any(inside) and np.any(~inside):
        below = float(mags[inside].max())
        above = float(mags[~inside].min())
        # require a clean decade between kept and dropped eigenvalues
        if above < 10 * kernel_tol:
            raise AmbiguousKernelError(below, above, kernel_tol)
    kernel_vectors = D.eigenvectors[:, inside]
    u_tree = 2.0 * (kernel_vectors @ kernel_vectors.conj().T) - np.eye(graph.n_vertices)
    return TreeReflection(graph, u_tree.real, kernel_vectors, kernel_tol)


def input_reflection_diag(graph: AugmentedGraph, x: Sequence[int]) -> np.ndarray:
    """Diagonal of U_input: -1 exactly at leaves whose variable is 1."""
    tree = graph.tree
    bits = as_bits(x, tree.leaf_count)
    diag = np.ones(graph.n_vertices)
    for leaf in tree.leaves:
        if bits[tree.nodes[leaf].var - 1] == 1:
            diag[graph.tree_vertex(leaf)] = -1.0
    return diag


def build_reflections(
    tree: NandTree,
    x: Sequence[int],
    L: int,
    kernel_tol: float = DEFAULT_KERNEL_TOL,
    base: TreeReflection | None = None,
) -> ReflectionPair:
    """Assemble (U_tree, U_input, U) for one instance.

    ``base`` lets sweeps reuse the input-independent reflection, which only
    depends on the tree and L.
    """
    if not tree.is_binary():
        raise ValueError("reflection walk is defined for binary trees")
    if base is None:
        base = tree_reflection(tree, L, kernel_tol)
    diag = input_reflection_diag(base.graph, x)
    return ReflectionPair(
        graph=base.graph,
        u_tree=base.u_tree,
        u_input_diag=diag,
        kernel_vectors=base.kernel_vectors,
        kernel_tol=base.kernel_tol,
    )


def default_psi_start(pair: ReflectionPair) -> StateVector:
    return reflection_start_state(pair.graph)


def reflection_start_state(graph: AugmentedGraph) -> StateVector:
    """Alternating chain pattern matched to the chain's parity.

    Even chain length: (-1)^k / sqrt(L+1) on sites 2k including the root,
    the tail start state of the continuous algorithm. Odd chain length (the
    odd-depth adaptation): the same pattern shifted to the odd sites 2k+1.
    """
    if graph.n_tail_sites % 2 == 0:
        return psi_start_tail(graph)
    amps = np.zeros(graph.n_vertices, dtype=np.complex128)
    L = graph.n_tail_sites // 2
    a = 1.0 / np.sqrt(L + 1)
    for k in range(L + 1):
        amps[graph.tail_site(2 * k + 1)] = a if k % 2 == 0 else -a
    return StateVector(amps, graph)


def decide_reflections(
    pair: ReflectionPair,
    psi_start: StateVector | None = None,
    phase_threshold: float | None = None,
    orth_tol: float = DEFAULT_OVERLAP_CUTOFF,
    decomposition: SpectralDecomposition | None = None,
) -> tuple[int, GapReport]:
    """Decide F from the eigenphase mass of U at the start state.

    The walk detects whether a kernel vector of the input-free Hamiltonian
    avoids the flipped leaves: mass at |phase| <= phase_threshold exceeding
    one half means such a fixed point exists. On even-depth trees that
    certifies F = 0. On odd-depth trees, where the chain carries the parity
    site, the alternating cascade bottoms out one gate layer higher and the
    same fixed point exists exactly when F = 1, so the reading inverts.

    Without an explicit threshold, half of the minimal relevant phase gap
    of the canonical gapped instance on the same tree is used (persisted by
    the runner for reproducibility).
    """
    if psi_start is None:
        psi_start = default_psi_start(pair)
    if phase_threshold is None:
        phase_threshold = calibrate_phase_threshold(
            pair.graph.tree, pair.graph.half_length, pair.kernel_tol
        )
    if decomposition is None:
        decomposition = eig_unitary(pair.u)
    weights = overlap_weights(decomposition, psi_start)
    phases = np.angle(decomposition.eigenvalues)
    report = aggregate_gap(phases, weights, phase_threshold, orth_tol)
    kernel_seen = report.zero_weight > 0.5
    kernel_value = 0 if pair.graph.n_tail_sites % 2 == 0 else 1
    decision = kernel_value if kernel_seen else 1 - kernel_value
    return decision, report


def calibrate_phase_threshold(
    tree: NandTree, L: int, kernel_tol: float = DEFAULT_KERNEL_TOL
) -> float:
    """Half the minimal relevant eigenphase of the canonical gapped instance.

    The gapped side is F = 1 on even-depth trees and F = 0 on odd-depth
    trees (the value the kernel fixed point cannot certify).
    """
    gapped_value = 1 if tree.depth % 2 == 0 else 0
    x_cal = assignment_with_value(tree, gapped_value)
    pair = build_reflections(tree, x_cal, L, kernel_tol)
    D = eig_unitary(pair.u)
    weights = overlap_weights(D, default_psi_start(pair))
    phases = np.abs(np.angle(D.eigenvalues))
    relevant = (weights > DEFAULT_OVERLAP_CUTOFF) & (phases > PHASE_ZERO_TOL)
    if not np.any(relevant):
        raise RuntimeError("calibration instance shows no relevant nonzero phase")
    return float(phases[relevant].min()) / 2.0


def projection_bound_check(
    pair: ReflectionPair,
    tree: NandTree,
    x: Sequence[int],
    psi_start: StateVector | None = None,
    overlap_cutoff: float = DEFAULT_OVERLAP_CUTOFF,
) -> ProjectionBoundReport:
    """Measure the leaf-projection premise and the phase gap it bounds.

    P1 projects onto the leaves whose variable is 1. For any kernel vector
    of H_tree that the start state can see, |P1 psi| / |psi| lower-bounds
    the distance of the relevant eigenvalues of U from 1; this reports the
    measured quantities so the inequality can be checked.
    """
    if evaluate(tree, x) != 1:
        raise ValueError("projection bound is meaningful only for F = 1 instances")
    if psi_start is None:
        psi_start = default_psi_start(pair)
    bits = as_bits(x, tree.leaf_count)
    graph = pair.graph
    mask = np.zeros(graph.n_vertices)
    for leaf in tree.leaves:
        if bits[tree.nodes[leaf].var - 1] == 1:
            mask[graph.tree_vertex(leaf)] = 1.0

    kernel = pair.kernel_vectors
    per_vector: list[tuple[float, float]] = []
    start_overlaps = np.abs(kernel.conj().T @ psi_start.amplitudes)
    for j in range(kernel.shape[1]):
        if start_overlaps[j] > overlap_cutoff:
            p1_norm = float(np.linalg.norm(mask * kernel[:, j]))
            per_vector.append((p1_norm, float(start_overlaps[j])))

    min_ratio: float | None = None
    if kernel.shape[1] > 0 and float(np.linalg.norm(start_overlaps)) > overlap_cutoff:
        masked = mask[:, None] * kernel
        min_ratio = float(np.linalg.svd(masked, compute_uv=False)[-1])

    D = eig_unitary(pair.u)
    weights = overlap_weights(D, psi_start)
    phases = np.abs(np.angle(D.eigenvalues))
    relevant = weights > overlap_cutoff
    phase_gap = float(phases[relevant].min()) if np.any(relevant) else None
    return ProjectionBoundReport(tuple(per_vector), min_ratio, phase_gap)


def default_tail_length(n_leaves: int, multiplier: float = 2.0) -> int:
    return max(1, int(np.ceil(multiplier * ceil_sqrt(n_leaves))))
