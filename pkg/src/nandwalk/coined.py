"""Coined walk on directed edge states: per-vertex coin, edge-pair shift.

Coin blocks: identity at the end of the tail, the scalar (-1)^{x_i} at leaf
i, and the diffusion reflection 2|u><u| - I about the uniform direction
state everywhere else (2-dimensional on interior tail sites, 3-dimensional
on internal tree vertices). The shift swaps the two states of every edge.

One walk step is U = C S. The product order matters for the sign of the
decision eigenvalue: C S and S C are mutual inverses with the same
eigenvectors and conjugate spectra, and under the direction conventions of
``build_edge_space`` it is C S that turns the alternating tail start state
into a +i eigenvector approximation when the formula value is 0. Decisions
threshold |Re lambda|, which is identical under either order; reports can
carry both spectra.

Tail-length guard: the start-state pattern with parameter L touches tail
sites up to 2L and needs site 2L to be interior, so the long-tail builder
allocates 2L + 2 tail sites (even, one spare pair past the pattern).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .formula import LEAF, NandTree, as_bits, assignment_with_value
from .graphs import (
    LEFT,
    RIGHT,
    TAIL,
    EdgeStateSpace,
    GraphError,
    Vertex,
    build_edge_space,
)
from .finite_tail import GapReport, aggregate_gap
from .scattering import ceil_sqrt
from .spectral import (
    SpectralDecomposition,
    StateVector,
    eig_unitary,
    overlap_weights,
)

LONG_TAIL = "long-tail"
SHORT_TAIL = "short-tail"

DEFAULT_OVERLAP_CUTOFF = 1e-8
RE_ZERO_TOL = 1e-9


@dataclass(frozen=True)
class ShortTailCoin:
    """Two-dimensional coin state at tail vertex 1 of the short-tail walk.

    Components (sqrt(1 - 1/sqrt(N)) on left, N^(-1/4) on right); the
    identity N^(-1/2) + 1 - N^(-1/2) = 1 makes it unit for every N.
    """

    n_leaves: int
    state: np.ndarray  # (left, right) components

    def __post_init__(self) -> None:
        nrm = float(np.linalg.norm(self.state))
        if abs(nrm - 1.0) > 1e-10:
            raise ValueError(f"coin state must be unit, |c| = {nrm}")


def short_tail_coin(n_leaves: int) -> ShortTailCoin:
    if n_leaves < 2:
        raise ValueError(f"short-tail coin needs N >= 2, got {n_leaves}")
    right = n_leaves ** (-0.25)
    left = math.sqrt(1.0 - 1.0 / math.sqrt(n_leaves))
    return ShortTailCoin(n_leaves, np.array([left, right]))


@dataclass(frozen=True)
class CoinedWalk:
    space: EdgeStateSpace
    coin: np.ndarray
    shift: np.ndarray
    walk: np.ndarray  # walk step U = coin @ shift
    variant: str
    binding: tuple[int, ...]
    pattern_length: int | None = None  # L of the start-state pattern (long tail)
    tail_coin: ShortTailCoin | None = None


def _grover_block(dim: int) -> np.ndarray:
    return 2.0 / dim * np.ones((dim, dim)) - np.eye(dim)


def _assemble_coin(
    space: EdgeStateSpace,
    bits: np.ndarray,
    site1_block: np.ndarray | None = None,
) -> np.ndarray:
    """Block-diagonal coin in the space's per-vertex state layout."""
    tree = space.tree
    end = space.n_tail_sites
    C = np.zeros((space.n_states, space.n_states))
    blocks: dict[Vertex, list[int]] = {}
    for i, (v, _) in enumerate(space.states):
        blocks.setdefault(v, []).append(i)
    for v, idxs in blocks.items():
        if v.kind == TAIL:
            if v.index == end:
                block = np.eye(1)
            elif v.index == 1 and site1_block is not None:
                block = site1_block
            else:
                block = _grover_block(2)
        else:
            node = tree.nodes[v.index]
            if node.kind == LEAF:
                block = np.array([[(-1.0) ** int(bits[node.var - 1])]])
            else:
                block = _grover_block(3)
        for a, ia in enumerate(idxs):
            for b, ib in enumerate(idxs):
                C[ia, ib] = block[a, b]
    return C


def _assemble_shift(space: EdgeStateSpace) -> np.ndarray:
    S = np.zeros((space.n_states, space.n_states))
    for i, j in enumerate(space.pairing):
        S[j, i] = 1.0
    return S


def build_coined_walk(tree: NandTree, x: Sequence[int], L: int) -> CoinedWalk:
    """Long-tail coined walk sized for the pattern-length-L start state."""
    if not tree.is_binary():
        raise GraphError("coined walk is defined for binary trees")
    if L < 1:
        raise ValueError(f"L must be >= 1, got {L}")
    bits = as_bits(x, tree.leaf_count)
    space = build_edge_space(tree, L + 1)  # 2L + 2 tail sites
    C = _assemble_coin(space, bits)
    S = _assemble_shift(space)
    return CoinedWalk(
        space=space,
        coin=C,
        shift=S,
        walk=C @ S,
        variant=LONG_TAIL,
        binding=tuple(int(b) for b in bits),
        pattern_length=L,
    )


def psi_start_coined(space: EdgeStateSpace, L: int) -> StateVector:
    """Alternating four-state tail pattern of length L, unit norm.

    Per k < L the pattern places (-1)^k / sqrt(4L) times (1, -i, +i, -1) on
    |2k, right>, |2k+1, left>, |2k+1, right>, |2k+2, left>. Tail site 0 is
    the root, whose only tail-pointing state is |root, down>; the k = 0
    "right" entry lands there.
    """
    if 2 * L + 1 > space.n_tail_sites:
        raise GraphError(
            f"pattern of length {L} needs at least {2 * L + 1} tail sites, "
            f"space has {space.n_tail_sites}"
        )
    amps = np.zeros(space.n_states, dtype=np.complex128)
    a = 1.0 / math.sqrt(4 * L)
    for k in range(L):
        sign = (-1.0) ** k
        amps[space.tail_edge_state(2 * k, RIGHT)] += sign * a
        amps[space.tail_edge_state(2 * k + 1, LEFT)] += sign * a * (-1j)
        amps[space.tail_edge_state(2 * k + 1, RIGHT)] += sign * a * 1j
        amps[space.tail_edge_state(2 * k + 2, LEFT)] += sign * a * (-1.0)
    return StateVector(amps, space)


def build_short_tail_walk(tree: NandTree, x: Sequence[int]) -> CoinedWalk:
    """Coined walk with a two-vertex tail and the weak-coupling coin at site 1."""
    if not tree.is_binary():
        raise GraphError("coined walk is defined for binary trees")
    bits = as_bits(x, tree.leaf_count)
    coin1 = short_tail_coin(tree.leaf_count)
    space = build_edge_space(tree, 1)  # tail sites 1 and 2
    block = 2.0 * np.outer(coin1.state, coin1.state) - np.eye(2)
    C = _assemble_coin(space, bits, site1_block=block)
    S = _assemble_shift(space)
    return CoinedWalk(
        space=space,
        coin=C,
        shift=S,
        walk=C @ S,
        variant=SHORT_TAIL,
        binding=tuple(int(b) for b in bits),
        tail_coin=coin1,
    )


def psi_start_short(space: EdgeStateSpace) -> StateVector:
    """The single basis state at the end-of-tail vertex 2."""
    amps = np.zeros(space.n_states, dtype=np.complex128)
    amps[space.tail_edge_state(2, LEFT)] = 1.0
    return StateVector(amps, space)


def default_psi_start(walk: CoinedWalk) -> StateVector:
    if walk.variant == LONG_TAIL:
        assert walk.pattern_length is not None
        return psi_start_coined(walk.space, walk.pattern_length)
    return psi_start_short(walk.space)


def decide_coined(
    walk: CoinedWalk,
    psi_start: StateVector | None = None,
    re_threshold: float | None = None,
    orth_tol: float = DEFAULT_OVERLAP_CUTOFF,
    decomposition: SpectralDecomposition | None = None,
) -> tuple[int, GapReport]:
    """Decide F by whether the start state sees an eigenvalue at Re ~ 0.

    For F = 0 the start state overlaps an exact +-i eigenvector (zero real
    part); for F = 1 every relevant eigenvalue has |Re lambda| bounded away
    from zero. Decision 0 iff some eigenvector with overlap weight above
    ``orth_tol`` has |Re lambda| <= re_threshold. The short-tail start state
    carries only a small (N-dependent) weight on the +-i pair, so presence
    of relevant weight, not a mass majority, is the sound criterion; the
    returned report still carries the mass at the threshold.

    Without an explicit threshold, half the minimal relevant |Re lambda| of
    the canonical F = 1 instance on the same walk shape is used.
    """
    if psi_start is None:
        psi_start = default_psi_start(walk)
    if re_threshold is None:
        re_threshold = calibrate_re_threshold(walk)
    if decomposition is None:
        decomposition = eig_unitary(walk.walk)
    weights = overlap_weights(decomposition, psi_start)
    res = np.abs(decomposition.eigenvalues.real)
    report = aggregate_gap(
        decomposition.eigenvalues.real, weights, re_threshold, orth_tol
    )
    decision = 0 if bool(np.any((weights > orth_tol) & (res <= re_threshold))) else 1
    return decision, report


def calibrate_re_threshold(walk: CoinedWalk) -> float:
    """Half the minimal relevant |Re lambda| of the canonical F = 1 instance."""
    tree = walk.space.tree
    x1 = assignment_with_value(tree, 1)
    if walk.variant == LONG_TAIL:
        assert walk.pattern_length is not None
        ref = build_coined_walk(tree, x1, walk.pattern_length)
    else:
        ref = build_short_tail_walk(tree, x1)
    D = eig_unitary(ref.walk)
    weights = overlap_weights(D, default_psi_start(ref))
    res = np.abs(D.eigenvalues.real)
    relevant = (weights > DEFAULT_OVERLAP_CUTOFF) & (res > RE_ZERO_TOL)
    if not np.any(relevant):
        raise RuntimeError("calibration instance shows no relevant nonzero Re lambda")
    return float(res[relevant].min()) / 2.0


def both_order_spectra_maxdiff(walk: CoinedWalk) -> float:
    """Largest phase distance between the sorted spectra of C S and S C.

    The two orderings are similar matrices, so this is a numerical-zero
    diagnostic recorded in reports.
    """
    lam_cs = np.sort(np.angle(eig_unitary(walk.coin @ walk.shift).eigenvalues))
    lam_sc = np.sort(np.angle(eig_unitary(walk.shift @ walk.coin).eigenvalues))
    return float(np.max(np.abs(lam_cs - lam_sc)))


def default_pattern_length(n_leaves: int, multiplier: float = 2.0) -> int:
    return max(1, int(np.ceil(multiplier * ceil_sqrt(n_leaves))))
