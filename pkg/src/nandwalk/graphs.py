"""Augmented graphs and edge-state spaces for the walk algorithms.

Two vertex-graph flavours are built from a NAND tree and an assignment:

* runway graph: a chain of sites -M..M with the tree root attached to site 0
  by an edge, plus one pendant vertex behind every leaf whose variable is 1.
* tail graph: a chain of 2L sites hanging off the root, where "site 0" is an
  alias for the root itself, with optional pendants.

Vertex order is canonical (runway/tail sites ascending, then tree nodes in
pre-order, then pendants by leaf order) so matrices are reproducible
bit-for-bit. The directed edge-state space used by the coined walk is built
on the pendant-free tail graph.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .formula import LEAF, NandTree, as_bits

RUN = "run"
TAIL = "tail"
TREE = "tree"
PEND = "pend"

DOWN = "down"
LEFT = "left"
RIGHT = "right"


class GraphError(ValueError):
    """Invalid graph construction request."""


@dataclass(frozen=True)
class Vertex:
    kind: str
    index: int

    def __str__(self) -> str:
        return f"{self.kind}:{self.index}"


WeightFn = Callable[[Vertex, Vertex], float]


@dataclass(frozen=True)
class AugmentedGraph:
    """Undirected weighted graph over a canonical vertex order.

    ``edges`` hold index pairs into ``vertices`` plus a positive weight.
    ``half_length`` is M for runway graphs and L for tail graphs (the tail
    carries 2L sites).
    """

    vertices: tuple[Vertex, ...]
    edges: tuple[tuple[int, int, float], ...]
    binding: tuple[int, ...]
    kind: str  # "runway" | "tail"
    half_length: int
    has_pendants: bool
    tree: NandTree
    n_tail_sites: int = 0  # tail graphs only; 2L, or 2L+1 with a parity site

    @cached_property
    def index(self) -> dict[Vertex, int]:
        return {v: i for i, v in enumerate(self.vertices)}

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def index_of(self, v: Vertex) -> int:
        try:
            return self.index[v]
        except KeyError:
            raise GraphError(f"vertex {v} is not in this graph") from None

    def tree_vertex(self, node_id: int) -> int:
        return self.index_of(Vertex(TREE, node_id))

    def runway_site(self, n: int) -> int:
        if self.kind != "runway":
            raise GraphError("runway_site on a non-runway graph")
        return self.index_of(Vertex(RUN, n))

    def tail_site(self, k: int) -> int:
        """Basis index of tail site k, with site 0 aliasing the tree root."""
        if self.kind != "tail":
            raise GraphError("tail_site on a non-tail graph")
        if k == 0:
            return self.tree_vertex(self.tree.root)
        return self.index_of(Vertex(TAIL, k))

    @cached_property
    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_vertices, dtype=np.int64)
        for i, j, _ in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    @cached_property
    def subtree_leaves(self) -> dict[Vertex, int]:
        """Leaf counts of the subtree above each vertex, for weight hooks.

        Tree vertices count the leaves below them, leaves count themselves,
        pendants count 0; runway and tail sites sit below the root, so the
        whole tree (N leaves) hangs above them.
        """
        counts: dict[Vertex, int] = {}
        n_leaves = np.zeros(len(self.tree.nodes), dtype=np.int64)
        for node in reversed(self.tree.nodes):
            if node.kind == LEAF:
                n_leaves[node.id] = 1
            else:
                n_leaves[node.id] = sum(n_leaves[c] for c in node.children)
        for v in self.vertices:
            if v.kind == TREE:
                counts[v] = int(n_leaves[v.index])
            elif v.kind == PEND:
                counts[v] = 0
            else:
                counts[v] = int(n_leaves[self.tree.root])
        return counts

    def to_json_dict(self) -> dict:
        return {
            "vertices": [str(v) for v in self.vertices],
            "edges": [[i, j, w] for i, j, w in self.edges],
        }

    def dump_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)


def _tree_edges(tree: NandTree, offset_index: dict[int, int]) -> list[tuple[int, int, float]]:
    edges = []
    for node in tree.nodes:
        for c in node.children:
            edges.append((offset_index[node.id], offset_index[c], 1.0))
    return edges


def _pendant_block(
    tree: NandTree, bits: np.ndarray, start: int, tree_index: dict[int, int]
) -> tuple[list[Vertex], list[tuple[int, int, float]]]:
    vertices: list[Vertex] = []
    edges: list[tuple[int, int, float]] = []
    for leaf_id in tree.leaves:
        var = tree.nodes[leaf_id].var
        if bits[var - 1] == 1:
            idx = start + len(vertices)
            vertices.append(Vertex(PEND, leaf_id))
            edges.append((tree_index[leaf_id], idx, 1.0))
    return vertices, edges


def build_runway_graph(tree: NandTree, x: Sequence[int], M: int) -> AugmentedGraph:
    """Tree glued to a finite two-sided runway of sites -M..M at site 0."""
    if not tree.is_nand_only():
        raise GraphError("runway graph needs a NAND-only tree")
    if M < 1:
        raise GraphError(f"M must be >= 1, got {M}")
    bits = as_bits(x, tree.leaf_count)
    vertices = [Vertex(RUN, n) for n in range(-M, M + 1)]
    edges = [(i, i + 1, 1.0) for i in range(2 * M)]
    tree_index = {node.id: len(vertices) + node.id for node in tree.nodes}
    vertices.extend(Vertex(TREE, node.id) for node in tree.nodes)
    edges.append((M, tree_index[tree.root], 1.0))  # site 0 sits at offset M
    edges.extend(_tree_edges(tree, tree_index))
    pend_vertices, pend_edges = _pendant_block(tree, bits, len(vertices), tree_index)
    vertices.extend(pend_vertices)
    edges.extend(pend_edges)
    return AugmentedGraph(
        vertices=tuple(vertices),
        edges=tuple(edges),
        binding=tuple(int(b) for b in bits),
        kind="runway",
        half_length=M,
        has_pendants=True,
        tree=tree,
    )


def build_tail_graph(
    tree: NandTree,
    x: Sequence[int],
    L: int,
    pendants: bool = True,
    parity_site: bool = False,
) -> AugmentedGraph:
    """Tree with a 2L-site chain off the root; pendants only if requested.

    With ``pendants=False`` the output is independent of the assignment (the
    input-free part of the Hamiltonian); the assignment is still recorded as
    all zeros for reproducibility. ``parity_site=True`` appends one extra
    chain site (2L+1 in total), used by the reflection walk on odd-depth
    trees so the root-to-end path keeps the parity of the kernel cascade.
    """
    if not tree.is_nand_only():
        raise GraphError("tail graph needs a NAND-only tree")
    if L < 1:
        raise GraphError(f"L must be >= 1, got {L}")
    n_sites = 2 * L + (1 if parity_site else 0)
    bits = as_bits(x, tree.leaf_count)
    vertices = [Vertex(TAIL, k) for k in range(1, n_sites + 1)]
    edges = [(k, k + 1, 1.0) for k in range(n_sites - 1)]
    tree_index = {node.id: len(vertices) + node.id for node in tree.nodes}
    vertices.extend(Vertex(TREE, node.id) for node in tree.nodes)
    edges.append((tree_index[tree.root], 0, 1.0))  # root to tail site 1
    edges.extend(_tree_edges(tree, tree_index))
    if pendants:
        pend_vertices, pend_edges = _pendant_block(tree, bits, len(vertices), tree_index)
        vertices.extend(pend_vertices)
        edges.extend(pend_edges)
    return AugmentedGraph(
        vertices=tuple(vertices),
        edges=tuple(edges),
        binding=tuple(int(b) for b in bits) if pendants else (0,) * tree.leaf_count,
        kind="tail",
        half_length=L,
        has_pendants=pendants,
        tree=tree,
        n_tail_sites=n_sites,
    )


def adjacency_matrix(g: AugmentedGraph, weight: WeightFn | None = None) -> np.ndarray:
    """Real symmetric (weighted) adjacency matrix in the graph's vertex order."""
    H = np.zeros((g.n_vertices, g.n_vertices))
    for i, j, w in g.edges:
        if weight is not None:
            w = float(weight(g.vertices[i], g.vertices[j]))
            if w <= 0:
                raise GraphError(
                    f"weight function returned non-positive weight {w} for edge "
                    f"({g.vertices[i]}, {g.vertices[j]})"
                )
        H[i, j] = w
        H[j, i] = w
    return H


# ---------------------------------------------------------------------------
# directed edge states for the coined walk

@dataclass(frozen=True)
class EdgeStateSpace:
    """Directed edge states (vertex, direction) over a pendant-free tail graph.

    Direction availability: the end-of-tail vertex has the single state
    labelled ``left``, interior tail sites have ``left`` (towards the tail
    end, site v+1) and ``right`` (towards the tree, site v-1), internal tree
    vertices have ``down``/``left``/``right`` where the root's ``down``
    points into the tail, and leaves have only ``down``. ``pairing`` maps
    each state to the other state on the same graph edge (the shift swaps
    these pairs).
    """

    states: tuple[tuple[Vertex, str], ...]
    pairing: tuple[int, ...]
    tree: NandTree
    half_length: int
    graph: AugmentedGraph

    @cached_property
    def index(self) -> dict[tuple[Vertex, str], int]:
        return {s: i for i, s in enumerate(self.states)}

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_tail_sites(self) -> int:
        return 2 * self.half_length

    def index_of(self, vertex: Vertex, direction: str) -> int:
        try:
            return self.index[(vertex, direction)]
        except KeyError:
            raise GraphError(f"no state |{vertex},{direction}>") from None

    def tail_edge_state(self, site: int, direction: str) -> int:
        """State index by tail-site label, aliasing site 0 to the root.

        At site 0 the only tail-pointing state is the root's ``down``, which
        is what tail-indexed start-state formulas refer to there.
        """
        if site == 0:
            return self.index_of(Vertex(TREE, self.tree.root), DOWN)
        return self.index_of(Vertex(TAIL, site), direction)


def build_edge_space(tree: NandTree, L: int) -> EdgeStateSpace:
    """Edge-state space of the pendant-free tail graph with 2L tail sites."""
    if not tree.is_binary():
        raise GraphError("edge-state space is defined for binary trees")
    zeros = np.zeros(tree.leaf_count, dtype=np.int64)
    graph = build_tail_graph(tree, zeros, L, pendants=False)
    end = 2 * L

    states: list[tuple[Vertex, str]] = []
    for k in range(1, end):
        states.append((Vertex(TAIL, k), LEFT))
        states.append((Vertex(TAIL, k), RIGHT))
    states.append((Vertex(TAIL, end), LEFT))
    for node in tree.nodes:
        v = Vertex(TREE, node.id)
        if node.kind == LEAF:
            states.append((v, DOWN))
        else:
            states.append((v, DOWN))
            states.append((v, LEFT))
            states.append((v, RIGHT))

    index = {s: i for i, s in enumerate(states)}

    def partner(vertex: Vertex, direction: str) -> tuple[Vertex, str]:
        if vertex.kind == TAIL:
            if vertex.index == end:  # single end state on its unique edge
                return (Vertex(TAIL, end - 1), LEFT)
            if direction == LEFT:  # edge (v, v+1)
                nxt = vertex.index + 1
                if nxt == end:
                    return (Vertex(TAIL, end), LEFT)
                return (Vertex(TAIL, nxt), RIGHT)
            prev = vertex.index - 1  # edge (v, v-1)
            if prev == 0:
                return (Vertex(TREE, tree.root), DOWN)
            return (Vertex(TAIL, prev), LEFT)
        node = tree.nodes[vertex.index]
        if direction == DOWN:
            if vertex.index == tree.root:
                return (Vertex(TAIL, 1), RIGHT)
            parent = tree.parent[vertex.index]
            side = LEFT if tree.nodes[parent].children[0] == vertex.index else RIGHT
            return (Vertex(TREE, parent), side)
        child = node.children[0] if direction == LEFT else node.children[1]
        return (Vertex(TREE, child), DOWN)

    pairing = []
    for vertex, direction in states:
        p = partner(vertex, direction)
        pairing.append(index[p])
    pairing_arr = tuple(pairing)
    for i, j in enumerate(pairing_arr):
        if i == j or pairing_arr[j] != i:
            raise GraphError("edge pairing is not a fixed-point-free involution")
    # the end-of-tail anomaly: its single state is labelled left but lives on
    # its unique edge, so both states of that edge carry the label left
    return EdgeStateSpace(
        states=tuple(states),
        pairing=pairing_arr,
        tree=tree,
        half_length=L,
        graph=graph,
    )
