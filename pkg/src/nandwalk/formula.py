"""AND/OR/NAND formula trees: parsing, de Morgan rewriting, classical evaluation.

Trees are immutable. Nodes live in a flat tuple indexed by pre-order id, the
root is node 0 and children always carry larger ids than their parent.
Variables are positional: the i-th leaf from the left holds x_i.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

NAND = "NAND"
AND = "AND"
OR = "OR"
LEAF = "LEAF"

_GATES = (NAND, AND, OR)

KEEP = "keep"
NEGATE = "negate"


class FormulaError(ValueError):
    """Malformed formula text or ill-formed tree."""


class QueryLedger:
    """Counter of logical oracle uses.

    One unit per input-dependent operator application or classical leaf read.
    For the discrete walks one application of the walk operator is one query,
    so a simulated phase estimation with b ancilla bits and s shots charges
    s * (2**b - 1), the total number of walk steps those circuits perform.
    A continuous evolution under an input-bearing Hamiltonian charges one
    unit per evolution call.
    """

    def __init__(self) -> None:
        self.count = 0

    def charge(self, n: int = 1) -> None:
        if n < 0 or n != int(n):
            raise ValueError(f"charge must be a non-negative integer, got {n}")
        self.count += int(n)

    def __repr__(self) -> str:
        return f"QueryLedger(count={self.count})"


@dataclass(frozen=True)
class Node:
    id: int
    kind: str
    children: tuple[int, ...] = ()
    var: int | None = None


@dataclass(frozen=True)
class NandTree:
    """Rooted gate tree with variable-bearing leaves.

    ``nodes[i].id == i`` and ids are assigned in pre-order, so iterating the
    node tuple in reverse visits every child before its parent.
    """

    nodes: tuple[Node, ...]
    root: int = 0

    def __post_init__(self) -> None:
        _validate_tree(self)

    @cached_property
    def leaves(self) -> tuple[int, ...]:
        return tuple(n.id for n in self.nodes if n.kind == LEAF)

    @cached_property
    def leaf_count(self) -> int:
        return len(self.leaves)

    @cached_property
    def parent(self) -> tuple[int | None, ...]:
        par: list[int | None] = [None] * len(self.nodes)
        for n in self.nodes:
            for c in n.children:
                par[c] = n.id
        return tuple(par)

    @cached_property
    def level(self) -> tuple[int, ...]:
        lev = [0] * len(self.nodes)
        for n in self.nodes:
            if n.id != self.root:
                lev[n.id] = lev[self.parent[n.id]] + 1
        return tuple(lev)

    @cached_property
    def depth(self) -> int:
        return max(self.level[i] for i in self.leaves)

    def node(self, node_id: int) -> Node:
        return self.nodes[node_id]

    def is_nand_only(self) -> bool:
        return all(n.kind in (NAND, LEAF) for n in self.nodes)

    def is_binary(self) -> bool:
        return all(len(n.children) == 2 for n in self.nodes if n.kind != LEAF)

    def is_full_binary(self) -> bool:
        return self.is_binary() and all(
            self.level[i] == self.depth for i in self.leaves
        )


def _validate_tree(tree: NandTree) -> None:
    nodes = tree.nodes
    if not nodes:
        raise FormulaError("tree has no nodes")
    if tree.root != 0 or nodes[0].id != 0:
        raise FormulaError("root must be node 0")
    seen_child: set[int] = set()
    for i, n in enumerate(nodes):
        if n.id != i:
            raise FormulaError(f"node ids must be contiguous pre-order, got {n.id} at {i}")
        if n.kind == LEAF:
            if n.children:
                raise FormulaError(f"leaf {i} has children")
            if n.var is None:
                raise FormulaError(f"leaf {i} has no variable index")
        elif n.kind in _GATES:
            if not n.children:
                raise FormulaError(f"gate {i} has no children")
            if n.var is not None:
                raise FormulaError(f"gate {i} carries a variable index")
        else:
            raise FormulaError(f"unknown node kind {n.kind!r}")
        for c in n.children:
            if not (i < c < len(nodes)):
                raise FormulaError(f"child id {c} of node {i} is not pre-order")
            if c in seen_child:
                raise FormulaError(f"node {c} has more than one parent")
            seen_child.add(c)
    if len(seen_child) != len(nodes) - 1:
        raise FormulaError("tree is not connected")
    vars_in_order = [nodes[i].var for i in range(len(nodes)) if nodes[i].kind == LEAF]
    expected = list(range(1, len(vars_in_order) + 1))
    if vars_in_order != expected:
        raise FormulaError(
            f"leaf variables must be x1..xN left to right, got {vars_in_order}"
        )


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(r"\s*(?:(?P<name>[A-Za-z]+[0-9]*)|(?P<lpar>\()|(?P<rpar>\))|(?P<comma>,))")
_VAR = re.compile(r"^x([1-9][0-9]*)$")


def parse_formula(text: str) -> NandTree:
    """Parse formula text into a tree.

    Grammar: ``formula := gate | var``, ``gate := ("NAND"|"AND"|"OR") "("
    formula ("," formula)+ ")"``, ``var := "x" positive-integer``.
    Whitespace is insignificant. Variables must appear exactly once and in
    left-to-right order x1, x2, ...
    """
    tokens: list[tuple[str, str, int]] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            bad_at = len(text) - len(stripped)
            raise FormulaError(f"syntax error at position {bad_at}: unexpected {text[bad_at]!r}")
        kind = m.lastgroup
        assert kind is not None
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    if not tokens:
        raise FormulaError("empty formula")

    nodes: list[Node] = []
    seen_vars: set[int] = set()
    cursor = 0

    def peek() -> tuple[str, str, int] | None:
        return tokens[cursor] if cursor < len(tokens) else None

    def take(kind: str, what: str) -> tuple[str, str, int]:
        nonlocal cursor
        tok = peek()
        if tok is None:
            raise FormulaError(f"syntax error at position {len(text)}: expected {what}")
        if tok[0] != kind:
            raise FormulaError(f"syntax error at position {tok[2]}: expected {what}, got {tok[1]!r}")
        cursor += 1
        return tok

    def parse_expr() -> int:
        nonlocal cursor
        tok = take("name", "gate name or variable")
        name, at = tok[1], tok[2]
        var_match = _VAR.match(name)
        if var_match:
            idx = int(var_match.group(1))
            if idx in seen_vars:
                raise FormulaError(f"duplicate variable x{idx} at position {at}")
            expected = len(seen_vars) + 1
            if idx != expected:
                raise FormulaError(
                    f"variables must appear left to right: expected x{expected}, got x{idx} at position {at}"
                )
            seen_vars.add(idx)
            node_id = len(nodes)
            nodes.append(Node(node_id, LEAF, (), idx))
            return node_id
        if name not in _GATES:
            raise FormulaError(f"syntax error at position {at}: unknown name {name!r}")
        node_id = len(nodes)
        nodes.append(Node(node_id, name))  # placeholder, children patched below
        take("lpar", "'('")
        children = [parse_expr()]
        take("comma", "','")
        children.append(parse_expr())
        while peek() is not None and peek()[0] == "comma":
            cursor += 1
            children.append(parse_expr())
        take("rpar", "')'")
        nodes[node_id] = Node(node_id, name, tuple(children))
        return node_id

    parse_expr()
    tok = peek()
    if tok is not None:
        raise FormulaError(f"syntax error at position {tok[2]}: trailing {tok[1]!r}")
    return NandTree(tuple(nodes))


def full_binary_tree(depth: int) -> NandTree:
    """Full binary NAND tree of the given depth (2**depth leaves)."""
    if depth < 0:
        raise FormulaError("depth must be non-negative")
    nodes: list[Node] = []
    next_var = itertools.count(1)

    def build(level: int) -> int:
        node_id = len(nodes)
        if level == depth:
            nodes.append(Node(node_id, LEAF, (), next(next_var)))
            return node_id
        nodes.append(Node(node_id, NAND))
        left = build(level + 1)
        right = build(level + 1)
        nodes[node_id] = Node(node_id, NAND, (left, right))
        return node_id

    build(0)
    return NandTree(tuple(nodes))


# ---------------------------------------------------------------------------
# evaluation

def as_bits(x: Sequence[int], n: int) -> np.ndarray:
    bits = np.asarray(x, dtype=np.int64)
    if bits.shape != (n,):
        raise FormulaError(f"assignment length {bits.shape} does not match leaf count {n}")
    if not np.all((bits == 0) | (bits == 1)):
        raise FormulaError("assignment entries must be 0 or 1")
    return bits


def node_values(tree: NandTree, x: Sequence[int]) -> np.ndarray:
    """Bottom-up gate values for every node under assignment x."""
    bits = as_bits(x, tree.leaf_count)
    vals = np.zeros(len(tree.nodes), dtype=np.int64)
    for n in reversed(tree.nodes):
        if n.kind == LEAF:
            vals[n.id] = bits[n.var - 1]
        elif n.kind == AND:
            vals[n.id] = int(all(vals[c] for c in n.children))
        elif n.kind == OR:
            vals[n.id] = int(any(vals[c] for c in n.children))
        else:  # NAND
            vals[n.id] = int(not all(vals[c] for c in n.children))
    return vals


def evaluate(tree: NandTree, x: Sequence[int], ledger: QueryLedger | None = None) -> int:
    """Value of the formula at assignment x (reads every leaf once)."""
    if ledger is not None:
        ledger.charge(tree.leaf_count)
    return int(node_values(tree, x)[tree.root])


def all_assignments(n: int) -> Iterator[tuple[int, ...]]:
    """All 2**n assignments in lexicographic order."""
    return itertools.product((0, 1), repeat=n)


# ---------------------------------------------------------------------------
# de Morgan rewrite

def to_nand(tree: NandTree) -> tuple[NandTree, dict[int, str], str]:
    """Rewrite an alternating AND/OR tree as a pure NAND tree.

    Returns ``(nand_tree, leaf_polarity, root_polarity)``. Shape and node ids
    are preserved; applying the leaf polarities to the input bits, evaluating
    the NAND tree and applying the root polarity reproduces the original
    formula on every assignment.

    The rewrite is forced: NAND(y1..yk) equals both NOT AND(y1..yk) and
    OR(NOT y1..NOT yk), so an AND gate is realised with output negated and
    an OR gate with inputs negated. Strict level alternation makes the two
    uses mesh.
    """
    kinds_by_level: dict[int, set[str]] = {}
    for n in tree.nodes:
        if n.kind == LEAF:
            continue
        if n.kind == NAND:
            raise FormulaError("input tree must contain only AND/OR gates")
        kinds_by_level.setdefault(tree.level[n.id], set()).add(n.kind)
    for lev, kinds in sorted(kinds_by_level.items()):
        if len(kinds) > 1:
            raise FormulaError(f"mixed gate kinds {sorted(kinds)} at level {lev}")
    for n in tree.nodes:
        if n.kind == LEAF or n.id == tree.root:
            continue
        parent_kind = tree.nodes[tree.parent[n.id]].kind
        if n.kind == parent_kind:
            raise FormulaError(
                f"gates must alternate by level: node {n.id} and its parent are both {n.kind}"
            )

    # An AND gate is computed negated (NAND of its children's values), an OR
    # gate is computed directly (NAND of its children's negations). A leaf is
    # therefore negated exactly when its parent is an OR gate.
    leaf_polarity: dict[int, str] = {}
    for i in tree.leaves:
        parent = tree.parent[i]
        if parent is None:  # single-leaf formula
            leaf_polarity[tree.nodes[i].var] = KEEP
        else:
            leaf_polarity[tree.nodes[i].var] = (
                NEGATE if tree.nodes[parent].kind == OR else KEEP
            )
    root_kind = tree.nodes[tree.root].kind
    root_polarity = NEGATE if root_kind == AND else KEEP

    new_nodes = tuple(
        n if n.kind == LEAF else Node(n.id, NAND, n.children) for n in tree.nodes
    )
    return NandTree(new_nodes), leaf_polarity, root_polarity


def evaluate_with_polarity(
    nand_tree: NandTree,
    leaf_polarity: dict[int, str],
    root_polarity: str,
    x: Sequence[int],
) -> int:
    """Evaluate a to_nand rewrite: flip marked inputs, evaluate, flip output."""
    bits = as_bits(x, nand_tree.leaf_count).copy()
    for var, pol in leaf_polarity.items():
        if pol == NEGATE:
            bits[var - 1] ^= 1
    val = evaluate(nand_tree, bits)
    return val ^ 1 if root_polarity == NEGATE else val


# ---------------------------------------------------------------------------
# randomized query baseline

def randomized_query_cost(
    tree: NandTree,
    x: Sequence[int],
    mode: str = "exact-recurrence",
    trials: int | None = None,
    seed: int | None = None,
) -> float:
    """Expected leaf reads of randomized short-circuit depth-first evaluation.

    The evaluator visits the children of each NAND gate in uniformly random
    order and stops as soon as one child returns 0 (the gate is then 1).
    ``exact-recurrence`` computes the expectation by dynamic programming,
    ``monte-carlo`` estimates it from ``trials`` simulated runs.
    """
    if not tree.is_nand_only():
        raise FormulaError("randomized baseline is defined for NAND-only trees")
    if mode == "exact-recurrence":
        return _exact_expected_cost(tree, x)
    if mode == "monte-carlo":
        if not trials:
            raise ValueError("monte-carlo mode needs trials >= 1")
        samples = monte_carlo_query_counts(tree, x, trials, seed)
        return float(samples.mean())
    raise ValueError(f"unknown mode {mode!r}")


def _exact_expected_cost(tree: NandTree, x: Sequence[int]) -> float:
    vals = node_values(tree, x)
    cost = np.zeros(len(tree.nodes))
    for n in reversed(tree.nodes):
        if n.kind == LEAF:
            cost[n.id] = 1.0
            continue
        zeros = [c for c in n.children if vals[c] == 0]
        ones = [c for c in n.children if vals[c] == 1]
        if not zeros:
            cost[n.id] = sum(cost[c] for c in n.children)
        else:
            # a 0-child is read iff it precedes every other 0-child, a
            # 1-child iff it precedes all 0-children
            z = len(zeros)
            cost[n.id] = sum(cost[c] for c in zeros) / z + sum(
                cost[c] for c in ones
            ) / (z + 1)
    return float(cost[tree.root])


def monte_carlo_query_counts(
    tree: NandTree,
    x: Sequence[int],
    trials: int,
    seed: int | None = None,
    ledger: QueryLedger | None = None,
) -> np.ndarray:
    """Per-trial leaf-read counts of the randomized evaluator."""
    bits = as_bits(x, tree.leaf_count)
    rng = np.random.default_rng(seed)
    counts = np.zeros(trials, dtype=np.int64)

    def run(node_id: int) -> tuple[int, int]:
        n = tree.nodes[node_id]
        if n.kind == LEAF:
            return int(bits[n.var - 1]), 1
        reads = 0
        for c in rng.permutation(n.children):
            val, r = run(int(c))
            reads += r
            if val == 0:
                return 1, reads
        return 0, reads

    for t in range(trials):
        _, reads = run(tree.root)
        counts[t] = reads
        if ledger is not None:
            ledger.charge(reads)
    return counts


def worst_case_assignment(
    tree: NandTree, value: int | None = None
) -> tuple[np.ndarray, float]:
    """Assignment maximizing the exact expected randomized query cost.

    With ``value`` given, the maximization is restricted to assignments under
    which the root evaluates to ``value``. Returns ``(bits, expected_cost)``.
    """
    if not tree.is_nand_only():
        raise FormulaError("worst case is defined for NAND-only trees")
    # best[node][target] = (cost, tuple of child targets)
    best: list[dict[int, tuple[float, tuple[int, ...]]]] = [dict() for _ in tree.nodes]
    for n in reversed(tree.nodes):
        if n.kind == LEAF:
            best[n.id] = {0: (1.0, ()), 1: (1.0, ())}
            continue
        k = len(n.children)
        c0 = [best[c][0][0] for c in n.children]
        c1 = [best[c][1][0] for c in n.children]
        # NAND = 0 forces every child to 1
        best[n.id][0] = (sum(c1), tuple([1] * k))
        # NAND = 1 needs a non-empty zero set; optimize its size and members
        top: tuple[float, tuple[int, ...]] | None = None
        for z in range(1, k + 1):
            gain = sorted(
                range(k), key=lambda i: c0[i] / z - c1[i] / (z + 1), reverse=True
            )
            zero_set = set(gain[:z])
            cost = sum(
                c0[i] / z if i in zero_set else c1[i] / (z + 1) for i in range(k)
            )
            if top is None or cost > top[0]:
                top = (cost, tuple(0 if i in zero_set else 1 for i in range(k)))
        assert top is not None
        best[n.id][1] = top

    if value is None:
        value = max((0, 1), key=lambda v: best[tree.root][v][0])
    cost = best[tree.root][value][0]
    bits = np.zeros(tree.leaf_count, dtype=np.int64)

    def assign(node_id: int, target: int) -> None:
        n = tree.nodes[node_id]
        if n.kind == LEAF:
            bits[n.var - 1] = target
            return
        for c, t in zip(n.children, best[node_id][target][1]):
            assign(c, t)

    assign(tree.root, value)
    return bits, float(cost)


def assignment_with_value(tree: NandTree, value: int) -> np.ndarray:
    """Deterministic assignment giving the root the requested value."""
    bits, _ = worst_case_assignment(tree, value)
    return bits
