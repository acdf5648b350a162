"""Sparse factor graph (normal realization) of the polar transform.

The graph for length N = 2^n has n+1 columns of N variable nodes and n
columns of N check nodes.  Variable column 0 is the u-domain, variable
column n holds the observed leaves x_0..x_{N-1}.  Check column c sits
between variable columns c and c+1 and realizes the butterfly at span
s = 2^(n-1-c): rows whose bit (n-1-c) is 0 carry a degree-3 XOR check

    v(r, c) + v(r+s, c) + v(r, c+1) = 0,

and the partner rows carry a degree-2 pass-through check

    v(r, c) + v(r, c+1) = 0.

With this wiring the leftmost check column joins the two half-graphs, so
columns [1, n] split into an upper and a lower copy of the next smaller
graph, and propagating u left to right reproduces the matrix transform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_STAGES = 20


@dataclass(frozen=True, order=True)
class NodeRef:
    """One node: kind 'v' (variable) or 'c' (check), plus row and column."""

    kind: str
    row: int
    col: int

    def __str__(self) -> str:
        return f"{self.kind} {self.row} {self.col}"


@dataclass(frozen=True)
class SubgraphMask:
    """Subset of variable and check nodes, stored as (row, col) pairs."""

    n: int
    var_nodes: frozenset
    check_nodes: frozenset

    def leaf_rows(self) -> set[int]:
        return {r for r, c in self.var_nodes if c == self.n}

    def root_rows(self) -> set[int]:
        return {r for r, c in self.var_nodes if c == 0}


class FactorGraph:
    """Normal realization of the length-2^n polar transform.

    The structure is implicit: adjacency is computed from (row, column)
    arithmetic, so construction is O(1) and instances are immutable and
    safe to share across threads.
    """

    def __init__(self, n: int, max_n: int = MAX_STAGES):
        if not 1 <= n <= max_n:
            raise ValueError(f"n must be in [1, {max_n}], got {n}")
        self.n = n
        self.N = 1 << n

    # -- structure queries ---------------------------------------------

    @property
    def var_count(self) -> int:
        return self.N * (self.n + 1)

    @property
    def check_count(self) -> int:
        return self.N * self.n

    def span(self, check_col: int) -> int:
        return 1 << (self.n - 1 - check_col)

    def is_xor_check(self, row: int, check_col: int) -> bool:
        return not (row >> (self.n - 1 - check_col)) & 1

    def check_var_neighbors(self, row: int, check_col: int) -> tuple[tuple[int, int], ...]:
        """Variable neighbors of check (row, col); left vars first, right var last."""
        if not (0 <= row < self.N and 0 <= check_col < self.n):
            raise ValueError(f"check ({row}, {check_col}) out of range")
        if self.is_xor_check(row, check_col):
            s = self.span(check_col)
            return ((row, check_col), (row + s, check_col), (row, check_col + 1))
        return ((row, check_col), (row, check_col + 1))

    def var_check_neighbors(self, row: int, col: int) -> tuple[tuple[int, int], ...]:
        """Check neighbors of variable (row, col)."""
        if not (0 <= row < self.N and 0 <= col <= self.n):
            raise ValueError(f"variable ({row}, {col}) out of range")
        out = []
        if col >= 1:
            out.append((row, col - 1))
        if col <= self.n - 1:
            out.append((row, col))
            s = self.span(col)
            if (row >> (self.n - 1 - col)) & 1:
                out.append((row - s, col))
        return tuple(out)

    def var(self, row: int, col: int) -> NodeRef:
        if not (0 <= row < self.N and 0 <= col <= self.n):
            raise ValueError(f"variable ({row}, {col}) out of range")
        return NodeRef("v", row, col)

    def check(self, row: int, col: int) -> NodeRef:
        if not (0 <= row < self.N and 0 <= col < self.n):
            raise ValueError(f"check ({row}, {col}) out of range")
        return NodeRef("c", row, col)

    # -- graph-driven encoding ------------------------------------------

    def propagate(self, u) -> np.ndarray:
        """Push a u-assignment left to right through the check equations.

        Walks the explicit adjacency rather than using butterfly index
        tricks, so it doubles as a wiring self-check against the matrix
        transform.
        """
        u = np.asarray(u)
        if u.shape != (self.N,):
            raise ValueError(f"expected length {self.N}, got shape {u.shape}")
        vals = np.zeros((self.n + 1, self.N), dtype=np.uint8)
        vals[0] = u & 1
        for c in range(self.n):
            for r in range(self.N):
                nb = self.check_var_neighbors(r, c)
                right_r, right_c = nb[-1]
                acc = 0
                for vr, vc in nb[:-1]:
                    acc ^= int(vals[vc][vr])
                vals[right_c][right_r] = acc
        return vals[self.n]

    def export_edge_list(self) -> str:
        """One line per edge: `v r c  --  c r' c'`, sorted."""
        lines = []
        for c in range(self.n):
            for r in range(self.N):
                for vr, vc in self.check_var_neighbors(r, c):
                    lines.append(f"v {vr} {vc}  --  c {r} {c}")
        lines.sort()
        return "\n".join(lines) + "\n"


def build_factor_graph(n: int, max_n: int = MAX_STAGES) -> FactorGraph:
    return FactorGraph(n, max_n=max_n)


# ---------------------------------------------------------------------------
# Stopping trees and their unions
# ---------------------------------------------------------------------------

def _propagate_rows(g: FactorGraph, rows: set[int]):
    """Yield (check_col, rows at col+1) walking the forced closure rightward.

    A member at a pass-through row forces its continuation and the XOR
    partner output; a member at an XOR row forces only its continuation.
    """
    for c in range(g.n):
        shift = g.n - 1 - c
        nxt = set()
        for r in rows:
            nxt.add(r)
            if (r >> shift) & 1:
                nxt.add(r - (1 << shift))
        yield c, nxt
        rows = nxt


def stopping_tree(g: FactorGraph, i: int) -> SubgraphMask:
    """The unique stopping set containing exactly v(i, 0) on the left."""
    if not 0 <= i < g.N:
        raise ValueError(f"index {i} out of range for N={g.N}")
    return union_tree(g, [i])


def union_tree(g: FactorGraph, J) -> SubgraphMask:
    """Union of the stopping trees of J, the largest stopping set for J."""
    rows = set(J)
    if not rows:
        raise ValueError("J must be non-empty")
    if not all(0 <= j < g.N for j in rows):
        raise ValueError("index out of range")
    var_nodes = {(r, 0) for r in rows}
    check_nodes = set()
    for c, nxt in _propagate_rows(g, rows):
        check_nodes.update((r, c) for r in nxt)
        var_nodes.update((r, c + 1) for r in nxt)
    return SubgraphMask(g.n, frozenset(var_nodes), frozenset(check_nodes))


@dataclass(frozen=True)
class LeafClassification:
    """Overlap status of the leaves of a union tree.

    oll holds leaves shared by two or more stopping trees, noll the ones
    owned by exactly one tree, and root_icn maps each overlapped leaf to
    its rightmost ancestor intersection check.
    """

    oll: tuple[int, ...]
    noll: tuple[int, ...]
    root_icn: dict[int, NodeRef]


def _parent_icns(g: FactorGraph, var_nodes, leaf_row: int) -> list[tuple[int, int]]:
    """All intersection checks sitting on ancestor paths of a leaf.

    An intersection check is a degree-3 check whose three neighbors are
    all members; degree-2 pass-through checks never qualify.
    """
    icns = []
    seen = set()
    stack = [(leaf_row, g.n)]
    while stack:
        r, c = stack.pop()
        if (r, c) in seen or c == 0:
            continue
        seen.add((r, c))
        pr, pc = r, c - 1
        members = g.check_var_neighbors(pr, pc)
        if len(members) == 3 and all(v in var_nodes for v in members):
            icns.append((pr, pc))
        for vr, vc in members[:-1]:
            if (vr, vc) in var_nodes:
                stack.append((vr, vc))
    return icns


def classify_leaves(g: FactorGraph, J) -> LeafClassification:
    """Split the union-tree leaves of J into overlapped and single-owner sets."""
    J = sorted(set(J))
    if not J:
        raise ValueError("J must be non-empty")
    ut = union_tree(g, J)
    oll, noll = [], []
    for k in sorted(ut.leaf_rows()):
        owners = 0
        for j in J:
            if (k & ~j) == 0:
                owners += 1
                if owners > 1:
                    break
        (oll if owners > 1 else noll).append(k)
    root_icn = {}
    for k in oll:
        cands = _parent_icns(g, ut.var_nodes, k)
        if not cands:
            raise AssertionError(f"overlapped leaf {k} has no parent intersection check")
        col = max(c for _, c in cands)
        row = min(r for r, c in cands if c == col)
        root_icn[k] = NodeRef("c", row, col)
    return LeafClassification(tuple(oll), tuple(noll), root_icn)


def is_stopping_set(g: FactorGraph, mask: SubgraphMask) -> bool:
    """True iff every check adjacent to a member variable sees >= 2 members."""
    members = mask.var_nodes
    if not members:
        return False
    adjacent = set()
    for r, c in members:
        adjacent.update(g.var_check_neighbors(r, c))
    for cr, cc in adjacent:
        count = sum(1 for v in g.check_var_neighbors(cr, cc) if v in members)
        if count < 2:
            return False
    return True
