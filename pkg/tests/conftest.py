"""Shared test oracles, implemented independently of the package internals.

The generator matrix is materialized with np.kron; union trees, peeling,
and the exhaustive stopping-set search are re-derived from closed-form
node membership so they share no code with the library paths they check.
"""

from __future__ import annotations

import itertools

import numpy as np
import pytest

F2 = np.array([[1, 0], [1, 1]], dtype=np.uint8)


def kron_matrix(n: int) -> np.ndarray:
    G = np.array([[1]], dtype=np.uint8)
    for _ in range(n):
        G = np.kron(G, F2)
    return G


def tree_member(j: int, r: int, c: int, n: int) -> bool:
    """Closed-form membership of v(r, c) in the stopping tree of j.

    The low n-c bits of r must equal those of j; the high c bits of r must
    be covered by the high bits of j.
    """
    low = (1 << (n - c)) - 1
    if (r & low) != (j & low):
        return False
    return (r >> (n - c)) & ~(j >> (n - c)) == 0


class BruteUnionTree:
    """Dictionary-based union tree with naive fixpoint peeling."""

    def __init__(self, J, n: int):
        self.n = n
        self.N = 1 << n
        self.J = sorted(set(J))
        self.vars = {
            (r, c)
            for c in range(n + 1)
            for r in range(self.N)
            if any(tree_member(j, r, c, n) for j in self.J)
        }
        self.checks = {}
        for c in range(n):
            s = 1 << (n - 1 - c)
            for r in range(self.N):
                if (r >> (n - 1 - c)) & 1 == 0:
                    members = [(r, c), (r + s, c), (r, c + 1)]
                else:
                    members = [(r, c), (r, c + 1)]
                if any(v in self.vars for v in members):
                    self.checks[(r, c)] = members
        self.leaves = sorted(r for (r, c) in self.vars if c == n)
        owners = {
            k: sum(1 for j in self.J if tree_member(j, k, n, n)) for k in self.leaves
        }
        self.oll = sorted(k for k, cnt in owners.items() if cnt >= 2)
        self.noll = sorted(k for k, cnt in owners.items() if cnt == 1)

    def peel(self, removed_leaves) -> set | None:
        """Fixpoint after removing leaves; None if a root is lost."""
        alive = set(self.vars) - {(k, self.n) for k in removed_leaves}
        changed = True
        while changed:
            changed = False
            for members in self.checks.values():
                live = [v for v in members if v in alive]
                if len(live) == 1:
                    alive.remove(live[0])
                    changed = True
        if any((j, 0) not in alive for j in self.J):
            return None
        return alive

    def all_outcomes(self):
        """Every feasible leaf set reachable by deleting overlapped leaves."""
        outs = set()
        for size in range(len(self.oll) + 1):
            for sub in itertools.combinations(self.oll, size):
                alive = self.peel(sub)
                if alive is not None:
                    outs.add(frozenset(r for (r, c) in alive if c == self.n))
        return outs

    def exhaustive(self):
        """(minimum leaf count, set of minimum leaf witnesses)."""
        outs = self.all_outcomes()
        best = min(len(w) for w in outs)
        return best, {w for w in outs if len(w) == best}


def brute_mvss(J, n: int):
    return BruteUnionTree(J, n).exhaustive()


def bec_sample_erased(erased: np.ndarray, i: int, n: int):
    """Whether input channel i is erased for sampled leaf erasures.

    Splits the observation columns even/odd; the low index bit selects an
    OR (degraded side) or AND (upgraded side) of the two half-problems.
    Vectorized over trailing sample axes.
    """
    cols = np.arange(1 << n)

    def rec(cols_, i_, k):
        if k == 0:
            return erased[cols_[0]]
        a = rec(cols_[0::2], i_ >> 1, k - 1)
        b = rec(cols_[1::2], i_ >> 1, k - 1)
        return (a | b) if (i_ & 1) == 0 else (a & b)

    return rec(cols, i, n)


@pytest.fixture(scope="session")
def graphs():
    from polarstop import build_factor_graph

    return {n: build_factor_graph(n) for n in range(1, 6)}


def leaf_mask(rows) -> int:
    out = 0
    for r in rows:
        out |= 1 << r
    return out


@pytest.fixture(scope="session")
def vss_catalog_n3():
    """Leaf witnesses of every index set at n=3, as bitmasks per J-mask.

    catalog[J_mask] lists the minimal observable witness sets reachable by
    overlapped-leaf deletions; an erasure pattern defeats J exactly when
    it contains one of them.
    """
    catalog = {}
    for j_mask in range(1, 256):
        J = [b for b in range(8) if (j_mask >> b) & 1]
        outs = {leaf_mask(w) for w in BruteUnionTree(J, 3).all_outcomes()}
        minimal = [w for w in outs if not any(o != w and o & w == o for o in outs)]
        catalog[j_mask] = minimal
    return catalog


@pytest.fixture(scope="session")
def fatal_masks_n3(vss_catalog_n3):
    """Per information-set mask: minimal fatal erasure patterns (bitmasks)."""
    out = {}
    for a_mask in range(1, 256):
        masks = set()
        sub = a_mask
        while sub:
            masks.update(vss_catalog_n3[sub])
            sub = (sub - 1) & a_mask
        minimal = [w for w in masks if not any(o != w and o & w == o for o in masks)]
        out[a_mask] = minimal
    return out
