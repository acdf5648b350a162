"""Bounds and exact search for minimum variable-node stopping sets.

All quantities are for a fixed index set J on the leftmost stage: the
target is the smallest number of rightmost-stage leaves over all stopping
sets whose leftmost members are exactly J.  Everything works on the union
tree of J, since any such stopping set lives inside it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .factor_graph import FactorGraph, SubgraphMask, build_factor_graph
from .polar_core import leaf_count, row_support


@dataclass(frozen=True)
class DeletionTrace:
    """Replayable record of one deletion schedule.

    Each step is (leaf tried, leaves actually removed, accepted); replaying
    the accepted removals on the fresh union tree reproduces the witness.
    """

    steps: tuple[tuple[int, frozenset[int], bool], ...]


@dataclass(frozen=True)
class BoundReport:
    """All bound values for one index set, plus the exact value when known."""

    lb1: int
    lb2: int
    enc_ub: int
    del1_ub: int
    del2_ub: int
    exact: int | None = None
    exact_method: str | None = None
    witness: frozenset[int] | None = None

    def best_upper(self) -> int:
        return min(self.enc_ub, self.del1_ub, self.del2_ub)

    def best_lower(self) -> int:
        return max(self.lb1, self.lb2)


class InstanceTooLarge(Exception):
    """Raised when the exhaustive search would exceed its size preconditions."""


def _validate(J, n) -> list[int]:
    J = sorted(set(J))
    if not J:
        raise ValueError("J must be non-empty")
    if not all(0 <= j < (1 << n) for j in J):
        raise ValueError("index out of range")
    return J


# ---------------------------------------------------------------------------
# Closed-form bounds
# ---------------------------------------------------------------------------

def lower_bound_I(J, n: int) -> int:
    """Smallest stopping-tree leaf count over J."""
    J = _validate(J, n)
    return min(leaf_count(j) for j in J)


def lower_bound_II(J, n: int) -> int:
    """Number of leaf positions covered by exactly one generator row of J.

    Streams row supports into a capped counter, O(N) memory, without
    materializing the generator matrix.
    """
    J = _validate(J, n)
    counts = np.zeros(1 << n, dtype=np.uint8)
    for j in J:
        supp = np.asarray(row_support(n, j))
        hot = counts[supp] < 2
        counts[supp[hot]] += 1
    return int((counts == 1).sum())


def encoding_bound(J, n: int) -> tuple[int, frozenset[int]]:
    """Weight and support of the codeword whose u-support is J.

    The value-1 nodes of the encoding pass form a stopping set, so the
    support is a valid leaf witness for J.
    """
    J = _validate(J, n)
    u = np.zeros(1 << n, dtype=np.uint8)
    u[J] = 1
    from .polar_core import polar_transform

    x = polar_transform(u)
    supp = frozenset(int(k) for k in np.flatnonzero(x))
    return len(supp), supp


# ---------------------------------------------------------------------------
# Mutable union-tree state with peeling (shared by the deletion algorithms,
# the exhaustive search, and the erasure-duality oracles)
# ---------------------------------------------------------------------------

class UnionTreeState:
    """Peelable copy of UT(J): alive flags plus per-check member counts.

    Node ids are local to the union tree.  Deleting a leaf peels degree-1
    checks to the fixpoint; an attempt that would peel a leftmost variable
    is rolled back and reported as infeasible.
    """

    def __init__(self, g: FactorGraph, J):
        J = _validate(J, g.n)
        self.g = g
        self.n = g.n
        mask = _union_tree_sets(g, J)
        var_rows, check_rows = mask  # per-column row sets
        self.var_index: dict[tuple[int, int], int] = {}
        self.var_list: list[tuple[int, int]] = []
        for c in range(g.n + 1):
            for r in sorted(var_rows[c]):
                self.var_index[(r, c)] = len(self.var_list)
                self.var_list.append((r, c))
        check_index: dict[tuple[int, int], int] = {}
        self.check_list: list[tuple[int, int]] = []
        for c in range(g.n):
            for r in sorted(check_rows[c]):
                check_index[(r, c)] = len(self.check_list)
                self.check_list.append((r, c))
        self.check_members: list[tuple[int, ...]] = []
        for (r, c) in self.check_list:
            nb = g.check_var_neighbors(r, c)
            self.check_members.append(
                tuple(self.var_index[v] for v in nb if v in self.var_index)
            )
        nvar = len(self.var_list)
        self.var_checks: list[list[int]] = [[] for _ in range(nvar)]
        self.var_right_checks: list[list[int]] = [[] for _ in range(nvar)]
        for ci, members in enumerate(self.check_members):
            cc = self.check_list[ci][1]
            for vi in members:
                self.var_checks[vi].append(ci)
                if self.var_list[vi][1] == cc:
                    self.var_right_checks[vi].append(ci)
        self.alive = bytearray([1]) * nvar
        self.count = [len(m) for m in self.check_members]
        self.leaf_of_row = {r: self.var_index[(r, g.n)] for r in var_rows[g.n]}
        self.root_ids = {self.var_index[(r, 0)] for r in var_rows[0]}
        self.initial_leaves = frozenset(var_rows[g.n])

    # -- basic queries ----------------------------------------------------

    def alive_leaves(self) -> frozenset[int]:
        return frozenset(
            r for r, vi in self.leaf_of_row.items() if self.alive[vi]
        )

    def alive_leaf_count(self) -> int:
        return sum(1 for vi in self.leaf_of_row.values() if self.alive[vi])

    def leaf_alive(self, row: int) -> bool:
        return bool(self.alive[self.leaf_of_row[row]])

    def clone(self) -> "UnionTreeState":
        twin = object.__new__(UnionTreeState)
        twin.__dict__.update(self.__dict__)
        twin.alive = bytearray(self.alive)
        twin.count = list(self.count)
        return twin

    # -- deletion with peeling ---------------------------------------------

    def try_delete_leaves(self, rows) -> tuple[bool, frozenset[int], list[int]]:
        """Delete leaves and peel; roll back if a leftmost variable dies.

        Returns (accepted, removed leaf rows, undo log).  The caller keeps
        the log to revert an accepted deletion during search.
        """
        killed: list[int] = []
        queue: list[int] = []
        ok = True
        for row in rows:
            vi = self.leaf_of_row[row]
            if self.alive[vi]:
                self._kill(vi, killed, queue)
        while queue:
            ci = queue.pop()
            if self.count[ci] != 1:
                continue
            vi = next(m for m in self.check_members[ci] if self.alive[m])
            if vi in self.root_ids:
                ok = False
                break
            self._kill(vi, killed, queue)
        if not ok:
            self.revert(killed)
            return False, frozenset(), []
        removed = frozenset(
            self.var_list[vi][0] for vi in killed if self.var_list[vi][1] == self.n
        )
        return True, removed, killed

    def _kill(self, vi: int, killed: list[int], queue: list[int]) -> None:
        self.alive[vi] = 0
        killed.append(vi)
        for ci in self.var_checks[vi]:
            self.count[ci] -= 1
            if self.count[ci] == 1:
                queue.append(ci)

    def revert(self, killed: list[int]) -> None:
        for vi in killed:
            self.alive[vi] = 1
            for ci in self.var_checks[vi]:
                self.count[ci] += 1

    # -- structure relative to the current (peeled) tree --------------------

    def root_icn(self, leaf_row: int) -> int | None:
        """Rightmost ancestor check with all three members alive, or None."""
        best = None
        seen = set()
        stack = [self.leaf_of_row[leaf_row]]
        while stack:
            vi = stack.pop()
            if vi in seen:
                continue
            seen.add(vi)
            r, c = self.var_list[vi]
            if c == 0:
                continue
            ci = self._parent_check(r, c)
            if ci is None:
                continue
            members = self.check_members[ci]
            if len(members) == 3 and self.count[ci] == 3:
                cr, cc = self.check_list[ci]
                key = (cc, -cr)
                if best is None or key > best[0]:
                    best = (key, ci)
            for m in members:
                if self.var_list[m][1] == c - 1 and self.alive[m]:
                    stack.append(m)
        return None if best is None else best[1]

    def _parent_check(self, r: int, c: int) -> int | None:
        for ci in self.var_checks[self.var_index[(r, c)]]:
            if self.check_list[ci][1] == c - 1:
                return ci
        return None

    def descendant_leaves(self, ci: int) -> list[int]:
        """Leaves reachable rightward from a check through alive members."""
        out = []
        seen = set()
        stack = [ci]
        while stack:
            ck = stack.pop()
            cc = self.check_list[ck][1]
            right = next(
                (m for m in self.check_members[ck] if self.var_list[m][1] == cc + 1),
                None,
            )
            if right is None or not self.alive[right] or right in seen:
                continue
            seen.add(right)
            r, c = self.var_list[right]
            if c == self.n:
                out.append(r)
                continue
            stack.extend(self.var_right_checks[right])
        return out


def _union_tree_sets(g: FactorGraph, J):
    """Per-column row sets of UT(J) and of its checks (checks col c = vars col c+1)."""
    rows = set(J)
    var_rows = [set(rows)]
    check_rows = []
    for c in range(g.n):
        shift = g.n - 1 - c
        nxt = set()
        for r in rows:
            nxt.add(r)
            if (r >> shift) & 1:
                nxt.add(r - (1 << shift))
        check_rows.append(nxt)
        var_rows.append(set(nxt))
        rows = nxt
    return var_rows, check_rows


def _leaf_overlap_split(g: FactorGraph, J) -> tuple[list[int], list[int]]:
    """(overlapped leaves, single-owner leaves) of UT(J), both sorted."""
    counts: dict[int, int] = {}
    for j in J:
        for k in row_support(g.n, j):
            counts[k] = counts.get(k, 0) + 1
    oll = sorted(k for k, c in counts.items() if c > 1)
    noll = sorted(k for k, c in counts.items() if c == 1)
    return oll, noll


# ---------------------------------------------------------------------------
# Deletion bounds
# ---------------------------------------------------------------------------

def deletion_bound_I(J, n: int) -> tuple[int, frozenset[int], DeletionTrace]:
    """Deterministic deletion schedule: per overlapped leaf (descending
    index), try removing every leaf under its root intersection check.

    The root intersection check is resolved against the current peeled
    tree; if an overlapped leaf no longer has one, the attempt degrades to
    deleting the leaf alone, which the peel then adjudicates.
    """
    J = _validate(J, n)
    g = build_factor_graph(n)
    state = UnionTreeState(g, J)
    oll, _ = _leaf_overlap_split(g, J)
    pending = sorted(oll, reverse=True)
    steps = []
    while pending:
        l = pending[0]
        ci = state.root_icn(l)
        targets = state.descendant_leaves(ci) if ci is not None else [l]
        ok, removed, _ = state.try_delete_leaves(targets)
        if ok:
            pending = [p for p in pending if p not in removed]
            steps.append((l, removed, True))
        else:
            pending.remove(l)
            steps.append((l, frozenset(), False))
    witness = state.alive_leaves()
    return len(witness), witness, DeletionTrace(tuple(steps))


def deletion_bound_II(
    J, n: int, t: int = 10, seed: int = 0
) -> tuple[int, frozenset[int], tuple[DeletionTrace, ...]]:
    """Randomized single-leaf deletion schedule, best of t seeded trials.

    Each trial draws from an independent counter-based stream keyed by
    (seed, trial), so results are reproducible and trials could run in
    parallel.
    """
    J = _validate(J, n)
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    g = build_factor_graph(n)
    base = UnionTreeState(g, J)
    oll, _ = _leaf_overlap_split(g, J)
    best_witness: frozenset[int] | None = None
    traces = []
    for trial in range(t):
        rng = np.random.Generator(np.random.Philox(key=[seed, trial]))
        state = base.clone()
        pending = list(oll)
        steps = []
        while pending:
            l = pending[int(rng.integers(len(pending)))]
            ok, removed, _ = state.try_delete_leaves([l])
            if ok:
                pending = [p for p in pending if p not in removed]
                steps.append((l, removed, True))
            else:
                pending.remove(l)
                steps.append((l, frozenset(), False))
        witness = state.alive_leaves()
        traces.append(DeletionTrace(tuple(steps)))
        if best_witness is None or len(witness) < len(best_witness):
            best_witness = witness
    return len(best_witness), best_witness, tuple(traces)


def replay_trace(J, n: int, trace: DeletionTrace) -> frozenset[int]:
    """Re-apply the accepted removals of a trace; returns the final leaf set."""
    g = build_factor_graph(n)
    state = UnionTreeState(g, _validate(J, n))
    for _, removed, accepted in trace.steps:
        if accepted and removed:
            ok, got, _ = state.try_delete_leaves(sorted(removed))
            if not ok or got != removed:
                raise AssertionError("trace does not replay on the union tree")
    return state.alive_leaves()


# ---------------------------------------------------------------------------
# Exhaustive search
# ---------------------------------------------------------------------------

def exhaustive_mvss(
    J, n: int, max_overlap: int = 25
) -> tuple[int, list[frozenset[int]]]:
    """Exact minimum leaf count with every minimum witness.

    Only overlapped leaves can ever be deleted, so the search decides
    delete-or-keep per overlapped leaf in ascending index order, peeling
    after each deletion.  A kept leaf may not be removed by a later
    cascade (such sets surface on their own delete branch instead), which
    makes `removed so far + still undecided` a sound pruning bound against
    the best feasible deletion found so far (seeded by both deletion
    bounds).  Ties are kept alive so every minimum witness is collected.
    """
    J = _validate(J, n)
    if n > 5:
        raise InstanceTooLarge(f"exhaustive search limited to n <= 5, got n={n}")
    g = build_factor_graph(n)
    oll, _ = _leaf_overlap_split(g, J)
    if len(oll) > max_overlap:
        raise InstanceTooLarge(
            f"{len(oll)} overlapped leaves exceeds the limit of {max_overlap}"
        )
    state = UnionTreeState(g, J)
    total = state.alive_leaf_count()

    best = 0
    for seed_fn in (
        lambda: deletion_bound_I(J, n)[0],
        lambda: deletion_bound_II(J, n, t=10, seed=0x5EED)[0],
    ):
        best = max(best, total - seed_fn())

    witnesses: set[frozenset[int]] = set()
    best_box = [best]
    kept: set[int] = set()

    def visit(idx: int) -> None:
        deleted = total - state.alive_leaf_count()
        remaining = sum(1 for k in range(idx, len(oll)) if state.leaf_alive(oll[k]))
        if deleted + remaining < best_box[0]:
            return
        if idx == len(oll):
            if deleted > best_box[0]:
                best_box[0] = deleted
                witnesses.clear()
            if deleted == best_box[0]:
                witnesses.add(state.alive_leaves())
            return
        leaf = oll[idx]
        if not state.leaf_alive(leaf):
            visit(idx + 1)
            return
        ok, removed, log = state.try_delete_leaves([leaf])
        if ok:
            if removed & kept:
                state.revert(log)
            else:
                visit(idx + 1)
                state.revert(log)
        kept.add(leaf)
        visit(idx + 1)
        kept.remove(leaf)

    visit(0)
    size = total - best_box[0]
    return size, sorted(witnesses, key=sorted)


# ---------------------------------------------------------------------------
# Dispatch: exact value when a fast or small case applies, bounds otherwise
# ---------------------------------------------------------------------------

def exact_mvss_route(J, n: int, lb1: int, lb2: int, del_witnesses=()):
    """(exact, method, witness) when an exact route applies, else Nones.

    Routes, in order: weight-one column count for |J| <= 2, smallest tree
    for cover- and swap-closed sets (both O(N) index arithmetic), and the
    exhaustive search for small instances.  Deletion-bound witnesses, when
    supplied, serve as witnesses for the closed-set route if they hit the
    exact size.
    """
    from .polar_core import check_cover_swap_closure

    J = _validate(J, n)
    if len(J) <= 2:
        g = build_factor_graph(n)
        state = UnionTreeState(g, J)
        oll, _ = _leaf_overlap_split(g, J)
        ok, _, _ = state.try_delete_leaves(oll)
        if not ok or state.alive_leaf_count() != lb2:
            raise AssertionError("pair route failed to realize its witness")
        return lb2, "pair", state.alive_leaves()
    if check_cover_swap_closure(J, n):
        witness = next((w for w in del_witnesses if len(w) == lb1), None)
        return lb1, "cover_swap", witness
    try:
        size, wits = exhaustive_mvss(J, n)
    except InstanceTooLarge:
        return None, None, None
    return size, "exhaustive", wits[0]


def mvss_exact_or_bounds(J, n: int, t: int = 10, seed: int = 0) -> BoundReport:
    """All four bounds plus the exact value when one of the exact routes fits."""
    J = _validate(J, n)
    lb1 = lower_bound_I(J, n)
    lb2 = lower_bound_II(J, n)
    enc, _ = encoding_bound(J, n)
    del1, del1_wit, _ = deletion_bound_I(J, n)
    del2, del2_wit, _ = deletion_bound_II(J, n, t=t, seed=seed)
    exact, method, witness = exact_mvss_route(J, n, lb1, lb2, (del1_wit, del2_wit))
    report = BoundReport(lb1, lb2, enc, del1, del2, exact, method, witness)
    if exact is not None and not (report.best_lower() <= exact <= report.best_upper()):
        raise AssertionError(f"bound sandwich violated for J={J}: {report}")
    return report


def stopping_distance(spec) -> int:
    """Smallest stopping-tree leaf count over the information set."""
    if spec.K < 1:
        raise ValueError("information set is empty")
    return min(leaf_count(i) for i in spec.info_set)


def concat_sd_upper(spec, J_out, J_in, t: int = 10, seed: int = 0) -> int:
    """Upper bound on the concatenated stopping distance.

    Minimum over the outer members' inner-connection-set bound and the
    inner members' tree sizes; any leaf witness for a connection set is a
    valid observed stopping set of the composite graph.
    """
    from .concat import h_sets_per_block

    J_out = sorted(set(J_out))
    J_in = sorted(set(J_in))
    if not J_out and not J_in:
        raise ValueError("at least one of J_out, J_in must be non-empty")
    best: int | None = None
    for j in J_out:
        val = 0
        for n_inner, h in h_sets_per_block(spec, j):
            rep = mvss_exact_or_bounds(h, n_inner, t=t, seed=seed)
            val += rep.exact if rep.exact is not None else rep.best_upper()
        best = val if best is None else min(best, val)
    for j in J_in:
        best = leaf_count(j) if best is None else min(best, leaf_count(j))
    return best


def maximal_stopping_set(g: FactorGraph, allowed_vars) -> SubgraphMask:
    """Largest stopping set inside an allowed variable-node set.

    Fixpoint removal: while some check adjacent to the set sees exactly one
    member, drop that member.  Used as the erasure-duality oracle; the
    result is empty exactly when no stopping set fits inside the allowed
    set.
    """
    alive = set(allowed_vars)
    counts: dict[tuple[int, int], int] = {}
    for (r, c) in alive:
        for ck in g.var_check_neighbors(r, c):
            counts[ck] = counts.get(ck, 0) + 1
    queue = [ck for ck, cnt in counts.items() if cnt == 1]
    while queue:
        ck = queue.pop()
        if counts.get(ck, 0) != 1:
            continue
        victim = next(v for v in g.check_var_neighbors(*ck) if v in alive)
        alive.remove(victim)
        for ck2 in g.var_check_neighbors(*victim):
            counts[ck2] -= 1
            if counts[ck2] == 1:
                queue.append(ck2)
    checks = {
        ck
        for ck, cnt in counts.items()
        if cnt > 0 and any(v in alive for v in g.check_var_neighbors(*ck))
    }
    return SubgraphMask(g.n, frozenset(alive), frozenset(checks))
