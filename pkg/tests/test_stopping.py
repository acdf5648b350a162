import numpy as np
import pytest

from polarstop import (
    CodeSpec,
    build_factor_graph,
    deletion_bound_I,
    deletion_bound_II,
    encoding_bound,
    exhaustive_mvss,
    is_stopping_set,
    leaf_count,
    lower_bound_I,
    lower_bound_II,
    mvss_exact_or_bounds,
    stopping_distance,
)
from polarstop.factor_graph import SubgraphMask, union_tree
from polarstop.polar_core import close_cover_swap
from polarstop.stopping import InstanceTooLarge, UnionTreeState, replay_trace

from conftest import BruteUnionTree, brute_mvss, kron_matrix


def random_sets(n, count, max_size, seed):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        size = int(rng.integers(1, max_size + 1))
        out.append(sorted(rng.choice(1 << n, size=size, replace=False).tolist()))
    return out


def witness_is_vss(J, n, witness):
    """Deleting everything outside the witness must leave a stopping set
    whose leftmost members are exactly J."""
    g = build_factor_graph(n)
    state = UnionTreeState(g, J)
    drop = sorted(state.initial_leaves - set(witness))
    ok, removed, _ = state.try_delete_leaves(drop)
    if not ok:
        return False
    alive_vars = frozenset(
        state.var_list[vi] for vi in range(len(state.var_list)) if state.alive[vi]
    )
    mask = SubgraphMask(n, alive_vars, frozenset())
    if {r for r, c in alive_vars if c == 0} != set(J):
        return False
    if {r for r, c in alive_vars if c == n} != set(witness):
        return False
    return is_stopping_set(g, mask)


# -- closed-form bounds -------------------------------------------------------

def test_lower_bound_I_fixtures():
    assert lower_bound_I([0, 3, 7], 3) == 1
    assert lower_bound_I([3, 5], 3) == 4
    assert lower_bound_I([7], 3) == 8


def test_lower_bound_II_fixtures():
    assert lower_bound_II([1, 5], 3) == 2
    assert lower_bound_II([2, 6], 3) == 2
    for i in (0, 3, 5, 7):
        assert lower_bound_II([i], 3) == leaf_count(i)


def test_lower_bound_II_matches_matrix_column_weights():
    rng = np.random.default_rng(31)
    for n in (3, 4, 5, 6):
        G = kron_matrix(n)
        for _ in range(30):
            size = int(rng.integers(1, 1 << min(n, 4)))
            J = sorted(rng.choice(1 << n, size=size, replace=False).tolist())
            weights = G[J].sum(axis=0)
            assert lower_bound_II(J, n) == int((weights == 1).sum())


def test_encoding_bound_fixtures():
    val, wit = encoding_bound([0, 3, 7], 3)
    assert val == 5 and sorted(wit) == [0, 4, 5, 6, 7]
    val, wit = encoding_bound([5], 3)
    assert val == 4 and sorted(wit) == [0, 1, 4, 5]
    val, wit = encoding_bound([3, 5], 3)
    assert val == 4 and sorted(wit) == [2, 3, 4, 5]


def test_encoding_bound_witness_is_valid():
    for J in random_sets(4, 30, 8, seed=5):
        val, wit = encoding_bound(J, 4)
        assert val == len(wit)
        assert witness_is_vss(J, 4, wit)


def test_bounds_reject_empty_sets():
    for fn in (lower_bound_I, lower_bound_II, encoding_bound, deletion_bound_I):
        with pytest.raises(ValueError):
            fn([], 3)
    with pytest.raises(ValueError):
        deletion_bound_II([], 3)
    with pytest.raises(ValueError):
        deletion_bound_II([1], 3, t=0)


# -- deletion schedules -------------------------------------------------------

def test_deletion_bound_I_fixtures():
    assert deletion_bound_I([0, 3, 7], 3)[0] == 7
    assert deletion_bound_I([3, 5], 3)[0] == 4
    for i in (0, 4, 6):
        assert deletion_bound_I([i], 3)[0] == leaf_count(i)


def test_deletion_bound_I_trace_replays():
    for J in random_sets(4, 25, 8, seed=9):
        size, witness, trace = deletion_bound_I(J, 4)
        assert len(witness) == size
        assert witness_is_vss(J, 4, witness)
        assert replay_trace(J, 4, trace) == witness


def test_deletion_bound_I_is_deterministic():
    for J in random_sets(5, 10, 12, seed=13):
        a = deletion_bound_I(J, 5)
        b = deletion_bound_I(J, 5)
        assert a == b


def test_deletion_bound_II_fixtures():
    # One trial per seed: success means first pick avoided the lone blocker.
    size, witness, traces = deletion_bound_II([0, 3, 7], 3, t=10, seed=0)
    assert size == 5 and sorted(witness) == [0, 4, 5, 6, 7]
    assert len(traces) == 10
    size, _, _ = deletion_bound_II([1, 6, 7], 3, t=32, seed=1)
    assert size == 4
    for i in (0, 5, 7):
        assert deletion_bound_II([i], 3, t=1, seed=0)[0] == leaf_count(i)


def test_deletion_bound_II_reproducible_and_valid():
    for J in random_sets(4, 20, 8, seed=21):
        a = deletion_bound_II(J, 4, t=5, seed=42)
        b = deletion_bound_II(J, 4, t=5, seed=42)
        assert a == b
        size, witness, traces = a
        assert len(witness) == size
        assert witness_is_vss(J, 4, witness)
        for trace in traces:
            final = replay_trace(J, 4, trace)
            assert len(final) >= size


def test_single_trial_success_rate_walkthrough():
    # First pick decides: three of the four overlapped leaves cascade to
    # the small witness, the fourth blocks everything else.
    hits = sum(
        deletion_bound_II([0, 3, 7], 3, t=1, seed=s)[0] == 5 for s in range(400)
    )
    assert abs(hits / 400 - 0.75) < 0.08


def test_peel_fixpoint_is_order_independent():
    # Deleting the same leaves in any order must peel to the same state.
    rng = np.random.default_rng(3)
    g = build_factor_graph(4)
    for J in random_sets(4, 15, 6, seed=33):
        base = UnionTreeState(g, J)
        brute = BruteUnionTree(J, 4)
        if not brute.oll:
            continue
        size = int(rng.integers(1, len(brute.oll) + 1))
        chosen = rng.choice(brute.oll, size=size, replace=False).tolist()
        results = []
        for order in (sorted(chosen), sorted(chosen, reverse=True)):
            state = base.clone()
            ok = True
            for leaf in order:
                if not state.leaf_alive(leaf):
                    continue
                got, _, _ = state.try_delete_leaves([leaf])
                ok &= got
            results.append((ok, state.alive_leaves() if ok else None))
        assert results[0] == results[1]


# -- exhaustive search --------------------------------------------------------

def test_exhaustive_fixtures():
    size, wits = exhaustive_mvss([0, 3, 7], 3)
    assert size == 5 and [sorted(w) for w in wits] == [[0, 4, 5, 6, 7]]
    size, wits = exhaustive_mvss([2, 6], 3)
    assert size == 2 and [sorted(w) for w in wits] == [[4, 6]]
    size, wits = exhaustive_mvss([1, 6, 7], 3)
    assert size == 4
    assert [sorted(w) for w in wits] == [[0, 3, 5, 7], [1, 3, 5, 7]]


def test_exhaustive_matches_brute_force():
    for n in (3, 4):
        for J in random_sets(n, 40, 1 << (n - 1), seed=77 + n):
            size, wits = exhaustive_mvss(J, n)
            bsize, bwits = brute_mvss(J, n)
            assert size == bsize, f"J={J}"
            assert set(wits) == bwits, f"J={J}"


def test_exhaustive_witnesses_are_valid():
    for J in random_sets(5, 15, 8, seed=101):
        size, wits = exhaustive_mvss(J, 5)
        for w in wits:
            assert len(w) == size
            assert witness_is_vss(J, 5, w)


def test_exhaustive_size_guards():
    with pytest.raises(InstanceTooLarge):
        exhaustive_mvss([1], 6)
    with pytest.raises(InstanceTooLarge):
        exhaustive_mvss(list(range(32)), 5, max_overlap=5)


def test_minimum_witnesses_contain_single_owner_leaves():
    for n in (3, 4):
        for J in random_sets(n, 25, 6, seed=55 + n):
            brute = BruteUnionTree(J, n)
            _, wits = exhaustive_mvss(J, n)
            for w in wits:
                assert set(brute.noll) <= set(w)


# -- dispatch -----------------------------------------------------------------

def test_dispatch_pair_route():
    rep = mvss_exact_or_bounds([1, 5], 3)
    assert rep.exact == 2 and rep.exact_method == "pair"
    assert sorted(rep.witness) == [4, 5]
    rep = mvss_exact_or_bounds([4], 3)
    assert rep.exact == leaf_count(4) and rep.exact_method == "pair"


def test_dispatch_cover_swap_route():
    from polarstop import construct_ga

    spec = construct_ga(5, 16, 3.0, 0.5)
    rep = mvss_exact_or_bounds(spec.info_set, 5)
    assert rep.exact_method == "cover_swap"
    assert rep.exact == min(leaf_count(i) for i in spec.info_set)
    # cross-check against the exhaustive value
    assert rep.exact == exhaustive_mvss(spec.info_set, 5, max_overlap=32)[0]


def test_dispatch_exhaustive_route_and_sandwich():
    for J in random_sets(4, 30, 10, seed=11):
        rep = mvss_exact_or_bounds(J, 4)
        assert rep.best_lower() <= rep.best_upper()
        if rep.exact is not None:
            assert rep.best_lower() <= rep.exact <= rep.best_upper()
            if rep.exact_method == "exhaustive":
                assert rep.exact == brute_mvss(J, 4)[0]
        if rep.witness is not None and rep.exact is not None:
            assert len(rep.witness) == rep.exact


def test_dispatch_bounds_only_when_too_large():
    J = sorted(np.random.default_rng(1).choice(64, size=20, replace=False).tolist())
    if not __import__("polarstop").check_cover_swap_closure(J, 6):
        rep = mvss_exact_or_bounds(J, 6)
        assert rep.exact is None and rep.witness is None


def test_pair_equality_theorem_small():
    # weight-one column count is exact for all pairs at n=3
    for i in range(8):
        for j in range(i + 1, 8):
            assert exhaustive_mvss([i, j], 3)[0] == lower_bound_II([i, j], 3)


def test_closed_set_equality_theorem_small():
    rng = np.random.default_rng(99)
    for _ in range(40):
        seeds = rng.choice(16, size=int(rng.integers(1, 3)), replace=False).tolist()
        J = sorted(close_cover_swap(seeds, 4))
        assert exhaustive_mvss(J, 4)[0] == lower_bound_I(J, 4)


# -- stopping distance and concatenation --------------------------------------

def test_stopping_distance_fixtures():
    order4 = tuple(range(3, -1, -1))
    assert stopping_distance(CodeSpec(n=2, info_set=(2, 3), order=order4)) == 2
    assert stopping_distance(CodeSpec(n=2, info_set=(0, 1, 2, 3), order=order4)) == 1
    assert stopping_distance(CodeSpec(n=2, info_set=(3,), order=order4)) == 4


def test_stopping_distance_empty_info_set_rejected():
    spec = CodeSpec(n=2, info_set=(), order=(0, 1, 2, 3))
    with pytest.raises(ValueError):
        stopping_distance(spec)


def test_stopping_distance_matches_exhaustive_minimum():
    # the code-level minimum over subsets equals the smallest tree
    rng = np.random.default_rng(2)
    for _ in range(20):
        size = int(rng.integers(1, 9))
        A = sorted(rng.choice(8, size=size, replace=False).tolist())
        spec = CodeSpec(n=3, info_set=tuple(A), order=tuple(range(8)))
        best = min(
            brute_mvss(list(J), 3)[0]
            for J in _nonempty_subsets(A)
        )
        assert stopping_distance(spec) == best


def _nonempty_subsets(A):
    import itertools

    for size in range(1, len(A) + 1):
        yield from itertools.combinations(A, size)
