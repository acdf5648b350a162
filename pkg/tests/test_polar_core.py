import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as hs

from polarstop import (
    CodeSpec,
    check_cover_swap_closure,
    construct_bec,
    construct_ga,
    encode,
    leaf_count,
    polar_transform,
    row_support,
    systematic_encode,
)
from polarstop.polar_core import (
    bec_erasure_parameters,
    close_cover_swap,
    ga_mean_llrs,
    load_code_spec,
    save_code_spec,
    systematic_encode_batch,
)

from conftest import bec_sample_erased, kron_matrix


# -- row supports -----------------------------------------------------------

def test_row_support_fixtures():
    assert row_support(3, 5) == [0, 1, 4, 5]
    assert row_support(3, 0) == [0]
    assert row_support(2, 2) == [0, 2]


def test_row_support_against_kron_matrix():
    for n in range(1, 7):
        G = kron_matrix(n)
        for i in range(1 << n):
            assert row_support(n, i) == list(np.flatnonzero(G[i]))


@given(hs.integers(min_value=1, max_value=10), hs.data())
@settings(max_examples=200, deadline=None)
def test_row_support_size_is_two_to_the_weight(n, data):
    i = data.draw(hs.integers(min_value=0, max_value=(1 << n) - 1))
    assert len(row_support(n, i)) == leaf_count(i) == 1 << bin(i).count("1")


def test_row_support_range_errors():
    with pytest.raises(ValueError):
        row_support(3, 8)
    with pytest.raises(ValueError):
        row_support(3, -1)


# -- encoding ---------------------------------------------------------------

def _spec(n, info):
    N = 1 << n
    return CodeSpec(n=n, info_set=tuple(info), order=tuple(range(N - 1, -1, -1)))


def test_encode_fixtures():
    spec = _spec(3, (0, 3, 7))
    u = np.zeros(8, dtype=np.uint8)
    u[[0, 3, 7]] = 1
    assert encode(spec, u).tolist() == [1, 0, 0, 0, 1, 1, 1, 1]
    assert encode(spec, np.zeros(8, dtype=np.uint8)).tolist() == [0] * 8
    u = np.zeros(8, dtype=np.uint8)
    u[[3, 5]] = 1
    x = encode(spec, u)
    assert sorted(np.flatnonzero(x).tolist()) == [2, 3, 4, 5]


def test_encode_matches_matrix():
    rng = np.random.default_rng(3)
    for n in range(1, 7):
        G = kron_matrix(n)
        for _ in range(20):
            u = rng.integers(0, 2, 1 << n, dtype=np.uint8)
            assert (polar_transform(u) == (u @ G) % 2).all()


def test_encode_length_mismatch():
    with pytest.raises(ValueError):
        encode(_spec(3, (7,)), np.zeros(4, dtype=np.uint8))


@given(hs.integers(min_value=1, max_value=10), hs.data())
@settings(max_examples=100, deadline=None)
def test_transform_is_an_involution(n, data):
    bits = data.draw(
        hs.lists(hs.integers(0, 1), min_size=1 << n, max_size=1 << n)
    )
    u = np.array(bits, dtype=np.uint8)
    assert (polar_transform(polar_transform(u)) == u).all()


# -- systematic encoding ----------------------------------------------------

def test_systematic_rate_one_is_identity_on_codeword():
    spec = _spec(2, range(4))
    info = np.array([1, 0, 1, 1], dtype=np.uint8)
    u, x = systematic_encode(spec, info)
    assert (x == info).all()


def test_systematic_hand_solved_case():
    spec = _spec(1, (1,))
    u, x = systematic_encode(spec, [1])
    assert u.tolist() == [0, 1]
    assert x.tolist() == [1, 1]


def test_systematic_zero_maps_to_zero():
    spec = _spec(3, (3, 5, 6, 7))
    u, x = systematic_encode(spec, np.zeros(4, dtype=np.uint8))
    assert not u.any() and not x.any()


def test_systematic_contract_random_specs():
    rng = np.random.default_rng(5)
    for _ in range(200):
        n = int(rng.integers(1, 7))
        N = 1 << n
        K = int(rng.integers(1, N + 1))
        info_set = tuple(sorted(rng.choice(N, size=K, replace=False).tolist()))
        spec = CodeSpec(n=n, info_set=info_set, order=tuple(range(N)))
        info = rng.integers(0, 2, K, dtype=np.uint8)
        u, x = systematic_encode(spec, info)
        assert (u[list(spec.frozen_set)] == 0).all()
        assert (x[list(info_set)] == info).all()
        assert (polar_transform(u) == x).all()


def test_systematic_batch_matches_scalar():
    rng = np.random.default_rng(8)
    spec = construct_ga(6, 32, 3.0, 0.5)
    infos = rng.integers(0, 2, (17, 32), dtype=np.uint8)
    ub, xb = systematic_encode_batch(spec, infos)
    for row in range(infos.shape[0]):
        u, x = systematic_encode(spec, infos[row])
        assert (ub[row] == u).all()
        assert (xb[row] == x).all()


# -- BEC construction -------------------------------------------------------

def test_bec_parameters_hand_recursion():
    z = bec_erasure_parameters(2, 0.5)
    assert np.allclose(z, [0.9375, 0.5625, 0.4375, 0.0625], atol=1e-12)


def test_bec_construction_fixtures():
    assert construct_bec(2, 1, 0.5).info_set == (3,)
    assert construct_bec(2, 2, 0.5).info_set == (2, 3)
    assert construct_bec(2, 4, 0.5).info_set == (0, 1, 2, 3)


def test_bec_parameter_validation():
    with pytest.raises(ValueError):
        construct_bec(3, 0, 0.5)
    with pytest.raises(ValueError):
        construct_bec(3, 9, 0.5)
    with pytest.raises(ValueError):
        construct_bec(3, 4, 0.0)
    with pytest.raises(ValueError):
        construct_bec(3, 4, 1.0)


def test_bec_parameters_match_monte_carlo():
    # The recursion is exact; a sampled genie-aided erasure estimate must
    # agree within 3 sigma per channel.
    n, eps, samples = 4, 0.4, 40_000
    z = bec_erasure_parameters(n, eps)
    rng = np.random.default_rng(123)
    erased = rng.random((1 << n, samples)) < eps
    for i in range(1 << n):
        est = bec_sample_erased(erased, i, n).mean()
        sigma = math.sqrt(max(z[i] * (1 - z[i]), 1e-12) / samples)
        assert abs(est - z[i]) <= max(3 * sigma, 2e-3), f"channel {i}"


# -- GA construction --------------------------------------------------------

def test_ga_trivial_and_extremes():
    assert construct_ga(1, 2, 3.0, 0.5).info_set == (0, 1)
    spec = construct_ga(10, 512, 3.0, 0.5)
    assert 1023 in spec.info_set
    assert 0 not in spec.info_set


def test_ga_means_monotone_under_cover():
    means = ga_mean_llrs(8, 3.0, 0.5)
    rng = np.random.default_rng(2)
    for _ in range(300):
        j = int(rng.integers(0, 256))
        zeros = [b for b in range(8) if not (j >> b) & 1]
        if not zeros:
            continue
        i = j | (1 << zeros[int(rng.integers(len(zeros)))])
        assert means[i] > means[j]


def test_constructed_sets_satisfy_cover_swap_closure():
    for n in range(5, 11):
        N = 1 << n
        for K in (N // 4, N // 2, (3 * N) // 4):
            ga = construct_ga(n, K, 3.0, 0.5)
            assert check_cover_swap_closure(ga.info_set, n), f"ga n={n} K={K}"
            bec = construct_bec(n, K, 0.5)
            assert check_cover_swap_closure(bec.info_set, n), f"bec n={n} K={K}"


# -- cover and swap predicates ----------------------------------------------

def _brute_closed(J, n):
    s = set(J)
    for j in s:
        for i in range(1 << n):
            covers = (j & ~i) == 0
            swap = False
            diff = j ^ i
            if bin(diff).count("1") == 2 and bin(i).count("1") == bin(j).count("1"):
                k_low = min(b for b in range(n) if (diff >> b) & 1)
                swap = bool((j >> k_low) & 1)
            if (covers or swap) and i not in s:
                return False
    return True


def test_closure_fixtures():
    assert check_cover_swap_closure([2, 3], 2)
    assert not check_cover_swap_closure([0], 2)
    assert check_cover_swap_closure([3], 2)


def test_closure_matches_brute_force():
    rng = np.random.default_rng(17)
    for n in (2, 3, 4, 5):
        for _ in range(100):
            size = int(rng.integers(1, (1 << n) + 1))
            J = sorted(rng.choice(1 << n, size=size, replace=False).tolist())
            assert check_cover_swap_closure(J, n) == _brute_closed(J, n)


def test_close_cover_swap_produces_closed_sets():
    rng = np.random.default_rng(23)
    for n in (3, 4, 5):
        for _ in range(50):
            size = int(rng.integers(1, 4))
            seed_set = rng.choice(1 << n, size=size, replace=False).tolist()
            closed = close_cover_swap(seed_set, n)
            assert set(seed_set) <= closed
            assert check_cover_swap_closure(closed, n)


# -- spec plumbing ----------------------------------------------------------

def test_code_spec_validation():
    with pytest.raises(ValueError):
        CodeSpec(n=2, info_set=(4,), order=(0, 1, 2, 3))
    with pytest.raises(ValueError):
        CodeSpec(n=2, info_set=(1,), order=(0, 1, 2, 2))


def test_code_spec_roundtrip(tmp_path):
    spec = construct_ga(5, 16, 3.0, 0.5)
    path = tmp_path / "code.txt"
    save_code_spec(spec, path)
    again = load_code_spec(path)
    assert again == spec
