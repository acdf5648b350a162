"""Polar transform, code construction, and bit-index order predicates.

Indexing convention used throughout the package: generator row i of the
n-fold kernel power has support {k : k & ~i == 0}, i.e. the leftmost
input u_0 is the least reliable position and u_{N-1} the most reliable.
No bit reversal is applied anywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np


def bit_weight(i: int) -> int:
    return bin(i).count("1")


def leaf_count(i: int) -> int:
    """Leaf-set size of the stopping tree rooted at u-index i (2^weight)."""
    return 1 << bit_weight(i)


def row_support(n: int, i: int) -> list[int]:
    """Support of generator row i for length 2^n, without materializing G.

    Doubling over the set bits of i: the support is exactly the set of
    column indices whose binary mask is covered by i.
    """
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    if not 0 <= i < (1 << n):
        raise ValueError(f"row index {i} out of range for n={n}")
    supp = np.zeros(1, dtype=np.int64)
    for b in range(n):
        if (i >> b) & 1:
            supp = np.concatenate([supp, supp + (1 << b)])
    supp.sort()
    return supp.tolist()


def polar_transform(u) -> np.ndarray:
    """x = u G over GF(2) via in-place butterfly passes, O(N log N).

    Accepts a single length-N vector or a batch with trailing axis N.
    """
    x = np.array(u, dtype=np.uint8, copy=True) & 1
    N = x.shape[-1]
    if N <= 0 or N & (N - 1):
        raise ValueError(f"length must be a power of two, got {N}")
    n = N.bit_length() - 1
    lead = x.shape[:-1]
    for c in range(n):
        s = N >> (c + 1)
        v = x.reshape(lead + (N // (2 * s), 2, s))
        v[..., 0, :] ^= v[..., 1, :]
    return x


@dataclass(frozen=True)
class CodeSpec:
    """A polar code: length 2^n, information set, and reliability order.

    `order` lists all N indices from most to least reliable.  For codes
    built by the standard constructions, info_set is the sorted first K
    entries of `order`; stopping-set driven re-designs may break that
    relationship, so it is not enforced.
    """

    n: int
    info_set: tuple[int, ...]
    order: tuple[int, ...]
    method: str = "manual"
    design_param: float | None = None
    design_rate: float | None = None

    def __post_init__(self):
        N = 1 << self.n
        a = tuple(sorted(set(self.info_set)))
        if a != tuple(self.info_set):
            object.__setattr__(self, "info_set", a)
        if not all(0 <= i < N for i in self.info_set):
            raise ValueError("info set out of range")
        if sorted(self.order) != list(range(N)):
            raise ValueError("order must be a permutation of [0, N)")

    @property
    def N(self) -> int:
        return 1 << self.n

    @property
    def K(self) -> int:
        return len(self.info_set)

    @property
    def frozen_set(self) -> tuple[int, ...]:
        info = set(self.info_set)
        return tuple(i for i in range(self.N) if i not in info)


def encode(spec: CodeSpec, u) -> np.ndarray:
    """Full-vector encoding x = u G for a length-N input vector."""
    u = np.asarray(u)
    if u.shape != (spec.N,):
        raise ValueError(f"expected u of length {spec.N}, got shape {u.shape}")
    return polar_transform(u)


def systematic_encode(spec: CodeSpec, info) -> tuple[np.ndarray, np.ndarray]:
    """Systematic encoding with the information placed at x[info_set].

    Solves u_A from x_A = info by back-substitution in descending index
    order (G is lower triangular with unit diagonal, so the restriction
    to A x A is always invertible), then re-encodes.  Frozen u positions
    stay zero.
    """
    info = np.asarray(info, dtype=np.uint8) & 1
    if info.shape != (spec.K,):
        raise ValueError(f"expected {spec.K} information bits, got shape {info.shape}")
    target = dict(zip(spec.info_set, info.tolist()))
    u = np.zeros(spec.N, dtype=np.uint8)
    solved: list[int] = []
    for a in reversed(spec.info_set):
        acc = target[a]
        for b in solved:
            # G[b][a] = 1 iff a's bits are covered by b's
            if u[b] and (a & ~b) == 0:
                acc ^= 1
        u[a] = acc
        solved.append(a)
    x = polar_transform(u)
    if not (x[list(spec.info_set)] == info).all():
        raise AssertionError("systematic solve failed to reproduce the information bits")
    return u, x


@lru_cache(maxsize=32)
def _systematic_inverse(spec: CodeSpec) -> np.ndarray:
    """Inverse over GF(2) of the info-rows/info-columns generator block."""
    A = list(spec.info_set)
    K = len(A)
    mat = np.zeros((K, 2 * K), dtype=np.uint8)
    for r, ar in enumerate(A):
        for c, ac in enumerate(A):
            mat[r, c] = 1 if (ac & ~ar) == 0 else 0
        mat[r, K + r] = 1
    for col in range(K):
        pivot = next(r for r in range(col, K) if mat[r, col])
        if pivot != col:
            mat[[col, pivot]] = mat[[pivot, col]]
        hits = np.flatnonzero(mat[:, col])
        for r in hits:
            if r != col:
                mat[r] ^= mat[col]
    return np.ascontiguousarray(mat[:, K:])


def systematic_encode_batch(spec: CodeSpec, info) -> tuple[np.ndarray, np.ndarray]:
    """Batched systematic encoding via the cached GF(2) inverse.

    Same contract as systematic_encode, one frame per row.
    """
    info = np.atleast_2d(np.asarray(info, dtype=np.uint8)) & 1
    if info.shape[1] != spec.K:
        raise ValueError(f"expected {spec.K} information bits per row")
    inv = _systematic_inverse(spec)
    u = np.zeros((info.shape[0], spec.N), dtype=np.uint8)
    u[:, list(spec.info_set)] = (info.astype(np.int64) @ inv.astype(np.int64)) & 1
    x = polar_transform(u)
    if not (x[:, list(spec.info_set)] == info).all():
        raise AssertionError("systematic solve failed to reproduce the information bits")
    return u, x


# ---------------------------------------------------------------------------
# Construction: binary erasure channel (exact recursion, log domain)
# ---------------------------------------------------------------------------

def bec_erasure_parameters(n: int, eps: float) -> np.ndarray:
    """Per-bit-channel erasure parameters under the exact BEC recursion.

    Computed in the log domain so deep recursions keep full ordering
    resolution (values underflow to 0.0 well before n = 20 otherwise).
    """
    return np.exp(_bec_log_parameters(n, eps))


def _bec_log_parameters(n: int, eps: float) -> np.ndarray:
    if not 0.0 < eps < 1.0:
        raise ValueError(f"erasure probability must be in (0, 1), got {eps}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    logz = np.array([math.log(eps)], dtype=np.float64)
    for _ in range(n):
        z = np.exp(logz)
        worse = logz + np.log(2.0 - z)
        better = 2.0 * logz
        out = np.empty(2 * logz.size, dtype=np.float64)
        out[0::2] = worse
        out[1::2] = better
        logz = out
    return logz


def construct_bec(n: int, K: int, eps: float) -> CodeSpec:
    """K most reliable channels under the exact erasure-parameter recursion."""
    N = 1 << n
    if not 0 < K <= N:
        raise ValueError(f"K must be in (0, {N}], got {K}")
    logz = _bec_log_parameters(n, eps)
    order = sorted(range(N), key=lambda i: (logz[i], i))
    return CodeSpec(
        n=n,
        info_set=tuple(sorted(order[:K])),
        order=tuple(order),
        method="bec",
        design_param=eps,
    )


# ---------------------------------------------------------------------------
# Construction: AWGN Gaussian approximation (mean-LLR recursion)
# ---------------------------------------------------------------------------
#
# The mean update uses m_plus = 2 m and m_minus = phi^-1(1 - (1 - phi(m))^2)
# with a piecewise phi evaluated in the log domain:
#
#   log phi(m) = log(1 - 0.3985 m)                          for m <= 0.1
#   log phi(m) = -0.4527 m^0.86 + 0.0218                    for 0.1 < m < 10
#   log phi(m) = log(sqrt(pi/m) e^(-m/4) (1 - 10/(7m))) + s for m >= 10
#
# where s is a constant fixed so the last two pieces join continuously at
# m = 10.  The stitched function is strictly decreasing, which makes the
# minus update strictly increasing; the inverse is solved by bisection on
# the log scale so no ordering resolution is lost for extreme means.

_PHI_A, _PHI_B, _PHI_C = -0.4527, 0.86, 0.0218
_PHI_LOW = 0.1
_PHI_SEAM = 10.0


def _log_phi_mid(m: float) -> float:
    return _PHI_A * m ** _PHI_B + _PHI_C


def _log_phi_tail_raw(m: float) -> float:
    return 0.5 * (math.log(math.pi) - math.log(m)) - m / 4.0 + math.log1p(-10.0 / (7.0 * m))


_PHI_LOW_SLOPE = (1.0 - math.exp(_log_phi_mid(_PHI_LOW))) / _PHI_LOW
_PHI_TAIL_SHIFT = _log_phi_mid(_PHI_SEAM) - _log_phi_tail_raw(_PHI_SEAM)


def _log_phi(m: float) -> float:
    if m <= 0.0:
        return 0.0
    if m <= _PHI_LOW:
        return math.log1p(-_PHI_LOW_SLOPE * m)
    if m < _PHI_SEAM:
        return _log_phi_mid(m)
    return _log_phi_tail_raw(m) + _PHI_TAIL_SHIFT


def _ga_minus(m: float) -> float:
    """Mean update for the degraded branch: phi^-1(1 - (1 - phi(m))^2)."""
    if m <= 0.0:
        return 0.0
    lp = _log_phi(m)
    target = lp + math.log(2.0 - math.exp(lp))
    # phi is strictly decreasing, so bisect on [0, m]; the result is < m.
    lo, hi = 0.0, m
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if _log_phi(mid) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@lru_cache(maxsize=64)
def ga_mean_llrs(n: int, ebno_db: float, rate: float) -> tuple[float, ...]:
    """Per-bit-channel mean LLRs from the Gaussian-approximation recursion."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0.0 < rate <= 1.0:
        raise ValueError(f"rate must be in (0, 1], got {rate}")
    sigma_sq = 1.0 / (2.0 * rate * 10.0 ** (ebno_db / 10.0))
    means = [2.0 / sigma_sq]
    for _ in range(n):
        nxt = []
        for m in means:
            nxt.append(_ga_minus(m))
            nxt.append(2.0 * m)
        means = nxt
    return tuple(means)


def construct_ga(n: int, K: int, ebno_db: float, rate: float) -> CodeSpec:
    """K best channels by the Gaussian-approximation mean-LLR recursion."""
    N = 1 << n
    if not 0 < K <= N:
        raise ValueError(f"K must be in (0, {N}], got {K}")
    means = ga_mean_llrs(n, ebno_db, rate)
    order = sorted(range(N), key=lambda i: (-means[i], i))
    return CodeSpec(
        n=n,
        info_set=tuple(sorted(order[:K])),
        order=tuple(order),
        method="ga",
        design_param=ebno_db,
        design_rate=rate,
    )


# ---------------------------------------------------------------------------
# Partial-order predicates on index sets
# ---------------------------------------------------------------------------

def check_cover_swap_closure(J, n: int) -> bool:
    """True iff J is closed under bitmask covering and upward 1-bit swaps.

    Covering closure is checked through single-bit additions (covering is
    generated by them); the swap relation moves one 1 to a strictly higher
    0 position.
    """
    s = set(J)
    N = 1 << n
    if not all(0 <= j < N for j in s):
        raise ValueError("index out of range")
    for j in s:
        for k in range(n):
            if not (j >> k) & 1 and (j | (1 << k)) not in s:
                return False
        for k in range(n):
            if not (j >> k) & 1:
                continue
            for k2 in range(k + 1, n):
                if not (j >> k2) & 1 and (j ^ (1 << k) ^ (1 << k2)) not in s:
                    return False
    return True


def close_cover_swap(J, n: int) -> frozenset[int]:
    """Smallest superset of J closed under covering and upward swaps."""
    out = set(J)
    frontier = list(out)
    while frontier:
        j = frontier.pop()
        succ = []
        for k in range(n):
            if not (j >> k) & 1:
                succ.append(j | (1 << k))
            else:
                for k2 in range(k + 1, n):
                    if not (j >> k2) & 1:
                        succ.append(j ^ (1 << k) ^ (1 << k2))
        for i in succ:
            if i not in out:
                out.add(i)
                frontier.append(i)
    return frozenset(out)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def save_code_spec(spec: CodeSpec, path) -> None:
    """Write a spec as a small key/value text file (bit-reproducible)."""
    lines = [
        "polarstop-code v1",
        f"n: {spec.n}",
        f"K: {spec.K}",
        f"method: {spec.method}",
        f"design_param: {'' if spec.design_param is None else repr(spec.design_param)}",
        f"design_rate: {'' if spec.design_rate is None else repr(spec.design_rate)}",
        "info_set: " + " ".join(map(str, spec.info_set)),
        "order: " + " ".join(map(str, spec.order)),
    ]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_code_spec(path) -> CodeSpec:
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or lines[0] != "polarstop-code v1":
        raise ValueError(f"{path}: not a polarstop code spec")
    fields = {}
    for ln in lines[1:]:
        if not ln.strip():
            continue
        key, _, val = ln.partition(":")
        fields[key.strip()] = val.strip()
    return CodeSpec(
        n=int(fields["n"]),
        info_set=tuple(int(t) for t in fields["info_set"].split()),
        order=tuple(int(t) for t in fields["order"].split()),
        method=fields.get("method", "manual"),
        design_param=float(fields["design_param"]) if fields.get("design_param") else None,
        design_rate=float(fields["design_rate"]) if fields.get("design_rate") else None,
    )
