"""Concatenated polar code architectures and outer-code design.

Two layouts are supported.  An augmented code places an outer polar
codeword on the semipolarized input channels of a single inner code; a
local-global code couples M equal-length inner codes through a systematic
outer code so each block stays locally decodable.  Outer-code design by
stopping-set swapping and by density evolution with per-channel empirical
densities lives here as well.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .polar_core import CodeSpec, construct_ga, polar_transform, row_support, systematic_encode


@dataclass(frozen=True)
class Interleaver:
    """Bijection from outer codeword positions onto semipolarized slots."""

    perm: tuple[int, ...]

    def __post_init__(self):
        if sorted(self.perm) != list(range(len(self.perm))):
            raise ValueError("interleaver must be a permutation")

    @property
    def size(self) -> int:
        return len(self.perm)

    @staticmethod
    def natural(size: int) -> "Interleaver":
        return Interleaver(tuple(range(size)))

    @staticmethod
    def seeded_random(size: int, seed: int) -> "Interleaver":
        rng = np.random.Generator(np.random.Philox(key=[seed, 0x1B7E]))
        return Interleaver(tuple(int(v) for v in rng.permutation(size)))

    def inverse(self) -> "Interleaver":
        inv = [0] * len(self.perm)
        for k, p in enumerate(self.perm):
            inv[p] = k
        return Interleaver(tuple(inv))


@dataclass(frozen=True)
class AugmentedSpec:
    """Outer code feeding the semipolarized channels of one inner code.

    `semipolarized` is sorted ascending; outer codeword position k lands on
    inner input semipolarized[interleaver.perm[k]].  Inner info_set holds
    only the good channels (the extra K_1 payload); the remaining inner
    inputs are frozen.
    """

    outer: CodeSpec
    inner: CodeSpec
    semipolarized: tuple[int, ...]
    interleaver: Interleaver

    def __post_init__(self):
        s = tuple(sorted(set(self.semipolarized)))
        object.__setattr__(self, "semipolarized", s)
        if len(s) != self.outer.N:
            raise ValueError("semipolarized set must have one slot per outer codeword bit")
        if self.interleaver.size != self.outer.N:
            raise ValueError("interleaver size must equal the outer length")
        if set(s) & set(self.inner.info_set):
            raise ValueError("semipolarized channels overlap the inner good channels")
        if not all(0 <= i < self.inner.N for i in s):
            raise ValueError("semipolarized index out of range")

    @property
    def K0(self) -> int:
        return self.outer.K

    @property
    def K1(self) -> int:
        return self.inner.K

    @property
    def rate(self) -> float:
        return (self.K0 + self.K1) / self.inner.N

    def inner_slot(self, outer_pos: int) -> int:
        return self.semipolarized[self.interleaver.perm[outer_pos]]


def build_augmented_spec(
    inner_order,
    N0: int,
    K0: int,
    K1: int,
    interleaver: Interleaver | None = None,
    outer: CodeSpec | None = None,
    design_ebno_db: float = 3.0,
) -> AugmentedSpec:
    """Carve good and semipolarized channels out of an inner reliability order.

    The top K1 entries become the inner payload channels and the next N0
    become the semipolarized set; everything else is frozen.  The outer
    code defaults to a Gaussian-approximation design at the overall rate.
    """
    inner_order = tuple(int(i) for i in inner_order)
    N1 = len(inner_order)
    n1 = N1.bit_length() - 1
    if 1 << n1 != N1:
        raise ValueError("inner order length must be a power of two")
    if K1 + N0 > N1:
        raise ValueError(f"K1 + N0 = {K1 + N0} exceeds the inner length {N1}")
    good = tuple(sorted(inner_order[:K1]))
    semi = tuple(sorted(inner_order[K1 : K1 + N0]))
    inner = CodeSpec(n=n1, info_set=good, order=inner_order, method="manual")
    n0 = N0.bit_length() - 1
    if outer is None:
        outer = construct_ga(n0, K0, design_ebno_db, (K0 + K1) / N1)
    if outer.N != N0 or outer.K != K0:
        raise ValueError("outer spec does not match N0/K0")
    if interleaver is None:
        interleaver = Interleaver.natural(N0)
    return AugmentedSpec(outer=outer, inner=inner, semipolarized=semi, interleaver=interleaver)


def h_set(spec: AugmentedSpec, i: int) -> frozenset[int]:
    """Inner input positions wired to the leaves of outer stopping tree i."""
    if not 0 <= i < spec.outer.N:
        raise ValueError(f"outer index {i} out of range")
    leaves = row_support(spec.outer.n, i)
    return frozenset(spec.inner_slot(k) for k in leaves)


def h_sets_per_block(spec, i: int) -> list[tuple[int, frozenset[int]]]:
    """Connection sets of outer index i as (inner n, inner index set) pairs."""
    if isinstance(spec, AugmentedSpec):
        return [(spec.inner.n, h_set(spec, i))]
    if isinstance(spec, LocalGlobalSpec):
        leaves = row_support(spec.outer.n, i)
        per_block: dict[int, set[int]] = {}
        for k in leaves:
            m, slot = spec.block_slot(k)
            per_block.setdefault(m, set()).add(slot)
        return [
            (spec.inners[m].n, frozenset(slots)) for m, slots in sorted(per_block.items())
        ]
    raise TypeError(f"unsupported spec type {type(spec).__name__}")


def augmented_encode(spec: AugmentedSpec, info) -> np.ndarray:
    """Encode K0 outer bits plus K1 inner bits into one inner codeword."""
    info = np.asarray(info, dtype=np.uint8) & 1
    if info.shape != (spec.K0 + spec.K1,):
        raise ValueError(f"expected {spec.K0 + spec.K1} bits, got shape {info.shape}")
    u_out = np.zeros(spec.outer.N, dtype=np.uint8)
    u_out[list(spec.outer.info_set)] = info[: spec.K0]
    y = polar_transform(u_out)
    u_in = np.zeros(spec.inner.N, dtype=np.uint8)
    for k in range(spec.outer.N):
        u_in[spec.inner_slot(k)] = y[k]
    if spec.K1:
        u_in[list(spec.inner.info_set)] = info[spec.K0 :]
    return polar_transform(u_in)


# ---------------------------------------------------------------------------
# Local-global architecture
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LocalGlobalSpec:
    """M inner codes coupled through a systematic outer code.

    `outer_positions[m]` lists, in ascending order, the outer codeword
    positions carried by block m; slot j of that list rides on inner input
    `semipolarized[m][interleavers[m].perm[j]]`.  `k_a_parts` /
    `p_a_parts` record which of those positions carry outer information
    and outer parity.
    """

    outer: CodeSpec
    inners: tuple[CodeSpec, ...]
    semipolarized: tuple[tuple[int, ...], ...]
    k_a_parts: tuple[tuple[int, ...], ...]
    p_a_parts: tuple[tuple[int, ...], ...]
    interleavers: tuple[Interleaver, ...]

    def __post_init__(self):
        M = len(self.inners)
        if not (len(self.semipolarized) == len(self.k_a_parts) == len(self.p_a_parts) == M):
            raise ValueError("per-block field lengths disagree")
        all_pos = [p for m in range(M) for p in self.outer_positions(m)]
        if sorted(all_pos) != list(range(self.outer.N)):
            raise ValueError("outer codeword positions must partition [0, N0)")
        if sorted(p for part in self.k_a_parts for p in part) != list(self.outer.info_set):
            raise ValueError("information parts must partition the outer info set")
        for m in range(M):
            if len(self.semipolarized[m]) != len(self.outer_positions(m)):
                raise ValueError(f"block {m}: semipolarized size mismatch")
            if self.interleavers[m].size != len(self.semipolarized[m]):
                raise ValueError(f"block {m}: interleaver size mismatch")
            if set(self.semipolarized[m]) & set(self.inners[m].info_set):
                raise ValueError(f"block {m}: semipolarized overlaps good channels")

    @property
    def M(self) -> int:
        return len(self.inners)

    @property
    def K_a(self) -> int:
        return self.outer.K

    @property
    def K_b(self) -> int:
        return sum(s.K for s in self.inners)

    def outer_positions(self, m: int) -> tuple[int, ...]:
        return tuple(sorted(self.k_a_parts[m] + self.p_a_parts[m]))

    def block_slot(self, outer_pos: int) -> tuple[int, int]:
        """(block, inner input index) carrying an outer codeword position."""
        for m in range(self.M):
            positions = self.outer_positions(m)
            if outer_pos in positions:
                j = positions.index(outer_pos)
                return m, self.semipolarized[m][self.interleavers[m].perm[j]]
        raise ValueError(f"outer position {outer_pos} not mapped")


def build_local_global_spec(
    inner_orders,
    N0: int,
    K_a: int,
    k_b_sizes,
    outer: CodeSpec | None = None,
    design_ebno_db: float = 3.0,
    design_rate: float | None = None,
    partitions=None,
) -> LocalGlobalSpec:
    """Two-block preset: split outer information and parity positions in
    halves by natural index order, crosswise, so later stopping-set swaps
    stay inside one block.

    The first half of the outer info positions goes to block 2 and the
    second half to block 1; parity positions split the other way around.
    Other regimes must pass explicit `partitions` as (k_a_parts, p_a_parts).
    """
    M = len(inner_orders)
    if K_a < 1:
        raise ValueError("outer code must carry information bits")
    if len(k_b_sizes) != M:
        raise ValueError("need one payload size per inner code")
    n0 = N0.bit_length() - 1
    if 1 << n0 != N0:
        raise ValueError("N0 must be a power of two")
    if outer is None:
        if design_rate is None:
            total = K_a + sum(k_b_sizes)
            design_rate = total / sum(len(o) for o in inner_orders)
        outer = construct_ga(n0, K_a, design_ebno_db, design_rate)
    if outer.N != N0 or outer.K != K_a:
        raise ValueError("outer spec does not match N0/K_a")

    if partitions is None:
        if M != 2:
            raise ValueError("the built-in partition rule covers M=2 only; pass partitions=")
        info = list(outer.info_set)
        parity = [p for p in range(N0) if p not in set(info)]
        half_i, half_p = len(info) // 2, len(parity) // 2
        k_a_parts = (tuple(info[half_i:]), tuple(info[:half_i]))
        p_a_parts = (tuple(parity[:half_p]), tuple(parity[half_p:]))
    else:
        k_a_parts, p_a_parts = (tuple(map(tuple, part)) for part in partitions)

    inners = []
    semis = []
    for m, order in enumerate(inner_orders):
        order = tuple(int(i) for i in order)
        Nm = len(order)
        nm = Nm.bit_length() - 1
        if 1 << nm != Nm:
            raise ValueError("inner order length must be a power of two")
        kb = k_b_sizes[m]
        span = len(k_a_parts[m]) + len(p_a_parts[m])
        if kb + span > Nm:
            raise ValueError(f"block {m}: K_b + semipolarized span exceeds the length")
        good = tuple(sorted(order[:kb]))
        semis.append(tuple(sorted(order[kb : kb + span])))
        inners.append(CodeSpec(n=nm, info_set=good, order=order, method="manual"))

    return LocalGlobalSpec(
        outer=outer,
        inners=tuple(inners),
        semipolarized=tuple(semis),
        k_a_parts=k_a_parts,
        p_a_parts=p_a_parts,
        interleavers=tuple(Interleaver.natural(len(s)) for s in semis),
    )


def local_global_encode(spec: LocalGlobalSpec, info_a, info_b_parts) -> list[np.ndarray]:
    """Systematically encode the outer bits, distribute, encode each block."""
    info_a = np.asarray(info_a, dtype=np.uint8) & 1
    if info_a.shape != (spec.K_a,):
        raise ValueError(f"expected {spec.K_a} outer bits, got shape {info_a.shape}")
    if len(info_b_parts) != spec.M:
        raise ValueError("need one payload part per block")
    _, y = systematic_encode(spec.outer, info_a)
    words = []
    for m in range(spec.M):
        part = np.asarray(info_b_parts[m], dtype=np.uint8) & 1
        if part.shape != (spec.inners[m].K,):
            raise ValueError(f"block {m}: expected {spec.inners[m].K} payload bits")
        u = np.zeros(spec.inners[m].N, dtype=np.uint8)
        for pos in spec.outer_positions(m):
            _, slot = spec.block_slot(pos)
            u[slot] = y[pos]
        if spec.inners[m].K:
            u[list(spec.inners[m].info_set)] = part
        words.append(polar_transform(u))
    return words


# ---------------------------------------------------------------------------
# Outer-code design: stopping-set swapping
# ---------------------------------------------------------------------------

class OpssPreconditionError(ValueError):
    """Not enough frozen candidates above the swap threshold."""


def opss_construct(Q, d, s: int, K0: int, groups=None) -> tuple[int, ...]:
    """Swap the s least-protected unfrozen positions for frozen ones.

    Q lists outer indices by descending reliability and d maps each index
    to its stopping-value.  The threshold is the s-th smallest d among the
    initial top-K0; each swap replaces the current minimum-d unfrozen
    entry (first position on ties) with the most reliable frozen entry
    whose d exceeds the threshold.  With `groups` (disjoint index sets),
    replacements are drawn from the victim's own group, which keeps
    block-local designs consistent.
    """
    Q = [int(q) for q in Q]
    if s < 0:
        raise ValueError("s must be >= 0")
    if not 0 < K0 <= len(Q):
        raise ValueError(f"K0 must be in (0, {len(Q)}]")
    if s == 0:
        return tuple(sorted(Q[:K0]))
    group_of = None
    if groups is not None:
        group_of = {}
        for gi, members in enumerate(groups):
            for idx in members:
                group_of[idx] = gi
    threshold = sorted(d[q] for q in Q[:K0])[s - 1]
    candidates = [q for q in Q[K0:] if d[q] > threshold]
    if len(candidates) < s:
        raise OpssPreconditionError(
            f"need at least {s} frozen positions with stopping value above "
            f"{threshold}, found {len(candidates)}"
        )
    for _ in range(s):
        pos = min(range(K0), key=lambda p: (d[Q[p]], p))
        victim = Q[pos]
        donor_at = None
        for j in range(K0, len(Q)):
            if d[Q[j]] <= threshold:
                continue
            if group_of is not None and group_of.get(Q[j]) != group_of.get(victim):
                continue
            donor_at = j
            break
        if donor_at is None:
            raise OpssPreconditionError(
                f"no in-group frozen position with stopping value above {threshold} "
                f"left for index {victim}"
            )
        Q[pos] = Q[donor_at]
        del Q[donor_at]
    return tuple(sorted(Q[:K0]))


def stopping_values(spec, t: int = 10, seed: int = 0, method: str = "del1") -> list[int]:
    """Per-outer-index upper bounds on the connection-set stopping size.

    The default backend is the deterministic deletion schedule; any bound
    from the report can be selected.  For multi-block layouts the values
    add across blocks.
    """
    from .stopping import deletion_bound_I, deletion_bound_II, mvss_exact_or_bounds

    out = []
    for i in range(spec.outer.N):
        total = 0
        for n_inner, h in h_sets_per_block(spec, i):
            if method == "del1":
                total += deletion_bound_I(h, n_inner)[0]
            elif method == "del2":
                total += deletion_bound_II(h, n_inner, t=t, seed=seed)[0]
            elif method == "best":
                rep = mvss_exact_or_bounds(h, n_inner, t=t, seed=seed)
                total += rep.exact if rep.exact is not None else rep.best_upper()
            else:
                raise ValueError(f"unknown stopping-value method {method!r}")
        out.append(total)
    return out


def opss_outer_spec(spec, s: int, t: int = 10, seed: int = 0, method: str = "del1") -> CodeSpec:
    """Redesign the outer information set of a built concatenation by swapping.

    For local-global layouts the swaps are constrained to stay inside each
    block's own information/parity partition.
    """
    d = stopping_values(spec, t=t, seed=seed, method=method)
    outer = spec.outer
    groups = None
    if isinstance(spec, LocalGlobalSpec):
        groups = [spec.outer_positions(m) for m in range(spec.M)]
    new_info = opss_construct(list(outer.order), d, s, outer.K, groups=groups)
    return CodeSpec(
        n=outer.n,
        info_set=new_info,
        order=outer.order,
        method=outer.method + "+opss",
        design_param=outer.design_param,
        design_rate=outer.design_rate,
    )


def replace_outer(spec, outer: CodeSpec):
    """Same concatenation wiring with a different outer information set."""
    if isinstance(spec, AugmentedSpec):
        return AugmentedSpec(
            outer=outer,
            inner=spec.inner,
            semipolarized=spec.semipolarized,
            interleaver=spec.interleaver,
        )
    if isinstance(spec, LocalGlobalSpec):
        old_info = set(spec.outer.info_set)
        new_info = set(outer.info_set)
        k_a_parts = []
        p_a_parts = []
        for m in range(spec.M):
            block = spec.outer_positions(m)
            k_a_parts.append(tuple(p for p in block if p in new_info))
            p_a_parts.append(tuple(p for p in block if p not in new_info))
            swapped_in = [p for p in k_a_parts[-1] if p not in old_info]
            if len(k_a_parts[-1]) != len(spec.k_a_parts[m]):
                raise ValueError(
                    f"block {m}: outer redesign changed the information share "
                    f"(swapped in {swapped_in}); use group-constrained swapping"
                )
        return LocalGlobalSpec(
            outer=outer,
            inners=spec.inners,
            semipolarized=spec.semipolarized,
            k_a_parts=tuple(k_a_parts),
            p_a_parts=tuple(p_a_parts),
            interleavers=spec.interleavers,
        )
    raise TypeError(f"unsupported spec type {type(spec).__name__}")


# ---------------------------------------------------------------------------
# Outer-code design: density evolution with empirical channel densities
# ---------------------------------------------------------------------------

LLR_GRID_HALF = 40.0
LLR_GRID_POINTS = 2049  # symmetric grid with an exact zero bin


def _grid_centers() -> np.ndarray:
    step = 2.0 * LLR_GRID_HALF / (LLR_GRID_POINTS - 1)
    return (np.arange(LLR_GRID_POINTS) - (LLR_GRID_POINTS - 1) // 2) * step


def histogram_density(samples) -> np.ndarray:
    """Clip samples to the fixed grid and normalize to a pmf."""
    centers = _grid_centers()
    step = centers[1] - centers[0]
    edges = np.concatenate([centers - step / 2, [centers[-1] + step / 2]])
    clipped = np.clip(samples, centers[0], centers[-1])
    hist, _ = np.histogram(clipped, bins=edges)
    total = hist.sum()
    if total == 0:
        raise ValueError("no samples")
    return hist / total


def _var_convolve(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Density of the sum of two grid LLRs, mass outside folded to the rims."""
    B = LLR_GRID_POINTS
    full = np.convolve(p, q)
    mid = B - 1  # index of value 0 in the length 2B-1 result
    half = (B - 1) // 2
    out = full[mid - half : mid + half + 1].copy()
    out[0] += full[: mid - half].sum()
    out[-1] += full[mid + half + 1 :].sum()
    return out


def _check_convolve(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Density of sign(a) sign(b) min(|a|, |b|) on the grid."""
    B = LLR_GRID_POINTS
    half = (B - 1) // 2
    z = half  # zero bin index

    def split(v):
        neg = v[:z][::-1]  # magnitude-indexed, mag 1..half
        pos = v[z + 1 :]
        return v[z], pos, neg

    p0, pp, pn = split(p)
    q0, qp, qn = split(q)

    def tail(v):
        # T[m] = sum of v[m+1:]
        c = np.cumsum(v[::-1])[::-1]
        return np.concatenate([c[1:], [0.0]])

    tpp, tpn, tqp, tqn = tail(pp), tail(pn), tail(qp), tail(qn)
    same = pp * (tqp + qp) + qp * tpp + pn * (tqn + qn) + qn * tpn
    opp = pp * (tqn + qn) + qn * tpp + pn * (tqp + qp) + qp * tpn
    out = np.zeros(B)
    out[z] = p0 + q0 - p0 * q0
    out[z + 1 :] = same
    out[:z] = opp[::-1]
    return out


def density_evolution_error_probs(leaf_densities) -> np.ndarray:
    """Input-position error probabilities for per-leaf initial densities.

    Recursive even/odd leaf splits mirror the transform: the low bit of the
    input index selects the check-side or variable-side combination of the
    two half-problems.  Memoized over (start, stride, index remainder).
    """
    dens = [np.asarray(d, dtype=np.float64) for d in leaf_densities]
    N = len(dens)
    n = N.bit_length() - 1
    if 1 << n != N:
        raise ValueError("need a power-of-two number of densities")
    memo: dict[tuple[int, int, int], np.ndarray] = {}

    def rec(start: int, stride: int, rem: int) -> np.ndarray:
        if stride == N:
            return dens[start]
        key = (start, stride, rem)
        got = memo.get(key)
        if got is None:
            a = rec(start, 2 * stride, rem >> 1)
            b = rec(start + stride, 2 * stride, rem >> 1)
            got = _var_convolve(a, b) if rem & 1 else _check_convolve(a, b)
            memo[key] = got
        return got

    half = (LLR_GRID_POINTS - 1) // 2
    out = np.empty(N)
    for i in range(N):
        pmf = rec(0, 1, i)
        out[i] = pmf[:half].sum() + 0.5 * pmf[half]
    return out


def density_evolution_rank(leaf_densities) -> list[int]:
    """Input indices sorted most reliable first under discretized DE."""
    pe = density_evolution_error_probs(leaf_densities)
    return sorted(range(len(pe)), key=lambda i: (pe[i], i))


def nde_construct(
    spec,
    ite: int,
    samples: int,
    seed: int,
    ebno_db: float = 3.0,
    K0: int | None = None,
) -> tuple[int, ...]:
    """Outer information set from density evolution with empirical inputs.

    Simulates all-zero transmission, runs a few inner decoder iterations,
    histograms the messages each semipolarized channel passes to the outer
    graph, and pushes those non-identical densities through discretized
    density evolution to rank the outer inputs.
    """
    from .decoding import collect_outer_input_llrs

    if ite < 1:
        raise ValueError("ite must be >= 1")
    if samples < 10_000:
        raise ValueError("need at least 10^4 samples per channel")
    if K0 is None:
        K0 = spec.outer.K
    llrs = collect_outer_input_llrs(spec, ite=ite, frames=samples, seed=seed, ebno_db=ebno_db)
    densities = [histogram_density(llrs[:, k]) for k in range(spec.outer.N)]
    rank = density_evolution_rank(densities)
    return tuple(sorted(rank[:K0]))


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def _code_lines(prefix: str, spec: CodeSpec) -> list[str]:
    return [
        f"{prefix}_n: {spec.n}",
        f"{prefix}_info: " + " ".join(map(str, spec.info_set)),
        f"{prefix}_order: " + " ".join(map(str, spec.order)),
        f"{prefix}_method: {spec.method}",
        f"{prefix}_param: {'' if spec.design_param is None else repr(spec.design_param)}",
        f"{prefix}_rate: {'' if spec.design_rate is None else repr(spec.design_rate)}",
    ]


def save_concat_spec(spec, path) -> None:
    lines: list[str] = []
    if isinstance(spec, AugmentedSpec):
        lines.append("polarstop-concat augmented v1")
        lines += _code_lines("outer", spec.outer)
        lines += _code_lines("inner", spec.inner)
        lines.append("semipolarized: " + " ".join(map(str, spec.semipolarized)))
        lines.append("interleaver: " + " ".join(map(str, spec.interleaver.perm)))
    elif isinstance(spec, LocalGlobalSpec):
        lines.append("polarstop-concat local-global v1")
        lines += _code_lines("outer", spec.outer)
        lines.append("blocks: %d" % spec.M)
        for m in range(spec.M):
            lines += _code_lines(f"inner{m}", spec.inners[m])
            lines.append(f"semi{m}: " + " ".join(map(str, spec.semipolarized[m])))
            lines.append(f"k_a{m}: " + " ".join(map(str, spec.k_a_parts[m])))
            lines.append(f"p_a{m}: " + " ".join(map(str, spec.p_a_parts[m])))
            lines.append(f"interleaver{m}: " + " ".join(map(str, spec.interleavers[m].perm)))
    else:
        raise TypeError(f"unsupported spec type {type(spec).__name__}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_concat_spec(path):
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    head = lines[0]
    fields = {}
    for ln in lines[1:]:
        key, _, val = ln.partition(":")
        fields[key.strip()] = val.strip()

    def ints(key):
        return tuple(int(t) for t in fields[key].split()) if fields.get(key) else ()

    def code(prefix):
        return CodeSpec(
            n=int(fields[prefix + "_n"]),
            info_set=ints(prefix + "_info"),
            order=ints(prefix + "_order"),
            method=fields.get(prefix + "_method", "manual"),
            design_param=(
                float(fields[prefix + "_param"]) if fields.get(prefix + "_param") else None
            ),
            design_rate=(
                float(fields[prefix + "_rate"]) if fields.get(prefix + "_rate") else None
            ),
        )

    if head == "polarstop-concat augmented v1":
        return AugmentedSpec(
            outer=code("outer"),
            inner=code("inner"),
            semipolarized=ints("semipolarized"),
            interleaver=Interleaver(ints("interleaver")),
        )
    if head == "polarstop-concat local-global v1":
        M = int(fields["blocks"])
        return LocalGlobalSpec(
            outer=code("outer"),
            inners=tuple(code(f"inner{m}") for m in range(M)),
            semipolarized=tuple(ints(f"semi{m}") for m in range(M)),
            k_a_parts=tuple(ints(f"k_a{m}") for m in range(M)),
            p_a_parts=tuple(ints(f"p_a{m}") for m in range(M)),
            interleavers=tuple(Interleaver(ints(f"interleaver{m}")) for m in range(M)),
        )
    raise ValueError(f"{path}: not a polarstop concat spec")
