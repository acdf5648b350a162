"""Belief-propagation decoding over polar and concatenated factor graphs.

Two channel domains: exact erasure-domain message passing for the BEC
(equivalent to peeling) and LLR-domain flooding BP for soft channels.
LLR convention: natural log, positive favors bit 0.  Each iteration runs
a right-to-left sweep followed by a left-to-right sweep; concatenated
schedules alternate one inner round trip with one outer round trip.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .concat import AugmentedSpec, LocalGlobalSpec
from .polar_core import CodeSpec, polar_transform

LLR_MAX = 40.0
ERASED = -1


@dataclass
class DecodeResult:
    """Hard decisions plus convergence bookkeeping.

    `info_bits` uses -1 for positions an erasure decoder could not
    resolve; `unresolved` (erasure decoding only) lists the stuck
    leftmost-stage information indices.
    """

    info_bits: np.ndarray
    converged: bool
    iterations_used: int
    unresolved: tuple[int, ...] | None = None


# ---------------------------------------------------------------------------
# Erasure-domain decoding (exact message passing / peeling fixpoint)
# ---------------------------------------------------------------------------

class _ErasureGraph:
    """Value-propagation fixpoint over one factor graph.

    Values live on the full (n+1) x N variable grid: 0, 1, or ERASED.
    A check with exactly one erased neighbor resolves it by parity; a
    worklist of checks touched by each new value drives the fixpoint.
    """

    def __init__(self, n: int):
        self.n = n
        self.N = 1 << n

    def _check_cells(self, r: int, c: int):
        if (r >> (self.n - 1 - c)) & 1:
            return ((c, r), (c + 1, r))
        return ((c, r), (c, r + (1 << (self.n - 1 - c))), (c + 1, r))

    def _var_checks(self, r: int, c: int):
        out = []
        if c >= 1:
            out.append((r, c - 1))
        if c <= self.n - 1:
            out.append((r, c))
            if (r >> (self.n - 1 - c)) & 1:
                out.append((r - (1 << (self.n - 1 - c)), c))
        return out

    def solve(self, col0: np.ndarray, leaves: np.ndarray) -> np.ndarray:
        n, N = self.n, self.N
        vals = np.full((n + 1, N), ERASED, dtype=np.int8)
        vals[0] = col0
        vals[n] = leaves
        queue = [(r, c) for c in range(n) for r in range(N)]
        while queue:
            r, c = queue.pop()
            cells = self._check_cells(r, c)
            unknown = None
            acc = 0
            for cell in cells:
                v = vals[cell[0]][cell[1]]
                if v == ERASED:
                    if unknown is not None:
                        unknown = None
                        break
                    unknown = cell
                else:
                    acc ^= int(v)
            if unknown is None:
                continue
            vals[unknown[0]][unknown[1]] = acc
            queue.extend(self._var_checks(unknown[1], unknown[0]))
        return vals


def bec_peel(spec: CodeSpec, obs) -> DecodeResult:
    """Exact erasure-domain decoding with frozen inputs known to be zero."""
    obs = np.asarray(obs, dtype=np.int8)
    if obs.shape != (spec.N,):
        raise ValueError(f"expected {spec.N} observations, got shape {obs.shape}")
    col0 = np.full(spec.N, ERASED, dtype=np.int8)
    col0[list(spec.frozen_set)] = 0
    vals = _ErasureGraph(spec.n).solve(col0, obs)
    info = vals[0][list(spec.info_set)] if spec.K else np.zeros(0, dtype=np.int8)
    unresolved = tuple(i for i in spec.info_set if vals[0][i] == ERASED)
    return DecodeResult(
        info_bits=info,
        converged=not unresolved,
        iterations_used=1,
        unresolved=unresolved,
    )


def augmented_bec_peel(spec: AugmentedSpec, obs) -> DecodeResult:
    """Joint erasure decoding of the composite graph.

    The outer leaves and the semipolarized inner inputs are the same
    cells; propagation alternates between the two graphs until neither
    can resolve anything new.  Information order: outer bits, then inner
    payload bits.
    """
    obs = np.asarray(obs, dtype=np.int8)
    if obs.shape != (spec.inner.N,):
        raise ValueError(f"expected {spec.inner.N} observations, got shape {obs.shape}")
    inner_col0 = np.full(spec.inner.N, ERASED, dtype=np.int8)
    frozen = set(range(spec.inner.N)) - set(spec.semipolarized) - set(spec.inner.info_set)
    inner_col0[sorted(frozen)] = 0
    outer_col0 = np.full(spec.outer.N, ERASED, dtype=np.int8)
    outer_col0[list(spec.outer.frozen_set)] = 0
    outer_leaves = np.full(spec.outer.N, ERASED, dtype=np.int8)

    inner_g = _ErasureGraph(spec.inner.n)
    outer_g = _ErasureGraph(spec.outer.n)
    slots = [spec.inner_slot(k) for k in range(spec.outer.N)]
    while True:
        ivals = inner_g.solve(inner_col0, obs)
        inner_col0 = ivals[0]
        moved = False
        for k, slot in enumerate(slots):
            if outer_leaves[k] == ERASED and inner_col0[slot] != ERASED:
                outer_leaves[k] = inner_col0[slot]
                moved = True
        ovals = outer_g.solve(outer_col0, outer_leaves)
        outer_col0 = ovals[0]
        outer_leaves = ovals[spec.outer.n]
        for k, slot in enumerate(slots):
            if inner_col0[slot] == ERASED and outer_leaves[k] != ERASED:
                inner_col0[slot] = outer_leaves[k]
                moved = True
        if not moved:
            break
    info = np.concatenate(
        [
            outer_col0[list(spec.outer.info_set)],
            inner_col0[list(spec.inner.info_set)] if spec.K1 else np.zeros(0, np.int8),
        ]
    )
    unresolved = tuple(i for i in spec.outer.info_set if outer_col0[i] == ERASED) + tuple(
        i for i in spec.inner.info_set if inner_col0[i] == ERASED
    )
    return DecodeResult(
        info_bits=info,
        converged=not unresolved,
        iterations_used=1,
        unresolved=unresolved,
    )


# ---------------------------------------------------------------------------
# LLR-domain flooding BP
# ---------------------------------------------------------------------------

def _boxplus(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Stable check-node combination 2 atanh(tanh(a/2) tanh(b/2))."""
    return (
        np.sign(a) * np.sign(b) * np.minimum(np.abs(a), np.abs(b))
        + np.log1p(np.exp(-np.abs(a + b)))
        - np.log1p(np.exp(-np.abs(a - b)))
    )


def _boxplus_minsum(a: np.ndarray, b: np.ndarray, scale: float = 0.9375) -> np.ndarray:
    return scale * np.sign(a) * np.sign(b) * np.minimum(np.abs(a), np.abs(b))


def _combiner(rule: str):
    if rule == "tanh":
        return _boxplus
    if rule == "minsum":
        return _boxplus_minsum
    raise ValueError(f"unknown check rule {rule!r}")


class _BPGraph:
    """Message state for a batch of frames over one factor graph.

    L[c] carries the message arriving at variable column c from the right,
    R[c] the one arriving from the left.  R[0] holds the input priors and
    L[n] the channel LLRs; neither is overwritten by the sweeps.

    The butterfly stages of the transform commute, so two trellis
    orientations realize the same code.  "analysis" places the wide stage
    at the input column (the graph the stopping-set machinery studies);
    "standard" places it at the channel column, which is the orientation
    conventional polar BP implementations run on and is roughly 2.5 dB
    stronger under iterative decoding.  Row labels are identical in both.
    """

    def __init__(self, n: int, batch: int, rule: str = "tanh",
                 orientation: str = "standard"):
        self.n = n
        self.N = 1 << n
        self.box = _combiner(rule)
        if orientation == "standard":
            self.spans = [1 << c for c in range(n)]
        elif orientation == "analysis":
            self.spans = [1 << (n - 1 - c) for c in range(n)]
        else:
            raise ValueError(f"unknown orientation {orientation!r}")
        self.L = np.zeros((n + 1, batch, self.N))
        self.R = np.zeros((n + 1, batch, self.N))

    def set_priors(self, priors: np.ndarray) -> None:
        self.R[0] = priors

    def set_channel(self, llr: np.ndarray) -> None:
        self.L[self.n] = llr

    def _views(self, arr: np.ndarray, c: int):
        s = self.spans[c]
        v = arr.reshape(arr.shape[0], self.N // (2 * s), 2, s)
        return v[:, :, 0], v[:, :, 1]

    def sweep(self) -> None:
        box = self.box
        for c in range(self.n - 1, -1, -1):
            la2, lb2 = self._views(self.L[c + 1], c)
            ra, rb = self._views(self.R[c], c)
            oa, ob = self._views(self.L[c], c)
            oa[:] = box(la2, rb + lb2)
            ob[:] = box(ra, la2) + lb2
            np.clip(self.L[c], -LLR_MAX, LLR_MAX, out=self.L[c])
        for c in range(self.n):
            la2, lb2 = self._views(self.L[c + 1], c)
            ra, rb = self._views(self.R[c], c)
            oa, ob = self._views(self.R[c + 1], c)
            oa[:] = box(ra, rb + lb2)
            ob[:] = rb + box(ra, la2)
            np.clip(self.R[c + 1], -LLR_MAX, LLR_MAX, out=self.R[c + 1])

    def input_beliefs(self) -> np.ndarray:
        return self.R[0] + self.L[0]

    def output_beliefs(self) -> np.ndarray:
        return self.L[self.n] + self.R[self.n]

    def input_extrinsic(self) -> np.ndarray:
        return self.L[0]

    def output_extrinsic(self) -> np.ndarray:
        return self.R[self.n]

    def consistent(self) -> np.ndarray:
        """Per-frame flag: do the hard decisions re-encode consistently?"""
        u_hat = (self.input_beliefs() < 0).astype(np.uint8)
        x_hat = (self.output_beliefs() < 0).astype(np.uint8)
        return (polar_transform(u_hat) == x_hat).all(axis=-1)


def _code_priors(spec: CodeSpec, batch: int) -> np.ndarray:
    priors = np.zeros((batch, spec.N))
    priors[:, list(spec.frozen_set)] = LLR_MAX
    return priors


def bp_decode_batch(
    spec: CodeSpec, llr: np.ndarray, max_iter: int = 100, rule: str = "tanh",
    orientation: str = "standard",
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Flooding BP on a batch of frames.

    Returns (info bits, converged flags, iterations used).  Frames that
    pass the re-encode consistency check stop early.
    """
    llr = np.atleast_2d(np.asarray(llr, dtype=np.float64))
    batch = llr.shape[0]
    info_cols = list(spec.info_set)
    out_bits = np.zeros((batch, len(info_cols)), dtype=np.uint8)
    out_conv = np.zeros(batch, dtype=bool)
    out_iters = np.full(batch, max_iter, dtype=np.int64)

    graph = _BPGraph(spec.n, batch, rule, orientation)
    graph.set_priors(_code_priors(spec, batch))
    graph.set_channel(np.clip(llr, -LLR_MAX, LLR_MAX))
    active = np.arange(batch)
    for it in range(1, max_iter + 1):
        graph.sweep()
        done = graph.consistent()
        if done.any() or it == max_iter:
            if it == max_iter:
                done = np.ones(active.size, dtype=bool)
                flags = graph.consistent()
            else:
                flags = done
            beliefs = graph.input_beliefs()[done]
            idx = active[done]
            out_bits[idx] = (beliefs[:, info_cols] < 0).astype(np.uint8)
            out_conv[idx] = flags[done]
            out_iters[idx] = it
            keep = ~done
            if not keep.any():
                break
            active = active[keep]
            graph.L = graph.L[:, keep].copy()
            graph.R = graph.R[:, keep].copy()
    return out_bits, out_conv, out_iters


def bp_decode(
    spec: CodeSpec, llr, max_iter: int = 100, rule: str = "tanh",
    orientation: str = "standard",
) -> DecodeResult:
    bits, conv, iters = bp_decode_batch(
        spec, np.asarray(llr)[None, :], max_iter, rule, orientation
    )
    return DecodeResult(info_bits=bits[0], converged=bool(conv[0]), iterations_used=int(iters[0]))


# ---------------------------------------------------------------------------
# Joint decoding of concatenated layouts
# ---------------------------------------------------------------------------

class _JointMaps:
    """Index plumbing between outer leaves and inner input slots."""

    def __init__(self, spec):
        if isinstance(spec, AugmentedSpec):
            inners = [spec.inner]
            semis = [spec.semipolarized]
            block_of = np.zeros(spec.outer.N, dtype=np.int64)
            slot_of = np.array(
                [spec.inner_slot(k) for k in range(spec.outer.N)], dtype=np.int64
            )
        elif isinstance(spec, LocalGlobalSpec):
            inners = list(spec.inners)
            semis = list(spec.semipolarized)
            block_of = np.zeros(spec.outer.N, dtype=np.int64)
            slot_of = np.zeros(spec.outer.N, dtype=np.int64)
            for k in range(spec.outer.N):
                m, slot = spec.block_slot(k)
                block_of[k], slot_of[k] = m, slot
        else:
            raise TypeError(f"unsupported spec type {type(spec).__name__}")
        self.spec = spec
        self.inners = inners
        self.semis = semis
        self.block_of = block_of
        self.slot_of = slot_of
        self.outer = spec.outer

    def inner_priors(self, m: int, batch: int) -> np.ndarray:
        inner = self.inners[m]
        priors = np.zeros((batch, inner.N))
        frozen = set(range(inner.N)) - set(self.semis[m]) - set(inner.info_set)
        priors[:, sorted(frozen)] = LLR_MAX
        return priors


def joint_bp_decode_batch(
    spec,
    llr_blocks,
    max_iter: int = 100,
    rule: str = "tanh",
    outer_exchange: bool = True,
    orientation: str = "standard",
):
    """One inner round trip, outer exchange, one outer round trip per
    global iteration, with per-frame early exit.

    Returns (outer leaf beliefs, outer input beliefs, inner input beliefs
    per block, converged flags, per-frame iterations).  With
    outer_exchange off the inner graphs run stand-alone, which reduces to
    plain BP.
    """
    maps = _JointMaps(spec)
    blocks = [np.atleast_2d(np.asarray(b, dtype=np.float64)) for b in llr_blocks]
    batch = blocks[0].shape[0]
    n0 = maps.outer.n
    M = len(maps.inners)
    cols_of = [np.flatnonzero(maps.block_of == m) for m in range(M)]
    slots_of = [maps.slot_of[cols] for cols in cols_of]

    inner_graphs = []
    for m, llr in enumerate(blocks):
        gph = _BPGraph(maps.inners[m].n, batch, rule, orientation)
        gph.set_priors(maps.inner_priors(m, batch))
        gph.set_channel(np.clip(llr, -LLR_MAX, LLR_MAX))
        inner_graphs.append(gph)
    outer_graph = _BPGraph(n0, batch, rule, orientation)
    outer_priors = np.zeros((batch, maps.outer.N))
    outer_priors[:, list(maps.outer.frozen_set)] = LLR_MAX
    outer_graph.set_priors(outer_priors)

    out_leaf = np.zeros((batch, maps.outer.N))
    out_input = np.zeros((batch, maps.outer.N))
    out_inner = [np.zeros((batch, g.N)) for g in inner_graphs]
    out_conv = np.zeros(batch, dtype=bool)
    out_iters = np.full(batch, max_iter, dtype=np.int64)
    active = np.arange(batch)

    def flush(rows, local_mask):
        out_leaf[rows] = (outer_graph.L[n0] + outer_graph.output_extrinsic())[local_mask]
        out_input[rows] = outer_graph.input_beliefs()[local_mask]
        for m, gph in enumerate(inner_graphs):
            out_inner[m][rows] = gph.input_beliefs()[local_mask]

    for it in range(1, max_iter + 1):
        for gph in inner_graphs:
            gph.sweep()
        if outer_exchange:
            for m, gph in enumerate(inner_graphs):
                outer_graph.L[n0][:, cols_of[m]] = gph.input_extrinsic()[:, slots_of[m]]
            outer_graph.sweep()
            ext = outer_graph.output_extrinsic()
            for m, gph in enumerate(inner_graphs):
                gph.R[0][:, slots_of[m]] = ext[:, cols_of[m]]
        ok = np.ones(active.size, dtype=bool)
        for gph in inner_graphs:
            ok &= gph.consistent()
        if outer_exchange:
            ok &= outer_graph.consistent()
        if ok.any() or it == max_iter:
            done = ok if it < max_iter else np.ones(active.size, dtype=bool)
            rows = active[done]
            flush(rows, done)
            out_conv[rows] = ok[done]
            out_iters[rows] = it
            keep = ~done
            if not keep.any():
                break
            active = active[keep]
            for gph in inner_graphs + [outer_graph]:
                gph.L = gph.L[:, keep].copy()
                gph.R = gph.R[:, keep].copy()
    return out_leaf, out_input, out_inner, out_conv, out_iters


def augmented_decode_bits_batch(
    spec: AugmentedSpec, llr, max_iter: int = 100, rule: str = "tanh",
    outer_exchange: bool = True, orientation: str = "standard",
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Batched joint decoding to hard bits (outer bits, then payload bits)."""
    _, outer_in, inner_in, conv, iters = joint_bp_decode_batch(
        spec, [llr], max_iter, rule, outer_exchange, orientation
    )
    parts = [(outer_in[:, list(spec.outer.info_set)] < 0).astype(np.uint8)]
    if spec.K1:
        parts.append((inner_in[0][:, list(spec.inner.info_set)] < 0).astype(np.uint8))
    return np.concatenate(parts, axis=1), conv, iters


def augmented_bp_decode(
    spec: AugmentedSpec, llr, max_iter: int = 100, rule: str = "tanh",
    outer_exchange: bool = True, orientation: str = "standard",
) -> DecodeResult:
    """Joint BP over the composite graph; info order: outer bits, payload bits."""
    bits, conv, iters = augmented_decode_bits_batch(
        spec, np.asarray(llr)[None, :], max_iter, rule, outer_exchange, orientation
    )
    return DecodeResult(
        info_bits=bits[0], converged=bool(conv[0]), iterations_used=int(iters[0])
    )


def local_decode_bits_batch(
    spec: LocalGlobalSpec, block: int, llr, max_iter: int = 100, rule: str = "tanh",
    orientation: str = "standard",
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Batched stand-alone decoding of one block.

    Recovers the block's share of the outer information (systematic, read
    straight off the semipolarized inputs) followed by its payload bits.
    """
    if not 0 <= block < spec.M:
        raise ValueError(f"block {block} out of range")
    inner = spec.inners[block]
    llr = np.atleast_2d(np.asarray(llr, dtype=np.float64))
    batch = llr.shape[0]
    a_slots = [spec.block_slot(p)[1] for p in spec.k_a_parts[block]]
    cols = a_slots + (list(inner.info_set) if inner.K else [])
    out_bits = np.zeros((batch, len(cols)), dtype=np.uint8)
    out_conv = np.zeros(batch, dtype=bool)
    out_iters = np.full(batch, max_iter, dtype=np.int64)

    gph = _BPGraph(inner.n, batch, rule, orientation)
    gph.set_priors(_JointMaps(spec).inner_priors(block, batch))
    gph.set_channel(np.clip(llr, -LLR_MAX, LLR_MAX))
    active = np.arange(batch)
    for it in range(1, max_iter + 1):
        gph.sweep()
        ok = gph.consistent()
        if ok.any() or it == max_iter:
            done = ok if it < max_iter else np.ones(active.size, dtype=bool)
            rows = active[done]
            out_bits[rows] = (gph.input_beliefs()[done][:, cols] < 0).astype(np.uint8)
            out_conv[rows] = ok[done]
            out_iters[rows] = it
            keep = ~done
            if not keep.any():
                break
            active = active[keep]
            gph.L = gph.L[:, keep].copy()
            gph.R = gph.R[:, keep].copy()
    return out_bits, out_conv, out_iters


def local_decode(
    spec: LocalGlobalSpec, block: int, llr, max_iter: int = 100, rule: str = "tanh",
    orientation: str = "standard",
) -> DecodeResult:
    bits, conv, iters = local_decode_bits_batch(
        spec, block, np.asarray(llr)[None, :], max_iter, rule, orientation
    )
    return DecodeResult(
        info_bits=bits[0], converged=bool(conv[0]), iterations_used=int(iters[0])
    )


def global_decode_bits_batch(
    spec: LocalGlobalSpec, llr_blocks, max_iter: int = 100, rule: str = "tanh",
    orientation: str = "standard",
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Batched joint decoding across all blocks and the outer graph.

    Info order: outer information bits (ascending outer position), then
    each block's payload bits.
    """
    leafs, _, inner_in, conv, iters = joint_bp_decode_batch(
        spec, llr_blocks, max_iter, rule, True, orientation
    )
    parts = [(leafs[:, list(spec.outer.info_set)] < 0).astype(np.uint8)]
    for m in range(spec.M):
        if spec.inners[m].K:
            parts.append((inner_in[m][:, list(spec.inners[m].info_set)] < 0).astype(np.uint8))
    return np.concatenate(parts, axis=1), conv, iters


def global_decode(
    spec: LocalGlobalSpec, llr_blocks, max_iter: int = 100, rule: str = "tanh",
    orientation: str = "standard",
) -> DecodeResult:
    bits, conv, iters = global_decode_bits_batch(
        spec, [np.asarray(b)[None, :] for b in llr_blocks], max_iter, rule, orientation
    )
    return DecodeResult(
        info_bits=bits[0], converged=bool(conv[0]), iterations_used=int(iters[0])
    )


# ---------------------------------------------------------------------------
# Empirical message densities for outer-code design
# ---------------------------------------------------------------------------

def collect_outer_input_llrs(
    spec, ite: int, frames: int, seed: int, ebno_db: float = 3.0, batch: int = 256
) -> np.ndarray:
    """Messages the inner decoders pass toward the outer graph.

    All-zero transmission; after `ite` stand-alone inner iterations the
    leftward messages at the semipolarized inputs are sampled, one row per
    frame, one column per outer codeword position.
    """
    maps = _JointMaps(spec)
    if isinstance(spec, AugmentedSpec):
        rate = spec.rate
    else:
        rate = (spec.K_a + spec.K_b) / sum(s.N for s in spec.inners)
    sigma = float(np.sqrt(1.0 / (2.0 * rate * 10.0 ** (ebno_db / 10.0))))
    out = np.empty((frames, spec.outer.N))
    done = 0
    block_idx = 0
    while done < frames:
        todo = min(batch, frames - done)
        graphs = []
        for m, inner in enumerate(maps.inners):
            rng = np.random.Generator(
                np.random.Philox(key=[seed, (m << 32) | block_idx])
            )
            noise = rng.standard_normal((todo, inner.N))
            llr = 2.0 * (1.0 + sigma * noise) / sigma**2
            gph = _BPGraph(inner.n, todo, "tanh")
            gph.set_priors(maps.inner_priors(m, todo))
            gph.set_channel(np.clip(llr, -LLR_MAX, LLR_MAX))
            for _ in range(ite):
                gph.sweep()
            graphs.append(gph)
        for k in range(spec.outer.N):
            m, slot = maps.block_of[k], maps.slot_of[k]
            out[done : done + todo, k] = graphs[m].input_extrinsic()[:, slot]
        done += todo
        block_idx += 1
    return out
