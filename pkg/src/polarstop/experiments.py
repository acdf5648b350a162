"""Experiment runners: bound sweeps, deletion-schedule spread, FER curves.

Determinism contract: every run is driven by one master seed.  Randomness
is drawn from counter-based streams keyed by (seed, sweep point, batch),
batches are a fixed size, and reductions walk batches in index order, so
results are byte-identical across runs and worker counts.
"""

from __future__ import annotations

import csv
import multiprocessing
import os
import tempfile
import time
from dataclasses import dataclass, fields

import numpy as np

from . import concat as cc
from . import decoding as dec
from . import polar_core as pc
from . import stopping as st

BATCH_FRAMES = 512
_WILSON_Z = 1.959963984540054  # two-sided 95%


def wilson_interval(errors: int, trials: int) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    z2 = _WILSON_Z**2
    p = errors / trials
    denom = 1.0 + z2 / trials
    center = (p + z2 / (2 * trials)) / denom
    half = (_WILSON_Z / denom) * np.sqrt(p * (1 - p) / trials + z2 / (4 * trials**2))
    lo = 0.0 if errors == 0 else max(float(center - half), 0.0)
    hi = 1.0 if errors == trials else min(float(center + half), 1.0)
    return lo, hi


# ---------------------------------------------------------------------------
# Result rows and CSV I/O
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FerRow:
    series: str
    param: float
    frames: int
    errors: int
    fer: float
    ci_lo: float
    ci_hi: float
    secs: float | None = None


@dataclass(frozen=True)
class BoundsRow:
    label: str
    j_size: int
    lb1: int
    lb2: int
    enc_ub: int
    del1_ub: int
    del2_ub: int
    exact: int | None
    exact_method: str | None
    witness: str
    lb1_secs: float | None = None
    lb2_secs: float | None = None
    enc_secs: float | None = None
    del1_secs: float | None = None
    del2_secs: float | None = None
    exact_secs: float | None = None


@dataclass(frozen=True)
class BoxRow:
    k: int
    trial: int
    value: int


_ROW_TYPES = {"fer": FerRow, "bounds": BoundsRow, "box": BoxRow}


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def emit_results(rows, path, fmt: str = "csv") -> None:
    """Write rows to path atomically; header is fixed by the row type."""
    rows = list(rows)
    if not rows:
        raise ValueError("no rows to emit")
    names = [f.name for f in fields(rows[0])]
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".polarstop-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            if fmt == "csv":
                writer = csv.writer(fh)
                writer.writerow(names)
                for row in rows:
                    writer.writerow([_format_cell(getattr(row, n)) for n in names])
            elif fmt == "gnuplot":
                fh.write("# " + " ".join(names) + "\n")
                for row in rows:
                    fh.write(
                        " ".join(_format_cell(getattr(row, n)) or "nan" for n in names)
                        + "\n"
                    )
            else:
                raise ValueError(f"unknown format {fmt!r}")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def parse_results(path, kind: str):
    """Read a CSV emitted by emit_results back into typed rows."""
    row_type = _ROW_TYPES[kind]
    spec = {f.name: f.type for f in fields(row_type)}
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            kwargs = {}
            for name, tp in spec.items():
                raw = rec[name]
                if raw == "":
                    # optional fields serialize None as empty; plain str keeps it
                    kwargs[name] = raw if str(tp) == "str" else None
                elif "int" in str(tp):
                    kwargs[name] = int(raw)
                elif "float" in str(tp):
                    kwargs[name] = float(raw)
                else:
                    kwargs[name] = raw
            out.append(row_type(**kwargs))
    return out


# ---------------------------------------------------------------------------
# Code builders from config mappings
# ---------------------------------------------------------------------------

def _build_plain(code_cfg) -> pc.CodeSpec:
    n = int(code_cfg["n"])
    K = int(code_cfg["K"])
    method = code_cfg.get("construction", "ga")
    if method == "ga":
        return pc.construct_ga(
            n,
            K,
            float(code_cfg.get("design_snr_db", 3.0)),
            float(code_cfg.get("design_rate", K / (1 << n))),
        )
    if method == "bec":
        return pc.construct_bec(n, K, float(code_cfg.get("design_eps", 0.5)))
    raise ValueError(f"unknown construction {method!r}")


def _outer_design(base_spec, code_cfg, seed: int):
    """Apply the configured outer-code design to a built concatenation."""
    method = code_cfg.get("outer_design", "de")
    if method == "de":
        return base_spec
    if method == "opss":
        outer = cc.opss_outer_spec(base_spec, s=int(code_cfg.get("swaps", 4)))
        return cc.replace_outer(base_spec, outer)
    if method == "nde":
        info = cc.nde_construct(
            base_spec,
            ite=int(code_cfg.get("nde_iterations", 3)),
            samples=int(code_cfg.get("nde_samples", 10_000)),
            seed=seed,
            ebno_db=float(code_cfg.get("design_snr_db", 3.0)),
        )
        outer = pc.CodeSpec(
            n=base_spec.outer.n,
            info_set=info,
            order=base_spec.outer.order,
            method=base_spec.outer.method + "+nde",
        )
        return cc.replace_outer(base_spec, outer)
    raise ValueError(f"unknown outer design {method!r}")


def build_code(code_cfg, seed: int = 0):
    """(kind, spec) from a config mapping; kind in plain/augmented/local_global."""
    kind = code_cfg.get("type", "plain")
    if kind == "plain":
        return "plain", _build_plain(code_cfg)
    snr = float(code_cfg.get("design_snr_db", 3.0))
    rate = float(code_cfg.get("design_rate", 0.5))
    if kind == "augmented":
        n1 = int(code_cfg["inner_n"])
        order = pc.construct_ga(n1, 1 << (n1 - 1), snr, rate).order
        base = cc.build_augmented_spec(
            order,
            N0=int(code_cfg["N0"]),
            K0=int(code_cfg["K0"]),
            K1=int(code_cfg["K1"]),
            design_ebno_db=snr,
        )
        return "augmented", _outer_design(base, code_cfg, seed)
    if kind == "local_global":
        n1 = int(code_cfg["inner_n"])
        M = int(code_cfg.get("blocks", 2))
        order = pc.construct_ga(n1, 1 << (n1 - 1), snr, rate).order
        base = cc.build_local_global_spec(
            [order] * M,
            N0=int(code_cfg["N0"]),
            K_a=int(code_cfg["K_a"]),
            k_b_sizes=[int(code_cfg["K_b"])] * M,
            design_ebno_db=snr,
            design_rate=rate,
        )
        return "local_global", _outer_design(base, code_cfg, seed)
    raise ValueError(f"unknown code type {kind!r}")


# ---------------------------------------------------------------------------
# Monte Carlo FER
# ---------------------------------------------------------------------------

def _overall_rate(kind, spec) -> float:
    if kind == "plain":
        return spec.K / spec.N
    if kind == "augmented":
        return spec.rate
    return (spec.K_a + spec.K_b) / sum(s.N for s in spec.inners)


def _batch_rng(seed: int, point: int, batch: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[seed, (point << 24) | batch]))


def _simulate_batch(ctx, point: int, batch: int) -> dict[str, np.ndarray]:
    """Per-frame error flags for one batch, keyed by decode mode."""
    kind, spec = ctx["kind"], ctx["spec"]
    value = ctx["values"][point]
    rng = _batch_rng(ctx["seed"], point, batch)
    todo = ctx["batch_frames"]
    rule = ctx["rule"]
    max_iter = ctx["max_iter"]
    orient = ctx.get("orientation", "standard")

    if kind == "plain":
        info = rng.integers(0, 2, (todo, spec.K), dtype=np.uint8)
        u = np.zeros((todo, spec.N), dtype=np.uint8)
        u[:, list(spec.info_set)] = info
        x = pc.polar_transform(u)
        if ctx["channel"] == "bec":
            erase = rng.random((todo, spec.N)) < value
            flags = np.zeros(todo, dtype=bool)
            for f in range(todo):
                obs = x[f].astype(np.int8)
                obs[erase[f]] = dec.ERASED
                res = dec.bec_peel(spec, obs)
                flags[f] = (not res.converged) or (res.info_bits != info[f]).any()
            return {"plain": flags}
        sigma = _noise_sigma(value, ctx["rate"])
        llr = _awgn_llrs(x, sigma, rng)
        bits, conv, _ = dec.bp_decode_batch(spec, llr, max_iter, rule, orient)
        return {"plain": (~conv) | (bits != info).any(axis=1)}

    if kind == "augmented":
        info = rng.integers(0, 2, (todo, spec.K0 + spec.K1), dtype=np.uint8)
        u_out = np.zeros((todo, spec.outer.N), dtype=np.uint8)
        u_out[:, list(spec.outer.info_set)] = info[:, : spec.K0]
        y = pc.polar_transform(u_out)
        u_in = np.zeros((todo, spec.inner.N), dtype=np.uint8)
        slots = [spec.inner_slot(k) for k in range(spec.outer.N)]
        u_in[:, slots] = y
        if spec.K1:
            u_in[:, list(spec.inner.info_set)] = info[:, spec.K0 :]
        x = pc.polar_transform(u_in)
        sigma = _noise_sigma(value, ctx["rate"])
        llr = _awgn_llrs(x, sigma, rng)
        bits, conv, _ = dec.augmented_decode_bits_batch(spec, llr, max_iter, rule, True, orient)
        return {"augmented": (~conv) | (bits != info).any(axis=1)}

    # local-global: one shared transmission, local and global decoding
    info_a = rng.integers(0, 2, (todo, spec.K_a), dtype=np.uint8)
    info_b = [
        rng.integers(0, 2, (todo, s.K), dtype=np.uint8) for s in spec.inners
    ]
    _, y = pc.systematic_encode_batch(spec.outer, info_a)
    words = []
    for m in range(spec.M):
        u = np.zeros((todo, spec.inners[m].N), dtype=np.uint8)
        positions = spec.outer_positions(m)
        slots = [spec.block_slot(p)[1] for p in positions]
        u[:, slots] = y[:, list(positions)]
        if spec.inners[m].K:
            u[:, list(spec.inners[m].info_set)] = info_b[m]
        words.append(pc.polar_transform(u))
    sigma = _noise_sigma(value, ctx["rate"])
    llrs = [_awgn_llrs(w, sigma, rng) for w in words]

    out: dict[str, np.ndarray] = {}
    if "local" in ctx["modes"]:
        flags = np.zeros(todo, dtype=bool)
        for m in range(spec.M):
            ref_a = y[:, list(spec.k_a_parts[m])]
            ref = np.concatenate([ref_a, info_b[m]], axis=1) if spec.inners[m].K else ref_a
            bits, conv, _ = dec.local_decode_bits_batch(spec, m, llrs[m], max_iter, rule, orient)
            flags |= (~conv) | (bits != ref).any(axis=1)
        out["local"] = flags
    if "global" in ctx["modes"]:
        ref = np.concatenate([info_a] + [b for b in info_b if b.size], axis=1)
        bits, conv, _ = dec.global_decode_bits_batch(spec, llrs, max_iter, rule, orient)
        out["global"] = (~conv) | (bits != ref).any(axis=1)
    return out


def _noise_sigma(ebno_db: float, rate: float) -> float:
    return float(np.sqrt(1.0 / (2.0 * rate * 10.0 ** (ebno_db / 10.0))))


def _awgn_llrs(x: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    symbols = 1.0 - 2.0 * x.astype(np.float64)
    y = symbols + sigma * rng.standard_normal(x.shape)
    return 2.0 * y / sigma**2


_WORKER_CTX: dict = {}


def _worker_init(ctx):
    _WORKER_CTX.update(ctx)


def _worker_run(args):
    point, batch = args
    return _simulate_batch(_WORKER_CTX, point, batch)


def run_fer_experiment(cfg, seed: int, threads: int = 1, timings: bool = False):
    """FER with Wilson intervals per sweep point, batch-deterministic.

    Stops a point when every decode mode has reached the target error
    count or the frame budget is exhausted; per-row frame counts are cut
    at the exact frame where the target was met.
    """
    kind, spec = build_code(cfg["code"], seed=seed)
    channel = cfg.get("channel", {})
    values = [float(v) for v in channel.get("values", [3.0])]
    chan_type = channel.get("type", "awgn")
    if chan_type == "bec" and kind != "plain":
        raise ValueError("erasure-channel sweeps support plain codes only")
    decode_cfg = cfg.get("decode", {})
    modes = list(decode_cfg.get("modes", ["local", "global"] if kind == "local_global" else [kind]))
    ctx = {
        "kind": kind,
        "spec": spec,
        "seed": seed,
        "values": values,
        "channel": chan_type,
        "rate": _overall_rate(kind, spec),
        "rule": decode_cfg.get("rule", "tanh"),
        "orientation": decode_cfg.get("orientation", "standard"),
        "max_iter": int(decode_cfg.get("max_iter", 100)),
        "batch_frames": int(cfg.get("batch_frames", BATCH_FRAMES)),
        "modes": modes,
    }
    max_frames = int(cfg.get("max_frames", 1_000_000))
    target_errors = cfg.get("target_errors", 100)
    target_errors = None if target_errors in (None, "none") else int(target_errors)
    series = cfg.get("label", kind)

    rows = []
    for point in range(len(values)):
        t0 = time.perf_counter()
        flags = {m: [] for m in modes}
        batch_size = ctx["batch_frames"]
        n_batches = (max_frames + batch_size - 1) // batch_size
        args = [(point, b) for b in range(n_batches)]

        def consume(result_iter):
            done_frames = 0
            for res in result_iter:
                for m in modes:
                    flags[m].append(res[m])
                done_frames += batch_size
                if target_errors is not None and all(
                    sum(int(a.sum()) for a in flags[m]) >= target_errors for m in modes
                ):
                    return done_frames
                if done_frames >= max_frames:
                    return done_frames
            return done_frames

        if threads > 1:
            mp = multiprocessing.get_context("fork")
            with mp.Pool(threads, initializer=_worker_init, initargs=(ctx,)) as pool:
                consume(pool.imap(_worker_run, args))
        else:
            consume(_simulate_batch(ctx, point, b) for _, b in args)

        secs = time.perf_counter() - t0 if timings else None
        for m in modes:
            flat = np.concatenate(flags[m])[:max_frames]
            errors = int(flat.sum())
            frames = flat.size
            if target_errors is not None and errors >= target_errors:
                cum = np.cumsum(flat)
                frames = int(np.searchsorted(cum, target_errors) + 1)
                errors = target_errors
            fer = errors / frames
            lo, hi = wilson_interval(errors, frames)
            rows.append(
                FerRow(
                    series=f"{series}:{m}",
                    param=values[point],
                    frames=frames,
                    errors=errors,
                    fer=fer,
                    ci_lo=lo,
                    ci_hi=hi,
                    secs=secs,
                )
            )
    return rows


# ---------------------------------------------------------------------------
# Bound sweeps and deletion-schedule spread
# ---------------------------------------------------------------------------

def _sweep_sets(cfg, seed: int):
    """Yield (label, J) pairs for a bound sweep."""
    n = int(cfg["n"])
    N = 1 << n
    mode = cfg.get("j_mode", "polar_constructed")
    k_values = [int(k) for k in cfg.get("k_values", [N // 2])]
    if mode == "polar_constructed":
        method = cfg.get("construction", "ga")
        for K in k_values:
            if method == "ga":
                spec = pc.construct_ga(
                    n, K, float(cfg.get("design_snr_db", 3.0)), float(cfg.get("design_rate", 0.5))
                )
            else:
                spec = pc.construct_bec(n, K, float(cfg.get("design_eps", 0.5)))
            yield f"{method}:K={K}", list(spec.info_set)
    elif mode == "random":
        for K in k_values:
            rng = np.random.Generator(np.random.Philox(key=[seed, K]))
            yield f"random:K={K}", sorted(int(v) for v in rng.choice(N, size=K, replace=False))
    elif mode == "explicit":
        for J in cfg["sets"]:
            J = sorted(int(v) for v in J)
            yield "explicit:" + ",".join(map(str, J)), J
    else:
        raise ValueError(f"unknown j_mode {mode!r}")


def run_bounds_sweep(cfg, seed: int, timings: bool = False):
    """All bound values (and the exact value when in reach) per index set."""
    n = int(cfg["n"])
    t = int(cfg.get("t", 10))
    rows = []
    for label, J in _sweep_sets(cfg, seed):
        vals = {}
        secs = {}
        for name, fn in (
            ("lb1", lambda: st.lower_bound_I(J, n)),
            ("lb2", lambda: st.lower_bound_II(J, n)),
            ("enc", lambda: st.encoding_bound(J, n)[0]),
            ("del1", lambda: st.deletion_bound_I(J, n)[:2]),
            ("del2", lambda: st.deletion_bound_II(J, n, t=t, seed=seed)[:2]),
        ):
            t0 = time.perf_counter()
            vals[name] = fn()
            secs[name] = time.perf_counter() - t0 if timings else None
        del1, del1_wit = vals["del1"]
        del2, del2_wit = vals["del2"]
        t0 = time.perf_counter()
        exact, method, witness = st.exact_mvss_route(
            J, n, vals["lb1"], vals["lb2"], (del1_wit, del2_wit)
        )
        exact_secs = time.perf_counter() - t0 if timings else None
        rows.append(
            BoundsRow(
                label=label,
                j_size=len(J),
                lb1=vals["lb1"],
                lb2=vals["lb2"],
                enc_ub=vals["enc"],
                del1_ub=del1,
                del2_ub=del2,
                exact=exact,
                exact_method=method,
                witness=" ".join(map(str, sorted(witness))) if witness else "",
                lb1_secs=secs["lb1"],
                lb2_secs=secs["lb2"],
                enc_secs=secs["enc"],
                del1_secs=secs["del1"],
                del2_secs=secs["del2"],
                exact_secs=exact_secs,
            )
        )
    return rows


def run_box_plot(cfg, seed: int):
    """Single-trial deletion-schedule outcomes across many seeds per K."""
    n = int(cfg["n"])
    trials = int(cfg.get("trials", 100))
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rows = []
    for label, J in _sweep_sets(cfg, seed):
        K = len(J)
        for trial in range(trials):
            val, _, _ = st.deletion_bound_II(J, n, t=1, seed=(seed << 20) | (K << 8) | trial)
            rows.append(BoxRow(k=K, trial=trial, value=val))
    return rows
