"""Command-line front end.

Every command takes a mandatory --seed and writes deterministic output
files; wall-clock columns stay empty unless --timings is given so that
re-runs are byte-identical.  Configs are YAML mappings documented in the
README.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np
import yaml

from . import concat as cc
from . import decoding as dec
from . import experiments as ex
from . import factor_graph as fg
from . import polar_core as pc
from . import stopping as st


def _load_config(path) -> dict:
    with open(path) as fh:
        cfg = yaml.safe_load(fh)
    if not isinstance(cfg, dict):
        raise SystemExit(f"{path}: config must be a mapping")
    return cfg


def _write_text(path, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _bits_arg(raw: str) -> np.ndarray:
    bits = [c for c in raw if not c.isspace()]
    if not all(c in "01" for c in bits):
        raise SystemExit("bits must be a 0/1 string (erasures: use decode --erasures)")
    return np.array([int(c) for c in bits], dtype=np.uint8)


def cmd_build_code(args) -> int:
    if args.construction == "ga":
        spec = pc.construct_ga(args.n, args.k, args.design_snr_db, args.design_rate)
    else:
        spec = pc.construct_bec(args.n, args.k, args.design_eps)
    pc.save_code_spec(spec, args.out)
    return 0


def cmd_bounds(args) -> int:
    J = sorted(int(t) for t in args.indices.split(","))
    rep = st.mvss_exact_or_bounds(J, args.n, t=args.t, seed=args.seed)
    witness = " ".join(map(str, sorted(rep.witness))) if rep.witness else ""
    row = ex.BoundsRow(
        label="explicit:" + ",".join(map(str, J)),
        j_size=len(J),
        lb1=rep.lb1,
        lb2=rep.lb2,
        enc_ub=rep.enc_ub,
        del1_ub=rep.del1_ub,
        del2_ub=rep.del2_ub,
        exact=rep.exact,
        exact_method=rep.exact_method,
        witness=witness,
    )
    ex.emit_results([row], args.out, fmt=args.format)
    return 0


def cmd_bounds_sweep(args) -> int:
    cfg = _load_config(args.config)
    rows = ex.run_bounds_sweep(cfg, seed=args.seed, timings=args.timings)
    ex.emit_results(rows, args.out, fmt=args.format)
    return 0


def cmd_box_plot(args) -> int:
    cfg = _load_config(args.config)
    rows = ex.run_box_plot(cfg, seed=args.seed)
    ex.emit_results(rows, args.out, fmt=args.format)
    return 0


def cmd_build_concat(args) -> int:
    cfg = _load_config(args.config)
    _, spec = ex.build_code(cfg["code"], seed=args.seed)
    cc.save_concat_spec(spec, args.out)
    return 0


def cmd_opss(args) -> int:
    spec = cc.load_concat_spec(args.spec)
    outer = cc.opss_outer_spec(spec, s=args.swaps, t=args.t, seed=args.seed)
    pc.save_code_spec(outer, args.out)
    return 0


def cmd_nde(args) -> int:
    spec = cc.load_concat_spec(args.spec)
    info = cc.nde_construct(
        spec, ite=args.iterations, samples=args.samples, seed=args.seed,
        ebno_db=args.design_snr_db,
    )
    outer = pc.CodeSpec(
        n=spec.outer.n, info_set=info, order=spec.outer.order,
        method=spec.outer.method + "+nde",
    )
    pc.save_code_spec(outer, args.out)
    return 0


def cmd_encode(args) -> int:
    info = _bits_arg(args.info)
    if args.concat_spec:
        spec = cc.load_concat_spec(args.concat_spec)
        if isinstance(spec, cc.AugmentedSpec):
            word = cc.augmented_encode(spec, info)
            _write_text(args.out, "".join(map(str, word.tolist())) + "\n")
            return 0
        k_a = spec.K_a
        parts, off = [], k_a
        for s in spec.inners:
            parts.append(info[off : off + s.K])
            off += s.K
        words = cc.local_global_encode(spec, info[:k_a], parts)
        _write_text(
            args.out, "\n".join("".join(map(str, w.tolist())) for w in words) + "\n"
        )
        return 0
    spec = pc.load_code_spec(args.spec)
    if args.systematic:
        _, x = pc.systematic_encode(spec, info)
    else:
        u = np.zeros(spec.N, dtype=np.uint8)
        u[list(spec.info_set)] = info
        x = pc.polar_transform(u)
    _write_text(args.out, "".join(map(str, x.tolist())) + "\n")
    return 0


def cmd_decode(args) -> int:
    spec = pc.load_code_spec(args.spec)
    if args.erasures:
        obs = np.array(
            [dec.ERASED if c == "e" else int(c) for c in args.observation.strip()],
            dtype=np.int8,
        )
        res = dec.bec_peel(spec, obs)
    else:
        llr = np.array([float(t) for t in args.observation.split(",")])
        res = dec.bp_decode(spec, llr, max_iter=args.max_iter, rule=args.rule)
    bits = "".join("e" if b < 0 else str(int(b)) for b in res.info_bits)
    _write_text(
        args.out,
        f"converged: {int(res.converged)}\niterations: {res.iterations_used}\n"
        f"info: {bits}\n",
    )
    return 0


def cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    rows = ex.run_fer_experiment(
        cfg, seed=args.seed, threads=args.threads, timings=args.timings
    )
    ex.emit_results(rows, args.out, fmt=args.format)
    return 0


def cmd_export_graph(args) -> int:
    g = fg.build_factor_graph(args.n)
    _write_text(args.out, g.export_edge_list())
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="polarstop",
        description="Stopping-set analysis and simulation for polar code architectures",
    )
    parser.add_argument("--seed", type=int, required=True, help="master seed (mandatory)")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--out", default=None, help="output path (default: stdout)")
    parser.add_argument("--timings", action="store_true", help="fill wall-clock columns")
    parser.add_argument("--format", choices=["csv", "gnuplot"], default="csv")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-code", help="construct a polar code and save its spec")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--construction", choices=["ga", "bec"], default="ga")
    p.add_argument("--design-snr-db", type=float, default=3.0)
    p.add_argument("--design-rate", type=float, default=0.5)
    p.add_argument("--design-eps", type=float, default=0.5)
    p.set_defaults(fn=cmd_build_code)

    p = sub.add_parser("bounds", help="bound report for one explicit index set")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--indices", required=True, help="comma-separated u-indices")
    p.add_argument("--t", type=int, default=10)
    p.set_defaults(fn=cmd_bounds)

    p = sub.add_parser("bounds-sweep", help="bound comparison over K values")
    p.add_argument("--config", required=True)
    p.set_defaults(fn=cmd_bounds_sweep)

    p = sub.add_parser("box-plot", help="deletion-schedule outcome spread per K")
    p.add_argument("--config", required=True)
    p.set_defaults(fn=cmd_box_plot)

    p = sub.add_parser("build-concat", help="build a concatenated spec and save it")
    p.add_argument("--config", required=True)
    p.set_defaults(fn=cmd_build_concat)

    p = sub.add_parser("opss", help="redesign an outer code by stopping-set swaps")
    p.add_argument("--spec", required=True, help="concat spec file")
    p.add_argument("--swaps", type=int, default=4)
    p.add_argument("--t", type=int, default=10)
    p.set_defaults(fn=cmd_opss)

    p = sub.add_parser("nde", help="redesign an outer code by empirical DE")
    p.add_argument("--spec", required=True, help="concat spec file")
    p.add_argument("--iterations", type=int, default=3)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--design-snr-db", type=float, default=3.0)
    p.set_defaults(fn=cmd_nde)

    p = sub.add_parser("encode", help="encode an information word")
    p.add_argument("--spec", help="plain code spec file")
    p.add_argument("--concat-spec", help="concatenated spec file")
    p.add_argument("--info", required=True, help="information bits as a 0/1 string")
    p.add_argument("--systematic", action="store_true")
    p.set_defaults(fn=cmd_encode)

    p = sub.add_parser("decode", help="decode one observation")
    p.add_argument("--spec", required=True)
    p.add_argument("--observation", required=True,
                   help="0/1/e string (erasures) or comma-separated LLRs")
    p.add_argument("--erasures", action="store_true")
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--rule", choices=["tanh", "minsum"], default="tanh")
    p.set_defaults(fn=cmd_decode)

    p = sub.add_parser("simulate", help="Monte Carlo FER sweep from a config")
    p.add_argument("--config", required=True)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("export-graph", help="dump the factor graph edge list")
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(fn=cmd_export_graph)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())
