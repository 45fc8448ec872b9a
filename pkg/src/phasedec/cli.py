"""Command-line front end: simulate, decode, selfcheck, gen-code, table1."""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import selfcheck as _selfcheck
from .channel import ChannelParams, Frame
from .harness import SimConfig, run_sweep
from .joint import DecoderSchedule, decode_frame
from .ldpc import parse_alist, write_alist
from .codes import peg_code
from .trackers import (TrackerConfig, backward_pass, forward_pass,
                       predicted_operation_counts)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="phasedec",
        description="Joint LDPC + Wiener-phase-noise decoding simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run a Monte-Carlo FER sweep")
    p_sim.add_argument("--config", required=True, help="JSON config file")
    p_sim.add_argument("--out", required=True, help="CSV output path")
    p_sim.add_argument("--json", help="JSON mirror of the results")
    p_sim.add_argument("--workers", type=int, help="worker process count")
    p_sim.add_argument("--quiet", action="store_true")

    p_dec = sub.add_parser("decode", help="decode one frame with diagnostics")
    p_dec.add_argument("--code", required=True, help="alist file")
    p_dec.add_argument("--frame", required=True, help="frame JSON file")
    p_dec.add_argument("--es-n0-db", type=float, required=True)
    p_dec.add_argument("--sigma-delta", type=float, default=0.1)
    p_dec.add_argument("--algorithm", default="proposed",
                       choices=("proposed", "barb", "dp"))
    p_dec.add_argument("--t-d", type=float, default=2.2)
    p_dec.add_argument("--dp-levels", type=int, default=8)
    p_dec.add_argument("--outer-iters", type=int, default=10)
    p_dec.add_argument("--ldpc-iters", type=int, default=10)
    p_dec.add_argument("--dump-csv", help="per-symbol tracker diagnostics")

    p_chk = sub.add_parser("selfcheck", help="run the built-in verification suites")

    p_gen = sub.add_parser("gen-code", help="generate a PEG LDPC code")
    p_gen.add_argument("--n", type=int, required=True)
    p_gen.add_argument("--rate", type=float, required=True)
    p_gen.add_argument("--out", required=True)
    p_gen.add_argument("--var-degree", type=int, default=3)
    p_gen.add_argument("--seed", type=int, default=0)

    p_tab = sub.add_parser("table1", help="print predicted per-symbol operation counts")
    p_tab.add_argument("--m", type=int, required=True)
    p_tab.add_argument("--l", type=int, required=True)
    p_tab.add_argument("--q", type=int, required=True)

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    if args.command == "simulate":
        return _cmd_simulate(args)
    if args.command == "decode":
        return _cmd_decode(args)
    if args.command == "selfcheck":
        return _selfcheck.run(print)
    if args.command == "gen-code":
        return _cmd_gen_code(args)
    if args.command == "table1":
        return _cmd_table1(args)
    return 2


def _cmd_simulate(args) -> int:
    try:
        config = SimConfig.from_json(Path(args.config).read_text())
    except (OSError, ValueError) as exc:
        print(f"error: bad config: {exc}", file=sys.stderr)
        return 2
    progress = None if args.quiet else (lambda msg: print(msg, flush=True))
    try:
        run_sweep(config, csv_path=args.out, json_path=args.json,
                  workers=args.workers, progress=progress)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def _cmd_decode(args) -> int:
    code = parse_alist(Path(args.code).read_text())
    frame = Frame.from_dict(json.loads(Path(args.frame).read_text()))
    if frame.received is None:
        print("error: frame JSON has no received samples", file=sys.stderr)
        return 2
    params = ChannelParams(m=frame.m, sigma_delta=args.sigma_delta,
                           es_n0_db=args.es_n0_db)
    tracker = TrackerConfig(algorithm=args.algorithm, t_d=args.t_d,
                            dp_levels=args.dp_levels)
    schedule = DecoderSchedule(outer_iters=args.outer_iters,
                               ldpc_iters_per_outer=args.ldpc_iters)
    result = decode_frame(frame, code, params, tracker, schedule)
    print(f"converged: {result.converged}")
    print(f"outer iterations: {result.outer_iterations}")
    print(f"bp iterations: {result.bp_iterations}")
    print(f"syndrome weights: {result.diagnostics['syndrome_weights']}")
    if args.dump_csv:
        _dump_diagnostics(args.dump_csv, frame, params, tracker)
        print(f"diagnostics written to {args.dump_csv}")
    return 0


def _dump_diagnostics(path, frame, params, tracker):
    pd = np.full((len(frame), frame.m), 1.0 / frame.m)
    fwd = forward_pass(frame, pd, tracker, params.sigma2, params.sigma_delta)
    bwd = backward_pass(frame, pd, tracker, params.sigma2, params.sigma_delta)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "pilot", "alpha_fwd", "kappa_fwd", "mu_fwd",
                    "alpha_bwd", "kappa_bwd", "mu_bwd", "true_phase"])
        for k in range(len(frame)):
            truth = ""
            if frame.true_phase is not None:
                truth = f"{frame.true_phase[k] % (2 * math.pi):.6f}"
            w.writerow([k, int(frame.pilot_mask[k]),
                        f"{fwd[k].alpha:.6g}", f"{fwd[k].tik.kappa:.6g}",
                        f"{fwd[k].tik.mu:.6f}",
                        f"{bwd[k].alpha:.6g}", f"{bwd[k].tik.kappa:.6g}",
                        f"{bwd[k].tik.mu:.6f}", truth])


def _cmd_gen_code(args) -> int:
    code = peg_code(args.n, args.rate, var_degree=args.var_degree, seed=args.seed)
    Path(args.out).write_text(write_alist(code))
    print(f"wrote {args.out}: n={code.n} checks={code.num_checks} "
          f"k={code.k_dim} rate={code.rate:.4f}")
    return 0


def _cmd_table1(args) -> int:
    print("algorithm operations lut")
    for name in ("dp", "barb", "proposed"):
        c = predicted_operation_counts(name, args.m, args.l, args.q)
        print(f"{name} {c.operations} {c.lut}")
    return 0


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
