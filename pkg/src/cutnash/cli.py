"""Command-line entry point: ``cutnash {solve,verify,gen,scan-lambda,xor-check,bench}``."""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from .game import GameError
from .instances import (GENERATORS, InstanceFormatError, format_instance, parse_instance,
                        parse_state, generate)
from .oracles import (diagonal_trace, monte_carlo_xor, scan_xor_bound_gap, vectors_from_angles,
                      verify_equilibrium, write_scan_csv, xor_lower_bound, xor_upper_bound)
from .params import RHO, target_factor
from .report import build_report
from .rounding import DEFAULT_ROUND_CAP, xor_probability
from .sdp import DEFAULT_TOL, SdpError
from .solver import SolverConfig, SolverError, solve

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VERIFY = 3
EXIT_INPUT = 4
EXIT_SOLVER = 5

SEED_ENV = "CUTNASH_SEED"


class InputError(Exception):
    pass


def _default_seed():
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _read(path):
    try:
        if path == "-":
            return sys.stdin.read()
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(str(exc)) from None


def _write(path, text):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _config(args):
    try:
        return SolverConfig(epsilon=args.epsilon, seed=args.seed, initial=args.initial,
                            sdp_tol=args.sdp_tol, z_threshold=args.z_threshold,
                            round_cap=args.round_cap, uncapped_rounds=args.uncapped_rounds)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _trace_text(result):
    rows = []
    for tr in result.traces:
        rows.append({
            "phase": tr.index,
            "start": str(tr.start_state),
            "end": str(tr.end_state),
            "moved": sorted(tr.moved),
            "tau_moves": [[m.player, m.before, m.after] for m in tr.tau_moves],
            "round_gains": list(tr.round_gains),
            "sdp_values": list(tr.sdp_values),
        })
    return json.dumps(rows, indent=1) + "\n"


def cmd_solve(args):
    game = parse_instance(_read(args.instance))
    config = _config(args)
    result = solve(game, config)
    report = build_report(game, config, result)
    _write(args.out, report.to_json())
    if args.trace:
        _write(args.trace, _trace_text(result))
    return EXIT_OK if report.passed else EXIT_VERIFY


def cmd_verify(args):
    game = parse_instance(_read(args.instance))
    state = parse_state(_read(args.state), game.n)
    factor = args.factor if args.factor is not None else target_factor(args.epsilon)
    check = verify_equilibrium(game, state, factor)
    _write(args.out, json.dumps({"factor": factor, "passed": check.passed,
                                 "worst_ratio": str(check.worst_ratio),
                                 "worst_player": check.worst_player}, indent=2) + "\n")
    return EXIT_OK if check.passed else EXIT_VERIFY


def _params(pairs):
    params = {}
    for item in pairs or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise InputError(f"generator parameters look like key=value, got {item!r}")
        params[key.replace("-", "_")] = value
    return params


def cmd_gen(args):
    params = _params(args.param)
    try:
        game = generate(args.kind, params, args.seed)
    except (ValueError, TypeError) as exc:
        raise InputError(str(exc)) from None
    _write(args.out, format_instance(game))
    return EXIT_OK


def cmd_scan_lambda(args):
    result = scan_xor_bound_gap(args.step, args.rho, args.tolerance)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            write_scan_csv(result, fh)
    if args.diagonal_out:
        theta, gap = diagonal_trace(rho=args.rho)
        with open(args.diagonal_out, "w") as fh:
            fh.write("theta,gap\n")
            fh.writelines(f"{t!r},{'' if np.isnan(v) else repr(float(v))}\n"
                          for t, v in zip(theta, gap))
    summary = {"rho": result.rho, "step": result.step, "grid_points": int(result.thetas.size),
               "max_gap": result.max_value, "argmax": list(result.argmax),
               "violations": result.violations, "passed": result.violations == 0}
    print(json.dumps(summary, indent=2))
    return EXIT_OK if result.violations == 0 else EXIT_VERIFY


def cmd_xor_check(args):
    rng = np.random.default_rng(args.seed)
    worst = -np.inf
    for _ in range(args.triples):
        tj, tk = rng.uniform(0, np.pi, 2)
        phi = rng.uniform(0, 2 * np.pi)
        vhat, vj, vk = vectors_from_angles(tj, tk, phi)
        p = xor_probability(vj, vk, vhat)
        worst = max(worst, xor_lower_bound(vj @ vk) - p,
                    p - xor_upper_bound(vj @ vhat, vk @ vhat, vj @ vk))
    agree = 0
    for t in range(args.mc_triples):
        tj, tk = rng.uniform(0, np.pi, 2)
        vhat, vj, vk = vectors_from_angles(tj, tk, rng.uniform(0, 2 * np.pi))
        agree += monte_carlo_xor(vj, vk, vhat, args.samples, seed=args.seed * 1000 + t).agrees
    passed = worst <= 1e-9 and agree == args.mc_triples
    print(json.dumps({"triples": args.triples, "worst_bound_excess": worst,
                      "monte_carlo_agreeing": agree, "monte_carlo_triples": args.mc_triples,
                      "passed": passed}, indent=2))
    return EXIT_OK if passed else EXIT_VERIFY


def cmd_bench(args):
    config = _config(args)
    kinds = ("uniform-random", "log-uniform-weights")
    failures = unflagged = 0
    rows = []
    for i in range(args.count):
        n = 2 + i % (args.n_max - 1)
        game = generate(kinds[i % 2], {"n": n}, seed=args.seed * 100003 + i)
        started = time.perf_counter()
        report = build_report(game, config, solve(game, config))
        flagged = bool(report.flags and "unverified-probabilistic-budget" in report.flags)
        unflagged += not flagged
        ok = report.passed or flagged
        failures += not ok
        rows.append({"instance": i, "kind": kinds[i % 2], "n": n, "passed": report.passed,
                     "flagged": flagged, "worst_ratio": str(report.verdict["worst_ratio"]),
                     "seconds": round(time.perf_counter() - started, 4)})
    summary = {"count": args.count, "failures": failures, "unflagged": unflagged, "runs": rows}
    _write(args.out, json.dumps(summary, indent=1) + "\n")
    return EXIT_OK if failures == 0 else EXIT_VERIFY


def _add_solver_flags(p, seed):
    p.add_argument("--epsilon", type=float, default=0.25)
    p.add_argument("--seed", type=int, default=seed)
    p.add_argument("--initial", choices=("left", "random"), default="left")
    p.add_argument("--round-cap", type=int, default=DEFAULT_ROUND_CAP)
    p.add_argument("--uncapped-rounds", action="store_true")
    p.add_argument("--sdp-tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--z-threshold", type=float, default=1e-7,
                   help="SDP values at or below this fraction of min U_j count as non-positive")


def build_parser(seed=0):
    parser = argparse.ArgumentParser(prog="cutnash", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="compute an approximate equilibrium")
    p.add_argument("instance")
    _add_solver_flags(p, seed)
    p.add_argument("--trace", help="also write the per-phase move log here")
    p.add_argument("--out", help="report path (default: stdout)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="check a state against a factor")
    p.add_argument("instance")
    p.add_argument("state")
    p.add_argument("--factor", type=float)
    p.add_argument("--epsilon", type=float, default=0.25)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("gen", help="write a seeded instance")
    p.add_argument("kind", choices=sorted(GENERATORS))
    p.add_argument("param", nargs="*", help="key=value generator parameters, e.g. n=12")
    p.add_argument("--seed", type=int, default=seed)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("scan-lambda", help="grid-check the separation bound")
    p.add_argument("--step", type=float, default=0.01)
    p.add_argument("--rho", type=float, default=RHO)
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.add_argument("--out", help="CSV with one row per grid point")
    p.add_argument("--diagonal-out", help="CSV of the gap along theta_j = theta_k near pi")
    p.set_defaults(func=cmd_scan_lambda)

    p = sub.add_parser("xor-check", help="check separation probabilities and bounds")
    p.add_argument("--triples", type=int, default=200)
    p.add_argument("--mc-triples", type=int, default=20)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=seed)
    p.set_defaults(func=cmd_xor_check)

    p = sub.add_parser("bench", help="solve and verify a seeded random corpus")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--n-max", type=int, default=30)
    _add_solver_flags(p, seed)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    try:
        parser = build_parser(_default_seed())
    except InputError as exc:
        print(f"cutnash: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except (InputError, InstanceFormatError, GameError, OSError) as exc:
        print(f"cutnash: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SolverError, SdpError, RuntimeError) as exc:
        print(f"cutnash: solver failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
