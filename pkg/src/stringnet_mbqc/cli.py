"""Command-line entry point.

Exit codes: 0 success or pass, 1 verification failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import re
import sys
import time

import numpy as np

from . import __version__
from .certify import certify
from .compiler import MODES, compile_circuit, parse_circuit, patch_for, precoupling_pairs, print_schedule
from .errors import StringNetError
from .harness import record_distribution, run_exhaustive, run_sampled, tvd, verify_against_ideal
from .lattice import build_patch
from .oracle import DEFAULT_QUBIT_CAP, energy, expectation, hamiltonian_terms
from .patterns import cz_couple, init_leg, path_step, readout, rot_x, rot_z
from .resource import apply_precoupling, enumerate_loops, ground_state, stabilizer_project
from .tensornet import contract_patch

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

PATTERNS = {
    "path_step": lambda th: path_step(),
    "rot_z": rot_z,
    "rot_x": rot_x,
    "cz_couple": lambda th: cz_couple(),
    "init_leg": lambda th: init_leg(),
    "readout": lambda th: readout(),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _patch_dims(text: str) -> tuple[int, int]:
    m = re.fullmatch(r"(\d+)x(\d+)", text.strip().lower())
    if not m or int(m[1]) < 1 or int(m[2]) < 1:
        raise argparse.ArgumentTypeError(f"patch must look like RxC with positive sizes, got {text!r}")
    return int(m[1]), int(m[2])


def _seed(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--patch", type=_patch_dims, help="wires x cells, e.g. 2x6")
    common.add_argument("--mode", choices=MODES, default="live")
    common.add_argument("--seed", type=_seed, default=0)
    common.add_argument("--cap", type=int, default=DEFAULT_QUBIT_CAP, help="dense qubit cap")
    common.add_argument("--out", help="write the JSON report here")
    common.add_argument("--json", action="store_true", help="print JSON instead of a summary")

    p = _Parser(prog="stringnet-mbqc", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("describe", parents=[common], help="patch geometry and Hamiltonian terms")
    sub.add_parser("resource", parents=[common], help="build the resource state three ways")
    c = sub.add_parser("compile", parents=[common], help="compile a circuit to a schedule")
    c.add_argument("--circuit", required=True)
    r = sub.add_parser("run", parents=[common], help="execute a schedule")
    r.add_argument("--circuit", required=True)
    r.add_argument("--shots", type=int, help="sample instead of enumerating")
    r.add_argument("--backend", choices=("tensor", "dense"), default="tensor")
    v = sub.add_parser("verify", parents=[common], help="exhaustive run against ideal simulation")
    v.add_argument("--circuit", required=True)
    v.add_argument("--shots", type=int, help="also compare a sampled run")
    v.add_argument("--backend", choices=("tensor", "dense"), default="tensor")
    i = sub.add_parser("inspect", parents=[common], help="show and certify a gate pattern")
    i.add_argument("--pattern", choices=sorted(PATTERNS), required=True)
    i.add_argument("--theta", type=float, default=0.0)
    i.add_argument("--certify", action="store_true")
    return p


def _load_circuit(args):
    try:
        with open(args.circuit) as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read circuit: {exc}") from None
    ir = parse_circuit(text)
    patch = build_patch(*args.patch) if args.patch else patch_for(ir, args.mode)
    return ir, patch


def _config(args) -> dict:
    out = {"command": args.command, "mode": args.mode, "seed": args.seed, "cap": args.cap}
    if args.patch:
        out["patch"] = f"{args.patch[0]}x{args.patch[1]}"
    return out


def cmd_describe(args):
    if not args.patch:
        raise UsageError("describe needs --patch")
    patch = build_patch(*args.patch)
    terms = hamiltonian_terms(patch)
    report = {**patch.to_json(), "cycle_rank": patch.cycle_rank(), "term_count": len(terms)}
    summary = (
        f"patch {args.patch[0]}x{args.patch[1]}: {len(patch.vertices)} vertices, "
        f"{len(patch.edges)} edges, {patch.qubit_count} qubits, cycle rank {patch.cycle_rank()}"
    )
    return report, summary, True


def cmd_resource(args):
    if not args.patch:
        raise UsageError("resource needs --patch")
    patch = build_patch(*args.patch)
    t0 = time.perf_counter()
    loops = ground_state(patch, cap=args.cap)
    proj = stabilizer_project(patch, cap=args.cap)
    contracted = contract_patch(patch, cap=args.cap)
    a = loops.state.canonical()
    agree = max(
        float(np.max(np.abs(a - proj.state.canonical()))),
        float(np.max(np.abs(a - contracted.canonical()))),
    )
    state = loops
    if args.mode == "precoupled":
        state = apply_precoupling(loops, precoupling_pairs(patch), patch)
    amps = state.state.amplitudes
    n = len(enumerate_loops(patch))
    nz = np.abs(amps) > 1e-12
    off_grid = float(np.max(np.abs(np.abs(amps[nz]) - 1 / np.sqrt(n)))) if nz.any() else 0.0
    terms = [expectation(state.state, t) for t in hamiltonian_terms(patch)]
    e = energy(loops.state, patch)
    ok = agree < 1e-10 and off_grid < 1e-12 and int(nz.sum()) == n
    report = {
        "qubit_count": patch.qubit_count,
        "cycle_rank": patch.cycle_rank(),
        "loop_count": n,
        "nonzero_amplitudes": int(nz.sum()),
        "construction_agreement": agree,
        "amplitude_grid_deviation": off_grid,
        "energy": e,
        "expected_energy": -float(len(terms)),
        "min_term_expectation": min(terms) if args.mode == "live" else None,
        "precoupling": [list(p) for p in getattr(state, "cz_pairs", ())],
        "seconds": time.perf_counter() - t0,
        "pass": ok,
    }
    summary = (
        f"{n} loop configurations on {patch.qubit_count} qubits; constructions agree to {agree:.2e}; "
        f"energy {e:.12f}"
    )
    return report, summary, ok


def cmd_compile(args):
    ir, patch = _load_circuit(args)
    schedule = compile_circuit(ir, patch, args.mode)
    report = schedule.to_json()
    return report, print_schedule(schedule).rstrip("\n"), True


def cmd_run(args):
    ir, patch = _load_circuit(args)
    schedule = compile_circuit(ir, patch, args.mode)
    if args.shots is not None:
        if args.shots < 1:
            raise UsageError("--shots must be at least 1")
        res = run_sampled(schedule, patch, seed=args.seed, shots=args.shots, backend=args.backend, cap=args.cap)
        dist = res.distribution()
        report = {**res.to_json(), "distribution": dist}
    else:
        records = run_exhaustive(schedule, patch, backend=args.backend, cap=args.cap)
        dist = record_distribution(records)
        report = {"branches": [r.to_json() for r in records], "distribution": dist}
    summary = "  ".join(f"{k}: {v:.6f}" for k, v in dist.items())
    return report, summary, True


def cmd_verify(args):
    ir, patch = _load_circuit(args)
    schedule = compile_circuit(ir, patch, args.mode)
    records = run_exhaustive(schedule, patch, backend=args.backend, cap=args.cap)
    report = verify_against_ideal(ir, records, args.mode)
    report["two_qubit_operations"] = schedule.two_qubit_count
    ok = report["pass"]
    if args.shots is not None:
        if args.shots < 1:
            raise UsageError("--shots must be at least 1")
        res = run_sampled(schedule, patch, seed=args.seed, shots=args.shots, backend=args.backend, cap=args.cap)
        sampled_tvd = tvd(res.distribution(), report["observed"])
        report["sampled"] = {**res.to_json(), "tvd_vs_exhaustive": sampled_tvd}
        ok = ok and sampled_tvd < 0.02
        report["pass"] = ok
    summary = f"{'PASS' if ok else 'FAIL'} tvd={report['tvd']:.3e} branches={report['branches']}"
    return report, summary, ok


def cmd_inspect(args):
    pattern = PATTERNS[args.pattern](args.theta)
    report = {"pattern": pattern.to_json()}
    ok = True
    summary = json.dumps(pattern.to_json(), sort_keys=True)
    if args.certify:
        cert = certify(pattern).to_json()
        report["certification"] = cert
        ok = cert["pass"]
        summary += (
            f"\n{'PASS' if ok else 'FAIL'} {cert['branches']} branches, "
            f"max deviation {cert['max_deviation']:.2e}"
        )
    return report, summary, ok


COMMANDS = {
    "describe": cmd_describe,
    "resource": cmd_resource,
    "compile": cmd_compile,
    "run": cmd_run,
    "verify": cmd_verify,
    "inspect": cmd_inspect,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        report, summary, ok = COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except StringNetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report = {"config": _config(args), **report}
    text = json.dumps(report, indent=2, sort_keys=True, default=str)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    print(text if args.json else summary)
    return EXIT_OK if ok else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
