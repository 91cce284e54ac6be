"""Command-line entry point: ``flattorus <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
import warnings
from typing import List, Optional, Sequence

from . import bounds, globopt, hexgrid, render, satgrid
from .core import load_partition, save_partition, verify_partition

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _positive(name):
    def parse(text):
        try:
            v = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be an integer, got {text!r}")
        if v < 1:
            raise argparse.ArgumentTypeError(f"{name} must be positive, got {v}")
        return v

    return parse


def _triple(text):
    parts = text.replace(",", " ").split()
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected three integers, got {text!r}")
    try:
        return tuple(int(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected three integers, got {text!r}")


def _write_partition(p, path, out):
    if path:
        save_partition(p, path)
        print(f"wrote {path}", file=out)
    else:
        from .core import dumps_partition

        out.write(dumps_partition(p) + "\n")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_bounds(args, out):
    ms = range(1, args.m_max + 1) if args.m is None else [args.m]
    recs = [bounds.best_bounds(m) for m in ms]
    print(bounds.bounds_csv(recs) if args.csv else bounds.bounds_table(recs), file=out)
    return EXIT_OK


def cmd_stripes(args, out):
    _write_partition(bounds.stripe_partition(args.m), args.output, out)
    return EXIT_OK


def _grid_spec(args):
    try:
        return satgrid.GridGraphSpec(args.s, args.k, args.m)
    except ValueError as exc:
        raise UsageError(str(exc))


def cmd_sat_cnf(args, out):
    spec = _grid_spec(args)
    path = args.output or f"grid_s{spec.s}_k{spec.k}_m{spec.m}.cnf"
    satgrid.write_cnf(spec, path, symmetry_breaking=args.symmetry_breaking)
    print(f"wrote {path}", file=out)
    return EXIT_OK


def cmd_sat_run(args, out):
    spec = _grid_spec(args)
    solver = satgrid.find_solver(args.solver)
    if solver is None:
        warnings.warn("no SAT solver found; writing the CNF only", stacklevel=1)
        print("warning: no SAT solver found; writing the CNF only", file=sys.stderr)
        args.output = args.cnf
        return cmd_sat_cnf(args, out)
    rec = satgrid.solve_spec(spec, solver, timeout=args.timeout, symmetry_breaking=args.symmetry_breaking)
    if rec is None:
        print(f"s={spec.s} k={spec.k} m={spec.m}: no verdict within the time limit", file=out)
        return EXIT_FAIL
    if rec.status == "unsat_certified":
        print(f"s={spec.s} k={spec.k} m={spec.m}: UNSAT, d_{spec.m} >= {satgrid.unsat_lower_bound(rec):.6f}"
              f" ({rec.wall_time:.1f} s)", file=out)
    else:
        print(f"s={spec.s} k={spec.k} m={spec.m}: SAT, pixel partition with max diameter {rec.partition_tau:.6f}"
              f" ({rec.wall_time:.1f} s)", file=out)
        if args.coloring:
            with open(args.coloring, "w", encoding="utf-8") as fh:
                fh.write(rec.coloring.to_text())
        if args.partition:
            save_partition(satgrid.coloring_to_partition(rec.coloring), args.partition)
    if args.results:
        satgrid.append_result(args.results, rec)
    return EXIT_OK


def cmd_sat_decode(args, out):
    spec = _grid_spec(args)
    with open(args.model, encoding="utf-8") as fh:
        text = fh.read()
    status, model = satgrid.parse_solver_output(text)
    if status == "UNKNOWN" and not model:
        # bare list of literals
        model = [int(t) for t in text.split() if t.lstrip("-").isdigit() and t != "0"]
    if status == "UNSAT":
        print("model file reports UNSAT; nothing to decode", file=out)
        return EXIT_FAIL
    try:
        coloring = satgrid.decode_coloring(model, spec)
    except (satgrid.IncompleteModel, satgrid.ImproperColoring) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    if args.coloring:
        with open(args.coloring, "w", encoding="utf-8") as fh:
            fh.write(coloring.to_text())
    _write_partition(satgrid.coloring_to_partition(coloring), args.output, out)
    return EXIT_OK


def cmd_hex(args, out):
    if (args.a is None) != (args.b is None):
        raise UsageError("--a and --b must be given together")
    try:
        if args.a is None and not args.search and args.m in hexgrid.KNOWN_TILINGS:
            # the box search has many mirror-image ties; prefer the published pair
            args.a, args.b = hexgrid.KNOWN_TILINGS[args.m]
        if args.a is not None:
            opt = hexgrid.minimize_hex(hexgrid.solve_hex_system(args.a, args.b, args.m))
        else:
            opt = hexgrid.search_hex(args.m, args.bound)
            if opt is None:
                print(f"no hexagonal tiling with coefficients in [-{args.bound}, {args.bound}]", file=out)
                return EXIT_FAIL
        part = hexgrid.hex_partition(opt)
    except (hexgrid.DegenerateSpec, hexgrid.InconsistentSpec, hexgrid.DegenerateHexagon) as exc:
        raise UsageError(str(exc))
    summary = {
        "m": opt.spec.m, "a": list(opt.spec.a), "b": list(opt.spec.b),
        "f_min": str(opt.f_min), "x_star": str(opt.x_star), "y_star": str(opt.y_star), "tau": opt.tau,
    }
    if args.output:
        save_partition(part, args.output)
        print(json.dumps(summary), file=out)
    else:
        from .core import partition_to_dict

        json.dump({"optimum": summary, "partition": partition_to_dict(part)}, out, indent=1)
        out.write("\n")
    return EXIT_OK


def cmd_optimize(args, out):
    if args.m < 5:
        raise UsageError("optimize needs m >= 5")
    cfg = globopt.OptimizerConfig(
        restarts=args.restarts, iterations=args.iters, seed=args.seed, step_size=args.lr,
        softmax_temperature=args.temperature,
    )
    start = time.perf_counter()
    try:
        res = globopt.optimize_detailed(args.m, cfg)
    except globopt.AllRestartsFailed as exc:
        print(f"flattorus: {exc}: no start kept every cell diameter below 1/2", file=sys.stderr)
        return EXIT_FAIL
    print(f"m={args.m}: best tau {res.best.phi:.6f} (restart {res.best.restart}) "
          f"in {time.perf_counter() - start:.1f} s", file=sys.stderr)
    if args.log:
        with open(args.log, "w", encoding="utf-8") as fh:
            fh.write("restart,step,phi\n")
            for r in res.restarts:
                for i, v in enumerate(r.history):
                    fh.write(f"{r.restart},{i},{v!r}\n")
    _write_partition(res.partition, args.output, out)
    return EXIT_OK


def cmd_verify(args, out):
    p = load_partition(args.file)
    rep = verify_partition(p, tau=args.tau, n=args.probes)
    print(rep.summary(), file=out)
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_render(args, out):
    p = load_partition(args.file)
    path = args.output or (args.file.rsplit(".", 1)[0] + ".svg")
    render.save_svg(p, path)
    print(f"wrote {path}", file=out)
    return EXIT_OK


def _method_of(p) -> str:
    head = (p.provenance or "").split(" ", 1)[0].lower()
    return head if head in bounds.METHODS else "partition"


def cmd_table(args, out):
    uppers = []
    for m in sorted(hexgrid.KNOWN_TILINGS):
        a, b = hexgrid.KNOWN_TILINGS[m]
        opt = hexgrid.minimize_hex(hexgrid.solve_hex_system(a, b, m))
        uppers.append(bounds.UpperRecord(m, opt.tau, "hex"))
    for path in args.partition or []:
        p = load_partition(path)
        uppers.append(bounds.UpperRecord(p.m, p.tau, _method_of(p)))
    sat = satgrid.reference_records()
    for path in args.results or []:
        sat.extend(satgrid.load_results(path))
    recs = [bounds.best_bounds(m, sat, uppers) for m in range(1, args.m_max + 1)]
    print(bounds.bounds_csv(recs) if args.csv else bounds.bounds_table(recs), file=out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="flattorus", description="Diameter-minimizing partitions of the flat torus.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    pos = _positive

    p = sub.add_parser("bounds", help="best known bounds for one m or a range")
    p.add_argument("--m", type=pos("m"))
    p.add_argument("--m-max", type=pos("m-max"), default=25)
    p.add_argument("--csv", action="store_true")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("stripes", help="m vertical stripes as partition JSON")
    p.add_argument("--m", type=pos("m"), required=True)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_stripes)

    def grid_args(p):
        p.add_argument("--s", type=pos("s"), required=True)
        p.add_argument("--k", type=pos("k"), required=True)
        p.add_argument("--m", type=pos("m"), required=True)

    p = sub.add_parser("sat-cnf", help="DIMACS CNF for coloring the grid graph")
    grid_args(p)
    p.add_argument("-o", "--output")
    p.add_argument("--symmetry-breaking", action="store_true", help="fix colors on a greedy clique")
    p.set_defaults(func=cmd_sat_cnf)

    p = sub.add_parser("sat-run", help="emit the CNF and run an external solver")
    grid_args(p)
    p.add_argument("--solver", help=f"solver executable (default: ${satgrid.SOLVER_ENV} or one on PATH)")
    p.add_argument("--timeout", type=float)
    p.add_argument("--symmetry-breaking", action="store_true")
    p.add_argument("--results", help="append the verdict to this CSV")
    p.add_argument("--coloring", help="write the decoded coloring here when SAT")
    p.add_argument("--partition", help="write the pixel partition JSON here when SAT")
    p.add_argument("--cnf", help="CNF path used when no solver is available")
    p.set_defaults(func=cmd_sat_run)

    p = sub.add_parser("sat-decode", help="turn a solver model into a coloring and partition")
    grid_args(p)
    p.add_argument("model")
    p.add_argument("-o", "--output")
    p.add_argument("--coloring")
    p.set_defaults(func=cmd_sat_decode)

    p = sub.add_parser("hex", help="optimal hexagonal tiling")
    p.add_argument("--m", type=pos("m"), required=True)
    p.add_argument("--a", type=_triple)
    p.add_argument("--b", type=_triple)
    p.add_argument("--bound", type=pos("bound"), default=5)
    p.add_argument("--search", action="store_true", help="search the coefficient box even for tabulated m")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_hex)

    p = sub.add_parser("optimize", help="Voronoi start plus descent on the max diameter")
    p.add_argument("--m", type=pos("m"), required=True)
    p.add_argument("--restarts", type=pos("restarts"), default=20)
    p.add_argument("--iters", type=pos("iters"), default=5000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--temperature", type=float, default=0.0)
    p.add_argument("--log", help="CSV of objective values per accepted step")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("verify", help="check a partition JSON")
    p.add_argument("file")
    p.add_argument("--tau", type=float)
    p.add_argument("--probes", type=pos("probes"), default=512)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("render", help="SVG picture of a partition JSON")
    p.add_argument("file")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("table", help="bounds table combining every available record")
    p.add_argument("--m-max", type=pos("m-max"), default=25)
    p.add_argument("--partition", action="append", help="partition JSON contributing an upper bound")
    p.add_argument("--results", action="append", help="SAT results CSV")
    p.add_argument("--csv", action="store_true")
    p.set_defaults(func=cmd_table)
    return ap


def main(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args, out)
    except UsageError as exc:
        print(f"flattorus: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as exc:
        print(f"flattorus: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def run(argv: List[str]) -> int:
    return main(argv)


if __name__ == "__main__":
    sys.exit(main())
