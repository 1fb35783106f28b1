"""Command-line entry point: ``dcgrid reduce|stability|simulate|sweep``.

Exit codes: 0 success, 2 invalid input, 3 numeric failure.
"""
import argparse
import csv
import io
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

from . import report
from .errors import InvalidInputError, NumericFailureError
from .scenario import read_scenario
from .sim import RK4, Exact

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


def _emit(text, path):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def cmd_reduce(args):
    sc = read_scenario(args.input)
    _emit(report.dumps(report.reduce_doc(sc)), args.out)


def _require(sc, *sections):
    for s in sections:
        if getattr(sc, s) is None:
            raise InvalidInputError(f"scenario has no '{s}' section")


def cmd_stability(args):
    sc = read_scenario(args.input)
    _require(sc, "primary")
    _emit(report.dumps(report.stability_doc(sc)), args.out)


def cmd_simulate(args):
    sc = read_scenario(args.input)
    _require(sc, "simulation")
    scenario = sc.simulation
    if args.method == "exact":
        scenario = replace(scenario, method=Exact())
    elif args.method == "rk4":
        dt = scenario.method.dt if isinstance(scenario.method, RK4) else None
        scenario = replace(scenario, method=RK4(dt))
    doc, traj = report.simulate_doc(sc, scenario)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            traj.write_csv(fh)
    _emit(report.dumps(doc), args.out)


def _parse_values(text):
    items = [v.strip() for v in text.split(",") if v.strip()]
    if not items:
        raise InvalidInputError("--values needs at least one number")
    try:
        return [float(v) for v in items]
    except ValueError as exc:
        raise InvalidInputError(f"--values: {exc}") from exc


def cmd_sweep(args):
    values = _parse_values(args.values)
    sc = read_scenario(args.input)
    _require(sc, "primary", "cooperative")

    def point(v):
        try:
            return report.sweep_point(sc, args.param, v)
        except (InvalidInputError, NumericFailureError) as exc:
            raise type(exc)(f"{args.param} = {v:g}: {exc}") from exc

    with ThreadPoolExecutor(max_workers=args.jobs) as pool:
        rows = list(pool.map(point, values))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["value", "verdict", "max_nonzero_real_part", "rc1"])
    for v, verdict, re_max, rc1 in rows:
        writer.writerow([format(v, ".9g"), verdict, format(re_max, ".9g"), format(rc1, ".9g")])
    _emit(buf.getvalue(), args.out)


def build_parser():
    parser = argparse.ArgumentParser(prog="dcgrid", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--in", dest="input", required=True, metavar="PATH", help="scenario JSON file")
        p.add_argument("--out", default=None, metavar="PATH", help="output file (default: stdout)")

    p = sub.add_parser("reduce", help="Kron-reduce the network to generator nodes")
    common(p)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("stability", help="semistability report for the cooperative loop")
    common(p)
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("simulate", help="time-domain simulation of the scenario phases")
    common(p)
    p.add_argument("--csv", default=None, metavar="PATH", help="write the sampled trajectory here")
    p.add_argument("--method", choices=["exact", "rk4"], default=None, help="override the integrator")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="stability and sharing ratio over one uniform parameter")
    common(p)
    p.add_argument("--param", required=True, choices=report.SWEEP_PARAMS)
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--jobs", type=int, default=4, help="parallel workers")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except InvalidInputError as exc:
        print(f"dcgrid {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericFailureError as exc:
        print(f"dcgrid {args.command}: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
