"""Command-line front end.

Exit codes: 0 success, 2 domain or usage error, 3 non-convergence,
4 validation failure (selftest, or a compare residual above ``--tol``).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import kernels
from .errors import DomainError, NonConvergence
from .geometry import BallPoint, KernelParams, random_ball_points
from .hypergeom import EvalResult, SeriesConfig
from .oracle import QuadratureSpec, szego_quadrature

EXIT_OK, EXIT_DOMAIN, EXIT_NONCONV, EXIT_VALIDATION = 0, 2, 3, 4

SZEGO_REPS = ("auto", "x9", "finite-sum", "radial-f1", "diagonal")
ORACLE_REPS = ("quadrature", "quadrature-mc")
BERGMAN_REPS = ("bergman-zonal", "bergman-triple")
ALL_REPS = SZEGO_REPS + ORACLE_REPS + BERGMAN_REPS

CSV_HEADER = ("x", "y", "value", "rep", "terms_used", "tail_estimate", "wall_time")


class UsageError(Exception):
    pass


@dataclass
class ResultRow:
    x: tuple
    y: tuple
    value: float
    rep: str
    terms_used: int
    tail_estimate: float
    wall_time: float | None
    converged: bool = True
    extra: dict = field(default_factory=dict)

    def csv_fields(self):
        def coords(c):
            return ",".join(repr(float(v)) for v in c)

        wall = "" if self.wall_time is None else f"{self.wall_time:.6f}"
        return (coords(self.x), coords(self.y), repr(float(self.value)), self.rep,
                str(self.terms_used), repr(float(self.tail_estimate)), wall)

    def json_obj(self):
        out = {"x": list(self.x), "y": list(self.y), "value": self.value, "rep": self.rep,
               "terms_used": self.terms_used, "tail_estimate": self.tail_estimate,
               "converged": self.converged, "wall_time": self.wall_time}
        out.update(self.extra)
        return out


@dataclass
class Request:
    command: str
    params: KernelParams
    rep: str
    cfg: SeriesConfig
    spec: QuadratureSpec
    output: str
    timing: bool
    im_override: float | None
    points: list = field(default_factory=list)

    def json_obj(self):
        return {"command": self.command, "n": self.params.n, "s": self.params.s,
                "rep": self.rep, "cfg": asdict(self.cfg), "quadrature": asdict(self.spec),
                "im_override": self.im_override,
                "points": [[list(x.coords), list(y.coords)] for x, y in self.points]}


# --------------------------------------------------------------------------
# argument handling


def _parse_point(text: str, n: int) -> BallPoint:
    try:
        coords = [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"cannot parse point {text!r}; use comma-separated numbers")
    if len(coords) != n:
        raise UsageError(f"point {text!r} has {len(coords)} coordinates but --dim is {n}")
    return BallPoint.of(coords)


def _parse_range(text: str) -> list[float]:
    """``start:stop:step`` with ``stop`` included (to rounding)."""
    try:
        start, stop, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise UsageError(f"cannot parse range {text!r}; use start:stop:step")
    if step <= 0 or stop < start:
        raise UsageError(f"range {text!r} needs step > 0 and stop >= start")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(count)]


def _parse_reps(text: str) -> list[str]:
    reps = [r.strip() for r in text.split(",") if r.strip()]
    for r in reps:
        if r not in ALL_REPS:
            raise UsageError(f"unknown representation {r!r}; choose from {', '.join(ALL_REPS)}")
    return reps


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--dim", type=int, default=3, help="dimension n >= 3")
    common.add_argument("--s", type=float, default=0.0, help="Bergman weight s > -1")
    common.add_argument("--rep", default=None, help=f"representation: {', '.join(ALL_REPS)}")
    common.add_argument("--tol", type=float, default=None,
                        help="series rel_tol (compare: residual threshold, default 1e-6)")
    common.add_argument("--max-terms", type=int, default=1000)
    common.add_argument("--nodes", type=int, default=128, help="quadrature nodes per direction")
    common.add_argument("--mc-samples", type=int, default=10 ** 6)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--im-override", type=float, default=None,
                        help="use the constant I_m(s) = value (1 gives the Hardy kernel)")
    common.add_argument("--output", choices=("csv", "json"), default="csv")
    common.add_argument("--no-timing", action="store_true", help="leave wall_time empty")

    parser = argparse.ArgumentParser(prog="hharmonic",
                                     description="H-harmonic Szegő and Bergman kernels on the unit ball.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", parents=[common], help="kernel at one pair of points")
    p.add_argument("--x", required=True)
    p.add_argument("--y")
    p.add_argument("--lambda", dest="lam", type=float, help="use y = lambda x")

    p = sub.add_parser("diag", parents=[common], help="K_h(x, x) along a radius")
    p.add_argument("--radii", default="0.0:0.9:0.1")

    p = sub.add_parser("table", parents=[common], help="kernel on a radius grid")
    p.add_argument("--radii", default="0.0:0.8:0.2")
    p.add_argument("--angles", default=None,
                   help="start:stop:step in radians; gives a radius x angle grid")

    p = sub.add_parser("compare", parents=[common], help="several representations side by side")
    p.add_argument("--reps", required=True, help="comma-separated list, at least two")
    p.add_argument("--x")
    p.add_argument("--y")
    p.add_argument("--pairs", type=int, default=20, help="seeded random pairs when --x/--y absent")
    p.add_argument("--radius", type=float, default=0.5)

    p = sub.add_parser("bergman", parents=[common], help="weighted Bergman kernel and its I_m table")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)

    p = sub.add_parser("bench", parents=[common], help="wall time and accuracy per representation")
    p.add_argument("--reps", default="x9,finite-sum,quadrature")
    p.add_argument("--pairs", type=int, default=10)
    p.add_argument("--radius", type=float, default=0.5)

    sub.add_parser("selftest", parents=[common], help="run the invariant suite")
    return parser


def _request(args) -> Request:
    params = KernelParams(args.dim, args.s)
    rel_tol = args.tol if (args.tol is not None and args.command != "compare") else 1e-14
    cfg = SeriesConfig(rel_tol=rel_tol, max_terms=args.max_terms)
    spec = QuadratureSpec(nodes_radial=args.nodes, nodes_angular=args.nodes,
                          mc_samples=args.mc_samples, seed=args.seed)
    if args.im_override is not None and not args.im_override > 0:
        raise DomainError("--im-override must be positive")
    return Request(args.command, params, args.rep or "auto", cfg, spec, args.output,
                   not args.no_timing, args.im_override)


# --------------------------------------------------------------------------
# evaluation


def evaluate(rep: str, x: BallPoint, y: BallPoint, req: Request):
    """Returns ``(label, EvalResult, extra)``; ``extra`` carries the I_m table for Bergman reps."""
    params = req.params
    if rep in SZEGO_REPS:
        label, res = kernels.szego_labelled(x, y, params, req.cfg, rep)
        return label, res, {}
    if rep == "quadrature":
        q = szego_quadrature(x, y, params.n, req.spec)
        return rep, EvalResult(q.value, q.evaluations, 0.0, True), {}
    if rep == "quadrature-mc":
        spec = QuadratureSpec("monte-carlo", req.spec.nodes_radial, req.spec.nodes_angular,
                              req.spec.mc_samples, req.spec.seed)
        q = szego_quadrature(x, y, params.n, spec)
        return rep, EvalResult(q.value, q.evaluations, q.stderr, True), {"stderr": q.stderr}
    if rep in BERGMAN_REPS:
        im = None
        if req.im_override is not None:
            im = kernels.ImTable.constant(params.n, params.s, 24, req.im_override)
        res, im = kernels.bergman(x, y, params, rep.split("-")[1], im, req.spec, req.cfg)
        return rep, res, {"im_table": list(im.values)}
    raise UsageError(f"unknown representation {rep!r}")


def _timed(rep, x, y, req):
    t0 = time.perf_counter()
    label, res, extra = evaluate(rep, x, y, req)
    wall = time.perf_counter() - t0 if req.timing else None
    return ResultRow(x.coords, y.coords, res.value, label, res.terms_used,
                     res.tail_estimate, wall, res.converged, extra)


def _error_obj(exc, x=None, y=None, rep=None):
    obj = {"type": type(exc).__name__, "message": str(exc)}
    if x is not None:
        obj.update(x=list(x.coords), y=list(y.coords), rep=rep)
    if isinstance(exc, NonConvergence):
        if exc.result is not None:
            obj.update(partial_value=exc.result.value, terms_used=exc.result.terms_used,
                       tail_estimate=exc.result.tail_estimate)
        if exc.required_depth is not None:
            obj["required_depth"] = exc.required_depth
    return obj


def _json_safe(obj):
    """Replace non-finite floats (not valid JSON) by the strings "inf", "-inf", "nan"."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return "nan" if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def _dump(obj, out):
    json.dump(_json_safe(obj), out, indent=2, sort_keys=True, allow_nan=False)
    out.write("\n")


class Session:
    """Collects rows and errors for one command and decides the exit code."""

    def __init__(self, req: Request):
        self.req = req
        self.rows: list[ResultRow] = []
        self.errors: list[dict] = []
        self.code = EXIT_OK

    def run(self, rep, x, y):
        try:
            row = _timed(rep, x, y, self.req)
        except NonConvergence as exc:
            self.errors.append(_error_obj(exc, x, y, rep))
            self.code = max(self.code, EXIT_NONCONV)
            return None
        except DomainError as exc:
            self.errors.append(_error_obj(exc, x, y, rep))
            self.code = max(self.code, EXIT_DOMAIN)
            return None
        self.rows.append(row)
        return row

    def emit(self, out):
        if self.req.output == "json":
            _dump({"request": self.req.json_obj(),
                   "rows": [r.json_obj() for r in self.rows],
                   "errors": self.errors}, out)
            return
        w = csv.writer(out, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.rows:
            w.writerow(r.csv_fields())
        for e in self.errors:
            print(f"error: {e['type']}: {e['message']}", file=sys.stderr)
            if "terms_used" in e:
                print(f"  terms_used={e['terms_used']} partial_value={e['partial_value']!r} "
                      f"tail_estimate={e['tail_estimate']!r}", file=sys.stderr)


# --------------------------------------------------------------------------
# commands


def cmd_eval(args, req: Request, session: Session):
    n = req.params.n
    x = _parse_point(args.x, n)
    if args.lam is not None:
        if args.y is not None:
            raise UsageError("give either --y or --lambda, not both")
        y = x.scaled(args.lam)
    elif args.y is not None:
        y = _parse_point(args.y, n)
    else:
        raise UsageError("eval needs --y or --lambda")
    req.points = [(x, y)]
    session.run(req.rep, x, y)


def cmd_diag(args, req: Request, session: Session):
    n = req.params.n
    rep = req.rep if args.rep else "diagonal"
    for r in _parse_range(args.radii):
        x = BallPoint.of([r] + [0.0] * (n - 1))
        req.points.append((x, x))
        session.run(rep, x, x)


def cmd_table(args, req: Request, session: Session):
    n = req.params.n
    radii = _parse_range(args.radii)
    if args.angles is None:
        grid = [(r1, r2, 0.0) for r1 in radii for r2 in radii]
    else:
        grid = [(r, r, a) for r in radii for a in _parse_range(args.angles)]
    for r1, r2, a in grid:
        x = BallPoint.of([r1] + [0.0] * (n - 1))
        y = BallPoint.of([r2 * math.cos(a), r2 * math.sin(a)] + [0.0] * (n - 2))
        req.points.append((x, y))
        session.run(req.rep, x, y)


def _pairs(args, req: Request):
    n = req.params.n
    x, y = getattr(args, "x", None), getattr(args, "y", None)
    if x is not None or y is not None:
        if x is None or y is None:
            raise UsageError("give both --x and --y, or neither")
        return [(_parse_point(x, n), _parse_point(y, n))]
    if args.pairs < 1:
        raise UsageError("--pairs must be positive")
    rng = np.random.default_rng(args.seed)
    xs = random_ball_points(rng, n, args.pairs, args.radius)
    ys = random_ball_points(rng, n, args.pairs, args.radius)
    return list(zip(xs, ys))


def cmd_compare(args, req: Request, session: Session):
    reps = _parse_reps(args.reps)
    if len(reps) < 2:
        raise UsageError("compare needs at least two representations")
    tol = 1e-6 if args.tol is None else args.tol
    req.points = _pairs(args, req)
    worst = 0.0
    for x, y in req.points:
        values = [row.value for rep in reps if (row := session.run(rep, x, y)) is not None]
        if len(values) < 2:
            continue
        resid = max(abs(a - b) / max(abs(a), abs(b)) for i, a in enumerate(values)
                    for b in values[i + 1:])
        worst = max(worst, resid)
        session.rows.append(ResultRow(x.coords, y.coords, resid, "max-rel-residual", len(values),
                                      0.0, None if not req.timing else 0.0))
    if worst > tol and session.code == EXIT_OK:
        session.errors.append({"type": "ResidualExceeded",
                               "message": f"max relative residual {worst:.3g} exceeds tol {tol:.3g}"})
        session.code = EXIT_VALIDATION


def cmd_bergman(args, req: Request, session: Session):
    n = req.params.n
    rep = req.rep if args.rep else "bergman-zonal"
    if rep not in BERGMAN_REPS:
        raise UsageError(f"bergman takes --rep {' or '.join(BERGMAN_REPS)}")
    x, y = _parse_point(args.x, n), _parse_point(args.y, n)
    req.points = [(x, y)]
    row = session.run(rep, x, y)
    if row is None:
        return
    table = row.extra.pop("im_table")
    if req.output == "json":
        row.extra["im_table"] = table
        return
    for m, v in enumerate(table):
        session.rows.append(ResultRow((float(m),), (), v, "im-table", m, 0.0, None))


def cmd_bench(args, req: Request, session: Session):
    reps = _parse_reps(args.reps)
    req.points = _pairs(args, req)
    fine = QuadratureSpec(nodes_radial=2 * req.spec.nodes_radial,
                          nodes_angular=2 * req.spec.nodes_angular)
    refs = [szego_quadrature(x, y, req.params.n, fine).value for x, y in req.points]
    quiet = Session(req)
    for rep in reps:
        t0 = time.perf_counter()
        rows = [quiet.run(rep, x, y) for x, y in req.points]
        wall = (time.perf_counter() - t0) / len(req.points)
        ok = [(r, ref) for r, ref in zip(rows, refs) if r is not None]
        if not ok:
            continue
        err = max(abs(r.value - ref) / abs(ref) for r, ref in ok)
        session.rows.append(ResultRow((), (), err, rep, max(r.terms_used for r, _ in ok),
                                      max(r.tail_estimate for r, _ in ok),
                                      wall if req.timing else None,
                                      extra={"metric": "max relative deviation from fine quadrature"}))
    session.errors.extend(quiet.errors)
    session.code = max(session.code, quiet.code)


def cmd_selftest(args, req: Request, out) -> int:
    from .selftest import run_selftest

    report = run_selftest(args.seed)
    failed = [f for f in report if f["passed"] < f["total"]]
    if req.output == "json":
        _dump({"request": req.json_obj(), "rows": report,
               "errors": [{"type": "InvariantFailure", "message": f["family"]} for f in failed]}, out)
    else:
        for f in report:
            mark = "PASS" if f["passed"] == f["total"] else "FAIL"
            out.write(f"{mark} {f['family']}: {f['passed']}/{f['total']}  {f['detail']}\n")
        out.write(f"{len(report) - len(failed)}/{len(report)} families passed\n")
    return EXIT_VALIDATION if failed else EXIT_OK


COMMANDS = {"eval": cmd_eval, "diag": cmd_diag, "table": cmd_table, "compare": cmd_compare,
            "bergman": cmd_bergman, "bench": cmd_bench}


_POINT_FLAGS = ("--x", "--y")


def _attach_negative_points(argv):
    """Turn ``--y -0.9,0,0`` into ``--y=-0.9,0,0`` so argparse keeps the value."""
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else None
        if tok in _POINT_FLAGS and nxt is not None and nxt[:1] == "-" and nxt[1:2] in "0123456789.":
            out.append(f"{tok}={nxt}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    argv = _attach_negative_points(list(sys.argv[1:] if argv is None else argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        req = _request(args)
        if args.rep is not None and args.rep not in ALL_REPS:
            raise UsageError(f"unknown representation {args.rep!r}")
        if args.command == "selftest":
            return cmd_selftest(args, req, out)
        session = Session(req)
        COMMANDS[args.command](args, req, session)
    except (UsageError, DomainError) as exc:
        if getattr(args, "output", "csv") == "json":
            _dump({"request": {"command": args.command}, "rows": [],
                   "errors": [_error_obj(exc)]}, out)
        else:
            print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    session.emit(out)
    return session.code


def run(argv) -> tuple[int, str]:
    """Run the CLI in-process and capture stdout (used by the tests)."""
    buf = io.StringIO()
    code = main(argv, buf)
    return code, buf.getvalue()


if __name__ == "__main__":
    sys.exit(main())
