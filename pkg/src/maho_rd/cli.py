"""Command-line front end: ``maho-rd {verify,sumrate,region,mi-check}``.

Exit status is 0 when every check passes, 1 when a check fails and 2 for
invalid input (bad spec file, illegal distortion, unreachable budget or a
method that does not apply to the source).
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import sys

import numpy as np

from . import audits
from . import mi_condition as mi
from . import oracle as orc
from . import rate_region as rr
from . import recursions as rc
from . import sum_rate as sr
from .source_model import RateAllocation, SpecError, check_distortion, load_spec

SCHEMA = "maho-rd/1"
EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
METHODS = ("parametric", "numeric", "oracle", "all")

REGION_HELP = """\
CSV columns (one row per allocation, ordering and bound kind):
  alloc_id   index of the boundary allocation on the grid
  kind       outer (J-map) or inner (K-map)
  pi         helper ordering pi(1)-..-pi(L), 1-based
  r_0        primary auxiliary rate; the row's R_0 must be at least this
  r_1..r_L   helper auxiliary rates of the allocation
  R_1..R_L   corner point of the polytope for this ordering
  sum        R_1 + .. + R_L
Slice mode (--slice i,j) keeps only orderings that end with i and j, so
those two helpers get their smallest rates while the rest absorb the
remainder; the resulting (R_i, R_j) pairs trace the tradeoff curve.
Floats are printed with 12 significant digits."""


class InputError(Exception):
    pass


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".12g")
    return str(v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _header(args, spec, d) -> dict:
    return {"schema": SCHEMA, "command": args.command, "seed": args.seed,
            "spec": spec.to_dict(), "d": d, "r0": args.r0}


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


# -- commands ---------------------------------------------------------------

def cmd_verify(args, spec, d):
    rng = np.random.default_rng(args.seed)
    checks = audits.run_battery(spec, d, rng, args.samples)
    ok = all(c.passed for c in checks)
    report = {**_header(args, spec, d), "samples": args.samples, "passed": ok,
              "checks": [c.to_dict() for c in checks]}
    rows = [(c.name, c.passed, c.worst, c.tol, c.count) for c in checks]
    text = _csv_text(["name", "passed", "worst_slack", "tol", "count"], rows)
    return report, text, EXIT_OK if ok else EXIT_FAIL


def _run_method(name, spec, d, r0, grid):
    if name == "parametric":
        return sr.parametric_sum_rate(spec, d, r0)
    if name == "numeric":
        return sr.numeric_sum_rate(spec, d, r0)
    if name == "oracle":
        return orc.grid_sum_rate(spec, d, r0, orc.GridSpec(points=grid))
    raise InputError(f"unknown method {name!r}")


def cmd_sumrate(args, spec, d):
    r0 = args.r0
    sr.boundary_target(spec, d, r0)  # raises when the budget is unreachable
    names = ["parametric", "numeric", "oracle"] if args.method == "all" else [args.method]
    results, skipped = {}, {}
    for name in names:
        try:
            results[name] = _run_method(name, spec, d, r0, args.grid)
        except (sr.CondZError, sr.OmegaRangeError, ValueError) as exc:
            if args.method != "all":
                raise InputError(str(exc)) from exc
            skipped[name] = str(exc)
    report = _header(args, spec, d)
    if args.method != "all":
        report.update(results[args.method].to_dict())
    else:
        report["results"] = {k: v.to_dict() for k, v in results.items()}
        report["skipped"] = skipped
        report["deltas"] = {f"{a}-{b}": results[a].value - results[b].value
                            for a, b in itertools.combinations(results, 2)}
    big_l = spec.big_l
    header = ["method", "value_nats", "value_bits", "omega", "residual"] + [f"r_{i}" for i in range(1, big_l + 1)]
    rows = []
    for name, res in results.items():
        omega = "" if res.omega is None else res.omega
        rows.append([name, res.value, res.value / math.log(2.0), omega, res.residual, *res.minimizer_r])
    return report, _csv_text(header, rows), EXIT_OK


def _parse_slice(text, big_l):
    if text is None:
        return None
    try:
        i, j = (int(v) for v in text.split(","))
    except ValueError:
        raise InputError(f"--slice expects two helper indices like 1,2, got {text!r}") from None
    if i == j or not (1 <= i <= big_l and 1 <= j <= big_l):
        raise InputError(f"--slice indices must be distinct and within 1..{big_l}")
    return i, j


def region_rows(spec, d, points, upper, pair=None):
    """Vertex rows for a grid of boundary allocations.

    Grid points whose boundary primary rate clamps at zero are interior and
    are skipped.
    """
    big_l = spec.big_l
    if big_l > rr.MAX_TABLE_L:
        raise InputError(f"region tables limited to L <= {rr.MAX_TABLE_L}")
    axis = np.linspace(0.0, upper, points)
    rows, alloc_id = [], 0
    for pt in itertools.product(axis, repeat=big_l):
        r = np.array(pt)
        alloc = RateAllocation(rc.boundary_r0(spec, d, r), r)
        if rc.classify(spec, d, alloc).region != rc.Region.BOUNDARY:
            continue
        for kind in ("outer", "inner"):
            table = rr.subset_rates(spec, d, alloc, kind)
            for pi, v in rr.all_vertices(spec, table):
                if pair is not None and set(pi[-2:]) != set(pair):
                    continue
                rows.append([alloc_id, kind, "-".join(map(str, pi)), alloc.r0, *r, *v, float(v.sum())])
        alloc_id += 1
    return rows


def cmd_region(args, spec, d):
    big_l = spec.big_l
    pair = _parse_slice(args.slice, big_l)
    rows = region_rows(spec, d, args.grid, args.upper, pair)
    header = (["alloc_id", "kind", "pi", "r_0"] + [f"r_{i}" for i in range(1, big_l + 1)]
              + [f"R_{i}" for i in range(1, big_l + 1)] + ["sum"])
    report = {**_header(args, spec, d), "columns": header,
              "rows": [dict(zip(header, row)) for row in rows]}
    return report, _csv_text(header, rows), EXIT_OK


def cmd_mi_check(args, spec, d):
    rep = mi.mi_report(spec, d if args.probe else None)
    report = {**_header(args, spec, d), **rep.to_dict()}
    rows = [[l, v, v <= 1.0] for l, v in enumerate(rep.prop1_lhs, start=1)]
    text = _csv_text(["l", "lhs", "holds"], rows)
    # the inequality is sufficient, so a passing inequality with a failing probe is a defect
    broken = rep.prop1_holds and rep.numeric_holds is False
    return report, text, EXIT_FAIL if broken else EXIT_OK


COMMANDS = {"verify": cmd_verify, "sumrate": cmd_sumrate, "region": cmd_region,
            "mi-check": cmd_mi_check}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spec", required=True, help="JSON source description")
    common.add_argument("--d", type=float, default=None,
                        help="distortion budget, 0 < d <= sigma_x0_sq")
    common.add_argument("--r0", type=float, default=0.0, help="primary rate budget in nats")
    common.add_argument("--seed", type=int, default=0, help="seed for sampled audits")
    common.add_argument("--out", default=None, help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    p = argparse.ArgumentParser(prog="maho-rd", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    v = sub.add_parser("verify", parents=[common], help="run the sampled invariant battery")
    v.add_argument("--samples", type=int, default=50)
    s = sub.add_parser("sumrate", parents=[common], help="optimal helper sum rate")
    s.add_argument("--method", choices=METHODS, default="numeric")
    s.add_argument("--grid", type=int, default=13, help="oracle grid points per axis")
    g = sub.add_parser("region", parents=[common], help="vertex table of boundary allocations",
                       epilog=REGION_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    g.add_argument("--grid", type=int, default=3, help="grid points per helper axis")
    g.add_argument("--upper", type=float, default=1.0, help="largest helper rate on the grid")
    g.add_argument("--slice", default=None, metavar="I,J", help="keep orderings ending in I and J")
    m = sub.add_parser("mi-check", parents=[common], help="matching-condition report")
    m.add_argument("--probe", action="store_true", help="also run the numeric probe at --d")
    return p


def _validate_args(args):
    if not math.isfinite(args.r0) or args.r0 < 0:
        raise InputError("--r0 must be finite and nonnegative")
    for name in ("samples", "grid"):
        if getattr(args, name, 2) < (2 if name == "grid" else 1):
            raise InputError(f"--{name} too small")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _validate_args(args)
        spec = load_spec(args.spec)
        d = args.d
        if d is None and args.command != "verify":
            d = spec.sigma_x0_sq
        if d is not None:
            d = check_distortion(spec, d)
        report, text, status = COMMANDS[args.command](args, spec, d)
    except (InputError, SpecError, OSError, sr.InfeasibleBudgetError) as exc:
        print(f"maho-rd: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.format == "json":
        text = json.dumps(_jsonable(report), indent=2) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
