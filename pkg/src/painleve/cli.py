"""Batch driver: verify / degenerate / integrate subcommands.

Exit codes: 0 all checks pass, 1 at least one verification failed,
2 usage or catalog errors.  JSON output is deterministic (sorted keys,
no timestamps) and identical between serial and parallel runs.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor

from . import catalog as catmod
from . import degeneration, hamilton, lincheck, matrixlab, numint
from .algebra import RationalExpr
from .catalog import CatalogError, UnknownId

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


def _load(args):
    path = args.catalog or catmod.default_path()
    return catmod.load(path)


def _emit(args, payload, text_lines):
    if args.format == "json":
        print(json.dumps(payload, sort_keys=True, indent=2))
    else:
        for line in text_lines:
            print(line)


def _run_jobs(jobs, parallel):
    """Run label -> callable pairs, preserving order of submission."""
    if parallel and parallel > 1:
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            futures = [(label, pool.submit(fn)) for label, fn in jobs]
            return [(label, fut.result()) for label, fut in futures]
    return [(label, fn()) for label, fn in jobs]


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def _verify_family(cat, fid):
    fam = cat.families[fid]
    entry = {"id": fid, "kind": "family", "checks": {}}
    ok = True
    reports = lincheck.canonical_compat(fam)
    if not isinstance(reports, list):
        reports = [reports]
    entry["checks"]["compat"] = [r.to_json() for r in reports]
    ok &= all(r.ok for r in reports)
    _, fam0 = fam.sigma_variants()[0]
    sig = lincheck.signature(fam0.p, fam0.q, apparent_at=RationalExpr.var("y"),
                             H=fam0.H)
    entry["checks"]["signature"] = sig.to_json()
    ok &= sig.apparent_ok
    elim = hamilton.verify_elimination(fam, cat.odes)
    entry["checks"]["elimination"] = [
        {"descr": e.descr, "pass": e.ok} for e in elim]
    ok &= all(e.ok for e in elim)
    entry["pass"] = ok
    return entry


def _verify_sl(cat, sid):
    fam = cat.sl[sid]
    entry = {"id": sid, "kind": "sl", "checks": {}}
    reports = lincheck.sl_compat(fam)
    if not isinstance(reports, list):
        reports = [reports]
    entry["checks"]["compat"] = [r.to_json() for r in reports]
    entry["pass"] = all(r.ok for r in reports)
    return entry


def _verify_matrix(cat, mid):
    system = cat.matrices[mid]
    entry = {"id": mid, "kind": "matrix", "checks": {}}
    ok = True
    if system.flow:
        residual = matrixlab.zero_curvature_system(system)
        zc = residual.is_zero()
        entry["checks"]["zero_curvature"] = zc
        ok &= zc
    sig = lincheck.matrix_signature(system)
    entry["checks"]["signature"] = sig.to_json()
    entry["pass"] = ok
    return entry


def command_verify(args):
    try:
        cat = _load(args)
    except (CatalogError, OSError) as exc:
        print("catalog error: %s" % exc, file=sys.stderr)
        return EXIT_USAGE
    known = (list(cat.list("family")) + list(cat.list("sl"))
             + list(cat.list("matrix")))
    if args.ids and not args.all:
        selected = args.ids
        unknown = [i for i in selected if i not in known]
        if unknown:
            print("unknown id(s): %s" % ", ".join(unknown), file=sys.stderr)
            return EXIT_USAGE
    else:
        selected = known
    jobs = []
    for i in selected:
        if i in cat.families:
            jobs.append((i, lambda i=i: _verify_family(cat, i)))
        elif i in cat.sl:
            jobs.append((i, lambda i=i: _verify_sl(cat, i)))
        else:
            jobs.append((i, lambda i=i: _verify_matrix(cat, i)))
    results = _run_jobs(jobs, args.parallel)
    entries = [entry for _, entry in results]
    all_pass = all(e["pass"] for e in entries)
    lines = []
    for e in entries:
        sig = e["checks"].get("signature", {})
        label = "".join("(%s)" % o for _, o in sig.get("signature", []))
        lines.append("%-4s %-10s %s %s" % ("PASS" if e["pass"] else "FAIL",
                                           e["id"], e["kind"], label))
    lines.append("verify: %d/%d entries pass" %
                 (sum(e["pass"] for e in entries), len(entries)))
    _emit(args, {"command": "verify", "entries": entries, "pass": all_pass},
          lines)
    return EXIT_OK if all_pass else EXIT_FAIL


# ---------------------------------------------------------------------------
# degenerate
# ---------------------------------------------------------------------------

def command_degenerate(args):
    try:
        cat = _load(args)
    except (CatalogError, OSError) as exc:
        print("catalog error: %s" % exc, file=sys.stderr)
        return EXIT_USAGE
    known = list(cat.list("rule"))
    if args.ids and not args.all:
        selected = args.ids
        unknown = [i for i in selected if i not in known]
        if unknown:
            print("unknown rule(s): %s" % ", ".join(unknown), file=sys.stderr)
            return EXIT_USAGE
    else:
        selected = known

    def run(rid):
        rule = cat.rules[rid]
        reports = degeneration.apply_rule(cat, rule, check=False)
        if not isinstance(reports, list):
            reports = [reports]
        entry = {"id": rid, "reports": [r.to_json() for r in reports],
                 "pass": all(r.ok for r in reports)}
        if args.probe:
            probe = numint.limit_probe(cat, rule)
            entry["probe"] = {
                "slope": ("inf" if probe["slope"] == float("inf")
                          else round(probe["slope"], 4)),
                "claimed": ("exact" if probe["claimed"] is None
                            else probe["claimed"]),
                "pass": probe["pass"],
            }
            entry["pass"] = entry["pass"] and probe["pass"]
        return entry

    results = _run_jobs([(i, lambda i=i: run(i)) for i in selected],
                        args.parallel)
    entries = [entry for _, entry in results]
    payload = {"command": "degenerate", "entries": entries}
    lines = []
    for e in entries:
        note = ""
        if "probe" in e:
            note = " slope=%s (claimed %s)" % (e["probe"]["slope"],
                                               e["probe"]["claimed"])
        lines.append("%-4s %-20s%s" % ("PASS" if e["pass"] else "FAIL",
                                       e["id"], note))
    all_pass = all(e["pass"] for e in entries)
    if args.all:
        try:
            closure = degeneration.diagram_closure(cat)
            payload["closure"] = closure.to_json()
            lines.append("closure: %d types, all arrows covered"
                         % len(closure.types))
        except degeneration.DegenerationError as exc:
            payload["closure"] = {"pass": False, "error": str(exc)}
            lines.append("closure: FAIL (%s)" % exc)
            all_pass = False
    if args.emit_dot:
        closure = degeneration.diagram_closure(cat)
        dot = degeneration.dot_graph(closure)
        with open(args.emit_dot, "w", encoding="utf-8") as fh:
            fh.write(dot)
        lines.append("wrote %s" % args.emit_dot)
    payload["pass"] = all_pass
    lines.append("degenerate: %d/%d rules pass"
                 % (sum(e["pass"] for e in entries), len(entries)))
    _emit(args, payload, lines)
    return EXIT_OK if all_pass else EXIT_FAIL


# ---------------------------------------------------------------------------
# integrate
# ---------------------------------------------------------------------------

def _t_range_excludes_zero(fam, t0, t1):
    # families whose Hamiltonian carries a t (or t-1) denominator cannot be
    # started at the singular time
    den_vars = set()
    for f, _ in fam.H._factors:
        den_vars |= f.used_vars()
    if "t" not in den_vars:
        return True
    return not (min(t0, t1) <= 0.0 <= max(t0, t1))


def command_integrate(args):
    try:
        cat = _load(args)
    except (CatalogError, OSError) as exc:
        print("catalog error: %s" % exc, file=sys.stderr)
        return EXIT_USAGE
    if args.family not in cat.families:
        print("unknown family %r" % args.family, file=sys.stderr)
        return EXIT_USAGE
    fam = cat.families[args.family]
    if fam.has_sigma:
        fam = fam.instantiate(args.sigma)
    params = {}
    for spec in args.param or []:
        if "=" not in spec:
            print("bad --param %r (expected name=value)" % spec, file=sys.stderr)
            return EXIT_USAGE
        name, value = spec.split("=", 1)
        params[name.strip()] = float(value)
    for flag in ("alpha", "beta", "gamma", "delta"):
        value = getattr(args, flag)
        if value is not None:
            params[flag] = value
    missing = [p for p in fam.params if p not in params]
    if missing:
        print("missing parameter value(s): %s" % ", ".join(missing),
              file=sys.stderr)
        return EXIT_USAGE
    if not (numint.TOL_MIN <= args.tol <= numint.TOL_MAX):
        print("tol out of range [%g, %g]" % (numint.TOL_MIN, numint.TOL_MAX),
              file=sys.stderr)
        return EXIT_USAGE
    if not _t_range_excludes_zero(fam, args.t0, args.t1):
        print("t-range includes the singular time t=0 for %s" % fam.id,
              file=sys.stderr)
        return EXIT_USAGE
    try:
        traj = numint.integrate(fam, params, args.y0, args.z0, args.t0,
                                args.t1, tol=args.tol)
    except numint.NumintError as exc:
        print("integration error: %s" % exc, file=sys.stderr)
        return EXIT_USAGE
    csv = traj.csv()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(csv)
    else:
        sys.stdout.write(csv)
    if traj.truncated:
        print("note: trajectory truncated (%s)" % traj.truncation_reason,
              file=sys.stderr)
        return EXIT_OK
    # scalar-equation residual through the family's parameter map
    ode = cat.odes[fam.target]
    exact = {k: RationalExpr.const(numint._to_fraction(v))
             for k, v in params.items()}
    ode_params = {}
    for name in ode.params:
        if name == "sigma":
            ode_params[name] = args.sigma
        else:
            ode_params[name] = float(fam.param_map[name].subst(exact).const_value())
    residual = numint.ode_residual(traj, ode, ode_params)
    print("scalar residual: %.3g (threshold %.3g)"
          % (residual, args.max_residual), file=sys.stderr)
    return EXIT_OK if residual < args.max_residual else EXIT_FAIL


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="painleve",
        description="Exact verification engine and numerical cross-checker "
                    "for the bundled catalog of Painleve deformations.")
    parser.add_argument("--catalog", help="catalog file (default: bundled, "
                                          "or $PAINLEVE_CATALOG)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="compatibility, signature and "
                                      "elimination checks")
    p.add_argument("ids", nargs="*", help="family / sl / matrix ids")
    p.add_argument("--all", action="store_true")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--parallel", type=int, default=0)
    p.set_defaults(func=command_verify)

    p = sub.add_parser("degenerate", help="run degeneration rules")
    p.add_argument("ids", nargs="*", help="rule ids")
    p.add_argument("--all", action="store_true")
    p.add_argument("--probe", action="store_true",
                   help="add a numeric slope table per rule")
    p.add_argument("--emit-dot", metavar="FILE",
                   help="write the verified diagram graph as DOT")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--parallel", type=int, default=0)
    p.set_defaults(func=command_degenerate)

    p = sub.add_parser("integrate", help="integrate a family's flow, "
                                         "emit CSV, check the scalar residual")
    p.add_argument("family")
    p.add_argument("--y0", type=float, required=True)
    p.add_argument("--z0", type=float, required=True)
    p.add_argument("--t0", type=float, required=True)
    p.add_argument("--t1", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--param", action="append",
                   help="family parameter as name=value (repeatable)")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--sigma", type=int, default=1, choices=(1, -1))
    p.add_argument("--max-residual", type=float, default=1e-6)
    p.add_argument("--out", help="CSV output path (default: stdout)")
    p.set_defaults(func=command_integrate)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors already
        return exc.code
    try:
        return args.func(args)
    except UnknownId as exc:
        print("unknown id: %s" % exc, file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
