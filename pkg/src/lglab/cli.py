"""Command line front end: ``lglab classify | moduli | make-surface | verify``."""
import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from .algebra import solve_a_from_Db
from .errors import DomainError, LglabError, MeshParseError, MeshValidationError, UnclassifiedUnimodularError
from .group import classify, named_matrix, nonunimodular_from_Db
from .surface import load_mesh, make_round_sphere, make_self_intersecting_sphere, mesh_to_obj, save_mesh
from .verify import VerificationReport, VerifyConfig, full_report

EXIT_OK = 0
EXIT_INCONSISTENT = 1
EXIT_PARSE = 2
EXIT_UNCLASSIFIED = 3
EXIT_IO = 4
EXIT_INCONCLUSIVE = 5


class UsageError(Exception):
    pass


def _floats(text, n, what):
    try:
        vals = [float(t) for t in text.split(",")]
    except ValueError:
        raise UsageError(f"{what}: expected {n} comma-separated numbers, got '{text}'") from None
    if len(vals) != n or not all(np.isfinite(vals)):
        raise UsageError(f"{what}: expected {n} finite comma-separated numbers, got '{text}'")
    return vals


def _group_matrix(args):
    given = [x for x in (args.matrix, args.Db, args.group) if x is not None]
    if len(given) != 1:
        raise UsageError("give exactly one of --matrix, --Db, --group")
    try:
        if args.matrix is not None:
            return np.array(_floats(args.matrix, 4, "--matrix")).reshape(2, 2)
        if args.Db is not None:
            return nonunimodular_from_Db(*_floats(args.Db, 2, "--Db"))
        return named_matrix(args.group)
    except (DomainError, LglabError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def _surface(text):
    kind, _, rest = text.partition(":")
    parts = rest.split(":") if rest else []
    try:
        if kind == "round" and len(parts) == 2:
            return make_round_sphere(r=float(parts[0]), level=int(parts[1]))
        if kind == "control" and len(parts) == 1:
            return make_self_intersecting_sphere(int(parts[0]))
        if kind == "obj" and rest:
            return load_mesh(rest)
    except (MeshParseError, MeshValidationError, ValueError, OSError) as exc:
        raise UsageError(f"--surface {text}: {exc}") from None
    raise UsageError(f"--surface: expected round:R:LEVEL, control:LEVEL or obj:PATH, got '{text}'")


def _write(text, path):
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w") as fh:
        fh.write(text)


def cmd_classify(args):
    model = classify(_group_matrix(args))
    d = model.to_dict()
    print(f"label: {model.label}")
    print(f"trace class: {model.trace_class}")
    print(f"D: {model.D:.12g}")
    print(f"admits open book: {'yes' if model.admits_open_book else 'no'}")
    print(json.dumps(d, indent=2))
    return EXIT_OK


def moduli_rows(Dmin, Dmax, bmax, steps):
    """Rows (D, b, a or None, valid) on a steps x steps grid."""
    rows = []
    for D in np.linspace(Dmin, Dmax, steps):
        for b in np.linspace(0.0, bmax, steps):
            try:
                a = solve_a_from_Db(float(D), float(b))
            except DomainError:
                a = None
            rows.append((float(D), float(b), a, a is not None))
    return rows


def cmd_moduli(args):
    if args.steps < 2:
        raise UsageError("--steps must be at least 2")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["D", "b", "a", "valid"])
    for D, b, a, ok in moduli_rows(args.Dmin, args.Dmax, args.bmax, args.steps):
        w.writerow([repr(D), repr(b), "" if a is None else repr(a), "true" if ok else "false"])
    _write(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_make_surface(args):
    try:
        if args.kind == "round":
            center = _floats(args.center, 3, "--center")
            mesh = make_round_sphere(center, args.r, args.level)
        else:
            mesh = make_self_intersecting_sphere(args.level, axis=args.axis)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    stats = f"V={mesh.n_vertices} E={mesh.n_edges} F={mesh.n_faces} chi={mesh.euler_characteristic}"
    if args.out is None:
        sys.stdout.write(mesh_to_obj(mesh))
        print(stats, file=sys.stderr)
    else:
        save_mesh(mesh, args.out)
        print(stats)
    return EXIT_OK


def _seed(args):
    env = os.environ.get("LGLAB_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"LGLAB_SEED must be an integer, got '{env}'") from None
    return args.seed


def exit_code(report: VerificationReport) -> int:
    if report.verdict == VerificationReport.INCONCLUSIVE:
        return EXIT_INCONCLUSIVE
    return EXIT_OK if report.consistent else EXIT_INCONSISTENT


def cmd_verify(args):
    model = classify(_group_matrix(args))
    mesh = _surface(args.surface)
    config = VerifyConfig(
        z_samples=args.z_samples, fiber_grid=args.fiber_grid, seed=_seed(args)
    )
    report = full_report(model, mesh, config)
    _write(report.to_json(), args.out)
    if args.out not in (None, "-"):
        failed = ", ".join(report.consistency["failed"]) or "none"
        print(f"{model.label}: verdict {report.verdict}, gauss diffeo {report.gauss['diffeo']}, failed checks: {failed}")
    return exit_code(report)


def build_parser():
    p = argparse.ArgumentParser(prog="lglab", description="Gauss maps and embedded spheres in metric Lie groups R^2 x_A R")
    sub = p.add_subparsers(dest="command", required=True)

    def add_group(sp):
        sp.add_argument("--matrix", help="a,b,c,d entries of A (row-major)")
        sp.add_argument("--Db", help="D,b invariants of a canonical non-unimodular group")
        sp.add_argument("--group", help="r3, nil3, h3, h2xr, sol3[:c], e2tilde[:c], nonuni:D,b, matrix:a,b,c,d")

    c = sub.add_parser("classify", help="identify a group and its open book admissibility")
    add_group(c)
    c.set_defaults(func=cmd_classify)

    m = sub.add_parser("moduli", help="CSV grid over the (D, b) moduli space")
    m.add_argument("--Dmin", type=float, default=-2.0)
    m.add_argument("--Dmax", type=float, default=4.0)
    m.add_argument("--bmax", type=float, default=3.0)
    m.add_argument("--steps", type=int, default=50)
    m.add_argument("--out")
    m.set_defaults(func=cmd_moduli)

    s = sub.add_parser("make-surface", help="write a test sphere as OBJ")
    s.add_argument("kind", choices=["round", "control"])
    s.add_argument("--r", type=float, default=0.2)
    s.add_argument("--level", type=int, default=4)
    s.add_argument("--center", default="0,0,0")
    s.add_argument("--axis", choices=["x", "y", "z"], default="z")
    s.add_argument("--out")
    s.set_defaults(func=cmd_make_surface)

    v = sub.add_parser("verify", help="run the embeddedness checks and emit a JSON report")
    add_group(v)
    v.add_argument("--surface", required=True, help="round:R:LEVEL, control:LEVEL or obj:PATH")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--z-samples", type=int, default=32)
    v.add_argument("--fiber-grid", type=int, default=64)
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"lglab: error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except UnclassifiedUnimodularError as exc:
        print(f"lglab: unclassified: {exc} {exc.invariants}", file=sys.stderr)
        return EXIT_UNCLASSIFIED
    except OSError as exc:
        print(f"lglab: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
