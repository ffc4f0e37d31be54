"""Command line front end: ``diagah <command> [options]`` (or ``python -m diagah``).

Exit status: 0 on a certified success, 2 when nothing was found up to the
horizon (undetermined), 1 on any error. Reports print the claimed bound next
to the achieved value; numbers are printed with ``repr`` so runs diff cleanly.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys as _sys
from pathlib import Path

import numpy as np

from .corner import covering_corner, property_p_certify
from .demos import DEMOS, build_demo
from .diagonal_hom import system_compose, validate
from .errors import (CertificateFailed, DiagAHError, HorizonExhausted, NotCovering, ParseError,
                     ValidationError)
from .matrix_function import SINGULAR_TOL, MatrixFunction, function_from_list
from .metric_space import Subset, ball
from .simplicity import covering_check, simplicity_probe
from .stable_rank import invertible_approx
from .sysfile import dump_system, load_system, parse_system

OK, ERROR, UNDETERMINED = 0, 1, 2


def element_from_spec(spec: str, space, n: int) -> MatrixFunction:
    """``coord`` | ``shift:c`` | ``const:c`` | ``bump:c:w`` | ``@file.json``, times 1_n."""
    if spec.startswith("@"):
        data = json.loads(Path(spec[1:]).read_text())
        f = function_from_list(space, data)
        if f.n != n:
            raise ParseError(f"{spec}: function has size {f.n}, summand has size {n}")
        return f
    kind, *args = spec.split(":")
    try:
        nums = [float(a) for a in args]
    except ValueError:
        raise ParseError(f"element {spec!r}: arguments must be numbers") from None
    if kind == "const" and len(nums) == 1:
        return MatrixFunction.scalar(space, np.full(len(space), nums[0]), n)
    if space.coords is None or space.coords.ndim != 1:
        raise ParseError(f"element {spec!r} needs a space with real coordinates")
    x = space.coords
    if kind == "coord" and not nums:
        vals = x
    elif kind == "shift" and len(nums) == 1:
        vals = x - nums[0]
    elif kind == "bump" and len(nums) == 2:
        vals = np.maximum(0.0, 1.0 - np.abs(x - nums[0]) / nums[1])
    else:
        raise ParseError(f"cannot read element {spec!r}")
    return MatrixFunction.scalar(space, vals, n)


def _point_index(space, token):
    if token is None:
        return 0
    if token.startswith("#"):
        return int(token[1:])
    for k, p in enumerate(space.points):
        if str(p) == token:
            return k
    return space.nearest(float(token))


def _load(args):
    if args.input and args.demo:
        raise ParseError("give either --input or --demo, not both")
    if args.demo:
        return build_demo(args.demo, args.stages)
    if not args.input:
        raise ParseError("missing --input (or --demo)")
    return parse_system(args.input)


def _csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerows(rows)
    return buf.getvalue()


def cmd_validate(args):
    if args.demo:
        sys = build_demo(args.demo, args.stages)
    elif args.input:
        try:
            sys = load_system(Path(args.input).read_text(), source=args.input, check=False)
        except OSError as exc:
            raise ParseError(f"{args.input}: {exc.strerror}") from None
    else:
        raise ParseError("missing --input (or --demo)")
    problems = validate(sys)
    if args.format == "csv":
        out = _csv([["violation"]] + [[p] for p in problems])
    elif problems:
        out = "\n".join([f"{sys.name}: {len(problems)} violation(s)"] + [f"  {p}" for p in problems]) + "\n"
    else:
        sizes = " | ".join(",".join(str(s.size) for s in stage) for stage in sys.stages)
        out = f"{sys.name}: valid, {sys.n_stages} stages, sizes {sizes}\n"
    return (ERROR if problems else OK), out


def cmd_simplicity(args):
    sys = _load(args)
    horizon = args.horizon or sys.n_stages
    if args.center is not None:
        space = sys.summand(args.stage, args.summand).space
        c = _point_index(space, args.center)
        r = args.radius[0] if args.radius else 0.3
        U = ball(space, Subset.of(space, [c]), r)
        cert = covering_check(sys, args.stage, U, horizon, t=args.summand)
        if args.format == "csv":
            out = _csv([["stage", "summand", "center", "radius", "j0", "horizon"],
                        [args.stage, args.summand, space.points[c], repr(r),
                         cert.j0 if cert.covered else "FAIL", horizon]])
        else:
            out = (f"ball center {space.points[c]} radius {r!r} at stage {args.stage} "
                   f"summand {args.summand}: {cert.verdict}"
                   + (f", j0 = {cert.j0}" if cert.covered else "") + f" (horizon {horizon})\n")
        return (OK if cert.covered else UNDETERMINED), out
    radii = args.radius or [0.3, 0.5]
    rep = simplicity_probe(sys, horizon, radii, args.centers)
    out = rep.to_csv() if args.format == "csv" else rep.to_text() + "\n"
    return (OK if rep.all_covered else UNDETERMINED), out


def _summand_function(sys, args):
    s = sys.summand(args.stage, args.summand)
    return s.space, element_from_spec(args.element, s.space, s.size)


def cmd_property_p(args):
    sys = _load(args)
    horizon = args.horizon or sys.n_stages
    space, f = _summand_function(sys, args)
    x0 = _point_index(space, args.x0)
    try:
        cert = property_p_certify(sys, args.stage, args.summand, f, x0, args.eps, horizon)
    except HorizonExhausted as exc:
        return UNDETERMINED, f"undetermined: {exc}\n"
    if args.format == "csv":
        rows = [["l", "achieved", "bound", "eps", "block_source", "block_rest", "stage"]]
        rows += [[sc.l, repr(sc.achieved), repr(cert.bound), repr(cert.eps), cert.source_size,
                  len(sc.cut) - cert.source_size, cert.j] for sc in cert.summands]
        out = _csv(rows)
    else:
        lines = [f"property P at stage {args.stage} summand {args.summand}, x0 = {space.points[x0]}, "
                 f"eps = {args.eps!r}: certified at stage {cert.j}",
                 f"  claimed bound 2 eps = {cert.bound!r}, achieved = {cert.achieved!r}"]
        for sc in cert.summands:
            lines.append(f"  summand {sc.l}: achieved {sc.achieved!r}, blocks "
                         f"({cert.source_size}, {len(sc.cut) - cert.source_size})")
        out = "\n".join(lines) + "\n"
    if args.certificate:
        Path(args.certificate).write_text(cert.to_json())
    return OK, out


def cmd_corner(args):
    sys = _load(args)
    j = args.to or args.stage + 1
    hom = system_compose(sys, args.stage, j, args.summand, args.target)
    if hom is None:
        raise DiagAHError(f"no partial map from ({args.stage},{args.summand}) to ({j},{args.target})")
    space, f = _summand_function(sys, args)
    x0 = _point_index(space, args.x0)
    try:
        _, _, rep = covering_corner(hom, f, x0, args.eps)
    except NotCovering as exc:
        return UNDETERMINED, f"undetermined: {exc}\n"
    fields = [("stage", j), ("summand", args.target), ("eps", args.eps), ("bound", rep.bound),
              ("achieved", rep.achieved), ("eta", rep.eta), ("delta", rep.delta),
              ("depth", rep.depth), ("order", " ".join(map(str, rep.order)))]
    if args.format == "csv":
        out = _csv([["key", "value"]] + [[k, repr(v) if isinstance(v, float) else v] for k, v in fields])
    else:
        out = "\n".join(f"{k}: {v!r}" if isinstance(v, float) else f"{k}: {v}" for k, v in fields) + "\n"
    return OK, out


def cmd_invert(args):
    sys = _load(args)
    horizon = args.horizon or sys.n_stages
    elements = []
    for t, s in enumerate(sys.summands(args.stage)):
        spec = args.element if (args.summand is None or t == args.summand) else "const:1"
        elements.append(element_from_spec(spec, s.space, s.size))
    try:
        res = invertible_approx(sys, args.stage, elements, args.eps, horizon, args.tol)
    except (HorizonExhausted, CertificateFailed) as exc:
        return UNDETERMINED, f"undetermined: {exc}\n"
    if args.format == "csv":
        out = _csv([["stage", "eps", "distance", "margin", "bookkeeping"],
                    [res.stage, repr(res.eps), repr(res.distance), repr(res.margin),
                     repr(res.bookkeeping)]])
    else:
        out = (f"invertible approximant at stage {res.stage}\n"
               f"  claimed bound eps = {res.eps!r}\n"
               f"  distance (recomputed) = {res.distance!r}\n"
               f"  margin (recomputed) = {res.margin!r}\n"
               f"  budget sum = {res.bookkeeping!r}\n")
    if args.trace:
        Path(args.trace).write_text(res.to_json())
    return (OK if res.ok else ERROR), out


def cmd_demo(args):
    sys = build_demo(args.name, args.stages)
    return OK, dump_system(sys)


def build_parser():
    p = argparse.ArgumentParser(prog="diagah", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, system=True):
        if system:
            sp.add_argument("--input", help="system description (YAML)")
            sp.add_argument("--demo", choices=sorted(DEMOS), help="use a built-in system instead")
            sp.add_argument("--stages", type=int, help="number of stages for --demo")
        sp.add_argument("--format", choices=["text", "csv"], default="text")
        sp.add_argument("--out", help="write the report here instead of stdout")

    def element(sp):
        sp.add_argument("--stage", type=int, default=1)
        sp.add_argument("--summand", type=int, default=0)
        sp.add_argument("--element", default="coord",
                        help="coord | shift:c | const:c | bump:c:w | @file.json")
        sp.add_argument("--x0", help="point label, coordinate, or #index")
        sp.add_argument("--eps", type=float, required=True)

    sp = sub.add_parser("validate", help="check a system description")
    common(sp)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("simplicity", help="covering check for one ball, or a probe over many")
    common(sp)
    sp.add_argument("--horizon", type=int)
    sp.add_argument("--stage", type=int, default=1)
    sp.add_argument("--summand", type=int, default=0)
    sp.add_argument("--center", help="point label, coordinate, or #index (single ball)")
    sp.add_argument("--radius", type=float, action="append", help="repeatable")
    sp.add_argument("--centers", default="grid:11", help="probe centers: all | grid:K")
    sp.set_defaults(func=cmd_simplicity)

    sp = sub.add_parser("property-p", help="certify the corner property for one function")
    common(sp)
    element(sp)
    sp.add_argument("--horizon", type=int)
    sp.add_argument("--certificate", help="also write the certificate (JSON) here")
    sp.set_defaults(func=cmd_property_p)

    sp = sub.add_parser("corner", help="corner extraction through one composed partial map")
    common(sp)
    element(sp)
    sp.add_argument("--to", type=int, help="target stage (default stage + 1)")
    sp.add_argument("--target", type=int, default=0, help="target summand")
    sp.set_defaults(func=cmd_corner)

    sp = sub.add_parser("invert-approx", help="invertible approximation of a stage element")
    common(sp)
    element(sp)
    sp.set_defaults(summand=None)
    sp.add_argument("--horizon", type=int)
    sp.add_argument("--tol", type=float, default=SINGULAR_TOL)
    sp.add_argument("--trace", help="also write the pipeline trace (JSON) here")
    sp.set_defaults(func=cmd_invert)

    sp = sub.add_parser("demo", help="write a built-in system as YAML")
    sp.add_argument("name", choices=sorted(DEMOS))
    sp.add_argument("--stages", type=int)
    common(sp, system=False)
    sp.set_defaults(func=cmd_demo)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "eps", 1.0) is not None and getattr(args, "eps", 1.0) <= 0:
        print("error: --eps must be positive", file=_sys.stderr)
        return ERROR
    if getattr(args, "horizon", None) is not None and args.horizon < 2:
        print("error: --horizon must be at least 2", file=_sys.stderr)
        return ERROR
    try:
        status, report = args.func(args)
    except ValidationError as exc:
        print("invalid system:\n" + "\n".join(f"  {v}" for v in exc.violations), file=_sys.stderr)
        return ERROR
    except DiagAHError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return ERROR
    if args.out:
        Path(args.out).write_text(report)
    else:
        _sys.stdout.write(report)
    return status


if __name__ == "__main__":
    raise SystemExit(main())
