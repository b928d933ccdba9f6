"""``cfprod`` command line.

Exit codes: 0 success, 1 ordering check failed (``profile``), 2 invalid
input, 3 budget or convergence failure.
"""
from __future__ import annotations

import argparse
import sys
from fractions import Fraction

from . import __version__
from .errors import BudgetExceeded, ConvergenceError, DomainError, OrderingViolation, ValidationError
from .io import emit, read_config, render

EXIT_OK, EXIT_ORDER, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3
# options that never change results, kept out of the output header
_NOT_ECHOED = {"config", "out", "threads", "func", "command"}


def _word(text: str) -> tuple[int, ...]:
    text = text.replace(",", " ").strip()
    return tuple(int(t) for t in text.split()) if text else ()


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.replace(",", " ").split()]


def _window(text: str) -> tuple[int, int]:
    try:
        lo, hi = text.split(":")
        return int(lo), int(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"window must look like 100:10000, got {text!r}")


def _meta(args, method: str) -> dict:
    meta = {k: v for k, v in sorted(vars(args).items()) if k not in _NOT_ECHOED}
    if isinstance(meta.get("window"), tuple):
        meta["window"] = "%d:%d" % meta["window"]
    meta["command"] = args.command
    meta["version"] = __version__
    meta["method"] = method
    return meta


def _finish(args, rows, method: str) -> int:
    emit(render(rows, _meta(args, method), args.format), args.out)
    return EXIT_OK


def cmd_expand(args) -> int:
    from .cf import cf_expand

    w = cf_expand(args.x)
    if args.out or args.format == "json":
        return _finish(args, [{"x": args.x, "word": " ".join(map(str, w)), "method": "exact"}], "exact")
    print(" ".join(map(str, w)))
    return EXIT_OK


def cmd_cylinder(args) -> int:
    from .cf import cylinder, cylinder_length

    w = _word(args.word)
    I = cylinder(w)
    row = {"word": " ".join(map(str, w)), "left": str(I.left), "right": str(I.right),
           "closed_side": I.closed_side, "length": str(cylinder_length(w) if w else I.length), "method": "exact"}
    return _finish(args, [row], "exact")


def cmd_measure(args) -> int:
    from . import measure as m

    l = Fraction(args.l)
    u, v = _word(args.prefix), _word(args.suffix)
    if args.kind == "product-tail":
        val = m.product_tail_measure(u, l)
        res = m.CertifiedMeasure.point(val)
    elif args.kind == "jk":
        res = m.jk_measure(u, v, l, args.tol)
    elif args.kind == "jtilde":
        res = m.jtilde_measure(u, v, l, args.tol)
    else:
        res = m.hn_measures(u, l, args.tol, variant=args.kind)
    method = "exact" if res.exact else "certified"
    row = {"kind": args.kind, "prefix": args.prefix, "suffix": args.suffix, "l": str(l),
           "lower": float(res.lower), "upper": float(res.upper), "exact": res.exact, "method": method}
    if res.exact:
        row["value"] = str(res.lower)
    return _finish(args, [row], method)


def _dim_row(est) -> dict:
    return {"B": est.B, "g": est.g, "M": est.M, "n_or_nodes": est.n_or_nodes, "value": est.value,
            "lo": est.lo, "hi": est.hi, "method": est.method}


def cmd_dimension(args) -> int:
    from . import pressure as p

    if args.n:
        est = p.s_n_root(args.n, p.PotentialSpec(args.B, args.g, args.M), args.tol, workers=args.threads)
        rows = [_dim_row(est)]
    elif args.extrapolate:
        est = p.dimension_extrapolate(args.B, args.g, args.tol_M, args.tol, M_max=args.M)
        rows = [dict(_dim_row(p.DimensionEstimate(v, v, v, "operator", 0, M, args.B, args.g)), n_or_nodes="")
                for M, v in est.history[:-1]] + [_dim_row(est)]
    else:
        rows = [_dim_row(p.dimension(p.PotentialSpec(args.B, args.g, args.M), args.tol))]
    return _finish(args, rows, rows[-1]["method"])


def cmd_profile(args) -> int:
    from . import pressure as p

    grid = _floats(args.B_grid)
    if not grid:
        raise ValidationError("empty B grid")
    if args.escalate:
        if len(grid) != 1:
            raise ValidationError("--escalate takes a single B")
        rows = []
        M = 2
        while M <= args.M:
            for r in p.profile_records(p.theorem_profile(grid, M, args.tol, check=False)):
                rows.append(r)
            M *= 2
        return _finish(args, rows, "operator")
    table = p.theorem_profile(grid, args.M, args.tol, check=False)
    rows = p.profile_records(table)
    _finish(args, rows, "operator")
    bad = [r.B for r in table if not r.ordered]
    if bad:
        print(f"ordering F1 <= E1 <= F2 <= E2 violated at B = {bad}", file=sys.stderr)
        return EXIT_ORDER
    return EXIT_OK


def cmd_cantor(args) -> int:
    from . import cantor

    params = cantor.schedule(args.L, args.M, args.B, args.mode, c=args.c)
    depth = args.depth if args.depth else min(params.max_depth, (params.n[1] + 2) if len(params.n) > 1 else args.L)
    args.depth = depth
    rep = cantor.holder_report(params, depth, args.samples, args.seed, rule=args.rule, workers=args.threads)
    if args.format == "json":
        meta = _meta(args, "exact+MC")
        emit(render([rep], meta, "json"), args.out)
    else:
        h = rep["histogram"]
        rows = [{"bucket_lo": lo, "bucket_hi": hi, "count": c}
                for lo, hi, c in zip(h["edges"], h["edges"][1:], h["counts"])]
        meta = _meta(args, "exact+MC")
        for k in ("min_exponent", "median_exponent", "threshold", "passed", "asserted"):
            meta[k] = rep[k]
        meta["max_mass_error"] = max((c["max_rel_error"] for c in rep["mass_checks"]), default=0.0)
        emit(render(rows, meta, "csv"), args.out)
    if rep["asserted"] and not rep["passed"]:
        return EXIT_ORDER
    return EXIT_OK


def cmd_zero_one(args) -> int:
    from . import montecarlo as mc

    fam = mc.EventFamily.parse(args.family, args.phi)
    lo, hi = args.window
    stream = mc.SampleStream(args.seed, args.bits, args.samples) if args.bits else \
        mc.SampleStream.for_depth(args.seed, args.samples, hi + 1)
    res = mc.hit_fraction(fam, (lo, hi), stream, workers=args.threads)
    args.bits = stream.bits
    return _finish(args, [res.row()], "MC")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value file; command-line flags take precedence")
    common.add_argument("--threads", type=int, default=1, help="worker cap")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--out", help="output path (stdout when omitted)")

    p = argparse.ArgumentParser(prog="cfprod", description="Products of consecutive partial quotients.")
    p.add_argument("--version", action="version", version=f"cfprod {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("expand", parents=[common], help="continued fraction of a rational")
    s.add_argument("--x", help="rational p/q in (0, 1)")
    s.set_defaults(func=cmd_expand)

    s = sub.add_parser("cylinder", parents=[common], help="cylinder interval of a word")
    s.add_argument("--word", help='quotients, e.g. "1 2 3"')
    s.set_defaults(func=cmd_cylinder)

    s = sub.add_parser("measure", parents=[common], help="measures of product-constrained sets")
    s.add_argument("--kind", choices=("product-tail", "jk", "jtilde", "H", "H-tilde"), default="jk")
    s.add_argument("--prefix", default="")
    s.add_argument("--suffix", default="")
    s.add_argument("--l", help="threshold (p/q accepted)")
    s.add_argument("--tol", type=float, default=1e-9)
    s.set_defaults(func=cmd_measure)

    s = sub.add_parser("dimension", parents=[common], help="root of the pressure equation")
    s.add_argument("--B", type=float)
    s.add_argument("--g", choices=("E1", "F1", "E2", "F2"), default="F2")
    s.add_argument("--M", type=int, default=32)
    s.add_argument("--tol", type=float, default=1e-9)
    s.add_argument("--n", type=int, default=0, help="use the level-n enumeration root instead")
    s.add_argument("--extrapolate", action="store_true", help="double M up to --M until stable")
    s.add_argument("--tol-M", dest="tol_M", type=float, default=5e-3)
    s.set_defaults(func=cmd_dimension)

    s = sub.add_parser("profile", parents=[common], help="the four dimension numbers over a B grid")
    s.add_argument("--B-grid", dest="B_grid", help="comma separated")
    s.add_argument("--M", type=int, default=64)
    s.add_argument("--tol", type=float, default=1e-9)
    s.add_argument("--escalate", action="store_true", help="single B, M = 2, 4, ... up to --M")
    s.set_defaults(func=cmd_profile)

    s = sub.add_parser("cantor", parents=[common], help="Cantor construction audit")
    s.add_argument("--L", type=int, default=8)
    s.add_argument("--M", type=int, default=2)
    s.add_argument("--B", type=float, default=2.0)
    s.add_argument("--mode", choices=("paper", "scaled"), default="paper")
    s.add_argument("--c", type=int, default=None)
    s.add_argument("--depth", type=int, default=0)
    s.add_argument("--samples", type=int, default=50)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--rule", choices=("count", "paper"), default="count")
    s.set_defaults(func=cmd_cantor)

    s = sub.add_parser("zero-one", parents=[common], help="Monte Carlo hit fractions")
    s.add_argument("--family", choices=("E1", "E2", "F1", "F2"), default="F2")
    s.add_argument("--phi")
    s.add_argument("--window", type=_window)
    s.add_argument("--samples", type=int, default=2000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--bits", type=int, default=0)
    s.set_defaults(func=cmd_zero_one)
    return p


_REQUIRED = {"expand": ("x",), "cylinder": ("word",), "measure": ("l",), "dimension": ("B",),
             "profile": ("B_grid",), "zero-one": ("phi", "window")}


def parse(argv: list[str]) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        conf = read_config(args.config)
        sp = parser._subparsers._group_actions[0].choices[args.command]
        actions = {a.dest: a for a in sp._actions}
        unknown = sorted(set(conf) - set(actions) - {"config"})
        if unknown:
            raise ValidationError(f"unknown config keys: {unknown}")
        for k, v in conf.items():
            if isinstance(actions[k], argparse._StoreTrueAction):
                conf[k] = v.lower() in ("1", "true", "yes", "on")
        sp.set_defaults(**conf)
        args = parser.parse_args(argv)
    missing = [k for k in _REQUIRED.get(args.command, ()) if getattr(args, k) is None]
    if missing:
        raise ValidationError(f"missing required option(s): {', '.join('--' + m for m in missing)}")
    return args


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse(argv)
        return args.func(args)
    except (ValidationError, DomainError, ValueError) as e:
        print(f"cfprod: error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (BudgetExceeded, ConvergenceError) as e:
        print(f"cfprod: error: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except OrderingViolation as e:
        print(f"cfprod: error: {e}", file=sys.stderr)
        return EXIT_ORDER


if __name__ == "__main__":
    sys.exit(main())
