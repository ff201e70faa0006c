"""Command line front end: ``qszego {eval,verify,scan,project,reproduce,lower-bound}``.

Exit status: 0 all checks pass, 1 a check failed, 2 usage error, 3 input error.
"""
from __future__ import annotations

import argparse
import sys
import time
import warnings

import numpy as np

from . import io as qio
from .heisenberg import DomainError, GroupPoint, LatticeSpec, SiegelPoint
from .kernel import K, K_eps, KernelConfig, SingularityError
from .projection import (
    QuadratureError, QuadratureWarning, SampledFunction, project, project_eps, reproduce_check, reproducing_constant,
)
from .quaternion import DimensionError
from . import verification as ver

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INPUT = 0, 1, 2, 3
SCAN_CLAIMS = ("size_bound", "gradient_bound", "regularity_ii", "regularity_iii", "mean_value")


class UsageError(ValueError):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def _config(args, default_c=1.0) -> KernelConfig:
    c = args.c if args.c is not None else default_c
    if c == "auto":
        c = reproducing_constant(args.n)
    try:
        return KernelConfig(args.n, float(c), args.switch_tol)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _spec(args, hy=None) -> LatticeSpec:
    hy = args.hy if hy is None else hy
    try:
        return LatticeSpec(args.radius, hy, args.ht, args.exclusion)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid lattice: {exc}") from None


def _point(text, n) -> GroupPoint:
    if text is None:
        return GroupPoint.identity(n)
    vals = _floats(text)
    if len(vals) != 4 * n - 1:
        raise UsageError(f"a point of H^{n - 1} needs {4 * n - 1} coordinates, got {len(vals)}")
    return GroupPoint.from_coords(np.array(vals))


def _siegel(text, n) -> SiegelPoint:
    vals = _floats(text)
    if len(vals) == 1:
        return SiegelPoint.real_axis(vals[0], n)
    if len(vals) != 4 * n:
        raise UsageError(f"a Siegel point needs 1 (real q1) or {4 * n} coordinates, got {len(vals)}")
    return SiegelPoint(np.array(vals[:4]), np.array(vals[4:]))


# ------------------------------------------------------------------ commands

def cmd_eval(args) -> int:
    if args.inp is None:
        raise UsageError("eval needs --in")
    pts = qio.read_points(args.inp)
    cfg = KernelConfig(pts.n, float(args.c if args.c is not None else 1.0), args.switch_tol)
    rows, bad = [], 0
    for i in range(len(pts)):
        g = pts[i]
        try:
            v = K_eps(g, args.eps, cfg) if args.eps else K(g, cfg)
            status = "ok"
        except SingularityError as exc:
            v, status, bad = [float("nan")] * 4, f"error: {exc}", bad + 1
        rows.append(list(g.coords()) + list(v) + [status])
    header = qio.group_header(pts.n) + ["K1", "K2", "K3", "K4", "status"]
    qio.write_csv(args.out, header, rows)
    return EXIT_FAIL if bad else EXIT_OK


def _claims(args, allowed) -> tuple:
    if not args.claim:
        return tuple(allowed)
    out = tuple(c.strip() for c in args.claim.split(",") if c.strip())
    unknown = [c for c in out if c not in allowed]
    if unknown:
        raise UsageError(f"unknown claim(s) {unknown}; choose from {', '.join(allowed)}")
    return out


def cmd_verify(args) -> int:
    cfg = _config(args)
    report = ver.verify_all(cfg, args.seed, args.samples, args.threads, _claims(args, ver.CLAIMS))
    qio.write_json(args.out, report)
    return EXIT_OK if report["pass"] else EXIT_FAIL


def cmd_scan(args) -> int:
    if not args.claim:
        raise UsageError(f"scan needs --claim, one of {', '.join(SCAN_CLAIMS)}")
    (claim,) = _claims(args, SCAN_CLAIMS)[:1]
    cfg = _config(args)
    report = ver.run_claim(claim, cfg, args.seed, args.samples, args.threads)
    qio.write_json(args.out, report)
    return EXIT_OK if report["pass"] else EXIT_FAIL


def cmd_project(args) -> int:
    if args.inp is None:
        raise UsageError("project needs --in (sampled function CSV)")
    f = SampledFunction.from_csv(args.inp)
    args.n = f.n
    cfg = _config(args)
    spec = _spec(args)
    g = _point(args.point, f.n)
    t0 = time.perf_counter()
    if args.eps:
        value = project_eps(f, g, args.eps, spec, cfg, args.threads)
    else:
        value = project(f, g, spec, cfg, args.threads, args.order)
    runtime = (time.perf_counter() - t0) * 1e3 if args.timing else None
    qio.write_json(args.out, {"point": qio.group_point_dict(g), "value": value, "spec": spec.to_dict(),
                              "order": args.order, "eps": args.eps, "runtime_ms": runtime, "pass": True})
    return EXIT_OK


def cmd_reproduce(args) -> int:
    cfg = _config(args, default_c="auto")
    p0 = _siegel(args.p0, cfg.n)
    q = _siegel(args.q, cfg.n)
    results = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", QuadratureWarning)
        for hy in _floats(args.hy_list):
            spec = _spec(args, hy)
            res = reproduce_check(p0, q, spec, cfg, args.threads, args.method)
            results.append({"spec": spec.to_dict(), **res.to_dict()})
    errs = [r["rel_err"] for r in results]
    monotone = all(b < a for a, b in zip(errs, errs[1:]))
    ok = bool(np.all(np.isfinite(errs)) and monotone and (len(errs) < 3 or errs[-1] * 2 <= errs[0]))
    qio.write_json(args.out, {"n": cfg.n, "c": cfg.c, "runs": results, "monotone": monotone,
                              "warnings": [str(w.message) for w in caught], "pass": ok})
    return EXIT_OK if ok else EXIT_FAIL


def cmd_lower_bound(args) -> int:
    cfg = _config(args)
    nv = ver.unit_sphere_nonvanishing(cfg)
    wit = ver.check_witness(cfg, args.samples or 1000, args.seed)
    g, _ = ver._random_points(cfg.n, 1, args.seed)
    pair = ver.ball_pair_lower_bound(g[0], args.r, cfg, args.samples or 10_000, args.seed)
    out = {"nonvanishing": nv.to_dict(), "witness": wit.to_dict(), "ball_pair": pair.to_dict()}
    out["pass"] = bool(nv.passed and wit.passed and pair.passed)
    qio.write_json(args.out, out)
    return EXIT_OK if out["pass"] else EXIT_FAIL


# -------------------------------------------------------------------- parser

def _c_arg(text):
    if text == "auto":
        return text
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--c must be a number or 'auto', got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, default=2, help="dimension n >= 2 (group H^{n-1})")
    common.add_argument("--c", type=_c_arg, default=None,
                        help="normalisation c_{n-1}; 'auto' calibrates it from the reproducing identity")
    common.add_argument("--switch-tol", type=float, default=1e-3, help="closed/sum form switch threshold")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--samples", type=int, default=None)
    common.add_argument("--in", dest="inp", default=None, help="input CSV")
    common.add_argument("--out", default="-", help="output path ('-' for stdout)")
    common.add_argument("--claim", default=None, help="claim name(s), comma separated")

    lat = argparse.ArgumentParser(add_help=False)
    lat.add_argument("--radius", type=float, default=2.0)
    lat.add_argument("--hy", type=float, default=0.5)
    lat.add_argument("--ht", type=float, default=None, help="vertical spacing (default hy^2)")
    lat.add_argument("--exclusion", type=float, default=0.1)

    p = argparse.ArgumentParser(prog="qszego", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("eval", parents=[common], help="kernel values for points in a CSV")
    e.add_argument("--eps", type=float, default=None, help="use the regularised kernel K_eps")
    e.set_defaults(func=cmd_eval)

    sub.add_parser("verify", parents=[common], help="run the verification suite").set_defaults(func=cmd_verify)
    sub.add_parser("scan", parents=[common], help="run one bound scan").set_defaults(func=cmd_scan)

    pr = sub.add_parser("project", parents=[common, lat], help="projection of sampled data at a point")
    pr.add_argument("--point", default=None, help="t1,t2,t3,y1,... (default: identity)")
    pr.add_argument("--eps", type=float, default=None, help="use K_eps with no exclusion hole")
    pr.add_argument("--order", choices=("forward", "reversed"), default="forward")
    pr.add_argument("--timing", action="store_true", help="record runtime_ms (output no longer reproducible)")
    pr.set_defaults(func=cmd_project)

    rp = sub.add_parser("reproduce", parents=[common, lat], help="reproducing-property check")
    rp.add_argument("--p0", default="2", help="real q1, or all 4n coordinates")
    rp.add_argument("--q", default="2", help="real q1, or all 4n coordinates")
    rp.add_argument("--hy-list", default="0.5,0.35,0.25", help="spacings to compare (comma separated)")
    rp.add_argument("--method", choices=("auto", "direct", "radial"), default="auto")
    rp.set_defaults(func=cmd_reproduce, radius=8.0, exclusion=1e-9)

    lb = sub.add_parser("lower-bound", parents=[common], help="nonvanishing point, witness and ball pairs")
    lb.add_argument("--r", type=float, default=0.1, help="ball radius for the pair scan")
    lb.set_defaults(func=cmd_lower_bound)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.threads < 1:
            raise UsageError("--threads must be >= 1")
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (qio.InputError, DomainError, DimensionError, QuadratureError, OSError) as exc:
        print(f"qszego: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
