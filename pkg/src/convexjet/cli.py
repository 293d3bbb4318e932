"""Command line front end: ``convexjet {gen,validate,extend,eval,surface,verify}``.

Exit codes: 0 success (or extendible), 2 extendible after augmentation,
3 rejected or failed verification, 1 input/output error.
"""
from __future__ import annotations

import argparse
import contextlib
import os
import sys

import numpy as np

from . import datasets, io
from .extender import BuildError, ExtensionModel, ExtensionRejected, build_extension, residuals
from .hypersurface import NormalDataset, SurfaceError, build_surface, verify_surface
from .jets import JetDataset, JetError, Subspace, Tolerances, as_subspace
from .validator import Verdict, validate

EXIT_OK, EXIT_IO, EXIT_AUG, EXIT_REJECT = 0, 1, 2, 3


class CliError(Exception):
    pass


def _threads():
    n = os.environ.get("CONVEXJET_THREADS")
    if not n:
        return contextlib.nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=max(1, int(n)))


def _tol(args) -> Tolerances:
    kw = {}
    if getattr(args, "tol_eq", None) is not None:
        kw["tol_eq"] = args.tol_eq
    if getattr(args, "tol_grad", None) is not None:
        kw["tol_grad"] = args.tol_grad
    return Tolerances(**kw)


def _chosen_X(args, n: int):
    if getattr(args, "x_basis", None):
        d = io.read_json(args.x_basis)
        basis = d["basis"] if isinstance(d, dict) else d
        return as_subspace(basis, n)
    if getattr(args, "widen_to_full", False):
        return Subspace.full(n)
    return None


def _grid(args):
    if args.grid is None:
        return None
    vals = [int(v) for v in str(args.grid).split(",")]
    return vals[0] if len(vals) == 1 else vals


def _dual(args):
    v = args.dual_radius
    if v is None or v == "auto":
        return "auto"
    if v.lower() == "none":
        return None
    return float(v)


def _read_points(path) -> np.ndarray:
    if path.endswith(".json"):
        d = io.read_json(path)
        pts = d["points"] if isinstance(d, dict) else d
        return np.atleast_2d(np.asarray(pts, float))
    return np.atleast_2d(np.loadtxt(path, delimiter=",", ndmin=2))


def cmd_gen(args) -> int:
    name = args.name
    if name in datasets.NORMAL_GENERATORS:
        fn = datasets.NORMAL_GENERATORS[name]
        if name == "sphere-normals":
            X, N = fn(args.n or 32, args.dim or 2)
        else:
            X, N = fn()
        io.save_normals(X, N, args.out)
        return EXIT_OK
    if name not in datasets.GENERATORS:
        known = sorted(datasets.GENERATORS) + sorted(datasets.NORMAL_GENERATORS)
        raise CliError(f"unknown example {name!r}; known: {', '.join(known)}")
    fn = datasets.GENERATORS[name]
    kw = {}
    if name == "example-1.2":
        kw["k_max"] = args.k_max or 30
    elif name.startswith("example-1.6"):
        kw["n_max"] = args.n_max or 10
    else:
        if args.count:
            kw["count"] = args.count
        kw["seed"] = args.seed
        if args.dim and name not in ("corner-box",):
            kw["dim"] = args.dim
    io.save_dataset(fn(**kw), args.out)
    return EXIT_OK


def cmd_validate(args) -> int:
    ds = io.load_dataset(args.jets)
    rep = validate(ds, _chosen_X(args, ds.dim), _tol(args), seed=args.seed)
    out = rep.to_dict()
    if args.out:
        io.write_json(out, args.out)
    else:
        print(out["verdict"])
        for t, d in rep.failed_conditions:
            print(f"  failed: {t}: {d}")
        if rep.conditioning_warnings:
            print(f"  {len(rep.conditioning_warnings)} conditioning warnings")
    return {Verdict.EXTENDIBLE: EXIT_OK, Verdict.AFTER_AUGMENTATION: EXIT_AUG,
            Verdict.REJECTED: EXIT_REJECT}[rep.verdict]


def cmd_extend(args) -> int:
    ds = io.load_dataset(args.jets)
    try:
        res = build_extension(ds, _chosen_X(args, ds.dim), _grid(args), _dual(args), _tol(args),
                              seed=args.seed, mode=args.majorant, check=not args.no_check)
    except ExtensionRejected as exc:
        print(f"rejected: {[t for t, _ in exc.report.failed_conditions]}", file=sys.stderr)
        return EXIT_REJECT
    except BuildError as exc:
        print(f"build failed: {exc}", file=sys.stderr)
        return EXIT_REJECT
    res.model.save(args.out)
    if args.report:
        io.write_json(res.report, args.report)
    if args.grid_csv and res.envelope is not None:
        res.envelope.to_csv(args.grid_csv)
    print(f"value residual {res.report['residuals']['value']:.3e}, "
          f"gradient residual {res.report['residuals']['gradient']:.3e}")
    return EXIT_AUG if res.validation.verdict is Verdict.AFTER_AUGMENTATION else EXIT_OK


def cmd_eval(args) -> int:
    model = ExtensionModel.load(args.model)
    P = _read_points(args.points)
    if P.shape[1] != model.dim:
        raise CliError(f"points have dimension {P.shape[1]}, model has {model.dim}")
    vals, grads = model.eval(P)
    n = model.dim
    head = ",".join([f"x{k}" for k in range(n)] + ["value"] + [f"g{k}" for k in range(n)])
    table = np.c_[P, vals, grads]
    target = args.out or sys.stdout
    np.savetxt(target, table, delimiter=",", header=head, comments="", fmt="%.17g")
    return EXIT_OK


def cmd_surface(args) -> int:
    X, N = io.load_normals(args.normals)
    try:
        nd = NormalDataset(X, N)
        res, mesh = build_surface(nd, grid=_grid(args), resolution=args.resolution, pad=args.pad,
                                  seed=args.seed)
    except (SurfaceError, ExtensionRejected) as exc:
        print(f"rejected: {exc}", file=sys.stderr)
        return EXIT_REJECT
    if args.out.endswith(".obj"):
        mesh.to_obj(args.out)
    else:
        mesh.to_csv(args.out)
    if args.model_out:
        res.model.save(args.model_out)
    rep = verify_surface(mesh, nd, res.model)
    rep.update({"vertices": len(mesh.vertices), "clipped": mesh.clipped,
                "unbounded": mesh.unbounded, "watertight": mesh.is_watertight()})
    if args.report:
        io.write_json(rep, args.report)
    print(f"{len(mesh.vertices)} vertices, max angle {rep['max_angle_deg']:.3f} deg")
    return EXIT_OK


def cmd_verify(args) -> int:
    model = ExtensionModel.load(args.model)
    d = io.read_json(args.data)
    recs = d.get("jets", []) if isinstance(d, dict) else []
    if recs and "n" in recs[0]:
        X, N = io.normals_from_dict(d)
        rep = verify_surface(None, NormalDataset(X, N), model)
        rep.pop("angles_deg")
    else:
        ds = io.dataset_from_dict(d)
        h = float(model.report.get("h_grid", 0.0)) or 1e-6
        K = float(np.linalg.norm(ds.G, axis=1).max())
        r = residuals(model, ds, h / 2)
        rep = {"value": r["value"], "gradient": r["gradient"],
               "value_threshold": 10 * h * (1 + K), "gradient_threshold": max(0.1, 20 * h),
               "table": [{"i": i, "value": v, "gradient": g}
                         for i, (v, g) in enumerate(zip(r["value_per_datum"], r["gradient_per_datum"]))]}
        rep["passed"] = rep["value"] <= rep["value_threshold"] and rep["gradient"] <= rep["gradient_threshold"]
    if args.out:
        io.write_json(rep, args.out)
    print("pass" if rep["passed"] else "fail")
    return EXIT_OK if rep["passed"] else EXIT_REJECT


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="convexjet", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="cmd", required=True)

    def common(sp, x=False):
        sp.add_argument("--tol-eq", type=float)
        sp.add_argument("--tol-grad", type=float)
        sp.add_argument("--seed", type=int, default=0)
        if x:
            g = sp.add_mutually_exclusive_group()
            g.add_argument("--widen-to-full", action="store_true")
            g.add_argument("--x-basis", help="JSON list of vectors spanning X")

    g = sub.add_parser("gen", help="write an example dataset")
    g.add_argument("name")
    g.add_argument("--k-max", type=int)
    g.add_argument("--n-max", type=int)
    g.add_argument("--n", type=int)
    g.add_argument("--dim", type=int)
    g.add_argument("--count", type=int)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    v = sub.add_parser("validate", help="decide extendibility")
    v.add_argument("jets")
    v.add_argument("--out")
    common(v, x=True)
    v.set_defaults(func=cmd_validate)

    e = sub.add_parser("extend", help="build an extension model")
    e.add_argument("jets")
    e.add_argument("--out", required=True)
    e.add_argument("--grid", help="nodes per axis (N or N1,N2,...)")
    e.add_argument("--dual-radius", help="'auto' (3K), 'none', or a number")
    e.add_argument("--majorant", choices=["max", "literal"], default="max")
    e.add_argument("--no-check", action="store_true")
    e.add_argument("--report")
    e.add_argument("--grid-csv")
    common(e, x=True)
    e.set_defaults(func=cmd_extend)

    q = sub.add_parser("eval", help="evaluate a model at points")
    q.add_argument("model")
    q.add_argument("points", help="CSV rows or JSON list of points")
    q.add_argument("--out")
    q.set_defaults(func=cmd_eval)

    s = sub.add_parser("surface", help="convex surface from normals")
    s.add_argument("normals")
    s.add_argument("--out", required=True, help=".obj or .csv")
    s.add_argument("--grid")
    s.add_argument("--resolution", type=int)
    s.add_argument("--pad", type=float, default=0.5)
    s.add_argument("--model-out")
    s.add_argument("--report")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_surface)

    r = sub.add_parser("verify", help="check a model against data")
    r.add_argument("model")
    r.add_argument("data", help="jets or normals file")
    r.add_argument("--out")
    r.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with _threads():
            return args.func(args)
    except (OSError, io.FileFormatError, JetError, CliError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
