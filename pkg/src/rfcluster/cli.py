"""Command-line interface: ``rfcluster <command> ...`` or ``python -m rfcluster``."""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys

import numpy as np

from . import decider, distsim, fields, kernel1d, kernelhd, tuner
from .core import PromiseParams, load_points, normalize
from .errors import EmptyInput, ParseError, RFClusterError

EXIT_USAGE = 2
EXIT_FILE = 3
FIELDS = {"rsf": "RSF", "grf": "GRF_FOURIER", "RSF": "RSF", "GRF_FOURIER": "GRF_FOURIER"}


class _FileError(Exception):
    pass


def _write_text(path, text):
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise _FileError(str(exc)) from exc


def _write_csv(path, header, rows):
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)
    except OSError as exc:
        raise _FileError(str(exc)) from exc


def _load(path, fmt):
    try:
        return load_points(path, fmt)
    except (OSError, ParseError, EmptyInput) as exc:
        raise _FileError(str(exc)) from exc


def _promise_args(p, dim=True):
    p.add_argument("--k1", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--k2", type=int, required=True)
    p.add_argument("--delta", type=float, required=True)
    if dim:
        p.add_argument("--dim", type=int, default=1)
    p.add_argument("--field", choices=sorted(FIELDS), default="grf")
    p.add_argument("--seed", type=int, default=42)
    if not dim:
        p.add_argument("--no-normalize", action="store_true",
                       help="points are already centred in the ball of radius 1/2")


def _normalized_instance(args):
    S = _load(args.points, args.format)
    if args.no_normalize:
        radius = float(np.linalg.norm(S.points, axis=1).max())
        if radius > 0.5:
            print(f"warning: points reach radius {radius:.4g} > 1/2", file=sys.stderr)
    else:
        S = normalize(S)
    params = PromiseParams(args.k1, args.eps, args.k2, args.delta, S.dim).scaled(S.scale_factor)
    print(f"scale factor: {S.scale_factor!r} (eps -> {params.eps:.6g}, delta -> {params.delta:.6g})")
    return S, params


def _print_report(rep, out):
    print(f"verdict: {rep.verdict.value}")
    if rep.empirical_P is not None:
        print(f"P = {rep.empirical_P:.6f}  C = {rep.prob_yes_C:.6f}  M = {rep.prob_no_M:.6f}  "
              f"threshold (M+C)/2 = {(rep.prob_yes_C + rep.prob_no_M) / 2:.6f}")
    else:
        print(f"gap M - C = {rep.prob_no_M - rep.prob_yes_C:.6f} <= 0: no separating field on the grid")
    if out:
        _write_text(out, rep.to_json() + "\n")


def cmd_decide(args):
    S, params = _normalized_instance(args)
    kind = FIELDS[args.field]
    tr = tuner.tune(params, kind, seed=args.seed)
    rep = decider.decide(S, params, kind, tr, args.draws, args.seed)
    _print_report(rep, args.out)
    return 0


def cmd_tune(args):
    params = PromiseParams(args.k1, args.eps, args.k2, args.delta, args.dim)
    kind = FIELDS[args.field]
    P = tuner.default_param_grid(kind)
    T = tuner.default_T_grid(kind)
    gap, C, M = tuner.gap_surface(params, kind, P, T, seed=args.seed, return_parts=True)
    tr = tuner.tune(params, kind, P, T, seed=args.seed)
    out = {k: v for k, v in tr.__dict__.items() if k != "grid"}
    print(json.dumps(out, sort_keys=True))
    if args.surface_out:
        rows = [(repr(float(p)), repr(float(t)), repr(float(gap[i, j])))
                for i, p in enumerate(P) for j, t in enumerate(T)]
        _write_csv(args.surface_out, ["param", "T", "gap"], rows)
    return 0


def cmd_kernel1d(args):
    k, kd = kernel1d.solve_optimal_kernel_1d(args.eps, args.c, args.delta, args.terms, args.grid)
    req = kernel1d.check_requirements(k, k.coeffs, args.eps, args.c)
    print(f"k(delta) = {kd:.10f}")
    print(f"gaussian c^((delta/eps)^2) = {kernel1d.gaussian_kernel_value(args.eps, args.c, args.delta):.10f}")
    print("requirements: " + ", ".join(f"{n}={v}" for n, v in req.items()))
    if args.out:
        _write_text(args.out, k.to_json() + "\n")
    if args.curve_out:
        t, v = kernel1d.kernel_curve(k)
        _write_csv(args.curve_out, ["t", "k"], [(repr(float(a)), repr(float(b))) for a, b in zip(t, v)])
    return 0


def cmd_kernelhd(args):
    k, kd = kernelhd.solve_optimal_kernel_hd(args.dim, args.c, args.eps, args.delta, args.terms, args.grid)
    print(f"k(delta) = {kd:.10f}")
    if args.c < 1:
        print(f"kappa_inf = {kernelhd.kappa_infinity(args.c, args.eps, args.delta):.10f}")
        print(f"E_d(c) = {kernelhd.E_d(args.dim, args.c):.6f}")
    if args.out:
        _write_text(args.out, k.to_json() + "\n")
    return 0


def cmd_bound(args):
    if args.mode == "p2":
        clamped, raw = kernel1d.det_bound_p2(args.p1, return_raw=True)
        print(json.dumps({"p1": args.p1, "p2_bound": clamped, "raw": raw}))
    elif args.mode == "p5":
        p5 = kernel1d.psd_feasibility_bound({1: args.p1}, 5, 5, args.step)
        print(json.dumps({"p1": args.p1, "p5_bound": p5, "step": args.step}))
    else:
        print(json.dumps(kernel1d.psd_hierarchy(args.p1, args.step), sort_keys=True))
    return 0


def cmd_ed_table(args):
    w = csv.writer(sys.stdout)
    w.writerow(["d", "E_d"])
    for d, e in kernelhd.ed_table(args.c, args.dmax):
        w.writerow([d, f"{e:.4f}"])
    return 0


def cmd_simulate(args):
    S, params = _normalized_instance(args)
    kind = FIELDS[args.field]
    tr = tuner.tune(params, kind, seed=args.seed)
    if not tr.feasible:
        rep = decider.fail_report(tr, args.seed)
        _print_report(rep, args.out)
        return 0
    cfg = distsim.SessionConfig.from_tune(tr, S.dim, args.draws, args.seed)
    parts = distsim.random_partition(S, args.nodes, args.seed)
    rep = distsim.run_simulation(parts, cfg, args.transport, args.port)
    print(f"nodes: {args.nodes}  points per node: {[len(p) for p in parts]}  bytes sent: {rep.bytes_sent}")
    _print_report(rep, args.out)
    return 0


def cmd_diag(args):
    rng = np.random.default_rng(args.seed)
    if args.mode == "lsh-msd":
        sigma = 1.0
        for _ in range(5):
            x, y = rng.uniform(-0.5, 0.5, (2, 3))
            est = fields.lsh_msd_check(sigma, x, y, args.draws, args.seed)
            exact = sigma**2 * float((x - y) @ (x - y))
            print(f"E[(a.x-a.y)^2] = {est:.6f}  sigma^2|x-y|^2 = {exact:.6f}  rel = {abs(est / exact - 1):.4f}")
        x, y = np.array([10.0, 0, 0]), np.array([10.0, 0.5, 0])
        m, se = fields.lsh_covariance_check(sigma, x, y, args.draws, args.seed)
        print(f"projection covariance at |x-y| = 0.5, x.y = {x @ y:.1f}: {m:.3f} +- {se:.3f} (no decay)")
    elif args.mode == "rsf-cov":
        spec = fields.FieldSpec("RSF", 1.0, 1)
        for t in np.linspace(0.0, 3.0, 10):
            m, se = fields.empirical_covariance(spec, [0.0], [t], args.draws, args.seed)
            print(f"t = {t:.3f}  empirical = {m:.5f} +- {se:.5f}  exact = {fields.covariance(spec, [0.0], [t]):.5f}")
    elif args.mode == "slepian-mono":
        spec = fields.FieldSpec("RSF", 1.0, 1)
        for t in (0.1, 0.2, 0.3, 0.4, 0.5):
            V = fields.sample_values(spec, np.array([[0.0], [t]]), args.draws, np.random.default_rng(args.seed))
            hits = V.max(axis=1) >= 0.9
            print(f"t = {t:.1f}  Pr(max >= 0.9) = {hits.mean():.5f} +- {hits.std() / math.sqrt(hits.size):.5f}")
    else:
        spec = fields.FieldSpec("GRF_FOURIER", 300.0, 1, 25)
        t = np.linspace(0.0, 1.0, 1001)
        cov = np.array([fields.covariance(spec, [0.0], [s]) for s in t])
        rms = float(np.sqrt(np.mean((cov - np.exp(-300 * t * t)) ** 2)))
        print(f"25-term covariance vs exp(-300 t^2): RMS error {rms:.3e}")
    return 0


def build_parser():
    ap = argparse.ArgumentParser(prog="rfcluster", description="Random-field clustering promise tests and kernels.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decide", help="decide a point set")
    p.add_argument("--points", required=True)
    p.add_argument("--format", choices=["csv", "jsonl"])
    _promise_args(p, dim=False)
    p.add_argument("--draws", type=int, default=2000)
    p.add_argument("--out")
    p.set_defaults(func=cmd_decide)

    p = sub.add_parser("tune", help="search field parameter and threshold")
    _promise_args(p)
    p.add_argument("--surface-out")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("kernel1d", help="optimal 1D cosine-series kernel")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--terms", type=int, default=60)
    p.add_argument("--grid", type=int, default=1000)
    p.add_argument("--out")
    p.add_argument("--curve-out")
    p.set_defaults(func=cmd_kernel1d)

    p = sub.add_parser("kernelhd", help="optimal Dini-series kernel in d dimensions")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--terms", type=int, default=20)
    p.add_argument("--grid", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_kernelhd)

    p = sub.add_parser("bound", help="lower bounds on kernel values from PSD constraints")
    p.add_argument("--mode", choices=["p2", "p5", "hierarchy"], required=True)
    p.add_argument("--p1", type=float, default=0.99)
    p.add_argument("--step", type=float, default=0.005)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("ed-table", help="table of E_d(c)")
    p.add_argument("--c", type=float, default=0.9)
    p.add_argument("--dmax", type=int, default=10)
    p.set_defaults(func=cmd_ed_table)

    p = sub.add_parser("simulate", help="distributed protocol simulation")
    p.add_argument("--nodes", type=int, required=True)
    p.add_argument("--points", required=True)
    p.add_argument("--format", choices=["csv", "jsonl"])
    p.add_argument("--transport", choices=["inproc", "tcp"], default="inproc")
    p.add_argument("--port", type=int, default=0)
    _promise_args(p, dim=False)
    p.add_argument("--draws", type=int, default=2000)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("diag", help="numerical diagnostics")
    p.add_argument("--mode", choices=["lsh-msd", "rsf-cov", "slepian-mono", "grf-approx"], required=True)
    p.add_argument("--draws", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=cmd_diag)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else 0
    try:
        return args.func(args)
    except _FileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FILE
    except (ValueError, RFClusterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
