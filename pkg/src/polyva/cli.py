"""Command-line entry point: ``polyva <subcommand> --config <path> [--seed S] [--out path]``."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import arnoldi, diagnostics, experiments
from .arnoldi import Approximant
from .exprlang import parse
from .geometry import domain_from_dict, equispaced_points, m_rule_count
from .experiments import ConfigError, ExperimentConfig
from .lawson import lawson_refine

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


def _load(args) -> ExperimentConfig:
    return ExperimentConfig.load(args.config, seed=getattr(args, "seed", None))


def _point(cfg: ExperimentConfig, index: int | None) -> int:
    n = len(cfg.sweep)
    i = n - 1 if index is None else index
    if not -n <= i < n:
        raise ConfigError(f"sweep index {index} out of range for {n} sweep points")
    return i % n


def _out_path(args, cfg: ExperimentConfig | None, default: str | None = None):
    if args.out:
        return args.out
    if cfg is not None and cfg.output:
        return cfg.output
    return default


def _write_points(points: np.ndarray, extra: dict | None, out):
    names = [f"x{r + 1}" for r in range(points.shape[1])]
    cols = [points[:, r] for r in range(points.shape[1])]
    for k, v in (extra or {}).items():
        names.append(k)
        cols.append(v)
    fh = open(out, "w", newline="", encoding="utf-8") if out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(names)
        for i in range(points.shape[0]):
            w.writerow(["%.17e" % c[i] for c in cols])
    finally:
        if out:
            fh.close()


def _emit_rows(rows, args, cfg):
    out = _out_path(args, cfg)
    if out:
        csv_path, sidecar = experiments.write_report(rows, out, cfg)
        print(f"wrote {csv_path} and {sidecar}", file=sys.stderr)
    else:
        sys.stdout.write(experiments.rows_to_csv(rows))
    failed = [r for r in rows if r.error]
    for r in failed:
        print(f"warning: {r.method} N={r.N} failed: {r.error}", file=sys.stderr)
    return EXIT_OK


def cmd_run(args):
    cfg = _load(args)
    return _emit_rows(experiments.run(cfg), args, cfg)


def cmd_fit(args):
    cfg = _load(args)
    if cfg.method not in ("va", "va_lawson"):
        raise ConfigError("fit serializes V+A approximants; use method 'va' or 'va_lawson'")
    i = _point(cfg, args.index)
    iset = cfg.index_set(i)
    X = experiments.samples_for(cfg, m_rule_count(cfg.M_rule, len(iset)), cfg.point_seed(i))
    f = parse(cfg.function, cfg.dim)(X.points)
    basis, approx = arnoldi.fit(X, f, iset, cfg.domain.to_dict())
    if cfg.method == "va_lawson":
        approx, _ = lawson_refine(basis, f, cfg.lawson_iters, cfg.domain.to_dict())
    text = json.dumps(approx.to_dict(), indent=1)
    out = _out_path(args, None)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return EXIT_OK


def _read_points(path, dim: int) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if rows and not _is_number(rows[0][0]):
        rows = rows[1:]
    try:
        pts = np.array([[float(v) for v in r[:dim]] for r in rows], dtype=float)
    except ValueError as err:
        raise ValueError(f"{path}: {err}") from None
    if pts.size == 0:
        return np.zeros((0, dim))
    if pts.shape[1] != dim:
        raise ValueError(f"{path}: expected {dim} coordinates per row")
    return pts


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def cmd_eval(args):
    with open(args.model, encoding="utf-8") as fh:
        approx = Approximant.from_dict(json.load(fh))
    pts = _read_points(args.points, approx.index_set.dim)
    if approx.domain is not None and pts.shape[0]:
        outside = int(np.count_nonzero(~domain_from_dict(approx.domain).contains(pts)))
        if outside:
            print(f"warning: {outside} point(s) lie outside the fitting domain; "
                  "values there are extrapolated", file=sys.stderr)
    _write_points(pts, {"value": approx(pts)}, args.out)
    return EXIT_OK


def cmd_mesh(args):
    cfg = _load(args)
    i = _point(cfg, args.index)
    N = len(cfg.index_set(i))
    X = experiments.samples_for(cfg, m_rule_count(cfg.M_rule, N), cfg.point_seed(i))
    _write_points(X.points, None, _out_path(args, None))
    return EXIT_OK


def cmd_lebesgue(args):
    cfg = _load(args)
    idx = range(len(cfg.sweep)) if args.index is None else [_point(cfg, args.index)]
    for i in idx:
        iset = cfg.index_set(i)
        M = m_rule_count(cfg.M_rule, len(iset))
        X = experiments.samples_for(cfg, M, cfg.point_seed(i))
        basis = arnoldi.build_basis(X, iset)
        Y = equispaced_points(cfg.domain, cfg.K_factor * M)
        print(f"N={len(iset)} n={iset.degree} M={M} lebesgue_estimate={diagnostics.lebesgue_estimate(basis, Y):.17e}")
    return EXIT_OK


def cmd_weighted_fit(args):
    cfg = _load(args)
    method = cfg.method if cfg.method in ("va_weight", "qr_weight") else "va_weight"
    if cfg.seed is None:
        raise ConfigError("weighted fits draw random samples; a seed is required")
    return _emit_rows(experiments.run(cfg.replace(method=method)), args, cfg)


def cmd_lawson(args):
    cfg = _load(args)
    cfg = cfg.replace(method="va_lawson", lawson_iters=args.iters)
    return _emit_rows(experiments.run(cfg), args, cfg)


def cmd_compare(args):
    cfg = _load(args)
    methods = args.methods or ["va", cfg.method if cfg.method != "va" else "vandermonde"]
    for m in methods:
        if m not in experiments.METHODS:
            raise ConfigError(f"unknown method {m!r}; choose from {', '.join(experiments.METHODS)}")
    if cfg.seed is None and any(m in experiments.RANDOM_METHODS for m in methods):
        raise ConfigError("a seed is required for the random methods")
    rows = []
    for m in methods:
        rows.extend(experiments.run(cfg.replace(method=m)))
    return _emit_rows(rows, args, cfg)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="polyva", description="Polynomial least squares with Vandermonde with Arnoldi.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=True, index=False):
        if config:
            sp.add_argument("--config", required=True, help="experiment config (JSON)")
            sp.add_argument("--seed", type=int, help="override the sampling seed")
        sp.add_argument("--out", help="output path (default: config 'output' or stdout)")
        if index:
            sp.add_argument("--index", type=int, help="sweep point to use (default: last)")

    sp = sub.add_parser("run", help="run the configured sweep and write a CSV report")
    common(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("fit", help="fit one sweep point and write the approximant as JSON")
    common(sp, index=True)
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("eval", help="evaluate a saved approximant at points from a CSV")
    common(sp, config=False)
    sp.add_argument("--model", required=True, help="approximant JSON written by 'fit'")
    sp.add_argument("--points", required=True, help="CSV with one point per row")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("mesh", help="write the sample set of one sweep point as CSV")
    common(sp, index=True)
    sp.set_defaults(func=cmd_mesh)

    sp = sub.add_parser("lebesgue", help="print Lebesgue constant estimates")
    common(sp, index=True)
    sp.set_defaults(func=cmd_lebesgue)

    sp = sub.add_parser("weighted-fit", help="run the sweep with leverage-weighted subsampling")
    common(sp)
    sp.set_defaults(func=cmd_weighted_fit)

    sp = sub.add_parser("lawson", help="run the sweep with Lawson refinement")
    common(sp)
    sp.add_argument("--iters", type=int, default=10, help="Lawson iterations (default 10)")
    sp.set_defaults(func=cmd_lawson)

    sp = sub.add_parser("compare", help="run several methods on one config and emit labeled rows")
    common(sp)
    sp.add_argument("methods", nargs="*", help="methods to compare (default: va and the config method)")
    sp.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "iters", 0) is not None and getattr(args, "iters", 0) < 0:
        parser.error("--iters must be non-negative")
    try:
        return args.func(args)
    except (OSError, ArithmeticError, np.linalg.LinAlgError) as err:
        print(f"polyva: error: {err}", file=sys.stderr)
        return EXIT_RUNTIME
    except ValueError as err:
        print(f"polyva: error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
