"""Command-line front end: ``costqr {place,sweep,oracle,compare,gen} --config PATH``."""
from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
import warnings

from . import dataio
from .config import load_config
from .errors import CombinatorialBlowup, ConfigError, CostQRError
from .evaluation import (
    PlacementConfig,
    brute_force_oracle,
    compare_preprocessing,
    cross_validate,
    subset_objective,
)
from .placement import sweep_gamma


def thread_count():
    raw = os.environ.get("COSTQR_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError("COSTQR_THREADS", f"expected an integer, got {raw!r}") from None
    if n < 0:
        raise ConfigError("COSTQR_THREADS", "must be >= 0")
    return n if n > 0 else (os.cpu_count() or 1)


def _join(J):
    return " ".join(str(int(j)) for j in J)


def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def run_place(cfg, fmt="json"):
    X = cfg.load_data()
    eta = cfg.load_cost(X.shape[1])
    sets, problems = [], []
    for k in cfg.ks:
        spec = cfg.preprocess.resolved(k)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                found = sweep_gamma(X, spec, k, eta, cfg.gammas)
        except CostQRError as exc:
            problems.append(f"k={k}: {exc}")
            continue
        for s in found:
            if s.degenerate:
                problems.append(f"k={k}, gamma={s.gamma}: only {s.k} sensors placed")
            sets.append((k, s))
    if fmt == "csv":
        text = _csv(
            ("k", "gamma", "total_cost", "degenerate", "sensors"),
            [(k, repr(s.gamma), repr(s.total_cost), int(s.degenerate), _join(s.sensors)) for k, s in sets],
        )
    else:
        text = dataio.dumps({
            "schema": dataio.SCHEMA,
            "config": cfg.echo(),
            "sensor_sets": [dict(s.to_dict(), k_requested=k) for k, s in sets],
        })
    return text, problems, []


def run_sweep(cfg, fmt="json", workers=1):
    X = cfg.load_data()
    eta = cfg.load_cost(X.shape[1])
    curves, problems, notes = [], [], []
    for k in cfg.ks:
        conf = PlacementConfig(k=k, eta=eta, preprocess=cfg.preprocess)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                curve = cross_validate(X, cfg.split, cfg.folds, conf, cfg.gammas, workers=workers)
        except CostQRError as exc:
            problems.append(f"k={k}: {exc}")
            continue
        notes.extend(
            f"k={k}, fold={f['fold']}, gamma={f['gamma']}: {f['reason']}" for f in curve.failures
        )
        curves.append(curve)
    if not curves:
        raise CostQRError("no curve could be computed: " + "; ".join(problems))
    if fmt == "csv":
        text = dataio.curves_to_csv(curves)
    else:
        text = dataio.dumps({
            "schema": dataio.SCHEMA,
            "config": cfg.echo(),
            "curves": [dataio.curve_to_dict(c) for c in curves],
        })
    return text, problems, notes


def _ratio(greedy, oracle):
    if oracle > 0:
        return greedy / oracle
    return 1.0 if greedy <= 0 else math.inf


def run_oracle(cfg, fmt="json"):
    X = cfg.load_data()
    eta = cfg.load_cost(X.shape[1])
    rows, problems = [], []
    for k in cfg.ks:
        spec = cfg.preprocess.resolved(k)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                greedy = sweep_gamma(X, spec, k, eta, cfg.gammas)
        except CostQRError as exc:
            problems.append(f"k={k}: {exc}")
            continue
        for s in greedy:
            if s.degenerate:
                problems.append(f"k={k}, gamma={s.gamma}: only {s.k} sensors placed")
                continue
            try:
                J_opt, best = brute_force_oracle(X, eta, k, s.gamma, cap=cfg.oracle_cap)
            except CombinatorialBlowup as exc:
                problems.append(f"k={k}: {exc}")
                break
            g = subset_objective(X, s.sensors, eta, s.gamma)
            rows.append({
                "gamma": s.gamma,
                "k": k,
                "greedy_objective": g,
                "oracle_objective": best,
                "ratio": _ratio(g, best),
                "greedy_sensors": list(s.sensors),
                "oracle_sensors": list(J_opt),
            })
    if fmt == "csv":
        cols = ("gamma", "k", "greedy_objective", "oracle_objective", "ratio")
        text = _csv(
            cols + ("greedy_sensors", "oracle_sensors"),
            [[repr(r[c]) if isinstance(r[c], float) else r[c] for c in cols]
             + [_join(r["greedy_sensors"]), _join(r["oracle_sensors"])] for r in rows],
        )
    else:
        text = dataio.dumps({"schema": dataio.SCHEMA, "config": cfg.echo(), "comparisons": rows})
    return text, problems, []


def run_compare(cfg, fmt="json"):
    X = cfg.load_data()
    eta = cfg.load_cost(X.shape[1])
    points = []
    for k in cfg.ks:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            pts = compare_preprocessing(
                X, cfg.split, k, eta, cfg.gammas,
                folds=cfg.folds, trials=cfg.trials, seed=cfg.seed,
            )
        points.extend((k, p) for p in pts)
    if fmt == "csv":
        text = _csv(
            ("k", "method", "fold", "gamma", "cost", "test_error", "dominated"),
            [(k, p.method, p.fold, "" if p.gamma is None else repr(p.gamma),
              repr(p.total_cost), repr(p.test_error),
              "" if p.dominated is None else int(p.dominated)) for k, p in points],
        )
    else:
        text = dataio.dumps({
            "schema": dataio.SCHEMA,
            "config": cfg.echo(),
            "points": [
                {"k": k, "method": p.method, "fold": p.fold, "gamma": p.gamma,
                 "cost": p.total_cost, "test_error": p.test_error, "dominated": p.dominated}
                for k, p in points
            ],
        })
    return text, [], []


def run_gen(cfg, out, fmt=None):
    if cfg.synthetic is None:
        raise ConfigError("data.synthetic", "gen needs a synthetic data spec")
    X = cfg.load_data()
    if fmt == "csv" or (fmt is None and dataio._is_csv(out)):
        dataio.atomic_write(out, dataio.format_csv(X).encode())
    else:
        dataio.atomic_write(out, dataio.encode_matrix(X))


def build_parser():
    parser = argparse.ArgumentParser(prog="costqr", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fmts, help_ in (
        ("place", ("json", "csv"), "place sensors for every k and gamma"),
        ("sweep", ("json", "csv"), "cross-validated cost-error curves"),
        ("oracle", ("json", "csv"), "greedy vs brute-force comparison table"),
        ("compare", ("json", "csv"), "pre-processing and random-sensor comparison"),
        ("gen", ("cqr", "csv"), "write a synthetic data matrix"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", help="output path (default: config output.path)")
        p.add_argument("--format", choices=fmts, help="output format")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, seed=args.seed)
        out = args.out or cfg.output.get("path")
        if not out:
            raise ConfigError("output.path", "no output path given (use --out)")
        if not os.path.isabs(out) and not args.out:
            out = str(cfg.base_dir / out)
        fmt = args.format or cfg.output.get("format")
        if args.command == "gen":
            run_gen(cfg, out, fmt)
            return 0
        fmt = fmt or ("csv" if dataio._is_csv(out) else "json")
        if fmt not in ("json", "csv"):
            raise ConfigError("output.format", f"expected json or csv, got {fmt!r}")
        if args.command == "place":
            text, problems, notes = run_place(cfg, fmt)
        elif args.command == "sweep":
            text, problems, notes = run_sweep(cfg, fmt, workers=thread_count())
        elif args.command == "oracle":
            text, problems, notes = run_oracle(cfg, fmt)
        else:
            text, problems, notes = run_compare(cfg, fmt)
        dataio.atomic_write(out, text.encode())
    except ConfigError as exc:
        print(f"costqr: config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"costqr: {exc}", file=sys.stderr)
        return 1
    for note in notes:
        print(f"costqr: warning: {note}", file=sys.stderr)
    for p in problems:
        print(f"costqr: failed: {p}", file=sys.stderr)
    return 1 if problems else 0


if __name__ == "__main__":
    sys.exit(main())
