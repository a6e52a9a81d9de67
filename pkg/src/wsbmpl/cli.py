"""Command-line interface.

Exit codes: 0 success, 2 invalid input or configuration, 3 I/O failure.
Non-convergence of a fit is reported in the output flags, not by exit code.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__, backend_name
from .analysis import analyze, average_networks, overlap_csv
from .errors import InvalidParameterError
from .initializers import auto_level, build_initial, discretize, parse_init
from .io import read_edge_list, read_labels, read_matrix, write_labels, write_matrix
from .metrics import loss_with_permutation, misclassification_loss, overlap_table
from .model import EdgeDistributionSpec, generate_network
from .pl_core import pl_fit
from .sweep import ExperimentConfig, run_sweep
from .theory import balanced_bounds, bound_heatmap, unbalanced_bounds

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 2, 3


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# Parsing helpers
# --------------------------------------------------------------------------

def _floats(text: str) -> list:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _k_range(text: str) -> list:
    try:
        if ":" in text:
            lo, hi = (int(x) for x in text.split(":"))
            return list(range(lo, hi + 1))
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO:HI or a comma list, got {text!r}") from None


def _level(text: str):
    if text == "auto":
        return "auto"
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"level must be an integer or 'auto', got {text!r}") from None


def _dump(obj, out):
    text = json.dumps(obj, indent=2, allow_nan=False) + "\n"
    _emit(text, out)


def _emit(text: str, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load_network(args):
    if getattr(args, "edges", None):
        return read_edge_list(args.edges, getattr(args, "n", None))
    if not args.matrix:
        raise UsageError("one of --matrix or --edges is required")
    path = args.matrix[0] if isinstance(args.matrix, list) else args.matrix
    return read_matrix(path)


def _pi(args, K):
    if args.pi is None:
        return [1.0 / K] * K
    if len(args.pi) != K:
        raise InvalidParameterError(f"--pi has {len(args.pi)} entries for K={K}")
    return args.pi


def _resolved_level(W, level):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return discretize(W, level)[1]


# --------------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------------

def cmd_generate(args):
    K = args.k
    if args.generator == "gaussian":
        spec = EdgeDistributionSpec.homogeneous(args.a, args.b, args.sigma2)
    elif args.generator == "heavy_tail":
        spec = EdgeDistributionSpec.heavy_tail(args.alpha)
    else:
        spec = EdgeDistributionSpec.bimodal_mix(args.b_param)
    W, c = generate_network(args.n, _pi(args, K), spec, args.seed, args.fixed_counts)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_matrix(out / "matrix.csv", W)
    write_labels(out / "labels.csv", c)
    config = dict(command="generate", n=args.n, K=K, a=args.a, b=args.b, sigma2=args.sigma2,
                  pi=_pi(args, K), generator=args.generator, alpha=args.alpha,
                  b_param=args.b_param, seed=args.seed, fixed_counts=args.fixed_counts)
    _dump(config, out / "config.json")


def cmd_fit(args):
    W = _load_network(args)
    method = parse_init(args.init)
    truth = read_labels(args.ref_labels, args.k) if args.ref_labels else None
    e0 = build_initial(method, W, args.k, truth, args.seed, args.restarts)
    fit = pl_fit(W, e0, args.k, args.T, args.tol, args.inner_max)
    result = fit.to_dict()
    result["init"] = method.name
    if method.kind == "db":
        result["db_level"] = _resolved_level(W, method.level)
    if truth is not None:
        result["init_loss"] = misclassification_loss(e0, truth)
        result["loss"] = misclassification_loss(fit.labels, truth)
    result["config"] = dict(command="fit", matrix=args.matrix, edges=args.edges, K=args.k,
                            init=args.init, T=args.T, tol=args.tol, inner_max=args.inner_max,
                            seed=args.seed, restarts=args.restarts, backend=backend_name())
    if args.labels_out:
        write_labels(args.labels_out, fit.labels)
    _dump(result, args.out)


def _sweep_config(args) -> ExperimentConfig:
    d = {}
    if args.config:
        with open(args.config) as fh:
            d = json.load(fh)
        if not isinstance(d, dict):
            raise InvalidParameterError("config file must hold a JSON object")
    overrides = {
        "n": args.n, "K": args.k, "pi": args.pi, "sigma2": args.sigma2, "T": args.T,
        "inner_tol": args.tol, "replications": args.reps, "master_seed": args.seed,
        "methods": args.init, "out": args.out, "workers": args.workers,
        "generator": args.generator, "alpha": args.alpha, "b_param": args.b_param,
    }
    for key, value in overrides.items():
        if value is not None:
            d[key] = value
    if args.a is not None:
        b = 0.0 if args.b is None else args.b
        d["signal"] = [[a, b] for a in args.a]
    d.setdefault("workers", os.cpu_count() or 1)
    if isinstance(d.get("n"), list) and len(d["n"]) == 1:
        d["n"] = d["n"][0]
    return ExperimentConfig.from_dict(d)


def cmd_simulate(args):
    cfg = _sweep_config(args)
    result = run_sweep(cfg)
    run_info = {"db_levels": {str(n): auto_level(n) for n in cfg.ns}, "backend": backend_name(),
                "version": __version__}
    if cfg.out:
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "sweep.csv").write_text(result.to_csv())
        (out / "timing.csv").write_text(result.timing_csv())
        _dump(cfg.to_dict(), out / "config.json")
        _dump(run_info, out / "run_info.json")
    else:
        sys.stdout.write(result.to_csv())
    failed = sum(r["failed"] for r in result.rows)
    if failed:
        print(f"warning: {failed} replication(s) failed", file=sys.stderr)


def cmd_bounds(args):
    if args.kind == "balanced":
        gamma = args.gamma[0] if args.gamma else None
        if gamma is None or len(args.gamma) != 1:
            raise UsageError("balanced bounds need a single --gamma")
        rep = balanced_bounds(args.k, args.n, args.a, args.b, args.sigma2, gamma)
        _dump(rep.to_dict(), args.out)
    elif args.kind == "unbalanced":
        if not args.pi or len(args.pi) != 2 or not args.gamma or len(args.gamma) not in (1, 2):
            raise UsageError("unbalanced bounds need --pi p1,p2 and --gamma g1[,g2]")
        gamma = args.gamma * 2 if len(args.gamma) == 1 else args.gamma
        ahat = args.a if args.ahat is None else args.ahat
        bhat = args.b if args.bhat is None else args.bhat
        s2hat = args.sigma2 if args.sigma2hat is None else args.sigma2hat
        rep = unbalanced_bounds(args.pi, gamma, (args.a, args.b, args.sigma2),
                                (ahat, bhat, s2hat), args.n)
        _dump(rep.to_dict(), args.out)
    else:
        pi = args.pi or [0.5, 0.5]
        gamma = args.gamma or [0.7]
        gamma = gamma * 2 if len(gamma) == 1 else gamma
        if len(pi) != 2 or len(gamma) != 2:
            raise UsageError("heatmap needs two community proportions and match rates")
        ab = args.ab_grid if args.ab_grid is not None else list(np.round(np.linspace(0.1, 1.0, 10), 10))
        dl = args.delta_grid if args.delta_grid is not None else list(np.round(np.linspace(0.0, 0.5, 11), 10))
        _emit(bound_heatmap(pi, gamma, args.n, args.sigma2, ab, dl).to_csv(), args.out)


def cmd_analyze(args):
    W = _load_network(args)
    reference = read_labels(args.ref_labels) if args.ref_labels else None
    bundle = analyze(W, args.k_range, args.methods, reference, args.level, args.seed,
                     args.T, args.tol, args.restarts)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "likelihood.csv").write_text(bundle.likelihood_csv())
    (out / "mismatch.csv").write_text(bundle.mismatch_csv())
    for m, rows in bundle.overlap.items():
        (out / f"overlap_{m}.csv").write_text(overlap_csv(rows))
        write_labels(out / f"labels_matched_{m}.csv", bundle.matched[m])
    for (K, m), e in bundle.labels.items():
        write_labels(out / f"labels_K{K}_{m}.csv", e)
    config = dict(command="analyze", matrix=args.matrix, edges=args.edges, k_range=args.k_range,
                  methods=list(bundle.methods), ref_labels=args.ref_labels, level=args.level,
                  db_level=bundle.db_level, seed=args.seed, T=args.T, tol=args.tol,
                  restarts=args.restarts)
    _dump(config, out / "config.json")


def cmd_eval(args):
    est = read_labels(args.labels)
    ref = read_labels(args.ref_labels)
    loss, perm, A = loss_with_permutation(est, ref)
    _dump({"loss": loss,
           "permutation": [int(p) + 1 for p in perm],
           "confusion_counts": A.tolist()}, args.out)


def cmd_overlap(args):
    rows = overlap_table(read_labels(args.labels), read_labels(args.ref_labels))
    _emit(overlap_csv(rows), args.out)


def cmd_average(args):
    if not args.matrix:
        raise UsageError("--matrix needs at least one file")
    W = average_networks([read_matrix(p) for p in args.matrix])
    if args.out:
        write_matrix(args.out, W)
    else:
        np.savetxt(sys.stdout, W.weights, delimiter=",", fmt="%.17g")


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wsbmpl", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def fit_opts(sp, T=20):
        sp.add_argument("--T", type=int, default=T, help="outer PL iterations")
        sp.add_argument("--tol", type=float, default=1e-6, help="inner EM tolerance")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--restarts", type=int, default=20, help="k-means restarts")

    def net_opts(sp, many=False):
        sp.add_argument("--matrix", nargs="+" if many else None, help="CSV weight matrix")
        sp.add_argument("--edges", help="TSV edge list (i, j, w; 0-based)")
        sp.add_argument("--n", type=int, help="node count for --edges")

    g = sub.add_parser("generate", help="sample a network and its true labels")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--a", type=float, default=1.0)
    g.add_argument("--b", type=float, default=0.0)
    g.add_argument("--sigma2", type=float, default=1.0)
    g.add_argument("--pi", type=_floats)
    g.add_argument("--generator", choices=("gaussian", "heavy_tail", "bimodal"), default="gaussian")
    g.add_argument("--alpha", type=float, default=1.0)
    g.add_argument("--b-param", type=float, default=0.3)
    g.add_argument("--fixed-counts", action="store_true", help="exact community sizes")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True, help="output directory")
    g.set_defaults(func=cmd_generate)

    f = sub.add_parser("fit", help="run the pseudo-likelihood algorithm")
    net_opts(f)
    f.add_argument("--k", type=int, required=True)
    f.add_argument("--init", default="spectral", help="spectral | db[:L] | oracle:g[,g2..] | labels:FILE")
    f.add_argument("--ref-labels", help="true labels (needed by oracle init; enables loss)")
    f.add_argument("--inner-max", type=int, default=100)
    f.add_argument("--labels-out", help="write fitted labels here")
    f.add_argument("--out", help="JSON result file (default stdout)")
    fit_opts(f)
    f.set_defaults(func=cmd_fit)

    s = sub.add_parser("simulate", help="replicated simulation sweep")
    s.add_argument("--config", help="JSON experiment config; flags override it")
    s.add_argument("--n", type=int, nargs="+")
    s.add_argument("--k", type=int)
    s.add_argument("--a", type=_floats, help="within means (signal grid)")
    s.add_argument("--b", type=float, help="between mean (default 0)")
    s.add_argument("--sigma2", type=float)
    s.add_argument("--pi", type=_floats)
    s.add_argument("--generator", choices=("gaussian", "heavy_tail", "bimodal"))
    s.add_argument("--alpha", type=_floats, help="heavy-tail mixing grid")
    s.add_argument("--b-param", type=_floats, help="bimodal grid")
    s.add_argument("--init", action="append", help="initializer; repeat for several")
    s.add_argument("--T", type=int)
    s.add_argument("--tol", type=float)
    s.add_argument("--reps", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--workers", type=int)
    s.add_argument("--out", help="output directory (default: CSV to stdout)")
    s.set_defaults(func=cmd_simulate)

    b = sub.add_parser("bounds", help="evaluate the theoretical error bounds")
    b.add_argument("kind", choices=("balanced", "unbalanced", "heatmap"))
    b.add_argument("--k", type=int, default=2)
    b.add_argument("--n", type=float, default=100)
    b.add_argument("--a", type=float, default=1.0)
    b.add_argument("--b", type=float, default=0.0)
    b.add_argument("--sigma2", type=float, default=1.0)
    b.add_argument("--gamma", type=_floats)
    b.add_argument("--pi", type=_floats)
    b.add_argument("--ahat", type=float)
    b.add_argument("--bhat", type=float)
    b.add_argument("--sigma2hat", type=float)
    b.add_argument("--ab-grid", type=_floats)
    b.add_argument("--delta-grid", type=_floats)
    b.add_argument("--out")
    b.set_defaults(func=cmd_bounds)

    a = sub.add_parser("analyze", help="fit several methods over a range of K")
    net_opts(a)
    a.add_argument("--k-range", type=_k_range, default=list(range(2, 21)))
    a.add_argument("--methods", type=lambda t: [m.strip() for m in t.split(",") if m.strip()],
                   default=["sc", "db", "pl-sc", "pl-db"])
    a.add_argument("--ref-labels")
    a.add_argument("--level", type=_level, default="auto", help="DB discretization level")
    a.add_argument("--out", required=True, help="output directory")
    fit_opts(a)
    a.set_defaults(func=cmd_analyze)

    e = sub.add_parser("eval", help="misclassification loss against reference labels")
    e.add_argument("--labels", required=True)
    e.add_argument("--ref-labels", required=True)
    e.add_argument("--out")
    e.set_defaults(func=cmd_eval)

    o = sub.add_parser("overlap", help="overlap table against reference labels")
    o.add_argument("--labels", required=True)
    o.add_argument("--ref-labels", required=True)
    o.add_argument("--out")
    o.set_defaults(func=cmd_overlap)

    v = sub.add_parser("average", help="entrywise mean of weight matrices")
    v.add_argument("--matrix", nargs="+", required=True)
    v.add_argument("--out")
    v.set_defaults(func=cmd_average)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (ValueError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
