"""Replicated simulation sweeps over a parameter grid.

Each (cell, replication) pair gets its own seed derived from the master
seed, so results do not depend on scheduling or on the worker count.
"""
from __future__ import annotations

import itertools
import json
import math
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np
from threadpoolctl import threadpool_limits

from .errors import InvalidParameterError
from .initializers import InitMethod, build_initial, parse_init
from .metrics import misclassification_loss
from .model import EdgeDistributionSpec, derive_seed, generate_network
from .pl_core import pl_fit

GENERATORS = ("gaussian", "heavy_tail", "bimodal")


@dataclass
class ExperimentConfig:
    """Sweep design.  Unknown keys in a JSON config are rejected."""

    n: int | list = 500
    K: int = 3
    pi: list | None = None
    signal: list = field(default_factory=lambda: [0.1])
    sigma2: float = 1.0
    generator: str = "gaussian"
    alpha: list = field(default_factory=lambda: [1.0])
    b_param: list = field(default_factory=lambda: [0.3])
    methods: list = field(default_factory=lambda: ["oracle:0.7"])
    T: int = 20
    inner_tol: float = 1e-6
    inner_max: int = 100
    replications: int = 100
    master_seed: int = 0
    fixed_counts: bool = True
    restarts: int = 20
    out: str | None = None
    workers: int = 1

    def __post_init__(self):
        if self.replications < 1:
            raise InvalidParameterError("replications must be >= 1")
        if self.generator not in GENERATORS:
            raise InvalidParameterError(f"generator must be one of {GENERATORS}")
        if not self.methods:
            raise InvalidParameterError("at least one init method is required")
        for m in self.methods:
            parse_init(m)
        if not self.ns or not self.grid_values():
            raise InvalidParameterError("grids must be non-empty")
        if self.K < 1:
            raise InvalidParameterError("K must be >= 1")
        if not self.sigma2 > 0:
            raise InvalidParameterError("sigma2 must be positive")

    @property
    def ns(self) -> list:
        return [int(x) for x in (self.n if isinstance(self.n, (list, tuple)) else [self.n])]

    @property
    def proportions(self) -> list:
        return list(self.pi) if self.pi is not None else [1.0 / self.K] * self.K

    def grid_values(self) -> list:
        if self.generator == "heavy_tail":
            return [float(x) for x in self.alpha]
        if self.generator == "bimodal":
            return [float(x) for x in self.b_param]
        out = []
        for s in self.signal:
            a, b = (float(s[0]), float(s[1])) if isinstance(s, (list, tuple)) else (float(s), 0.0)
            out.append((a, b))
        return out

    def cells(self) -> list:
        return list(itertools.product(self.ns, self.grid_values()))

    def init_methods(self) -> list[InitMethod]:
        return [parse_init(m) for m in self.methods]

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise InvalidParameterError(f"unknown config keys: {sorted(extra)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return asdict(self)


def _cell_params(cfg: ExperimentConfig, cell) -> dict:
    n, g = cell
    row = {"n": n, "K": cfg.K, "a": "NA", "b": "NA", "sigma2": "NA", "alpha": "NA", "b_param": "NA"}
    if cfg.generator == "gaussian":
        row.update(a=g[0], b=g[1], sigma2=cfg.sigma2)
    elif cfg.generator == "heavy_tail":
        row["alpha"] = g
    else:
        row["b_param"] = g
    return row


def _edge_spec(cfg: ExperimentConfig, g) -> EdgeDistributionSpec:
    if cfg.generator == "gaussian":
        return EdgeDistributionSpec.homogeneous(g[0], g[1], cfg.sigma2)
    if cfg.generator == "heavy_tail":
        return EdgeDistributionSpec.heavy_tail(g)
    return EdgeDistributionSpec.bimodal_mix(g)


def run_replication(cfg: ExperimentConfig, cell_idx: int, rep: int) -> list[dict]:
    """Generate one network and score every initializer and its PL refinement on it."""
    n, g = cfg.cells()[cell_idx]
    seed = derive_seed(cfg.master_seed, cell_idx, rep)
    records = []
    with threadpool_limits(limits=1):
        try:
            W, truth = generate_network(n, cfg.proportions, _edge_spec(cfg, g),
                                        derive_seed(seed, 0), cfg.fixed_counts)
        except Exception:
            err = traceback.format_exc(limit=1).strip().splitlines()[-1]
            for method in cfg.init_methods():
                for name in (method.name, "PL-" + method.name):
                    records.append(dict(cell=cell_idx, method=name, rep=rep,
                                        loss=None, seconds=None, error=err))
            return records
        for mi, method in enumerate(cfg.init_methods()):
            try:
                t0 = time.perf_counter()
                e0 = build_initial(method, W, cfg.K, truth, derive_seed(seed, 1, mi), cfg.restarts)
                t1 = time.perf_counter()
                records.append(dict(cell=cell_idx, method=method.name, rep=rep,
                                    loss=misclassification_loss(e0, truth), seconds=t1 - t0, error=None))
            except Exception:
                err = traceback.format_exc(limit=1).strip().splitlines()[-1]
                for name in (method.name, "PL-" + method.name):
                    records.append(dict(cell=cell_idx, method=name, rep=rep,
                                        loss=None, seconds=None, error=err))
                continue
            try:
                fit = pl_fit(W, e0, cfg.K, cfg.T, cfg.inner_tol, cfg.inner_max)
                records.append(dict(cell=cell_idx, method="PL-" + method.name, rep=rep,
                                    loss=misclassification_loss(fit.labels, truth),
                                    seconds=fit.wall_seconds, error=None))
            except Exception:
                err = traceback.format_exc(limit=1).strip().splitlines()[-1]
                records.append(dict(cell=cell_idx, method="PL-" + method.name, rep=rep,
                                    loss=None, seconds=None, error=err))
    return records


def _task(args):
    cfg_dict, cell_idx, rep = args
    return run_replication(ExperimentConfig.from_dict(cfg_dict), cell_idx, rep)


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "NA"
    if isinstance(x, float):
        return repr(x)
    return str(x)


@dataclass
class SweepResult:
    config: ExperimentConfig
    rows: list
    records: list

    LOSS_COLUMNS = ("n", "K", "a", "b", "sigma2", "alpha", "b_param", "method",
                    "mean_loss", "se_loss", "replications", "failed")

    def to_csv(self) -> str:
        """Loss table; contains no timings, so it is byte-reproducible."""
        lines = [",".join(self.LOSS_COLUMNS)]
        for r in self.rows:
            lines.append(",".join(_fmt(r[c]) for c in self.LOSS_COLUMNS))
        return "\n".join(lines) + "\n"

    def timing_csv(self) -> str:
        cols = ("n", "K", "a", "b", "sigma2", "alpha", "b_param", "method", "mean_seconds", "replications")
        lines = [",".join(cols)]
        for r in self.rows:
            lines.append(",".join(_fmt(r[c]) for c in cols))
        return "\n".join(lines) + "\n"

    def mean_loss(self, method: str, **params) -> list:
        return [r["mean_loss"] for r in self.rows
                if r["method"] == method and all(r[k] == v for k, v in params.items())]


def _aggregate(cfg: ExperimentConfig, records: list) -> list:
    names = []
    for m in cfg.init_methods():
        names += [m.name, "PL-" + m.name]
    order = {name: i for i, name in enumerate(names)}
    records = sorted(records, key=lambda r: (r["cell"], order[r["method"]], r["rep"]))
    rows = []
    cells = cfg.cells()
    for (ci, name), group in itertools.groupby(records, key=lambda r: (r["cell"], r["method"])):
        group = list(group)
        ok = [r for r in group if r["loss"] is not None]
        losses = np.array([r["loss"] for r in ok], dtype=float)
        secs = np.array([r["seconds"] for r in ok], dtype=float)
        k = losses.size
        row = _cell_params(cfg, cells[ci])
        row.update(
            method=name,
            mean_loss=float(losses.mean()) if k else None,
            se_loss=float(losses.std(ddof=1) / math.sqrt(k)) if k > 1 else None,
            mean_seconds=float(secs.mean()) if k else None,
            replications=k,
            failed=len(group) - k,
        )
        rows.append(row)
    return rows


def run_sweep(cfg: ExperimentConfig, workers: int | None = None) -> SweepResult:
    """Run every grid cell x initializer x replication and aggregate losses."""
    workers = cfg.workers if workers is None else workers
    tasks = [(ci, r) for ci in range(len(cfg.cells())) for r in range(cfg.replications)]
    if workers <= 1:
        batches = [run_replication(cfg, ci, r) for ci, r in tasks]
    else:
        payload = cfg.to_dict()
        with ProcessPoolExecutor(max_workers=workers) as pool:
            batches = list(pool.map(_task, [(payload, ci, r) for ci, r in tasks],
                                    chunksize=max(1, len(tasks) // (4 * workers))))
    records = [rec for batch in batches for rec in batch]
    return SweepResult(cfg, _aggregate(cfg, records), records)
