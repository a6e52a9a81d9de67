"""Exploratory fits of an observed weighted network over a range of K."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, InvalidParameterError
from .initializers import discretize, spectral_init
from .metrics import mismatch_proportion, overlap_table, relabel_to_reference
from .model import (Labeling, WeightedNetwork, as_labeling, derive_seed,
                    homogeneous_params, make_rng, sample_weights)
from .pl_core import complete_log_likelihood, estimate_block_params, pl_fit

METHODS = ("sc", "db", "pl-sc", "pl-db")


def average_networks(networks) -> WeightedNetwork:
    """Entrywise arithmetic mean of same-sized networks."""
    mats = [n.weights if isinstance(n, WeightedNetwork) else np.asarray(n, dtype=float)
            for n in networks]
    if not mats:
        raise InvalidInputError("no networks to average")
    shape = mats[0].shape
    for i, m in enumerate(mats):
        if m.shape != shape:
            raise InvalidInputError(f"network {i} has shape {m.shape}, expected {shape}")
    return WeightedNetwork.from_array(np.mean(np.stack(mats), axis=0))


def fitted_log_likelihood(W, e) -> float:
    """Complete log-likelihood at the closed-form estimates for labels ``e``."""
    return complete_log_likelihood(W, e, estimate_block_params(W, e))


@dataclass
class AnalysisBundle:
    k_range: list
    methods: list
    labels: dict                      # (K, method) -> Labeling
    likelihood: list                  # rows: K, method, loglik
    mismatch: list                    # rows: K, method1, method2, proportion
    overlap: dict = field(default_factory=dict)    # method -> list[OverlapRow]
    matched: dict = field(default_factory=dict)    # method -> Labeling renamed to reference ids
    db_level: int | None = None

    def likelihood_csv(self) -> str:
        lines = ["K,method,complete_loglik"]
        lines += [f"{k},{m},{v!r}" for k, m, v in self.likelihood]
        return "\n".join(lines) + "\n"

    def mismatch_csv(self) -> str:
        lines = ["K,method1,method2,proportion"]
        lines += [f"{k},{a},{b},{v!r}" for k, a, b, v in self.mismatch]
        return "\n".join(lines) + "\n"


def overlap_csv(rows) -> str:
    lines = ["est,ref_list,overlap"]
    for r in rows:
        refs = ";".join(str(x) for x in r.best_ref_communities)
        val = "NA" if r.overlap is None else f"{r.overlap:.6f}"
        lines.append(f"{r.est_community},{refs},{val}")
    return "\n".join(lines) + "\n"


def analyze(W, k_range, methods=METHODS, reference=None, level="auto", seed: int = 0,
            T: int = 20, inner_tol: float = 1e-6, restarts: int = 20) -> AnalysisBundle:
    """Fit every method for every K and compare the solutions.

    For each K: complete log-likelihoods of each method's labels, pairwise
    mismatch proportions, and, when ``reference`` is given and has K
    communities, overlap tables after matching community ids to it.
    """
    W = W if isinstance(W, WeightedNetwork) else WeightedNetwork.from_array(W)
    methods = [m.lower() for m in methods]
    bad = [m for m in methods if m not in METHODS]
    if bad:
        raise InvalidParameterError(f"unknown methods {bad}; choose from {METHODS}")
    k_range = [int(k) for k in k_range]
    if not k_range:
        raise InvalidParameterError("k_range must be non-empty")
    if any(k < 1 or k > W.n for k in k_range):
        raise InvalidParameterError(f"every K must lie in 1..{W.n}")
    if reference is not None:
        reference = as_labeling(reference)
        if reference.n != W.n:
            raise InvalidInputError(f"reference has {reference.n} labels for {W.n} nodes")

    need_sc = any(m in ("sc", "pl-sc") for m in methods)
    need_db = any(m in ("db", "pl-db") for m in methods)
    db_matrix, db_level = (discretize(W, level) if need_db else (None, None))

    labels, likelihood, mismatch = {}, [], []
    for K in k_range:
        init = {}
        if need_sc:
            init["sc"] = spectral_init(W, K, restarts, derive_seed(seed, K, 0))
        if need_db:
            init["db"] = spectral_init(db_matrix, K, restarts, derive_seed(seed, K, 1))
        for m in methods:
            if m.startswith("pl-"):
                e = pl_fit(W, init[m[3:]], K, T, inner_tol).labels
            else:
                e = init[m]
            labels[(K, m)] = e
            likelihood.append((K, m, fitted_log_likelihood(W, e)))
        for a, b in itertools.combinations(methods, 2):
            mismatch.append((K, a, b, mismatch_proportion(labels[(K, a)], labels[(K, b)])))

    bundle = AnalysisBundle(k_range, methods, labels, likelihood, mismatch, db_level=db_level)
    if reference is not None and reference.k in k_range:
        for m in methods:
            matched = relabel_to_reference(labels[(reference.k, m)], reference)
            bundle.matched[m] = matched
            bundle.overlap[m] = overlap_table(matched, reference)
    return bundle


ATLAS_SIZES = (30, 5, 14, 13, 58, 5, 31, 25, 18, 13, 9, 11, 4, 28)


def power_stand_in(a: float = 1.0, b: float = 0.0, sigma2: float = 0.04, seed: int = 0,
                   sizes=ATLAS_SIZES):
    """Synthetic planted network; by default 264 nodes in 14 atlas-like communities.

    Pass ``sizes`` to change the community sizes (e.g. a balanced split).
    """
    sizes = np.asarray(sizes, dtype=np.int64)
    if sizes.ndim != 1 or sizes.size < 1 or np.any(sizes < 1):
        raise InvalidParameterError("sizes must be a non-empty list of positive counts")
    rng = make_rng(seed)
    z = rng.permutation(np.repeat(np.arange(sizes.size), sizes))
    B, S = homogeneous_params(sizes.size, a, b, sigma2)
    return sample_weights(z, B, S, rng), Labeling.from_index(z, sizes.size)
