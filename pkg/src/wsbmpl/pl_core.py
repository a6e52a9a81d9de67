"""Block sums, closed-form estimates and the pseudo-likelihood EM fit."""
from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DegeneracyWarning, InvalidInputError, InvalidParameterError
from .model import BlockParams, Labeling, WeightedNetwork, as_labeling, as_network

VAR_FLOOR_REL = 1e-10
PI_FLOOR = 1e-8
EMPTY_COMPONENT_REL = 1e-12


def variance_floor(x) -> float:
    """Smallest variance allowed for data on the scale of ``x``."""
    x = np.asarray(x, dtype=float)
    spread = float(np.var(x)) if x.size else 0.0
    return VAR_FLOOR_REL * (spread + 1e-30)


@dataclass(frozen=True, eq=False)
class BlockSums:
    """Per-node sums of edge weights into each community of ``labels``."""

    s: np.ndarray
    labels: Labeling


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """Joint label proportions; rows index the candidate labeling, columns the reference."""

    r: np.ndarray

    @property
    def k(self) -> int:
        return self.r.shape[0]


@dataclass(frozen=True, eq=False)
class MixtureParams:
    """Gaussian mixture over block-sum rows: weights, means ``P`` and variances ``Lambda``."""

    pi: np.ndarray
    p_mean: np.ndarray
    lambda_var: np.ndarray
    flags: tuple = field(default=())

    @property
    def k(self) -> int:
        return self.pi.size


@dataclass(frozen=True, eq=False)
class Responsibilities:
    tau: np.ndarray
    flags: tuple = field(default=())


@dataclass(eq=False)
class FitResult:
    labels: Labeling
    block_params: BlockParams
    mixture_params: MixtureParams
    pll_trace: list
    inner_iters: list
    converged: list
    wall_seconds: float
    flags: list = field(default_factory=list)

    def to_dict(self) -> dict:
        bp, mp = self.block_params, self.mixture_params
        return {
            "labels": [int(v) for v in self.labels.labels],
            "pi": bp.pi.tolist(),
            "B": bp.b_mean.tolist(),
            "Sigma": bp.sigma2.tolist(),
            "P": mp.p_mean.tolist(),
            "Lambda": mp.lambda_var.tolist(),
            "pll_trace": [float(v) for v in self.pll_trace],
            "inner_iters": [int(v) for v in self.inner_iters],
            "converged": [bool(v) for v in self.converged],
            "flags": sorted(set(self.flags) | set(bp.flags) | set(mp.flags)),
            "wall_seconds": float(self.wall_seconds),
        }


def _onehot(z: np.ndarray, k: int) -> np.ndarray:
    Z = np.zeros((z.size, k))
    Z[np.arange(z.size), z] = 1.0
    return Z


def _check_lengths(W: WeightedNetwork, e: Labeling) -> None:
    if e.n != W.n:
        raise InvalidInputError(f"labeling has length {e.n}, network has {W.n} nodes")


def block_sums(W, e) -> BlockSums:
    """``s[i, k]``: total weight from node ``i`` to nodes labeled ``k``."""
    W, e = as_network(W), as_labeling(e)
    _check_lengths(W, e)
    return BlockSums(W.weights @ _onehot(e.index, e.k), e)


def confusion_matrix(e, c) -> ConfusionMatrix:
    """``R[k, l]`` = fraction of nodes with ``e == k`` and ``c == l``."""
    e, c = as_labeling(e), as_labeling(c)
    if e.n != c.n:
        raise InvalidInputError(f"labelings differ in length: {e.n} vs {c.n}")
    k = max(e.k, c.k)
    counts = np.zeros((k, k))
    np.add.at(counts, (e.index, c.index), 1.0)
    return ConfusionMatrix(counts / e.n)


def estimate_block_params(W, e) -> BlockParams:
    """Closed-form maximisers of the complete likelihood for fixed labels.

    Pairs are pooled over unordered label pairs.  A block with no node
    pairs gets mean 0 and the pooled off-diagonal variance and is flagged.
    """
    W, e = as_network(W), as_labeling(e)
    _check_lengths(W, e)
    z = np.ascontiguousarray(e.index, dtype=np.int64)
    counts, sums = kernels.pair_block_sums(W.weights, z, e.k)
    pi = e.counts() / e.n
    empty = counts == 0
    B = np.where(empty, 0.0, sums / np.where(empty, 1.0, counts))
    sq = kernels.pair_block_sqdev(W.weights, z, B)
    S = sq / np.where(empty, 1.0, counts)
    flags = ()
    if empty.any():
        off = W.offdiag()
        S = np.where(empty, float(np.var(off)) if off.size else 0.0, S)
        flags = ("degenerate_block",)
    return BlockParams(pi, B, S, flags)


def _clamp_pi(pi: np.ndarray, floor: float = PI_FLOOR):
    if np.all(pi >= floor):
        return pi, False
    pi = np.maximum(pi, floor)
    return pi / pi.sum(), True


def mixture_params(r, bhat: BlockParams, n: int, floor: float | None = None) -> MixtureParams:
    """Mixture parameters ``P = n (R B)^T``, ``Lambda = n (R Sigma)^T``.

    Mixing weights are the row sums of ``R``.  ``Lambda`` is clamped below
    at ``floor`` (default ``1e-10 * (n * mean(Sigma) + 1e-30)``).
    """
    R = r.r if isinstance(r, ConfusionMatrix) else np.asarray(r, dtype=float)
    K = bhat.k
    if R.shape != (K, K):
        raise InvalidInputError(f"confusion matrix shape {R.shape} does not match K={K}")
    P = n * (R @ bhat.b_mean).T
    lam = n * (R @ bhat.sigma2).T
    if floor is None:
        floor = VAR_FLOOR_REL * (n * float(np.mean(bhat.sigma2)) + 1e-30)
    flags = ()
    low = lam < floor
    if low.any():
        lam = np.where(low, floor, lam)
        flags = ("lambda_floor",)
    return MixtureParams(R.sum(axis=1), P, lam, flags)


def _log_weights(s: np.ndarray, m: MixtureParams) -> np.ndarray:
    if np.any(m.lambda_var <= 0):
        raise InvalidParameterError("mixture variances must be positive")
    with np.errstate(divide="ignore"):
        log_pi = np.log(m.pi)
    return kernels.component_loglik(
        np.ascontiguousarray(s, dtype=float), log_pi,
        np.ascontiguousarray(m.p_mean), np.ascontiguousarray(m.lambda_var),
    )


def _as_s(s) -> np.ndarray:
    return s.s if isinstance(s, BlockSums) else np.asarray(s, dtype=float)


def e_step(s, m: MixtureParams) -> Responsibilities:
    """Posterior component probabilities for every node, computed in log space."""
    L = _log_weights(_as_s(s), m)
    top = L.max(axis=1, keepdims=True)
    dead = ~np.isfinite(top[:, 0])
    top[dead] = 0.0
    tau = np.exp(L - top)
    total = tau.sum(axis=1, keepdims=True)
    total[dead] = 1.0
    tau /= total
    flags = ()
    if dead.any():
        tau[dead] = 1.0 / m.k
        flags = ("uniform_rows",)
    return Responsibilities(tau, flags)


def m_step(s, tau, prev: MixtureParams | None = None, floor: float | None = None) -> MixtureParams:
    """Responsibility-weighted update of ``(pi, P, Lambda)``.

    Components whose total responsibility is below ``1e-12 * n`` keep their
    previous means and variances (or the pooled ones when ``prev`` is None)
    and have their weight clamped at the mixing-weight floor.
    """
    s = np.ascontiguousarray(_as_s(s), dtype=float)
    tau = np.ascontiguousarray(tau.tau if isinstance(tau, Responsibilities) else tau, dtype=float)
    n = s.shape[0]
    w, P, lam = kernels.weighted_moments(s, tau)
    flags = []
    empty = w < EMPTY_COMPONENT_REL * n
    if empty.any():
        flags.append("empty_component")
        if prev is not None:
            P[empty] = prev.p_mean[empty]
            lam[empty] = prev.lambda_var[empty]
        else:
            P[empty] = s.mean(axis=0)
            lam[empty] = s.var(axis=0)
    pi, clamped = _clamp_pi(w / n)
    if clamped:
        flags.append("pi_floor")
    if floor is None:
        floor = variance_floor(s)
    low = lam < floor
    if low.any():
        lam = np.where(low, floor, lam)
        flags.append("lambda_floor")
    return MixtureParams(pi, P, lam, tuple(flags))


def label_update(tau) -> Labeling:
    """Most probable component per node; ties go to the smallest label."""
    t = tau.tau if isinstance(tau, Responsibilities) else np.asarray(tau)
    return Labeling.from_index(np.argmax(t, axis=1), t.shape[1])


def pseudo_log_likelihood(s, m: MixtureParams) -> float:
    """Gaussian-mixture log-likelihood of the block-sum rows, constants included."""
    L = _log_weights(_as_s(s), m)
    top = L.max(axis=1)
    finite = np.isfinite(top)
    if not finite.all():
        return -np.inf
    return float(np.sum(top + np.log(np.exp(L - top[:, None]).sum(axis=1))))


def complete_log_likelihood(W, e, params: BlockParams, floor: float | None = None) -> float:
    """Log of the joint density of weights and labels, Gaussian constants included.

    Variances below ``floor`` (default: relative floor of the off-diagonal
    weight variance) are raised to it so constant blocks stay finite.
    """
    W, e = as_network(W), as_labeling(e, params.k)
    _check_lengths(W, e)
    nk = e.counts()
    if np.any((params.pi == 0) & (nk > 0)):
        warnings.warn("zero mixing weight on an occupied community", DegeneracyWarning, stacklevel=2)
        return -np.inf
    occupied = nk > 0
    label_term = float(np.sum(nk[occupied] * np.log(params.pi[occupied])))
    z = np.ascontiguousarray(e.index, dtype=np.int64)
    counts, _ = kernels.pair_block_sums(W.weights, z, e.k)
    sq = kernels.pair_block_sqdev(W.weights, z, params.b_mean)
    if floor is None:
        floor = variance_floor(W.offdiag())
    S = np.maximum(params.sigma2, floor)
    iu = np.triu_indices(e.k)
    block = -0.5 * counts * np.log(2.0 * np.pi * S) - sq / (2.0 * S)
    return label_term + float(block[iu].sum())


def _param_change(old: MixtureParams, new: MixtureParams) -> float:
    return max(
        float(np.max(np.abs(new.pi - old.pi))),
        float(np.max(np.abs(new.p_mean - old.p_mean) / (1.0 + np.abs(old.p_mean)))),
        float(np.max(np.abs(new.lambda_var - old.lambda_var) / (1.0 + old.lambda_var))),
    )


def _initial_mixture(W: WeightedNetwork, e: Labeling, lam_floor: float):
    bp = estimate_block_params(W, e)
    m = mixture_params(np.diag(bp.pi), bp, W.n, floor=lam_floor)
    pi, clamped = _clamp_pi(m.pi)
    flags = m.flags + (("pi_floor",) if clamped else ())
    return bp, MixtureParams(pi, m.p_mean, m.lambda_var, flags)


def pl_fit(W, e0, K: int | None = None, T: int = 20, inner_tol: float = 1e-6,
           inner_max: int = 100, reinit: str = "labels") -> FitResult:
    """Pseudo-likelihood EM for community labels.

    Parameters
    ----------
    W : WeightedNetwork or array
        Symmetric weight matrix with zero diagonal.
    e0 : Labeling or 1-based integer vector
        Initial labels.
    K : int, optional
        Number of communities; defaults to ``e0.k``.
    T : int
        Maximum number of outer (label update) iterations.  Stops early when
        the labels no longer change.
    inner_tol, inner_max : float, int
        Stopping rule for the inner EM loop.  ``inner_max=0`` skips the EM
        updates, giving the one-step label update from the initial
        parameter estimates.
    reinit : {"labels", "carry"}
        How each outer iteration after the first starts its EM loop:
        re-estimate from the current labels with a diagonal confusion
        matrix, or carry over the previous mixture parameters.
    """
    if T < 0:
        raise InvalidParameterError(f"T must be >= 0, got {T}")
    if inner_max < 0:
        raise InvalidParameterError(f"inner_max must be >= 0, got {inner_max}")
    if reinit not in ("labels", "carry"):
        raise InvalidParameterError(f"unknown reinit mode {reinit!r}")
    start = time.perf_counter()
    W = as_network(W)
    e = as_labeling(e0, K)
    _check_lengths(W, e)
    n = W.n
    lam_floor = n * variance_floor(W.offdiag())
    flags = []

    bp, m = _initial_mixture(W, e, lam_floor)
    pll_trace, inner_iters, converged = [], [], []
    for t in range(T):
        if t > 0 and reinit == "labels":
            bp, m = _initial_mixture(W, e, lam_floor)
        s = block_sums(W, e)
        done, its = inner_max == 0, 0
        for its in range(1, inner_max + 1):
            new = m_step(s, e_step(s, m), prev=m, floor=lam_floor)
            delta = _param_change(m, new)
            m = new
            flags.extend(m.flags)
            if delta < inner_tol:
                done = True
                break
        tau = e_step(s, m)
        flags.extend(tau.flags)
        new_e = label_update(tau)
        pll_trace.append(pseudo_log_likelihood(s, m))
        inner_iters.append(its)
        converged.append(done)
        unchanged = new_e == e
        e = new_e
        if unchanged:
            break
    if T > 0:
        bp = estimate_block_params(W, e)
    if np.unique(e.labels).size == 1 and e.k > 1:
        flags.append("collapsed")
    return FitResult(
        labels=e,
        block_params=bp,
        mixture_params=m,
        pll_trace=pll_trace,
        inner_iters=inner_iters,
        converged=converged,
        wall_seconds=time.perf_counter() - start,
        flags=sorted(set(flags)),
    )
