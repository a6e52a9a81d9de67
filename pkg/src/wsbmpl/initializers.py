"""Initial labelings: spectral clustering, discretize-then-cluster, and oracles."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from . import kernels
from .errors import ConvergenceError, DegeneracyWarning, InvalidParameterError
from .model import Labeling, as_labeling, as_network, largest_remainder, make_rng
from .pl_core import confusion_matrix

DENSE_EIGEN_MAX_N = 200


# --------------------------------------------------------------------------
# k-means
# --------------------------------------------------------------------------

def _kmeanspp(X, k, rng):
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    d2 = ((X - centers[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = rng.choice(n, p=d2 / total)
        else:
            idx = rng.integers(n)
        centers[c] = X[idx]
        d2 = np.minimum(d2, ((X - centers[c]) ** 2).sum(axis=1))
    return centers


def _lloyd(X, centers, max_iter=300, rtol=1e-8):
    """Lloyd iterations; returns the last assignment, which has no empty cluster."""
    k = centers.shape[0]
    prev = np.inf
    for _ in range(max_iter):
        labels, dist = kernels.nearest_center(X, centers)
        sizes = np.bincount(labels, minlength=k)
        for c in np.nonzero(sizes == 0)[0]:
            far = int(np.argmax(dist))
            labels[far] = c
            dist[far] = 0.0
            sizes = np.bincount(labels, minlength=k)
        inertia = float(dist.sum())
        centers = np.zeros_like(centers)
        np.add.at(centers, labels, X)
        centers /= sizes[:, None]
        if np.isfinite(prev) and prev - inertia <= rtol * prev:
            break
        prev = inertia
    return labels, inertia


def kmeans(X, k: int, restarts: int = 20, seed=0) -> np.ndarray:
    """Best-of-``restarts`` Lloyd k-means with k-means++ seeding; 0-based labels."""
    X = np.ascontiguousarray(X, dtype=float)
    rng = make_rng(seed)
    best_labels, best_inertia = None, np.inf
    for _ in range(max(1, restarts)):
        labels, inertia = _lloyd(X, _kmeanspp(X, k, rng))
        if inertia < best_inertia:
            best_labels, best_inertia = labels, inertia
    return best_labels


# --------------------------------------------------------------------------
# Spectral clustering
# --------------------------------------------------------------------------

def top_eigenvectors(A: np.ndarray, k: int, rng=None) -> np.ndarray:
    """Eigenvectors of symmetric ``A`` for the ``k`` largest |eigenvalues|."""
    n = A.shape[0]
    if n <= DENSE_EIGEN_MAX_N or k >= n // 2:
        vals, vecs = scipy.linalg.eigh(A)
        order = np.argsort(-np.abs(vals), kind="stable")[:k]
        return vecs[:, order]
    rng = make_rng(0 if rng is None else rng)
    v0 = rng.standard_normal(n)
    try:
        vals, vecs = scipy.sparse.linalg.eigsh(A, k=k, which="LM", v0=v0, maxiter=50 * n)
    except scipy.sparse.linalg.ArpackNoConvergence as exc:
        raise ConvergenceError(
            f"eigensolver did not converge for n={n}, k={k}: "
            f"{len(exc.eigenvalues)} of {k} eigenpairs found"
        ) from exc
    order = np.argsort(-np.abs(vals), kind="stable")
    return vecs[:, order]


def spectral_init(W, K: int, restarts: int = 20, seed=0) -> Labeling:
    """k-means on the rows of the top-|eigenvalue| eigenvectors of ``W``."""
    A = W.weights if hasattr(W, "weights") else np.asarray(W, dtype=float)
    n = A.shape[0]
    if not 1 <= K <= n:
        raise InvalidParameterError(f"need 1 <= K <= n, got K={K}, n={n}")
    if K == 1:
        return Labeling(np.ones(n, dtype=np.int64), 1)
    rng = make_rng(seed)
    X = top_eigenvectors(A, K, rng)
    return Labeling.from_index(kmeans(X, K, restarts, rng), K)


# --------------------------------------------------------------------------
# Discretization-based initializer
# --------------------------------------------------------------------------

def auto_level(n: int) -> int:
    """Discretization level ``max(2, floor(0.4 * (ln ln n)^4))``."""
    if n < 3:
        return 2
    return max(2, math.floor(0.4 * math.log(math.log(n)) ** 4))


def discretize(W, L="auto"):
    """Quantile-bin the off-diagonal weights into ``L`` levels.

    Returns ``(M, L_used)`` where ``M`` replaces each weight by the midpoint
    of its bin.  When the weights take at most ``L`` distinct values every
    value is its own level and ``M`` equals ``W``.
    """
    W = as_network(W)
    n = W.n
    L = auto_level(n) if L in (None, "auto") else int(L)
    if L < 2:
        raise InvalidParameterError(f"discretization level must be >= 2, got {L}")
    iu, ju = np.triu_indices(n, 1)
    w = W.weights[iu, ju]
    atoms = np.unique(w)
    if atoms.size <= L:
        if atoms.size < L:
            warnings.warn(f"only {atoms.size} distinct weights; level reduced from {L}",
                          DegeneracyWarning, stacklevel=2)
            L = atoms.size
        if L < 2:
            raise InvalidParameterError("fewer than 2 distinct weights; cannot discretize")
        values = w
    else:
        edges = np.quantile(w, np.linspace(0.0, 1.0, L + 1))
        bins = np.searchsorted(edges[1:-1], w, side="right")
        mids = 0.5 * (edges[:-1] + edges[1:])
        used = np.unique(bins)
        if used.size < L:
            warnings.warn(f"{L - used.size} empty quantile bins dropped",
                          DegeneracyWarning, stacklevel=2)
            L = used.size
        values = mids[bins]
    M = np.zeros((n, n))
    M[iu, ju] = values
    M[ju, iu] = values
    return M, L


def db_init(W, K: int, L="auto", restarts: int = 20, seed=0) -> Labeling:
    """Spectral clustering of the level-weighted sum of bin indicator matrices."""
    M, _ = discretize(W, L)
    return spectral_init(M, K, restarts, seed)


# --------------------------------------------------------------------------
# Oracle initializers
# --------------------------------------------------------------------------

MODES = ("balanced_spread", "pairwise_swap")


@dataclass(frozen=True)
class OracleSpec:
    """Per-community fraction of true labels kept, and where the rest go.

    ``balanced_spread`` spreads the misclassified nodes of each community as
    evenly as possible over the other labels; ``pairwise_swap`` sends them
    all to the next label (cyclically), which for K=2 is the two-community
    design with separate match rates.
    """

    gamma: tuple
    mode: str = "balanced_spread"

    def __post_init__(self):
        g = tuple(float(x) for x in np.atleast_1d(self.gamma))
        if any(not 0.0 < x <= 1.0 for x in g):
            raise InvalidParameterError(f"match proportions must lie in (0, 1], got {g}")
        if self.mode not in MODES:
            raise InvalidParameterError(f"unknown oracle mode {self.mode!r}")
        object.__setattr__(self, "gamma", g)

    def per_community(self, K: int) -> np.ndarray:
        if len(self.gamma) == 1:
            return np.full(K, self.gamma[0])
        if len(self.gamma) != K:
            raise InvalidParameterError(f"got {len(self.gamma)} match proportions for K={K}")
        return np.asarray(self.gamma)


def oracle_init(c, spec: OracleSpec, seed=0):
    """Corrupt the true labels ``c`` in a controlled way.

    Community ``k`` keeps ``round(gamma_k * n_k)`` randomly chosen nodes.
    Returns the labeling and its realized confusion matrix against ``c``.
    """
    c = as_labeling(c)
    K = c.k
    gamma = spec.per_community(K)
    rng = make_rng(seed)
    z = c.index.copy()
    if K > 1:
        for k in range(K):
            members = rng.permutation(np.nonzero(c.index == k)[0])
            keep = math.floor(gamma[k] * members.size + 0.5)
            wrong = members[keep:]
            if wrong.size == 0:
                continue
            if spec.mode == "pairwise_swap":
                z[wrong] = (k + 1) % K
                continue
            others = rng.permutation([l for l in range(K) if l != k])
            counts = largest_remainder(wrong.size, np.ones(K - 1))
            z[wrong] = np.repeat(others, counts)
    e = Labeling.from_index(z, K)
    return e, confusion_matrix(e, c)


# --------------------------------------------------------------------------
# Initializer strings, e.g. "spectral", "db:10", "oracle:0.9,0.5", "labels:init.csv"
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class InitMethod:
    kind: str
    level: object = "auto"
    gamma: tuple = ()
    path: str | None = None

    @property
    def name(self) -> str:
        if self.kind == "spectral":
            return "SC"
        if self.kind == "db":
            return "DB" if self.level == "auto" else f"DB({self.level})"
        if self.kind == "oracle":
            return "ORACLE(" + ",".join(f"{g:g}" for g in self.gamma) + ")"
        return "LABELS"


def parse_init(text: str) -> InitMethod:
    kind, _, arg = text.strip().partition(":")
    kind = kind.lower()
    if kind in ("spectral", "sc"):
        return InitMethod("spectral")
    if kind == "db":
        if not arg or arg == "auto":
            return InitMethod("db")
        try:
            return InitMethod("db", level=int(arg))
        except ValueError:
            raise InvalidParameterError(f"bad discretization level in {text!r}") from None
    if kind == "oracle":
        try:
            gamma = tuple(float(x) for x in arg.split(",") if x.strip())
        except ValueError:
            raise InvalidParameterError(f"bad match proportions in {text!r}") from None
        if not gamma:
            raise InvalidParameterError(f"oracle initializer needs proportions: {text!r}")
        OracleSpec(gamma)
        return InitMethod("oracle", gamma=gamma)
    if kind == "labels" and arg:
        return InitMethod("labels", path=arg)
    raise InvalidParameterError(f"unknown initializer {text!r}")


def build_initial(method: InitMethod, W, K: int, truth=None, seed=0,
                  restarts: int = 20) -> Labeling:
    """Run the initializer described by ``method``."""
    if method.kind == "spectral":
        return spectral_init(W, K, restarts, seed)
    if method.kind == "db":
        return db_init(W, K, method.level, restarts, seed)
    if method.kind == "oracle":
        if truth is None:
            raise InvalidParameterError("oracle initializer needs the true labels")
        mode = "pairwise_swap" if len(method.gamma) > 1 and K == 2 else "balanced_spread"
        return oracle_init(truth, OracleSpec(method.gamma, mode), seed)[0]
    from .io import read_labels

    return read_labels(method.path, K)
