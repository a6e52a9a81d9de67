"""Domain types and random generation of weighted networks.

Networks are stored dense.  Labels are 1-based in the public types and
0-based (``Labeling.index``) inside the numeric code.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, InvalidParameterError

_MASK64 = (1 << 64) - 1


# --------------------------------------------------------------------------
# Seeds
# --------------------------------------------------------------------------

def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_seed(master: int, *keys: int) -> int:
    """Mix ``master`` with integer keys into an independent 64-bit seed.

    The result depends only on its arguments, so replication ``r`` of a
    sweep gets the same stream whatever order the replications run in.
    """
    h = splitmix64(int(master) & _MASK64)
    for key in keys:
        h = splitmix64(h ^ (int(key) & _MASK64))
    return h


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


# --------------------------------------------------------------------------
# Types
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class WeightedNetwork:
    """Dense symmetric edge-weight matrix with a zero diagonal."""

    weights: np.ndarray

    def __post_init__(self):
        W = np.array(self.weights, dtype=float)
        if W.ndim != 2 or W.shape[0] != W.shape[1] or W.shape[0] < 1:
            raise InvalidInputError(f"weight matrix must be square, got shape {W.shape}")
        if not np.all(np.isfinite(W)):
            raise InvalidInputError("weight matrix has non-finite entries")
        if np.any(np.diag(W) != 0.0):
            raise InvalidInputError("weight matrix must have a zero diagonal")
        if not np.array_equal(W, W.T):
            raise InvalidInputError("weight matrix is not exactly symmetric")
        W.flags.writeable = False
        object.__setattr__(self, "weights", W)

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @classmethod
    def from_array(cls, W, tol: float = 1e-9) -> "WeightedNetwork":
        """Build a network from a nearly symmetric matrix.

        Asymmetry up to ``tol`` is averaged away and the diagonal is zeroed.
        Larger asymmetry raises, naming the worst entry.
        """
        W = np.asarray(W, dtype=float)
        if W.ndim != 2 or W.shape[0] != W.shape[1]:
            raise InvalidInputError(f"weight matrix must be square, got shape {W.shape}")
        if not np.all(np.isfinite(W)):
            bad = np.argwhere(~np.isfinite(W))[0]
            raise InvalidInputError(f"non-finite weight at ({bad[0]}, {bad[1]})")
        gap = np.abs(W - W.T)
        if gap.size and gap.max() > tol:
            i, j = np.unravel_index(np.argmax(gap), gap.shape)
            raise InvalidInputError(
                f"matrix is not symmetric: |W[{i},{j}] - W[{j},{i}]| = {gap[i, j]:.3g} > {tol:g}"
            )
        W = 0.5 * (W + W.T)
        np.fill_diagonal(W, 0.0)
        return cls(W)

    def offdiag(self) -> np.ndarray:
        iu = np.triu_indices(self.n, 1)
        return self.weights[iu]


@dataclass(frozen=True, eq=False)
class Labeling:
    """Community labels in ``1..k``."""

    labels: np.ndarray
    k: int

    def __post_init__(self):
        lab = np.asarray(self.labels)
        if lab.ndim != 1:
            raise InvalidInputError("labels must be a 1-d vector")
        if lab.size and not np.all(np.equal(np.mod(lab, 1), 0)):
            raise InvalidInputError("labels must be integers")
        lab = lab.astype(np.int64)
        k = int(self.k)
        if k < 1:
            raise InvalidParameterError(f"community count must be >= 1, got {k}")
        if lab.size < k:
            raise InvalidParameterError(f"need n >= K, got n={lab.size}, K={k}")
        if lab.size and (lab.min() < 1 or lab.max() > k):
            raise InvalidInputError(f"labels must lie in 1..{k}")
        lab.flags.writeable = False
        object.__setattr__(self, "labels", lab)
        object.__setattr__(self, "k", k)

    @property
    def n(self) -> int:
        return self.labels.size

    @property
    def index(self) -> np.ndarray:
        """0-based labels."""
        return self.labels - 1

    @classmethod
    def from_index(cls, z, k: int) -> "Labeling":
        return cls(np.asarray(z, dtype=np.int64) + 1, k)

    def counts(self) -> np.ndarray:
        return np.bincount(self.index, minlength=self.k)

    def __len__(self):
        return self.n

    def __eq__(self, other):
        if not isinstance(other, Labeling):
            return NotImplemented
        return self.k == other.k and np.array_equal(self.labels, other.labels)

    __hash__ = None


def as_labeling(e, k: int | None = None) -> Labeling:
    """Coerce a Labeling or a 1-based integer vector."""
    if isinstance(e, Labeling):
        if k is not None and k != e.k:
            return Labeling(e.labels, k)
        return e
    lab = np.asarray(e, dtype=np.int64)
    return Labeling(lab, int(lab.max()) if k is None else k)


def as_network(W) -> WeightedNetwork:
    return W if isinstance(W, WeightedNetwork) else WeightedNetwork(W)


def _check_pi(pi) -> np.ndarray:
    pi = np.asarray(pi, dtype=float)
    if pi.ndim != 1 or pi.size < 1:
        raise InvalidParameterError("pi must be a non-empty vector")
    if np.any(pi < 0) or abs(pi.sum() - 1.0) > 1e-12:
        raise InvalidParameterError(f"pi must be a probability vector, got {pi}")
    return pi


@dataclass(frozen=True, eq=False)
class BlockParams:
    """Community proportions, block means and block variances.

    ``sigma2`` may contain zeros when it holds a maximum-likelihood estimate
    of a constant block; generating from it requires positive entries.
    """

    pi: np.ndarray
    b_mean: np.ndarray
    sigma2: np.ndarray
    flags: tuple = field(default=())

    def __post_init__(self):
        pi = _check_pi(self.pi)
        B = np.asarray(self.b_mean, dtype=float)
        S = np.asarray(self.sigma2, dtype=float)
        K = pi.size
        if B.shape != (K, K) or S.shape != (K, K):
            raise InvalidParameterError("b_mean and sigma2 must be K x K")
        if not (np.allclose(B, B.T, rtol=0, atol=1e-12) and np.allclose(S, S.T, rtol=0, atol=1e-12)):
            raise InvalidParameterError("b_mean and sigma2 must be symmetric")
        if np.any(S < 0) or not np.all(np.isfinite(S)):
            raise InvalidParameterError("sigma2 entries must be finite and non-negative")
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "b_mean", B)
        object.__setattr__(self, "sigma2", S)
        object.__setattr__(self, "flags", tuple(self.flags))

    @property
    def k(self) -> int:
        return self.pi.size


def homogeneous_params(K: int, a: float, b: float, sigma2: float):
    """Mean and variance matrices of the homogeneous model.

    Returns ``(B, Sigma)`` with ``a`` on the diagonal of ``B``, ``b`` off it,
    and ``Sigma`` constant.
    """
    if K < 1:
        raise InvalidParameterError(f"K must be >= 1, got {K}")
    if not sigma2 > 0:
        raise InvalidParameterError(f"sigma2 must be positive, got {sigma2}")
    B = np.full((K, K), float(b))
    np.fill_diagonal(B, float(a))
    return B, np.full((K, K), float(sigma2))


def homogeneous_block_params(pi, a: float, b: float, sigma2: float) -> BlockParams:
    pi = _check_pi(pi)
    B, S = homogeneous_params(pi.size, a, b, sigma2)
    return BlockParams(pi, B, S)


# --------------------------------------------------------------------------
# Edge distributions
# --------------------------------------------------------------------------

VARIANTS = ("gaussian_general", "gaussian_homogeneous", "heavy_tail_mixture", "bimodal")


@dataclass(frozen=True, eq=False)
class EdgeDistributionSpec:
    """Distribution of within- and between-community edge weights."""

    variant: str
    b_mean: np.ndarray | None = None
    sigma2_matrix: np.ndarray | None = None
    a: float = 0.0
    b: float = 0.0
    sigma2: float = 1.0
    alpha: float = 1.0
    mu_within: float = 0.2
    mu_between: float = 0.0
    var: float = 0.25
    df: float = 4.0
    b_param: float = 0.3

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise InvalidParameterError(f"unknown edge distribution {self.variant!r}")
        if not 0.0 <= self.alpha <= 1.0:
            raise InvalidParameterError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not self.df > 2:
            raise InvalidParameterError(f"df must exceed 2, got {self.df}")
        if not (self.var > 0 and self.sigma2 > 0):
            raise InvalidParameterError("variances must be positive")
        if self.variant == "gaussian_general":
            if self.b_mean is None or self.sigma2_matrix is None:
                raise InvalidParameterError("gaussian_general needs b_mean and sigma2_matrix")
            if np.any(np.asarray(self.sigma2_matrix) <= 0):
                raise InvalidParameterError("variances must be positive")

    @classmethod
    def general(cls, b_mean, sigma2) -> "EdgeDistributionSpec":
        return cls("gaussian_general", b_mean=np.asarray(b_mean, float),
                   sigma2_matrix=np.asarray(sigma2, float))

    @classmethod
    def homogeneous(cls, a, b, sigma2) -> "EdgeDistributionSpec":
        return cls("gaussian_homogeneous", a=a, b=b, sigma2=sigma2)

    @classmethod
    def heavy_tail(cls, alpha, mu_within=0.2, mu_between=0.0, var=0.25, df=4.0) -> "EdgeDistributionSpec":
        return cls("heavy_tail_mixture", alpha=alpha, mu_within=mu_within,
                   mu_between=mu_between, var=var, df=df)

    @classmethod
    def bimodal_mix(cls, b_param) -> "EdgeDistributionSpec":
        return cls("bimodal", b_param=b_param)

    def block_matrices(self, K: int):
        if self.variant == "gaussian_general":
            return np.asarray(self.b_mean, float), np.asarray(self.sigma2_matrix, float)
        if self.variant == "gaussian_homogeneous":
            return homogeneous_params(K, self.a, self.b, self.sigma2)
        raise InvalidParameterError(f"{self.variant} has no Gaussian block matrices")


# --------------------------------------------------------------------------
# Sampling
# --------------------------------------------------------------------------

def largest_remainder(total: int, weights) -> np.ndarray:
    """Integer apportionment of ``total`` proportional to ``weights``.

    Remainders are handed out largest first, ties to the lowest index.
    """
    w = np.asarray(weights, dtype=float)
    if total == 0 or w.sum() <= 0:
        return np.zeros(w.size, dtype=np.int64)
    quota = total * w / w.sum()
    base = np.floor(quota).astype(np.int64)
    left = int(total - base.sum())
    order = np.argsort(-(quota - base), kind="stable")
    base[order[:left]] += 1
    return base


def draw_labels(n: int, pi, rng: np.random.Generator, fixed_counts: bool = False) -> np.ndarray:
    """0-based labels, i.i.d. from ``pi`` or with exact apportioned counts."""
    pi = _check_pi(pi)
    K = pi.size
    if n < K:
        raise InvalidParameterError(f"need n >= K, got n={n}, K={K}")
    if fixed_counts:
        z = np.repeat(np.arange(K), largest_remainder(n, pi))
        return rng.permutation(z).astype(np.int64)
    return rng.choice(K, size=n, p=pi).astype(np.int64)


def _assemble(n: int, iu, ju, w) -> WeightedNetwork:
    W = np.zeros((n, n))
    W[iu, ju] = w
    W[ju, iu] = w
    return WeightedNetwork(W)


def sample_wsbm(n: int, params: BlockParams, seed, fixed_counts: bool = False):
    """Draw ``(network, labels)`` from the Gaussian weighted block model."""
    if np.any(params.sigma2 <= 0):
        raise InvalidParameterError("sampling needs strictly positive variances")
    rng = make_rng(seed)
    z = draw_labels(n, params.pi, rng, fixed_counts)
    return sample_weights(z, params.b_mean, params.sigma2, rng), Labeling.from_index(z, params.k)


def sample_weights(z, b_mean, sigma2, seed) -> WeightedNetwork:
    """Gaussian weights for fixed 0-based labels ``z``."""
    rng = make_rng(seed)
    n = len(z)
    iu, ju = np.triu_indices(n, 1)
    zi, zj = z[iu], z[ju]
    w = b_mean[zi, zj] + np.sqrt(sigma2[zi, zj]) * rng.standard_normal(iu.size)
    return _assemble(n, iu, ju, w)


def noncentral_t(rng: np.random.Generator, mu, df: float, size: int) -> np.ndarray:
    """Noncentral t draws via ``(Z + mu) / sqrt(V / df)``, V chi-squared."""
    z = rng.standard_normal(size)
    v = rng.chisquare(df, size)
    return (z + mu) / np.sqrt(v / df)


def sample_robustness_network(n: int, pi, spec: EdgeDistributionSpec, seed, fixed_counts: bool = False):
    """Draw a network with heavy-tailed or bimodal within-community weights."""
    if spec.variant not in ("heavy_tail_mixture", "bimodal"):
        raise InvalidParameterError(f"robustness sampler does not handle {spec.variant!r}")
    rng = make_rng(seed)
    pi = _check_pi(pi)
    z = draw_labels(n, pi, rng, fixed_counts)
    iu, ju = np.triu_indices(n, 1)
    within = z[iu] == z[ju]
    m = iu.size
    sd = np.sqrt(spec.var)
    if spec.variant == "heavy_tail_mixture":
        mu = np.where(within, spec.mu_within, spec.mu_between)
        use_gauss = rng.random(m) < spec.alpha
        gauss = mu + sd * rng.standard_normal(m)
        heavy = noncentral_t(rng, mu, spec.df, m)
        w = np.where(use_gauss, gauss, heavy)
    else:
        upper = rng.random(m) < 0.5
        mu_w = np.where(upper, spec.b_param, -0.3)
        mu = np.where(within, mu_w, 0.0)
        w = mu + sd * rng.standard_normal(m)
    return _assemble(n, iu, ju, w), Labeling.from_index(z, pi.size)


def generate_network(n: int, pi, spec: EdgeDistributionSpec, seed, fixed_counts: bool = False):
    """Dispatch to the Gaussian or robustness sampler according to ``spec``."""
    if spec.variant in ("heavy_tail_mixture", "bimodal"):
        return sample_robustness_network(n, pi, spec, seed, fixed_counts)
    pi = _check_pi(pi)
    B, S = spec.block_matrices(pi.size)
    return sample_wsbm(n, BlockParams(pi, B, S), seed, fixed_counts)
