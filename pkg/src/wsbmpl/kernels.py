"""Hot numeric kernels.

Every kernel exists twice: a numba-compiled loop (``*_nb``) and a vectorised
numpy version (``*_np``).  The public name is bound to one of them at import
time according to :mod:`wsbmpl._accel`.  Both variants agree to rounding
error; tests exercise each one directly.
"""
import math

import numpy as np

from ._accel import USE_NUMBA, njit

LOG_2PI = math.log(2.0 * math.pi)


# --------------------------------------------------------------------------
# Gaussian mixture log-densities over block-sum rows
# --------------------------------------------------------------------------

@njit
def component_loglik_nb(s, log_pi, p_mean, lam):
    n, k_cols = s.shape
    n_comp = p_mean.shape[0]
    const = np.empty(n_comp)
    for l in range(n_comp):
        c = log_pi[l]
        for k in range(k_cols):
            c -= 0.5 * (LOG_2PI + math.log(lam[l, k]))
        const[l] = c
    out = np.empty((n, n_comp))
    for i in range(n):
        for l in range(n_comp):
            acc = 0.0
            for k in range(k_cols):
                d = s[i, k] - p_mean[l, k]
                acc += d * d / lam[l, k]
            out[i, l] = const[l] - 0.5 * acc
    return out


def component_loglik_np(s, log_pi, p_mean, lam):
    const = log_pi - 0.5 * np.sum(LOG_2PI + np.log(lam), axis=1)
    d = s[:, None, :] - p_mean[None, :, :]
    return const[None, :] - 0.5 * np.sum(d * d / lam[None, :, :], axis=2)


# --------------------------------------------------------------------------
# Responsibility-weighted moments (M-step)
# --------------------------------------------------------------------------

@njit
def weighted_moments_nb(s, tau):
    n, k_cols = s.shape
    n_comp = tau.shape[1]
    w = np.zeros(n_comp)
    p_mean = np.zeros((n_comp, k_cols))
    lam = np.zeros((n_comp, k_cols))
    for i in range(n):
        for l in range(n_comp):
            t = tau[i, l]
            w[l] += t
            for k in range(k_cols):
                p_mean[l, k] += t * s[i, k]
    for l in range(n_comp):
        if w[l] > 0.0:
            for k in range(k_cols):
                p_mean[l, k] /= w[l]
    for i in range(n):
        for l in range(n_comp):
            t = tau[i, l]
            for k in range(k_cols):
                d = s[i, k] - p_mean[l, k]
                lam[l, k] += t * d * d
    for l in range(n_comp):
        if w[l] > 0.0:
            for k in range(k_cols):
                lam[l, k] /= w[l]
    return w, p_mean, lam


def weighted_moments_np(s, tau):
    w = tau.sum(axis=0)
    safe = np.where(w > 0.0, w, 1.0)
    p_mean = (tau.T @ s) / safe[:, None]
    p_mean[w <= 0.0] = 0.0
    d2 = (s[:, None, :] - p_mean[None, :, :]) ** 2
    lam = np.einsum("il,ilk->lk", tau, d2) / safe[:, None]
    lam[w <= 0.0] = 0.0
    return w, p_mean, lam


# --------------------------------------------------------------------------
# Pooled statistics over unordered node pairs, grouped by label pair
# --------------------------------------------------------------------------

@njit
def pair_block_sums_nb(W, z, n_comm):
    n = W.shape[0]
    counts = np.zeros((n_comm, n_comm))
    sums = np.zeros((n_comm, n_comm))
    for i in range(n):
        zi = z[i]
        for j in range(i + 1, n):
            zj = z[j]
            a, b = (zi, zj) if zi <= zj else (zj, zi)
            counts[a, b] += 1.0
            sums[a, b] += W[i, j]
    for a in range(n_comm):
        for b in range(a + 1, n_comm):
            counts[b, a] = counts[a, b]
            sums[b, a] = sums[a, b]
    return counts, sums


def _onehot(z, n_comm):
    Z = np.zeros((z.shape[0], n_comm))
    Z[np.arange(z.shape[0]), z] = 1.0
    return Z


def pair_block_sums_np(W, z, n_comm):
    Z = _onehot(z, n_comm)
    sizes = Z.sum(axis=0)
    counts = np.outer(sizes, sizes)
    np.fill_diagonal(counts, sizes * (sizes - 1.0) / 2.0)
    Wz = W.copy()
    np.fill_diagonal(Wz, 0.0)
    sums = Z.T @ Wz @ Z
    sums[np.diag_indices(n_comm)] *= 0.5
    return counts, sums


@njit
def pair_block_sqdev_nb(W, z, means):
    n = W.shape[0]
    n_comm = means.shape[0]
    out = np.zeros((n_comm, n_comm))
    for i in range(n):
        zi = z[i]
        for j in range(i + 1, n):
            zj = z[j]
            a, b = (zi, zj) if zi <= zj else (zj, zi)
            d = W[i, j] - means[a, b]
            out[a, b] += d * d
    for a in range(n_comm):
        for b in range(a + 1, n_comm):
            out[b, a] = out[a, b]
    return out


def pair_block_sqdev_np(W, z, means):
    n_comm = means.shape[0]
    D = (W - means[z][:, z]) ** 2
    np.fill_diagonal(D, 0.0)
    Z = _onehot(z, n_comm)
    out = Z.T @ D @ Z
    out[np.diag_indices(n_comm)] *= 0.5
    return out


# --------------------------------------------------------------------------
# k-means assignment step
# --------------------------------------------------------------------------

@njit
def nearest_center_nb(X, centers):
    n, d = X.shape
    k = centers.shape[0]
    labels = np.empty(n, dtype=np.int64)
    dist = np.empty(n)
    for i in range(n):
        best = np.inf
        arg = 0
        for c in range(k):
            acc = 0.0
            for j in range(d):
                t = X[i, j] - centers[c, j]
                acc += t * t
            if acc < best:
                best = acc
                arg = c
        labels[i] = arg
        dist[i] = best
    return labels, dist


def nearest_center_np(X, centers):
    d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    labels = np.argmin(d2, axis=1).astype(np.int64)
    return labels, d2[np.arange(X.shape[0]), labels]


if USE_NUMBA:
    component_loglik = component_loglik_nb
    weighted_moments = weighted_moments_nb
    pair_block_sums = pair_block_sums_nb
    pair_block_sqdev = pair_block_sqdev_nb
    nearest_center = nearest_center_nb
else:
    component_loglik = component_loglik_np
    weighted_moments = weighted_moments_np
    pair_block_sums = pair_block_sums_np
    pair_block_sqdev = pair_block_sqdev_np
    nearest_center = nearest_center_np
