"""Label-permutation-invariant error metrics and the assignment solver."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .model import Labeling, as_labeling


# --------------------------------------------------------------------------
# Assignment
# --------------------------------------------------------------------------

def _potentials(C: np.ndarray):
    """Shortest-augmenting-path Hungarian method.

    Returns ``(col_of_row, u, v)`` with ``C[i, j] - u[i] - v[j] >= 0`` and
    equality on the returned assignment.
    """
    n = C.shape[0]
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    p = np.zeros(n + 1, dtype=np.int64)
    way = np.zeros(n + 1, dtype=np.int64)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            free = ~used[1:]
            cur = C[i0 - 1] - u[i0] - v[1:]
            better = free & (cur < minv[1:])
            minv[1:][better] = cur[better]
            way[1:][better] = j0
            cand = np.where(free, minv[1:], np.inf)
            j1 = int(np.argmin(cand)) + 1
            delta = cand[j1 - 1]
            idx = np.nonzero(used)[0]
            u[p[idx]] += delta
            v[idx] -= delta
            minv[1:][free] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    col_of_row = np.empty(n, dtype=np.int64)
    col_of_row[p[1:] - 1] = np.arange(n)
    return col_of_row, u[1:], v[1:]


def _has_perfect_matching(adj, rows, cols) -> bool:
    """Kuhn's augmenting-path test restricted to ``rows`` x ``cols``."""
    match_col = {}

    def augment(r, seen):
        for c in adj[r]:
            if c in cols and c not in seen:
                seen.add(c)
                if c not in match_col or augment(match_col[c], seen):
                    match_col[c] = r
                    return True
        return False

    return all(augment(r, set()) for r in rows)


def hungarian_match(cost):
    """Minimum-cost perfect assignment of rows to columns.

    Returns ``(perm, total)`` where ``perm[i]`` is the 0-based column given
    to row ``i``.  Among optimal assignments the lexicographically smallest
    ``perm`` is returned.
    """
    C = np.asarray(cost, dtype=float)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise InvalidInputError(f"cost matrix must be square, got shape {C.shape}")
    if not np.all(np.isfinite(C)):
        raise InvalidInputError("cost matrix has non-finite entries")
    K = C.shape[0]
    if K == 0:
        return np.zeros(0, dtype=np.int64), 0.0
    _, u, v = _potentials(C)
    # every optimal assignment uses only tight edges of an optimal dual
    reduced = C - u[:, None] - v[None, :]
    tol = 1e-9 * max(1.0, float(np.abs(C).max())) * K
    adj = [list(np.nonzero(reduced[r] <= tol)[0]) for r in range(K)]
    perm = np.empty(K, dtype=np.int64)
    free = set(range(K))
    for r in range(K):
        for c in adj[r]:
            if c in free and _has_perfect_matching(adj, range(r + 1, K), free - {c}):
                perm[r] = c
                free.discard(c)
                break
        else:  # pragma: no cover - tolerance pathologies only
            perm, _, _ = _potentials(C)
            break
    return perm, float(C[np.arange(K), perm].sum())


# --------------------------------------------------------------------------
# Losses
# --------------------------------------------------------------------------

def agreement_counts(e1, e2) -> np.ndarray:
    """Square count matrix ``A[k, l] = #{e1 == k, e2 == l}``, zero-padded."""
    e1, e2 = as_labeling(e1), as_labeling(e2)
    if e1.n != e2.n:
        raise InvalidInputError(f"labelings differ in length: {e1.n} vs {e2.n}")
    k = max(e1.k, e2.k)
    A = np.zeros((k, k), dtype=np.int64)
    np.add.at(A, (e1.index, e2.index), 1)
    return A


def loss_with_permutation(chat, c):
    """Misclassification loss plus the best label map and the count matrix.

    ``perm[k]`` is the 0-based label of ``c`` matched to label ``k`` of ``chat``.
    """
    A = agreement_counts(chat, c)
    perm, total = hungarian_match(-A)
    n = int(A.sum())
    agree = int(round(-total))
    return (n - agree) / n, perm, A


def misclassification_loss(chat, c) -> float:
    """Fraction of mislabeled nodes, minimised over label permutations."""
    return loss_with_permutation(chat, c)[0]


def mismatch_proportion(e1, e2) -> float:
    """Proportion of nodes labeled differently by two labelings after best relabeling."""
    return misclassification_loss(e1, e2)


def relabel_to_reference(est, ref) -> Labeling:
    """Rename the communities of ``est`` to the matched ids of ``ref``."""
    est, ref = as_labeling(est), as_labeling(ref)
    _, perm, A = loss_with_permutation(est, ref)
    return Labeling.from_index(perm[est.index], A.shape[0])


@dataclass(frozen=True)
class OverlapRow:
    est_community: int
    best_ref_communities: tuple
    overlap: float | None
    size: int

    @property
    def defined(self) -> bool:
        return self.overlap is not None


def overlap_table(est, ref) -> list[OverlapRow]:
    """For each estimated community, the reference communities sharing most of its nodes.

    ``overlap`` is that shared count divided by the community size; all
    reference communities attaining the maximum are listed.  Empty
    estimated communities get ``overlap=None``.
    """
    est, ref = as_labeling(est), as_labeling(ref)
    if est.n != ref.n:
        raise InvalidInputError(f"labelings differ in length: {est.n} vs {ref.n}")
    A = np.zeros((est.k, ref.k), dtype=np.int64)
    np.add.at(A, (est.index, ref.index), 1)
    rows = []
    for k in range(est.k):
        size = int(A[k].sum())
        if size == 0:
            rows.append(OverlapRow(k + 1, (), None, 0))
            continue
        top = A[k].max()
        best = tuple(int(l) + 1 for l in np.nonzero(A[k] == top)[0])
        rows.append(OverlapRow(k + 1, best, top / size, size))
    return rows
