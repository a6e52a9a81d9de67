"""Reading and writing matrices, label vectors and edge lists."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .errors import InvalidInputError
from .model import Labeling, WeightedNetwork


def read_matrix(path, tol: float = 1e-9) -> WeightedNetwork:
    """Read an n x n CSV matrix (no header)."""
    try:
        W = np.loadtxt(path, delimiter=",", ndmin=2, dtype=float)
    except ValueError as exc:
        raise InvalidInputError(f"{path}: cannot parse matrix ({exc})") from exc
    return WeightedNetwork.from_array(W, tol=tol)


def write_matrix(path, W) -> None:
    W = W.weights if isinstance(W, WeightedNetwork) else np.asarray(W)
    np.savetxt(path, W, delimiter=",", fmt="%.17g")


def read_labels(path, k: int | None = None) -> Labeling:
    """Read one 1-based integer label per line."""
    values = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                values.append(int(line))
            except ValueError as exc:
                raise InvalidInputError(f"{path}:{lineno}: not an integer label: {line!r}") from exc
    if not values:
        raise InvalidInputError(f"{path}: no labels")
    lab = np.asarray(values, dtype=np.int64)
    return Labeling(lab, int(lab.max()) if k is None else k)


def write_labels(path, labels) -> None:
    lab = labels.labels if isinstance(labels, Labeling) else np.asarray(labels)
    Path(path).write_text("".join(f"{int(v)}\n" for v in lab))


def read_edge_list(path, n: int | None = None) -> WeightedNetwork:
    """Read ``i<TAB>j<TAB>w`` lines with 0-based node ids.

    Missing pairs get weight 0.  A pair listed more than once (in either
    orientation) must carry the same weight every time.
    """
    entries = {}
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh, delimiter="\t"), 1):
            if not row or not "".join(row).strip():
                continue
            if len(row) != 3:
                raise InvalidInputError(f"{path}:{lineno}: expected 3 tab-separated fields")
            try:
                i, j, w = int(row[0]), int(row[1]), float(row[2])
            except ValueError as exc:
                raise InvalidInputError(f"{path}:{lineno}: {exc}") from exc
            if i < 0 or j < 0:
                raise InvalidInputError(f"{path}:{lineno}: negative node id")
            if i == j:
                if w != 0.0:
                    raise InvalidInputError(f"{path}:{lineno}: non-zero self loop on node {i}")
                continue
            key = (min(i, j), max(i, j))
            if key in entries and entries[key] != w:
                raise InvalidInputError(
                    f"{path}:{lineno}: conflicting weights for pair {key}: {entries[key]} vs {w}"
                )
            entries[key] = w
    top = max((max(k) for k in entries), default=-1) + 1
    if n is None:
        n = top
    elif top > n:
        raise InvalidInputError(f"{path}: node id {top - 1} out of range for n={n}")
    if n < 1:
        raise InvalidInputError(f"{path}: empty edge list")
    W = np.zeros((n, n))
    for (i, j), w in entries.items():
        W[i, j] = W[j, i] = w
    return WeightedNetwork(W)


def write_edge_list(path, W) -> None:
    W = W.weights if isinstance(W, WeightedNetwork) else np.asarray(W)
    iu, ju = np.triu_indices(W.shape[0], 1)
    with open(path, "w") as fh:
        for i, j in zip(iu, ju):
            fh.write(f"{i}\t{j}\t{float(W[i, j])!r}\n")
