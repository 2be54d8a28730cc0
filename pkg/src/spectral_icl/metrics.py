"""Evaluation metrics: accuracy, class separation, neighborhood alignment."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import pairwise_sq_dists


@dataclass
class EmbeddingSet:
    vectors: np.ndarray  # (n, d)
    labels: np.ndarray   # (n,)


def accuracy(predicted, truth, mask=None) -> float:
    """Fraction of agreeing entries, optionally restricted by a boolean mask."""
    p = np.asarray(predicted)
    t = np.asarray(truth)
    if p.shape != t.shape:
        raise ValueError("prediction and truth lengths differ")
    if mask is not None:
        sel = np.asarray(mask, dtype=bool)
        p, t = p[sel], t[sel]
    if p.size == 0:
        raise ValueError("no entries to score")
    return float(np.mean(p == t))


def separation_score(vectors, labels) -> float:
    """Within-class minus cross-class mean cosine similarity.

    The within term averages, per class, the cosine over distinct ordered
    pairs inside the class, then averages over classes; the cross term
    averages over all pairs with differing labels. Requires at least two
    classes and at least two members per class (a singleton has no
    within-class pairs).
    """
    V = np.asarray(vectors, dtype=float)
    y = np.asarray(labels)
    if V.ndim != 2 or V.shape[0] != y.shape[0]:
        raise ValueError("need (n, d) vectors and n labels")
    norms = np.linalg.norm(V, axis=1)
    if np.any(norms == 0):
        raise ValueError("cosine similarity is undefined for zero vectors")
    U = V / norms[:, None]
    G = U @ U.T
    classes = np.unique(y)
    if classes.size < 2:
        raise ValueError("need at least two classes")
    intra = []
    for c in classes:
        idx = np.flatnonzero(y == c)
        if idx.size < 2:
            raise ValueError("singleton class has no within-class pairs")
        block = G[np.ix_(idx, idx)]
        s = block.sum() - np.trace(block)
        intra.append(s / (idx.size * (idx.size - 1)))
    same = y[:, None] == y[None, :]
    cross = G[~same]
    return float(np.mean(intra) - cross.mean())


def _neighbor_sets(X: np.ndarray, k: int) -> list:
    d2 = pairwise_sq_dists(X)
    np.fill_diagonal(d2, np.inf)
    sets = []
    for i in range(X.shape[0]):
        order = np.argsort(d2[i], kind="stable")
        sets.append(set(order[:k].tolist()))
    return sets


def mutual_knn_alignment(A, B, k: int) -> float:
    """Mean overlap of k-nearest-neighbor sets computed in two embeddings.

    Neighbors are Euclidean, the point itself is excluded, and distance
    ties break toward the smaller index so the score is deterministic.
    ``A`` and ``B`` must describe the same points in the same order; their
    ambient dimensions may differ.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.ndim != 2 or B.ndim != 2 or A.shape[0] != B.shape[0]:
        raise ValueError("need two (n, *) embeddings of the same n points")
    n = A.shape[0]
    if not 1 <= k <= n - 1:
        raise ValueError("k must lie in [1, n-1]")
    na = _neighbor_sets(A, k)
    nb = _neighbor_sets(B, k)
    overlaps = [len(sa & sb) / k for sa, sb in zip(na, nb)]
    return float(np.mean(overlaps))
