"""Graph construction and reference spectral decompositions.

RBF affinities with an explicit diagonal convention, optional kNN
sparsification, the three standard Laplacians, and a dense symmetric
eigensolver used as the trusted reference for every spectral quantity in
the package. Everything here is plain numpy on dense matrices; sizes stay
in the low thousands.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

DiagonalMode = Literal["zero", "unit"]

SYMMETRY_TOL = 1e-10


@dataclass
class AffinityMatrix:
    matrix: np.ndarray
    diagonal_mode: DiagonalMode
    gamma: float


@dataclass
class LaplacianSet:
    """Unnormalized, symmetric-normalized, and right-normalized Laplacians."""

    L: np.ndarray
    L_sym: np.ndarray
    L_rw: np.ndarray
    degrees: np.ndarray


def pairwise_sq_dists(X: np.ndarray, Y: np.ndarray | None = None) -> np.ndarray:
    """Squared Euclidean distances, clipped at zero against cancellation."""
    X = np.asarray(X, dtype=float)
    Y = X if Y is None else np.asarray(Y, dtype=float)
    sq = (
        np.sum(X * X, axis=1)[:, None]
        + np.sum(Y * Y, axis=1)[None, :]
        - 2.0 * (X @ Y.T)
    )
    return np.maximum(sq, 0.0)


def affinity(points, gamma: float, diagonal_mode: DiagonalMode = "zero") -> AffinityMatrix:
    """Dense RBF affinity ``exp(-gamma * ||x_i - x_j||^2)``.

    ``diagonal_mode`` fixes the self-affinity: ``"zero"`` for graph use,
    ``"unit"`` for the kernel matrix as written (exp(0) = 1).
    """
    X = np.asarray(points, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("need an (n, d) matrix with n >= 2")
    if not np.isfinite(X).all():
        raise ValueError("points must be finite")
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    A = np.exp(-gamma * pairwise_sq_dists(X))
    np.fill_diagonal(A, 0.0 if diagonal_mode == "zero" else 1.0)
    return AffinityMatrix(A, diagonal_mode, float(gamma))


def knn_sparsify(aff: AffinityMatrix, k: int) -> AffinityMatrix:
    """Keep each row's k strongest off-diagonal entries, symmetrized by union.

    An entry survives when either endpoint ranks it; ties in affinity break
    toward the smaller column index. The diagonal keeps its mode.
    """
    A = aff.matrix
    n = A.shape[0]
    if not 1 <= k <= n - 1:
        raise ValueError("k must lie in [1, n-1]")
    keep = np.zeros(A.shape, dtype=bool)
    rows = np.arange(n)
    for i in rows:
        row = A[i].copy()
        row[i] = -np.inf
        order = np.argsort(-row, kind="stable")
        keep[i, order[:k]] = True
    keep |= keep.T
    out = np.where(keep, A, 0.0)
    np.fill_diagonal(out, 0.0 if aff.diagonal_mode == "zero" else 1.0)
    return AffinityMatrix(out, aff.diagonal_mode, aff.gamma)


def laplacians(aff: AffinityMatrix) -> LaplacianSet:
    """All three Laplacians of one affinity matrix.

    ``L = D - A``, ``L_sym = I - D^{-1/2} A D^{-1/2}`` and the
    right-normalized ``L_rw = I - A D^{-1}`` whose columns sum to zero.
    """
    A = aff.matrix
    n = A.shape[0]
    deg = A.sum(axis=1)
    if np.any(deg <= 0):
        raise ValueError("graph has an isolated vertex")
    L = np.diag(deg) - A
    inv_sqrt = 1.0 / np.sqrt(deg)
    L_sym = np.eye(n) - (inv_sqrt[:, None] * A) * inv_sqrt[None, :]
    L_rw = np.eye(n) - A * (1.0 / deg)[None, :]
    return LaplacianSet(L, L_sym, L_rw, deg)


def bottom_eigenvectors(M: np.ndarray, k: int):
    """Eigenvectors of the k smallest eigenvalues of a symmetric matrix.

    Returns ``(vectors, values)`` with values ascending and columns
    orthonormal. Input asymmetry beyond ``SYMMETRY_TOL`` is rejected rather
    than silently symmetrized.
    """
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    if M.ndim != 2 or M.shape[1] != n:
        raise ValueError("need a square matrix")
    if not 1 <= k <= n:
        raise ValueError("k must lie in [1, n]")
    if np.max(np.abs(M - M.T)) > SYMMETRY_TOL:
        raise ValueError("matrix is not symmetric within tolerance")
    vals, vecs = np.linalg.eigh(M)
    return vecs[:, :k], vals[:k]


def principal_angles(U: np.ndarray, V: np.ndarray) -> np.ndarray:
    """Principal angles (radians, ascending) between two column spans."""
    Qu, _ = np.linalg.qr(np.asarray(U, dtype=float))
    Qv, _ = np.linalg.qr(np.asarray(V, dtype=float))
    s = np.linalg.svd(Qu.T @ Qv, compute_uv=False)
    return np.arccos(np.clip(s, -1.0, 1.0))


def save_matrix_csv(M: np.ndarray, path: str) -> None:
    """Plain numeric CSV, full float precision, one matrix row per line."""
    M = np.asarray(M, dtype=float)
    with open(path, "w") as fh:
        for row in M:
            fh.write(",".join(repr(float(v)) for v in row))
            fh.write("\n")


def load_matrix_csv(path: str) -> np.ndarray:
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append([float(v) for v in line.split(",")])
    if not rows:
        raise ValueError("empty matrix file")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValueError("ragged matrix file")
    return np.asarray(rows, dtype=float)
