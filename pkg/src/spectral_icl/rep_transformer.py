"""Spectral representations computed by fixed-weight attention stacks.

Two constructed stages. The first is a single RBF-attention layer whose
weights make the lower token block land exactly on the right-normalized
Laplacian I - A D^{-1} of the input cloud. The second runs shifted subspace
iteration on that matrix as a loop of linear-attention layers: a power step
multiplies the iterate by (mu I - Psi^T Psi), one layer per row re-creates
Gram-Schmidt as an attention update, and a row normalization after every
layer stands in for the QR scaling. The lower block of the final state
spans the bottom-k eigenspace; the upper block is never written, so the
input matrix rides along bit for bit.

Nothing is trained anywhere in this file: every weight is a closed-form
function of (n, k, mu, gamma).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .attention import LayerParams, TokenState, layer_update, normalize_lower_rows

# Projector-change threshold below which the eigenmap loop exits early.
CONVERGENCE_TOL = 1e-10


def tf_laplacian(points, gamma: float) -> np.ndarray:
    """One attention layer that outputs I - A D^{-1} exactly.

    ``points`` holds one point per column (d x n). Tokens start as columns
    [x_i; e_i]. With queries and keys scaled by
    sqrt(gamma) on the coordinate block, the column-normalized RBF kernel
    IS the degree-normalized affinity A D^{-1} (unit self-affinity), and a
    value matrix of -I on the identity block turns the skip connection into
    the subtraction. No approximation is involved; the only arithmetic
    difference from forming the matrix directly is float rounding.
    """
    X = np.asarray(points, dtype=float)
    if X.ndim != 2 or X.shape[1] < 2:
        raise ValueError("need a (d, n) matrix with one column per point, n >= 2")
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    d, n = X.shape
    root = np.sqrt(gamma)
    params = LayerParams(
        a=0.0, b=root, c=root, s=0.0,
        A=-np.eye(n), B=np.zeros((n, n)), C=np.zeros((n, n)), S=np.zeros((n, n)),
        kernel="rbf", M=np.eye(n),
    )
    state = TokenState(np.vstack((X, np.eye(n))), p=d, q=n)
    return layer_update(state, params).lower()


def estimate_lambda_max(M: np.ndarray, iters: int = 200, tol: float = 1e-10) -> float:
    """Dominant eigenvalue of a symmetric PSD matrix by power iteration.

    Deterministic start vector; stops on Rayleigh-quotient stagnation. When
    the top of the spectrum is nearly flat the quotient lands inside the
    top cluster, which still bounds the error by the cluster width, so the
    estimate is within about 1% either way.
    """
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    if M.ndim != 2 or M.shape[1] != n:
        raise ValueError("need a square matrix")
    v = np.random.default_rng(0).standard_normal(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = M @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        new = float(v @ (M @ v))
        if abs(new - lam) <= tol * max(1.0, abs(new)):
            return new
        lam = new
    return lam


def dct_rows(k: int, n: int) -> np.ndarray:
    """First k rows of the orthonormal n-point DCT-II basis."""
    if not 1 <= k <= n:
        raise ValueError("k must lie in [1, n]")
    i = np.arange(n)
    M = np.cos(np.pi * (2 * i[None, :] + 1) * np.arange(k)[:, None] / (2 * n))
    M[0] *= np.sqrt(1.0 / n)
    if k > 1:
        M[1:] *= np.sqrt(2.0 / n)
    return M


@dataclass
class EigenmapProgram:
    """A compiled subspace-iteration schedule.

    ``layers`` holds one power-step layer followed by one orthogonalization
    layer per row that has predecessors to project against (row 1 needs
    none, so k = 1 compiles to the power step alone). The loop runs the
    layer list for ``T`` sweeps, each layer applied ``inner_loop`` times,
    and the whole stack ``stack_reps`` times, with an early exit once the
    row-span projector stops moving.
    """

    n: int
    k: int
    mu: float
    T: int
    inner_loop: int = 2
    stack_reps: int = 2
    layers: list = field(default_factory=list)
    M: Optional[np.ndarray] = None


def build_eigenmap_program(n: int, k: int, mu: float, T: int,
                           inner_loop: int = 2, stack_reps: int = 2) -> EigenmapProgram:
    """Compile the attention layers for bottom-k subspace iteration.

    The power step maps the iterate Phi to Phi (mu I - Psi^T Psi) through a
    linear-attention head reading the upper block (b = c = 1, value -I on
    the lower block, skip (mu - 1) I). Orthogonalization layer i zeroes
    row i's components along rows j < i: queries and keys select those rows
    and the value matrix -e_i e_i^T subtracts the projection. The iterate
    is initialized with DCT rows, which are orthonormal and spread over the
    index range.
    """
    if not 1 <= k <= n:
        raise ValueError("k must lie in [1, n]")
    if T < 1 or inner_loop < 1 or stack_reps < 1:
        raise ValueError("T, inner_loop and stack_reps must be positive")
    if not np.isfinite(mu) or mu <= 0:
        raise ValueError("mu must be positive and finite")
    zeros = np.zeros((k, k))
    eye = np.eye(k)
    layers = [LayerParams(
        a=0.0, b=1.0, c=1.0, s=0.0,
        A=-eye, B=zeros.copy(), C=zeros.copy(), S=(mu - 1.0) * eye,
        kernel="linear",
    )]
    for r in range(1, k):
        A = np.zeros((k, k))
        A[r, r] = -1.0
        sel = np.zeros((k, k))
        sel[np.arange(r), np.arange(r)] = 1.0
        layers.append(LayerParams(
            a=0.0, b=0.0, c=0.0, s=0.0,
            A=A, B=sel, C=sel.copy(), S=zeros.copy(),
            kernel="linear",
        ))
    return EigenmapProgram(n=n, k=k, mu=mu, T=T, inner_loop=inner_loop,
                           stack_reps=stack_reps, layers=layers, M=dct_rows(k, n))


def tf_eigenmap(psi: np.ndarray, program: EigenmapProgram,
                trace_hook: Optional[Callable[[int, np.ndarray], None]] = None) -> np.ndarray:
    """Run a compiled program on Psi; rows of the result span the bottom-k
    eigenspace of Psi^T Psi.

    ``trace_hook(sweep_index, Phi)`` is called with a copy of the iterate
    after every sweep when provided. Raises if mu does not clear the top of
    the spectrum (the power step would diverge) or if the iterate
    degenerates (dependent initialization rows).
    """
    psi = np.asarray(psi, dtype=float)
    n = psi.shape[0]
    if psi.ndim != 2 or psi.shape[1] != n:
        raise ValueError("need a square matrix")
    if program.n != n:
        raise ValueError("program was compiled for a different n")
    if program.M is None or program.M.shape != (program.k, n):
        raise ValueError("program is missing a k x n initialization block")
    top = estimate_lambda_max(psi.T @ psi)
    if not program.mu > top:
        raise ValueError(
            f"mu={program.mu:g} does not exceed the spectral top (~{top:g}); "
            "the power step would diverge"
        )
    state = TokenState(np.vstack((psi, program.M)), p=n, q=program.k)
    prev = None
    sweep = 0
    for _ in range(program.stack_reps):
        for _ in range(program.T):
            for layer in program.layers:
                for _ in range(program.inner_loop):
                    state = layer_update(state, layer)
                    state = normalize_lower_rows(state)
            sweep += 1
            phi = state.lower()
            if trace_hook is not None:
                trace_hook(sweep, phi.copy())
            proj = phi.T @ phi
            if prev is not None and np.linalg.norm(proj - prev) < CONVERGENCE_TOL:
                return phi
            prev = proj
    return state.lower()


def tf_rep(points, gamma: float = 10.0, k: int = 4, T: int = 40,
           inner_loop: int = 2, stack_reps: int = 2) -> np.ndarray:
    """Both stages composed: points (one per column) -> constructed
    Laplacian -> eigenmap.

    Returns the k x n feature block with unit rows; column i is the
    embedding of point i. The shift is set from a
    power-iteration estimate with a 5% margin, which is how the loop keeps
    the spectrum positive without ever forming an eigendecomposition.
    """
    psi = tf_laplacian(points, gamma)
    n = psi.shape[0]
    mu = 1.05 * estimate_lambda_max(psi.T @ psi)
    program = build_eigenmap_program(n, k, mu, T, inner_loop, stack_reps)
    return tf_eigenmap(psi, program)
