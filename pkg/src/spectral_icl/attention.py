"""Kernel attention layers with block-diagonal weights.

The token matrix Z is (p + q) x n: an upper block the layers read but never
overwrite and a lower block they update. Every weight matrix is block
diagonal, a scalar multiple of the identity on the upper block and a dense
q x q matrix on the lower one:

    W^V = [[a*I, 0], [0, A]]   W^Q = [[b*I, 0], [0, B]]
    W^K = [[c*I, 0], [0, C]]   W^S = [[s*I, 0], [0, S]]

One layer computes

    Z' = (I + W^S) Z + sum_h W^V_h Z kappa_h(W^Q_h Z, W^K_h Z)

where kappa is either the plain inner-product kernel or a column-normalized
RBF kernel over token columns. Those two pieces are enough to express graph
construction and subspace iteration as fixed-weight forward passes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence, Union

import numpy as np

from .spectral import pairwise_sq_dists

KernelKind = Literal["linear", "rbf"]


@dataclass
class LayerParams:
    """Weights of one head; scalars act on the upper block, matrices on the lower.

    ``M`` optionally records the initial lower block the surrounding program
    seeds Z with; the layer update itself never reads it.
    """

    a: float
    b: float
    c: float
    s: float
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    S: np.ndarray
    kernel: KernelKind = "linear"
    M: Optional[np.ndarray] = None


@dataclass
class TokenState:
    Z: np.ndarray
    p: int
    q: int
    layer: int = 0

    def upper(self) -> np.ndarray:
        return self.Z[: self.p]

    def lower(self) -> np.ndarray:
        return self.Z[self.p :]


def kernel_linear(U: np.ndarray, V: np.ndarray) -> np.ndarray:
    """Gram matrix of token columns: entry (i, j) = <U[:, i], V[:, j]>."""
    return U.T @ V


def kernel_rbf(U: np.ndarray, V: np.ndarray) -> np.ndarray:
    """Column-normalized RBF kernel over token columns.

    Entry (i, j) = exp(-||u_i - v_j||^2) / sum_k exp(-||u_k - v_j||^2), so
    every column sums to one. The exponent is shifted by its column max
    before exponentiation, which keeps the normalization exact for token
    magnitudes far beyond overflow range.
    """
    if U.shape[0] != V.shape[0]:
        raise ValueError("token dimensions differ")
    logits = -pairwise_sq_dists(U.T, V.T)
    logits -= logits.max(axis=0, keepdims=True)
    E = np.exp(logits)
    return E / E.sum(axis=0, keepdims=True)


_KERNELS = {"linear": kernel_linear, "rbf": kernel_rbf}


def _check_params(state: TokenState, params: LayerParams) -> None:
    q = state.q
    for name in ("A", "B", "C", "S"):
        mat = getattr(params, name)
        if np.shape(mat) != (q, q):
            raise ValueError(f"{name} must be {q}x{q} for this partition")
    if params.kernel not in _KERNELS:
        raise ValueError(f"unknown kernel {params.kernel!r}")


def _masked(scalar: float, mat: np.ndarray, up: np.ndarray, low: np.ndarray) -> np.ndarray:
    """Apply a block-diagonal weight without materializing it."""
    return np.vstack((scalar * up, mat @ low))


def layer_update(state: TokenState,
                 params: Union[LayerParams, Sequence[LayerParams]]) -> TokenState:
    """One attention layer; a sequence of params sums the heads.

    The skip term uses the first head's (s, S); additional heads contribute
    attention only.
    """
    heads = [params] if isinstance(params, LayerParams) else list(params)
    if not heads:
        raise ValueError("need at least one head")
    for h in heads:
        _check_params(state, h)
    up, low = state.upper(), state.lower()
    first = heads[0]
    out = np.vstack(((1.0 + first.s) * up, low + first.S @ low))
    for h in heads:
        U = _masked(h.b, h.B, up, low)
        V = _masked(h.c, h.C, up, low)
        K = _KERNELS[h.kernel](U, V)
        out += _masked(h.a, h.A, up, low) @ K
    return TokenState(out, state.p, state.q, state.layer + 1)


def normalize_lower_rows(state: TokenState) -> TokenState:
    """Rescale each lower-block row to unit Euclidean norm.

    A numerically vanished row means the iterate degenerated (dependent
    initialization or a collapsed subspace) and is reported rather than
    patched up.
    """
    low = state.lower()
    norms = np.linalg.norm(low, axis=1)
    if np.any(norms < 1e-300) or not np.isfinite(norms).all():
        raise ValueError("degenerate iterate: a lower-block row vanished")
    Z = state.Z.copy()
    Z[state.p :] = low / norms[:, None]
    return TokenState(Z, state.p, state.q, state.layer)
