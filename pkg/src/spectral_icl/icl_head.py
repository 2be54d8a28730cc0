"""In-context classification head that runs gradient descent in its forward pass.

Tokens carry four slots: a function value f (the evolving logit
pre-image), its class-expectation readout E, the label embedding w_y
(zero when the token is unlabeled), and frozen features phi. One layer
applies a single kernel functional-gradient step on the cross-entropy of
the labeled tokens,

    f_{l+1}^(i) = f_l^(i) + (alpha / m) * sum_{j labeled} (w_{y_j} - E^(j)) k(phi_j, phi_i),

and then rewrites the readout slot E = E[w | f] = W softmax(W^T f). The
rewrite is computed exactly by default; the finite-lambda mode instead
erases the old readout through a sharpened column-normalized RBF
self-attention before adding the new one, matching the two-head layer the
update compiles to, and converges to the exact rewrite as lambda grows.

Nothing is trained: the class embeddings W are fixed, f starts at zero,
and all adaptation happens inside the forward pass of one episode.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Tuple

import numpy as np

from .attention import kernel_rbf as _attention_rbf
from .manifolds import UNLABELED
from .spectral import pairwise_sq_dists


@dataclass
class ClassEmbeddings:
    """Fixed per-class direction vectors, one column per class."""

    W: np.ndarray  # (d_prime, C)

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=float)
        if self.W.ndim != 2 or self.W.shape[1] < 2:
            raise ValueError("need a (d_prime, C) matrix with C >= 2")
        diffs = pairwise_sq_dists(self.W.T)
        np.fill_diagonal(diffs, np.inf)
        if diffs.min() <= 0.0:
            raise ValueError("class embedding columns must be pairwise distinct")

    @property
    def C(self) -> int:
        return self.W.shape[1]


def default_class_embeddings(C: int = 2, beta: float = 2.0) -> ClassEmbeddings:
    """Axis-aligned embeddings beta * I; beta sets the logit sharpness."""
    return ClassEmbeddings(beta * np.eye(C))


@dataclass
class IclConfig:
    alpha: float = 1.0
    L: int = 20
    kernel: Literal["linear", "rbf"] = "rbf"
    gamma_f: float = 1.0
    divide_by_m: bool = True
    erase_mode: Literal["exact", "finite"] = "exact"
    erase_lambda: float = 1e4

    def validate(self) -> None:
        if self.L < 0:
            raise ValueError("layer count must be nonnegative")
        if self.kernel not in ("linear", "rbf"):
            raise ValueError(f"unknown kernel {self.kernel!r}")
        if self.kernel == "rbf" and not self.gamma_f > 0:
            raise ValueError("gamma_f must be positive")
        if self.erase_mode not in ("exact", "finite"):
            raise ValueError(f"unknown erase mode {self.erase_mode!r}")
        if self.erase_mode == "finite" and not self.erase_lambda > 0:
            raise ValueError("erase_lambda must be positive")


@dataclass
class IclState:
    F: np.ndarray             # (d_prime, n) function values
    E: np.ndarray             # (d_prime, n) expectation readouts
    Y: np.ndarray             # (d_prime, n) label embeddings, zero when unlabeled
    phi: np.ndarray           # (k, n) frozen features
    labeled: np.ndarray       # (n,) bool mask
    layer: int = 0


def _softmax_cols(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=0, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=0, keepdims=True)


def exact_expectation(W: ClassEmbeddings, F: np.ndarray) -> np.ndarray:
    """Columnwise E[w | f] = W softmax(W^T f)."""
    return W.W @ _softmax_cols(W.W.T @ np.asarray(F, dtype=float))


def feature_kernel(phi: np.ndarray, config: IclConfig) -> np.ndarray:
    """Symmetric PSD kernel over feature columns used by the gradient step."""
    if config.kernel == "linear":
        return phi.T @ phi
    return np.exp(-config.gamma_f * pairwise_sq_dists(phi.T))


def init_state(phi, labels, W: ClassEmbeddings) -> IclState:
    """Zero function values, uniform readout, label slots filled where known."""
    phi = np.asarray(phi, dtype=float)
    labels = np.asarray(labels, dtype=int)
    if phi.ndim != 2:
        raise ValueError("phi must be (k, n)")
    n = phi.shape[1]
    if labels.shape != (n,):
        raise ValueError("labels length must match the token count")
    labeled = labels != UNLABELED
    if not labeled.any():
        raise ValueError("need at least one labeled token")
    shown = labels[labeled]
    if shown.min() < 0 or shown.max() >= W.C:
        raise ValueError("labeled entries must be class indices below C")
    d_prime = W.W.shape[0]
    F = np.zeros((d_prime, n))
    Y = np.zeros((d_prime, n))
    Y[:, labeled] = W.W[:, shown]
    return IclState(F=F, E=exact_expectation(W, F), Y=Y, phi=phi,
                    labeled=labeled, layer=0)


def gd_layer(state: IclState, W: ClassEmbeddings, config: IclConfig) -> IclState:
    """One functional-gradient step plus the readout rewrite."""
    config.validate()
    K = feature_kernel(state.phi, config)
    lab = state.labeled
    m = int(lab.sum())
    scale = config.alpha / (m if config.divide_by_m else 1)
    F = state.F + scale * ((state.Y[:, lab] - state.E[:, lab]) @ K[lab, :])
    if config.erase_mode == "exact":
        E = exact_expectation(W, F)
    else:
        lam = config.erase_lambda
        readback = _attention_rbf(lam * state.phi, lam * state.phi)
        E = state.E - state.E @ readback + exact_expectation(W, F)
    return IclState(F=F, E=E, Y=state.Y, phi=state.phi,
                    labeled=state.labeled, layer=state.layer + 1)


def probabilities(state: IclState, W: ClassEmbeddings) -> np.ndarray:
    """Per-token class distribution, one row per token."""
    return _softmax_cols(W.W.T @ state.F).T


def forward(phi, labels, W: ClassEmbeddings, config: IclConfig) -> Tuple[IclState, np.ndarray]:
    """Run L layers from the zero function; returns final state and probs."""
    config.validate()
    state = init_state(phi, labels, W)
    for _ in range(config.L):
        state = gd_layer(state, W, config)
    return state, probabilities(state, W)


def predict(probs: np.ndarray) -> np.ndarray:
    """Most probable class per row; ties go to the smallest class index."""
    probs = np.asarray(probs, dtype=float)
    return np.argmax(probs, axis=1)


def icl_loss(probs: np.ndarray, true_labels, labeled) -> float:
    """Mean negative log-likelihood of the truth over unlabeled tokens."""
    probs = np.asarray(probs, dtype=float)
    truth = np.asarray(true_labels, dtype=int)
    mask = np.asarray(labeled, dtype=bool)
    query = ~mask
    if not query.any():
        raise ValueError("no unlabeled tokens to score")
    p = probs[query, truth[query]]
    return float(-np.mean(np.log(np.maximum(p, 1e-300))))
