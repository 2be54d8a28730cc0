"""Per-episode reference classifiers.

Multinomial logistic regression in two flavors: a linear model on explicit
features (bias included, bias unpenalized) and an RBF-kernel dual model on
raw coordinates. Both minimize mean cross-entropy plus a quadratic penalty
with full-batch gradient descent under Armijo backtracking, refit from
scratch for every episode, and record whether the gradient-norm target was
reached. These are deliberately plain solvers: small convex problems where
a transparent optimizer is worth more than speed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .spectral import pairwise_sq_dists

GRAD_TOL = 1e-8
MAX_ITERS = 100_000


@dataclass
class LogRegModel:
    kind: str                      # "linear" | "kernel"
    C: int
    lambda_reg: float
    weights: Optional[np.ndarray] = None   # (k+1, C), bias row first
    dual: Optional[np.ndarray] = None      # (m, C)
    support: Optional[np.ndarray] = None   # (m, k) training points
    gamma: Optional[float] = None
    converged: bool = False
    grad_norm: float = np.inf


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _check_training_labels(y: np.ndarray) -> int:
    classes = np.unique(y)
    if classes.size < 2:
        raise ValueError("training labels contain a single class")
    if classes.min() < 0:
        raise ValueError("labels must be nonnegative class indices")
    return int(classes.max()) + 1


def _ce_pieces(Z: np.ndarray, idx: np.ndarray, y: np.ndarray):
    """Mean cross-entropy of logit rows, plus the softmax numerator and
    row sums so the caller can reuse them for the probability matrix."""
    zmax = Z.max(axis=1, keepdims=True)
    E = np.exp(Z - zmax)
    S = E.sum(axis=1)
    ce = float(np.mean(np.log(S) + zmax[:, 0] - Z[idx, y]))
    return ce, E, S


def _descend(A: np.ndarray, y: np.ndarray, onehot: np.ndarray,
             lambda_reg: float, kind: str):
    """Full-batch gradient descent with Armijo backtracking.

    Minimizes mean cross-entropy of logits ``A @ x`` plus a quadratic
    penalty: ``(lam/2) ||x||^2`` over non-bias rows in the linear case,
    ``(lam/2) sum(x * (A @ x))`` (the squared function norm, A being the
    Gram matrix) in the kernel case.

    Both the logits and the penalty are quadratic or linear in the step, so
    along the search ray x - t * grad every trial is evaluated from cached
    products in O(mC); the cached values are recomputed from scratch every
    512 iterations to stop rounding drift. Each line search starts from the
    previously accepted step and the start doubles after four consecutive
    first-trial accepts, which avoids paying a failed probe every iteration
    on ill-conditioned problems that run to the iteration cap.
    Returns (x, converged, gradient norm at x).
    """
    m, C = onehot.shape
    lam = lambda_reg
    inv_m = 1.0 / m
    idx = np.arange(m)
    x = np.zeros((A.shape[1], C))
    Ax = np.zeros((m, C))
    if kind == "linear":
        mask = np.ones((A.shape[1], 1))
        mask[0, 0] = 0.0  # bias row unpenalized
        AT = np.ascontiguousarray(A.T)

    def gradient_at(x, P):
        np.subtract(P, onehot, out=P)  # P is always a fresh temporary
        P *= inv_m
        if kind == "kernel":
            return A @ (P + lam * x)
        return AT @ P + lam * (mask * x)

    f_ce, E, S = _ce_pieces(Ax, idx, y)
    q0 = 0.0
    step = 1.0
    streak = 0
    gnorm = np.inf
    for it in range(1, MAX_ITERS + 1):
        if it % 512 == 0:  # periodic exact refresh of carried quantities
            Ax = A @ x
            f_ce, E, S = _ce_pieces(Ax, idx, y)
            if kind == "kernel":
                q0 = float(np.vdot(x, Ax))
            else:
                mx = mask * x
                q0 = float(np.vdot(mx, mx))
        grad = gradient_at(x, E / S[:, None])
        gsq = float(np.vdot(grad, grad))
        gnorm = math.sqrt(gsq)
        if gnorm <= GRAD_TOL:
            return x, True, gnorm
        Ag = A @ grad
        # penalty along the ray x - t * grad: q0 - t * q1 + t^2 * q2
        if kind == "kernel":
            q1 = 2.0 * float(np.vdot(grad, Ax))
            q2 = float(np.vdot(grad, Ag))
        else:
            mg = mask * grad
            q1 = 2.0 * float(np.vdot(mask * x, mg))
            q2 = float(np.vdot(mg, mg))
        f = f_ce + 0.5 * lam * q0
        first_trial = True
        accepted = False
        while step >= 1e-20:
            Zt = Ax - step * Ag
            ce_t, E_t, S_t = _ce_pieces(Zt, idx, y)
            q_t = q0 - step * q1 + step * step * q2
            if ce_t + 0.5 * lam * q_t <= f - 1e-4 * step * gsq:
                x = x - step * grad
                Ax, f_ce, E, S, q0 = Zt, ce_t, E_t, S_t, q_t
                accepted = True
                break
            first_trial = False
            step *= 0.5
        if not accepted:
            # no descent at machine-level steps: report where we stopped
            return x, gnorm <= GRAD_TOL, gnorm
        if first_trial:
            streak += 1
            if streak >= 4:
                step = min(step * 2.0, 1e8)
                streak = 0
        else:
            streak = 0
    # iteration cap: report the gradient at the point actually returned
    Ax = A @ x
    grad = gradient_at(x, _softmax_rows(Ax))
    gnorm = float(np.linalg.norm(grad))
    return x, gnorm <= GRAD_TOL, gnorm


def fit_logreg(features, labels, lambda_reg: float = 1e-2) -> LogRegModel:
    """Linear multinomial logistic regression.

    Objective: mean cross-entropy + (lambda_reg / 2) * ||W||^2 over the
    non-bias rows. The class count is taken from the labels.
    """
    X = np.asarray(features, dtype=float)
    y = np.asarray(labels, dtype=int)
    if X.ndim != 2 or X.shape[0] != y.shape[0] or X.shape[0] < 2:
        raise ValueError("need matching (m, k) features and m >= 2 labels")
    if lambda_reg < 0:
        raise ValueError("lambda_reg must be nonnegative")
    C = _check_training_labels(y)
    m = X.shape[0]
    Xa = np.hstack((np.ones((m, 1)), X))
    onehot = np.zeros((m, C))
    onehot[np.arange(m), y] = 1.0
    theta, ok, gnorm = _descend(Xa, y, onehot, lambda_reg, "linear")
    return LogRegModel(kind="linear", C=C, lambda_reg=lambda_reg,
                       weights=theta, converged=ok, grad_norm=gnorm)


def fit_kernel_logreg(points, labels, gamma: float = 10.0,
                      lambda_reg: float = 1e-2) -> LogRegModel:
    """RBF-kernel multinomial logistic regression in dual form.

    Logits are K alpha with K the training Gram matrix; the penalty
    (lambda_reg / 2) * sum_c alpha_c^T K alpha_c is the squared function
    norm, so duplicated training points change nothing but their weight.
    """
    X = np.asarray(points, dtype=float)
    y = np.asarray(labels, dtype=int)
    if X.ndim != 2 or X.shape[0] != y.shape[0] or X.shape[0] < 2:
        raise ValueError("need matching (m, k) points and m >= 2 labels")
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    if lambda_reg < 0:
        raise ValueError("lambda_reg must be nonnegative")
    C = _check_training_labels(y)
    m = X.shape[0]
    K = np.exp(-gamma * pairwise_sq_dists(X))
    onehot = np.zeros((m, C))
    onehot[np.arange(m), y] = 1.0
    alpha, ok, gnorm = _descend(K, y, onehot, lambda_reg, "kernel")
    return LogRegModel(kind="kernel", C=C, lambda_reg=lambda_reg, dual=alpha,
                       support=X.copy(), gamma=float(gamma),
                       converged=ok, grad_norm=gnorm)


def predict_logreg(model: LogRegModel, features) -> np.ndarray:
    """Class probabilities for query rows under a fitted model."""
    X = np.asarray(features, dtype=float)
    if X.ndim != 2:
        raise ValueError("need an (n, k) query matrix")
    if model.kind == "linear":
        if X.shape[1] + 1 != model.weights.shape[0]:
            raise ValueError("query width does not match the model")
        logits = np.hstack((np.ones((X.shape[0], 1)), X)) @ model.weights
    elif model.kind == "kernel":
        if X.shape[1] != model.support.shape[1]:
            raise ValueError("query width does not match the support points")
        Kq = np.exp(-model.gamma * pairwise_sq_dists(X, model.support))
        logits = Kq @ model.dual
    else:
        raise ValueError(f"unknown model kind {model.kind!r}")
    return _softmax_rows(logits)
