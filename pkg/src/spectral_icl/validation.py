"""Built-in oracle batteries.

Each battery re-derives a quantity along a deliberately naive independent
route (direct formulas, explicit python loops, a dense eigensolver) and
compares the package's layered computation against it. The full versions
with frozen constants live in the test suite; these compact batteries make
the same checks available at runtime through the CLI.
"""

from __future__ import annotations

import math

import numpy as np

from .icl_head import IclConfig, default_class_embeddings, forward
from .manifolds import ManifoldSpec, UNLABELED, geodesic, sample_manifold
from .rep_transformer import build_eigenmap_program, tf_eigenmap, tf_laplacian
from .spectral import principal_angles


def _oracle_laplacian(X: np.ndarray, gamma: float) -> np.ndarray:
    """I - A D^{-1} by the direct formula, unit self-affinity, plain loops."""
    n = X.shape[0]
    A = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            diff = X[i] - X[j]
            A[i, j] = math.exp(-gamma * float(diff @ diff))
    return np.eye(n) - A / A.sum(axis=0, keepdims=True)


def check_laplacian_exactness(trials: int = 5, tol: float = 1e-10) -> dict:
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(8, 40))
        X = rng.standard_normal((n, 3))
        gamma = float(rng.uniform(0.5, 10.0))
        err = float(np.max(np.abs(tf_laplacian(X.T, gamma) - _oracle_laplacian(X, gamma))))
        worst = max(worst, err)
    return {
        "name": "constructed-laplacian-exactness",
        "passed": worst < tol,
        "detail": f"max abs deviation {worst:.3e} over {trials} clouds (tol {tol:g})",
    }


def _gapped_laplacian(rng: np.random.Generator, k: int, n: int = 60,
                      min_gap: float = 0.05):
    """Random clustered cloud whose shifted spectrum has a usable eigengap.

    Clouds are redrawn until (lambda_{k+1} - lambda_k) clears ``min_gap``
    of the shifted spectral range; k + 1 well-separated blobs make that the
    common case rather than the exception.
    """
    blobs = k + 1
    while True:
        centers = rng.uniform(-4, 4, size=(blobs, 3))
        sizes = [n // blobs] * (blobs - 1) + [n - (n // blobs) * (blobs - 1)]
        X = np.vstack([c + 0.2 * rng.standard_normal((s, 3))
                       for c, s in zip(centers, sizes)])
        psi = tf_laplacian(X.T, gamma=1.0)
        vals, vecs = np.linalg.eigh(psi.T @ psi)
        mu = 1.05 * float(vals[-1])
        gap = (vals[k] - vals[k - 1]) / (mu - vals[0])
        if gap >= min_gap:
            return psi, vals, vecs, mu


def check_eigenmap_subspace(trials: int = 3, k: int = 4, tol: float = 1e-3) -> dict:
    rng = np.random.default_rng(23)
    worst = 0.0
    for _ in range(trials):
        psi, vals, vecs, mu = _gapped_laplacian(rng, k)
        program = build_eigenmap_program(psi.shape[0], k, mu, T=60)
        phi = tf_eigenmap(psi, program)
        ang = float(principal_angles(phi.T, vecs[:, :k]).max())
        worst = max(worst, ang)
    return {
        "name": "eigenmap-subspace",
        "passed": worst <= tol,
        "detail": f"largest principal angle {worst:.3e} rad over {trials} runs (tol {tol:g})",
    }


def _loop_head(phi, labels, W, cfg: IclConfig):
    """The head recursion written as explicit per-token loops."""
    d_prime, C = W.shape
    n = phi.shape[1]
    lab = [i for i in range(n) if labels[i] != UNLABELED]
    m = len(lab)

    def expect(f):
        z = W.T @ f
        z = z - z.max()
        p = np.exp(z)
        p /= p.sum()
        return W @ p

    def kappa(u, v):
        if cfg.kernel == "linear":
            return float(u @ v)
        d = u - v
        return math.exp(-cfg.gamma_f * float(d @ d))

    F = np.zeros((d_prime, n))
    for _ in range(cfg.L):
        E = [expect(F[:, i]) for i in range(n)]
        new = F.copy()
        for j in range(n):
            acc = np.zeros(d_prime)
            for i in lab:
                acc += (W[:, labels[i]] - E[i]) * kappa(phi[:, i], phi[:, j])
            new[:, j] = F[:, j] + cfg.alpha / m * acc
        F = new
    return F


def check_head_against_loop(trials: int = 10, tol: float = 1e-10) -> dict:
    rng = np.random.default_rng(47)
    worst = 0.0
    for t in range(trials):
        n = int(rng.integers(6, 25))
        k = int(rng.integers(2, 5))
        C = int(rng.integers(2, 5))
        m = int(rng.integers(1, min(n - 1, 8) + 1))
        phi = rng.standard_normal((k, n))
        labels = np.full(n, UNLABELED)
        labels[rng.choice(n, size=m, replace=False)] = rng.integers(0, C, size=m)
        W = default_class_embeddings(C, beta=2.0)
        cfg = IclConfig(
            alpha=float(rng.uniform(0.1, 1.5)),
            L=int(rng.integers(1, 8)),
            kernel="linear" if t % 2 == 0 else "rbf",
            gamma_f=float(rng.uniform(0.2, 2.0)),
        )
        state, _ = forward(phi, labels, W, cfg)
        F_oracle = _loop_head(phi, labels, W.W, cfg)
        worst = max(worst, float(np.max(np.abs(state.F - F_oracle))))
    return {
        "name": "head-vs-loop-recursion",
        "passed": worst < tol,
        "detail": f"max abs F deviation {worst:.3e} over {trials} instances (tol {tol:g})",
    }


def check_geodesic_metric(trials: int = 200, tol: float = 1e-9) -> dict:
    specs = [
        ManifoldSpec("sphere"),
        ManifoldSpec("cylinder"),
        ManifoldSpec("cone", alpha=0.07),
        ManifoldSpec("swiss_roll"),
        ManifoldSpec("flat_torus"),
        ManifoldSpec("product", factors=(ManifoldSpec("sphere"),
                                         ManifoldSpec("flat_torus"))),
    ]
    worst = 0.0
    ok = True
    for si, spec in enumerate(specs):
        sm = sample_manifold(spec, 3 * trials, seed=1000 + si)
        P = sm.intrinsic
        for t in range(trials):
            a, b, c = P[3 * t], P[3 * t + 1], P[3 * t + 2]
            dab = geodesic(spec, a, b)
            dba = geodesic(spec, b, a)
            dac = geodesic(spec, a, c)
            dcb = geodesic(spec, c, b)
            if dab != dba or geodesic(spec, a, a) != 0.0:
                ok = False
            slack = dab - (dac + dcb)
            worst = max(worst, slack)
    passed = ok and worst <= tol
    return {
        "name": "geodesic-metric-properties",
        "passed": passed,
        "detail": f"max triangle violation {worst:.3e} (tol {tol:g}), symmetry exact: {ok}",
    }


def run_validation() -> list:
    """All batteries, in a stable order."""
    return [
        check_laplacian_exactness(),
        check_eigenmap_subspace(),
        check_head_against_loop(),
        check_geodesic_metric(),
    ]
