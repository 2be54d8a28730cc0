"""Fixed-weight transformer programs versus direct linear algebra.

tf_laplacian is compared entry by entry with the normalized operator
assembled from scratch. tf_eigenmap runs on matrices whose bottom
eigenvectors are known in closed form (diagonal, block graphs) and is held
to invariants any faithful subspace iteration satisfies: orthonormal
output, permutation equivariance, rejection of a divergent shift.
"""

import numpy as np
import pytest

from spectral_icl.rep_transformer import (
    build_eigenmap_program,
    dct_rows,
    estimate_lambda_max,
    tf_eigenmap,
    tf_laplacian,
    tf_rep,
)
from spectral_icl.spectral import principal_angles


def _oracle_operator(X_cols, gamma):
    # unit self-affinity, degree normalization by column sums
    n = X_cols.shape[1]
    diff = X_cols[:, :, None] - X_cols[:, None, :]
    A = np.exp(-gamma * np.sum(diff**2, axis=0))
    return np.eye(n) - A / A.sum(axis=0, keepdims=True)


def test_tf_laplacian_matches_direct_assembly():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(3, 20))
    L = tf_laplacian(X, gamma=10.0)
    assert np.max(np.abs(L - _oracle_operator(X, 10.0))) < 1e-12


def test_tf_laplacian_identical_points():
    X = np.ones((2, 6))
    L = tf_laplacian(X, gamma=1.0)
    assert np.allclose(L, np.eye(6) - np.ones((6, 6)) / 6.0, atol=1e-14)


def test_tf_laplacian_columns_sum_to_zero():
    rng = np.random.default_rng(1)
    L = tf_laplacian(rng.normal(size=(4, 15)), gamma=2.0)
    assert np.max(np.abs(L.sum(axis=0))) < 1e-12


def test_tf_laplacian_input_validation():
    with pytest.raises(ValueError):
        tf_laplacian(np.ones((3, 1)), gamma=1.0)
    with pytest.raises(ValueError):
        tf_laplacian(np.ones((3, 4)), gamma=0.0)


def test_eigenmap_diagonal_alignment():
    psi = np.diag([0.1, 0.5, 0.9])
    # bottom-2 of Psi^T Psi = diag(0.01, 0.25, 0.81) is span{e1, e2}
    prog = build_eigenmap_program(n=3, k=2, mu=1.05 * 0.81, T=60)
    phi = tf_eigenmap(psi, prog)
    for row, axis in ((0, 0), (1, 1)):
        cos = abs(phi[row, axis]) / np.linalg.norm(phi[row])
        assert cos >= 0.999


def test_eigenmap_two_component_null_space():
    # block operator: the double zero eigenvalue belongs to the indicators
    L = np.zeros((8, 8))
    L[:4, :4] = np.eye(4) - 0.25
    L[4:, 4:] = np.eye(4) - 0.25
    prog = build_eigenmap_program(n=8, k=2, mu=1.05, T=80)
    phi = tf_eigenmap(L, prog)
    ind = np.zeros((8, 2))
    ind[:4, 0] = 1.0
    ind[4:, 1] = 1.0
    assert np.max(principal_angles(phi.T, ind)) < 1e-3


def test_eigenmap_full_rank_orthonormal():
    rng = np.random.default_rng(2)
    Q = np.linalg.qr(rng.normal(size=(5, 5)))[0]
    psi = Q @ np.diag([0.1, 0.35, 0.6, 0.8, 1.0]) @ Q.T
    prog = build_eigenmap_program(n=5, k=5, mu=1.1, T=80)
    phi = tf_eigenmap(psi, prog)
    assert np.max(np.abs(phi @ phi.T - np.eye(5))) <= 1e-6


def test_eigenmap_trace_hook_sees_every_sweep():
    psi = np.diag(np.linspace(0.1, 1.0, 6))
    prog = build_eigenmap_program(n=6, k=2, mu=1.2, T=5)
    seen = []
    phi = tf_eigenmap(psi, prog, trace_hook=lambda s, p: seen.append((s, p)))
    assert len(seen) >= 1
    sweeps = [s for s, _ in seen]
    assert sweeps == sorted(sweeps) and len(set(sweeps)) == len(sweeps)
    assert all(p.shape == (2, 6) for _, p in seen)
    assert np.array_equal(phi, seen[-1][1])


def test_eigenmap_permutation_equivariance():
    rng = np.random.default_rng(4)
    B = rng.normal(size=(7, 7))
    psi = B @ B.T / 50.0
    perm = rng.permutation(7)
    P = np.eye(7)[perm]
    mu = 1.05 * estimate_lambda_max(psi.T @ psi)
    prog_a = build_eigenmap_program(n=7, k=3, mu=mu, T=4)
    prog_b = build_eigenmap_program(n=7, k=3, mu=mu, T=4)
    prog_b.M = prog_a.M[:, perm]
    phi_a = tf_eigenmap(psi, prog_a)
    phi_b = tf_eigenmap(P @ psi @ P.T, prog_b)
    assert np.max(np.abs(phi_b - phi_a[:, perm])) <= 1e-9


def test_estimate_lambda_max():
    assert estimate_lambda_max(np.diag([1.0, 2.0, 5.0])) == pytest.approx(5.0, abs=0.05)
    assert estimate_lambda_max(np.zeros((4, 4))) == 0.0
    rng = np.random.default_rng(5)
    B = rng.normal(size=(10, 10))
    M = B @ B.T
    exact = np.linalg.eigvalsh(M)[-1]
    assert estimate_lambda_max(M) == pytest.approx(exact, rel=0.01)


def test_program_layer_counts():
    assert len(build_eigenmap_program(n=6, k=1, mu=1.0, T=10).layers) == 1
    assert len(build_eigenmap_program(n=6, k=3, mu=1.0, T=10).layers) == 3


def test_program_builder_validation():
    with pytest.raises(ValueError):
        build_eigenmap_program(n=4, k=5, mu=1.0, T=10)
    with pytest.raises(ValueError):
        build_eigenmap_program(n=4, k=2, mu=-1.0, T=10)
    with pytest.raises(ValueError):
        build_eigenmap_program(n=4, k=2, mu=1.0, T=0)


def test_eigenmap_zero_init_row_degenerate():
    # a vanished iterate row must be reported, not silently rescaled
    psi = np.diag([0.1, 0.2, 0.3, 0.4])
    prog = build_eigenmap_program(n=4, k=2, mu=1.1, T=10)
    prog.M = prog.M.copy()
    prog.M[1] = 0.0
    with pytest.raises(ValueError, match="degenerate"):
        tf_eigenmap(psi, prog)


def test_small_mu_rejected():
    psi = np.diag([0.5, 1.0, 2.0])
    prog = build_eigenmap_program(n=3, k=2, mu=0.5, T=10)
    with pytest.raises(ValueError, match="diverge"):
        tf_eigenmap(psi, prog)


def test_eigenmap_shape_validation():
    prog = build_eigenmap_program(n=4, k=2, mu=1.1, T=10)
    with pytest.raises(ValueError):
        tf_eigenmap(np.zeros((3, 3)), prog)
    with pytest.raises(ValueError):
        tf_eigenmap(np.zeros((4, 5)), prog)


def test_dct_rows_orthonormal():
    D = dct_rows(4, 9)
    assert np.allclose(D @ D.T, np.eye(4), atol=1e-12)


def test_tf_rep_recovers_blob_split():
    # two well-separated blobs: sign of the second embedding row splits them
    rng = np.random.default_rng(6)
    n_half = 20
    pts = np.hstack((rng.normal(size=(3, n_half)) * 0.05,
                     rng.normal(size=(3, n_half)) * 0.05 + 3.0))
    phi = tf_rep(pts, gamma=1.0, k=2, T=40)
    signs = np.sign(phi[1])
    agree = max(np.mean(signs[:n_half] == s) + np.mean(signs[n_half:] == -s)
                for s in (1.0, -1.0)) / 2.0
    assert agree >= 0.95
