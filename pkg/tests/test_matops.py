"""Dense linear-algebra utilities: worked examples, oracles and properties."""

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from lftrecover import matops
from lftrecover.exceptions import SharedEigenvalue, SizeError
from helpers import projector

N_RANDOM = 200


def random_rank_deficient(rng, rows, cols, r):
    return rng.standard_normal((rows, r)) @ rng.standard_normal((r, cols))


# ---------------------------------------------------------------- rank

def test_rank_identity_and_zero():
    assert matops.rank(np.eye(3)) == 3
    assert matops.rank(np.zeros((2, 4))) == 0


def test_rank_outer_product(rng):
    u, v = rng.standard_normal(5), rng.standard_normal(3)
    m = np.outer(u, v)
    s = np.linalg.svd(m, compute_uv=False)
    assert s[1] / s[0] < matops.default_tol(m.shape)
    assert matops.rank(m) == 1


def test_rank_tolerance_is_configurable():
    m = np.diag([1.0, 1e-6])
    assert matops.rank(m) == 2
    assert matops.rank(m, tol=1e-3) == 1


def test_fcr_frr_flags():
    m = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    assert matops.is_fcr(m) and not matops.is_frr(m)
    assert matops.is_frr(m.T) and not matops.is_fcr(m.T)


# ---------------------------------------------------------------- null bases

def test_right_null_of_row():
    n = matops.right_null_basis(np.array([[1.0, 0.0]]))
    assert n.shape == (2, 1)
    assert np.allclose(np.abs(n[:, 0]), [0.0, 1.0])


def test_left_null_of_column():
    n = matops.left_null_basis(np.array([[1.0], [0.0]]))
    assert n.shape == (1, 2)
    assert np.allclose(np.abs(n[0]), [0.0, 1.0])


def test_full_rank_gives_empty_bases(rng):
    m = rng.standard_normal((5, 3))
    assert matops.right_null_basis(m).shape == (3, 0)
    assert matops.left_null_basis(m.T).shape == (0, 3)


def test_right_null_rank_two(rng):
    m = random_rank_deficient(rng, 3, 5, 2)
    n = matops.right_null_basis(m)
    assert n.shape == (5, 3)
    assert np.allclose(n.T @ n, np.eye(3), atol=1e-10)
    assert np.linalg.norm(m @ n) <= 1e-10 * np.linalg.norm(m)


def test_left_right_duality(rng):
    for _ in range(20):
        m = random_rank_deficient(rng, 6, 4, 2)
        left = matops.left_null_basis(m)
        right_t = matops.right_null_basis(m.T)
        assert np.allclose(projector(left.T), projector(right_t), atol=1e-10)


def test_null_basis_matches_scipy(rng):
    for _ in range(20):
        m = random_rank_deficient(rng, 4, 7, 3)
        ours = matops.right_null_basis(m)
        ref = scipy.linalg.null_space(m)
        assert np.allclose(projector(ours), projector(ref), atol=1e-9)


def test_null_basis_properties_random(rng):
    for _ in range(N_RANDOM):
        rows, cols = rng.integers(1, 8, size=2)
        r = int(rng.integers(0, min(rows, cols) + 1))
        m = random_rank_deficient(rng, rows, cols, r) if r else np.zeros((rows, cols))
        n = matops.right_null_basis(m)
        assert np.allclose(n.T @ n, np.eye(n.shape[1]), atol=1e-10)
        assert matops.rank(m) + n.shape[1] == cols
        assert np.linalg.norm(m @ n) <= 1e-10 * max(np.linalg.norm(m), 1.0)
        left = matops.left_null_basis(m)
        assert np.allclose(left @ left.T, np.eye(left.shape[0]), atol=1e-10)
        assert matops.rank(m) + left.shape[0] == rows


# ---------------------------------------------------------------- pinv

def test_pinv_trivial_cases():
    assert np.array_equal(matops.pinv(np.eye(3)), np.eye(3))
    assert np.array_equal(matops.pinv(np.zeros((2, 5))), np.zeros((5, 2)))


def test_pinv_left_inverse_of_fcr(rng):
    m = rng.standard_normal((4, 2))
    assert np.allclose(matops.pinv(m) @ m, np.eye(2), atol=1e-10)


def penrose_residuals(m, p):
    return (
        np.linalg.norm(m @ p @ m - m),
        np.linalg.norm(p @ m @ p - p),
        np.linalg.norm((m @ p).T - m @ p),
        np.linalg.norm((p @ m).T - p @ m),
    )


def test_penrose_conditions_random(rng):
    for _ in range(N_RANDOM):
        rows, cols = rng.integers(1, 8, size=2)
        r = int(rng.integers(1, min(rows, cols) + 1))
        m = random_rank_deficient(rng, rows, cols, r)
        p = matops.pinv(m)
        scale = np.linalg.norm(m)
        r1, r2, r3, r4 = penrose_residuals(m, p)
        assert r1 <= 1e-9 * scale
        assert r2 <= 1e-9 * np.linalg.norm(p)
        assert r3 <= 1e-9 and r4 <= 1e-9
        assert np.allclose(p, np.linalg.pinv(m, rcond=matops.default_tol(m.shape)), atol=1e-8)


# ---------------------------------------------------------------- kron / vec

def test_kron_examples():
    assert np.array_equal(matops.kron(np.eye(2), np.eye(3)), np.eye(6))
    assert matops.kron(2.0, 3.0).item() == 6.0


def test_kron_size_guard():
    with pytest.raises(SizeError):
        matops.kron(np.zeros((20000, 1)), np.zeros((20000, 1)))


def test_vec_examples():
    assert np.array_equal(matops.vec([[1, 3], [2, 4]]), [1, 2, 3, 4])
    assert np.array_equal(matops.vec(np.eye(2)), [1, 0, 0, 1])


def test_vec_roundtrip(rng):
    m = rng.standard_normal((3, 4))
    assert np.array_equal(matops.unvec(matops.vec(m), 3, 4), m)


def test_vec_kron_identity_random(rng):
    for _ in range(N_RANDOM):
        p, q, r, s = rng.integers(1, 5, size=4)
        a = rng.standard_normal((p, q))
        x = rng.standard_normal((q, r))
        b = rng.standard_normal((r, s))
        lhs = matops.vec(a @ x @ b)
        rhs = matops.kron(b.T, a) @ matops.vec(x)
        assert np.allclose(lhs, rhs, rtol=0, atol=1e-12 * (1 + np.abs(lhs).max()))


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_vec_kron_identity_hypothesis(q, r, seed):
    g = np.random.default_rng(seed)
    a = g.standard_normal((2, q))
    x = g.standard_normal((q, r))
    b = g.standard_normal((r, 3))
    assert np.allclose(matops.vec(a @ x @ b), matops.kron(b.T, a) @ matops.vec(x))


# ---------------------------------------------------------------- linear solve

def test_general_linear_identity():
    b = np.array([1.0, -2.0, 3.0])
    x, n, ok = matops.solve_general_linear(np.eye(3), b)
    assert np.allclose(x, b) and n.shape == (3, 0) and ok


def test_general_linear_inconsistent():
    _, _, ok = matops.solve_general_linear(np.zeros((2, 2)), np.array([1.0, 0.0]))
    assert not ok


def test_general_linear_underdetermined(rng):
    a = rng.standard_normal((2, 5))
    b = rng.standard_normal(2)
    x, n, ok = matops.solve_general_linear(a, b)
    assert ok and n.shape == (5, 3)
    assert np.linalg.norm(a @ x - b) <= 1e-10
    # every member of the solution set solves the system
    z = x + n @ rng.standard_normal(3)
    assert np.linalg.norm(a @ z - b) <= 1e-10


def test_general_linear_overdetermined_inconsistent(rng):
    a = rng.standard_normal((5, 2))
    b = rng.standard_normal(5)
    assert not matops.solve_general_linear(a, b)[2]


# ---------------------------------------------------------------- Sylvester

def test_sylvester_scalar():
    assert np.allclose(matops.solve_sylvester([[-1.0]], [[0.0]], [[1.0]]), [[1.0]])


def test_sylvester_zero_rhs():
    x = matops.solve_sylvester(-np.eye(2), np.eye(2), np.zeros((2, 2)))
    assert np.array_equal(x, np.zeros((2, 2)))


def test_sylvester_shared_eigenvalue():
    with pytest.raises(SharedEigenvalue):
        matops.solve_sylvester(np.diag([1.0, 2.0]), np.array([[2.0]]), np.ones((2, 1)))


def separated_pair(rng, mx, mxi, gap=0.1):
    """Stable ``a`` and ``xi`` whose spectra are at least ``gap`` apart."""
    while True:
        a = rng.standard_normal((mx, mx)) - 2.0 * np.eye(mx)
        xi = rng.standard_normal((mxi, mxi))
        ea, ex = np.linalg.eigvals(a), np.linalg.eigvals(xi)
        if np.min(np.abs(ea[:, None] - ex[None, :])) >= gap:
            return a, xi


def test_sylvester_residual_random(rng):
    for _ in range(N_RANDOM):
        mx = int(rng.integers(1, 7))
        mxi = int(rng.integers(1, mx + 1))
        a, xi = separated_pair(rng, mx, mxi)
        rhs = rng.standard_normal((mx, mxi))
        x = matops.solve_sylvester(a, xi, rhs)
        resid = np.linalg.norm(a @ x - x @ xi + rhs)
        assert resid <= 1e-9 * (np.linalg.norm(a) + np.linalg.norm(xi)) * np.linalg.norm(x)
        # scipy solves a X + X b = q
        ref = scipy.linalg.solve_sylvester(a, -xi, -rhs)
        assert np.allclose(x, ref, rtol=1e-7, atol=1e-9 * np.abs(ref).max())
