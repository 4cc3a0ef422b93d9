"""Dense real-matrix utilities.

Rank decisions, null-space bases and pseudoinverses all go through one SVD
with a relative cutoff, so that every full-rank test in the package uses the
same notion of numerical rank.
"""

from __future__ import annotations

import numpy as np

from .exceptions import NumericalError, SharedEigenvalue, SizeError

__all__ = [
    "default_tol",
    "rank",
    "right_null_basis",
    "left_null_basis",
    "pinv",
    "kron",
    "vec",
    "unvec",
    "solve_general_linear",
    "solve_sylvester",
    "sylvester_operator",
    "is_fcr",
    "is_frr",
]

_EPS = np.finfo(float).eps
# Refuse Kronecker products above this many entries (~1.6 GB of float64).
_MAX_ENTRIES = 200_000_000


def default_tol(shape) -> float:
    """Relative singular-value cutoff ``max(shape) * eps * 64``."""
    return max(max(shape), 1) * _EPS * 64


def _as2d(m) -> np.ndarray:
    a = np.asarray(m, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    elif a.ndim == 1:
        a = a.reshape(-1, 1)
    return a


def _svd(a, full_matrices=False):
    if not np.all(np.isfinite(a)):
        raise NumericalError("matrix contains non-finite entries")
    try:
        return np.linalg.svd(a, full_matrices=full_matrices)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericalError(f"SVD failed: {exc}") from exc


def _rank_from_sv(s, shape, tol) -> int:
    if s.size == 0 or s[0] == 0.0:
        return 0
    if tol is None:
        tol = default_tol(shape)
    return int(np.sum(s > tol * s[0]))


def rank(m, tol: float | None = None) -> int:
    """Numerical rank: count of singular values above ``tol * sigma_1``."""
    a = _as2d(m)
    if a.size == 0:
        return 0
    s = _svd(a, full_matrices=False)[1]
    return _rank_from_sv(s, a.shape, tol)


def is_fcr(m, tol: float | None = None) -> bool:
    a = _as2d(m)
    return a.shape[1] == 0 or rank(a, tol) == a.shape[1]


def is_frr(m, tol: float | None = None) -> bool:
    a = _as2d(m)
    return a.shape[0] == 0 or rank(a, tol) == a.shape[0]


def right_null_basis(m, tol: float | None = None) -> np.ndarray:
    """Orthonormal basis of the right null space, as columns.

    Returns an ``n x 0`` array when ``m`` has full column rank.
    """
    a = _as2d(m)
    n = a.shape[1]
    if a.shape[0] == 0:
        return np.eye(n)
    _, s, vt = _svd(a, full_matrices=True)
    r = _rank_from_sv(s, a.shape, tol)
    return vt[r:].T.copy()


def left_null_basis(m, tol: float | None = None) -> np.ndarray:
    """Orthonormal basis of the left null space, as rows (``N @ m == 0``)."""
    return right_null_basis(_as2d(m).T, tol).T


def pinv(m, tol: float | None = None) -> np.ndarray:
    """Moore-Penrose inverse with the package-wide rank cutoff."""
    a = _as2d(m)
    if a.size == 0:
        return np.zeros((a.shape[1], a.shape[0]))
    u, s, vt = _svd(a, full_matrices=False)
    r = _rank_from_sv(s, a.shape, tol)
    return (vt[:r].T / s[:r]) @ u[:, :r].T


def kron(a, b) -> np.ndarray:
    a = _as2d(a)
    b = _as2d(b)
    if a.size * b.size > _MAX_ENTRIES:
        raise SizeError(f"kron of {a.shape} and {b.shape} exceeds {_MAX_ENTRIES} entries")
    return np.kron(a, b)


def vec(m) -> np.ndarray:
    """Stack the columns of ``m`` into a 1-D vector."""
    return _as2d(m).reshape(-1, order="F")


def unvec(v, rows: int, cols: int) -> np.ndarray:
    return np.asarray(v, dtype=float).reshape(rows, cols, order="F")


def solve_general_linear(coeff, rhs, tol: float | None = None):
    """Minimum-norm solution and solution set of ``coeff @ x = rhs``.

    Returns
    -------
    particular : ndarray
        ``pinv(coeff) @ rhs``.
    null_basis : ndarray
        Orthonormal columns spanning the homogeneous solutions.
    consistent : bool
        Whether the residual of ``particular`` is at rounding level.
    """
    a = _as2d(coeff)
    b = np.asarray(rhs, dtype=float).reshape(-1)
    if b.shape[0] != a.shape[0]:
        raise ValueError(f"rhs has {b.shape[0]} rows, coefficient has {a.shape[0]}")
    x = pinv(a, tol) @ b
    resid = np.linalg.norm(a @ x - b)
    t = default_tol(a.shape) if tol is None else tol
    scale = max(np.linalg.norm(a, 2) * np.linalg.norm(x), np.linalg.norm(b), 1e-300)
    # zero coefficient with nonzero rhs must come out inconsistent
    consistent = bool(resid <= max(t, 1e-12) * scale) if np.linalg.norm(b) > 0 else True
    return x, right_null_basis(a, tol), consistent


def sylvester_operator(a, xi) -> np.ndarray:
    """Matrix of ``X -> a X - X xi`` acting on ``vec(X)``."""
    a = _as2d(a)
    xi = _as2d(xi)
    return kron(np.eye(xi.shape[0]), a) - kron(xi.T, np.eye(a.shape[0]))


def solve_sylvester(a, xi, rhs, tol: float | None = None) -> np.ndarray:
    """Solve ``a X - X xi + rhs = 0`` through the vectorized linear system.

    Raises
    ------
    SharedEigenvalue
        If the Kronecker coefficient is numerically singular.
    """
    a = _as2d(a)
    xi = _as2d(xi)
    rhs = _as2d(rhs)
    if a.shape[0] != a.shape[1] or xi.shape[0] != xi.shape[1]:
        raise ValueError("a and xi must be square")
    if rhs.shape != (a.shape[0], xi.shape[0]):
        raise ValueError(f"rhs must be {a.shape[0]}x{xi.shape[0]}, got {rhs.shape}")
    op = sylvester_operator(a, xi)
    s = _svd(op)[1]
    t = default_tol(op.shape) if tol is None else tol
    if s[0] == 0.0 or s[-1] <= t * s[0]:
        raise SharedEigenvalue("a and xi share an eigenvalue (singular Sylvester operator)")
    x = np.linalg.solve(op, -vec(rhs))
    return unvec(x, a.shape[0], xi.shape[0])
