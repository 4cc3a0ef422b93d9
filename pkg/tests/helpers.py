"""Random well-posed LFT plants and stimulus designs shared by the tests."""

from __future__ import annotations

import numpy as np

from lftrecover import InterpSpec, LftPlant, ParamBox


def _scaled(rng, shape, norm):
    m = rng.standard_normal(shape)
    n = np.linalg.norm(m, 2)
    return m * (norm / n) if n > 0 else m


def random_plant(rng: np.random.Generator, m_x=None, m_theta=None, m_v=None, zero_dzv=False,
                 bd_rank=None) -> LftPlant:
    """A well-posed plant on the box ``[-1, 1]^m_theta`` with a stable ``A_xx``.

    ``||P_i|| <= 0.3`` and ``||D_zv|| <= 0.3`` keep ``I - P(theta) D_zv``
    invertible on the whole box. ``bd_rank`` below ``m_v`` makes
    ``[B_xv; D_yv]`` rank deficient so that its right null space is nonempty.
    """
    m_x = m_x or int(rng.integers(2, 7))
    m_theta = m_theta or int(rng.integers(1, 4))
    m_u = int(rng.integers(1, 3))
    m_y = int(rng.integers(1, 4))
    m_v = m_v or int(rng.integers(1, 4))
    m_z = int(rng.integers(1, 4))
    a = _scaled(rng, (m_x, m_x), 1.0) - 3.0 * np.eye(m_x)
    bd = rng.standard_normal((m_x + m_y, m_v))
    if bd_rank is not None:
        bd = rng.standard_normal((m_x + m_y, bd_rank)) @ rng.standard_normal((bd_rank, m_v))
    bd = bd / np.linalg.norm(bd, 2)
    p_basis = tuple(_scaled(rng, (m_v, m_z), 0.3) for _ in range(m_theta))
    return LftPlant(
        a_xx=a,
        b_xu=rng.standard_normal((m_x, m_u)),
        b_xv=0.5 * bd[:m_x],
        c_yx=rng.standard_normal((m_y, m_x)),
        c_zx=_scaled(rng, (m_z, m_x), 0.5),
        d_zu=rng.standard_normal((m_z, m_u)),
        d_zv=np.zeros((m_z, m_v)) if zero_dzv else _scaled(rng, (m_z, m_v), 0.3),
        d_yu=rng.standard_normal((m_y, m_u)),
        d_yv=2.0 * bd[m_x:],
        p0=_scaled(rng, (m_v, m_z), 0.3),
        p_basis=p_basis,
        theta_box=ParamBox(-np.ones(m_theta), np.ones(m_theta)),
    )


def random_spec(rng: np.random.Generator, plant: LftPlant, m_xi=None) -> InterpSpec:
    """Stimulus with spectrum near ``+1``, far from the stable plant poles."""
    m_x, m_u = plant.dims["m_x"], plant.dims["m_u"]
    m_xi = m_xi or int(rng.integers(1, min(m_x, 3) + 1))
    xi = _scaled(rng, (m_xi, m_xi), 0.5) + np.eye(m_xi)
    return InterpSpec(xi, rng.standard_normal((m_u, m_xi)))


def random_theta(rng: np.random.Generator, plant: LftPlant) -> np.ndarray:
    return plant.theta_box.sample(rng)


def projector(basis: np.ndarray) -> np.ndarray:
    """Orthogonal projector onto the column span of an orthonormal basis."""
    return basis @ basis.T


def factored_prox_descent(r, lam2, starts, rng):
    """Best proximal objective found by multi-start local descent.

    The nuclear norm equals ``min 0.5 (||A||^2 + ||B||^2)`` over factorizations
    ``X = A B^T``, so descending jointly in ``(A, B)`` minimizes the proximal
    objective without meeting the kinks of ``||X||_*`` at rank-deficient
    points. Each start runs L-BFGS with an analytic gradient; the value is
    re-evaluated with :func:`prox_objective` at ``A B^T``.
    """
    from scipy.optimize import minimize

    from lftrecover.recovery import prox_objective

    m, n = r.shape
    k = min(m, n)

    def split(z):
        return z[:m * k].reshape(m, k), z[m * k:].reshape(n, k)

    def fun(z):
        a, b = split(z)
        x = a @ b.T
        u, s, vt = np.linalg.svd(x)
        val = 0.5 * np.sum((r - x) ** 2) + lam2 * (0.5 * np.sum(a * a) + 0.5 * np.sum(b * b) - s[0])
        gx = (x - r) - lam2 * np.outer(u[:, 0], vt[0])
        return val, np.concatenate([(gx @ b + lam2 * a).ravel(), (gx.T @ a + lam2 * b).ravel()])

    best_val, best_x = np.inf, None
    for _ in range(starts):
        z0 = rng.standard_normal((m + n) * k) * np.sqrt(np.abs(r).max())
        res = minimize(fun, z0, jac=True, method="L-BFGS-B",
                       options={"ftol": 1e-15, "gtol": 1e-12, "maxiter": 5000})
        a, b = split(res.x)
        val = prox_objective(a @ b.T, r, lam2)
        if val < best_val:
            best_val, best_x = val, a @ b.T
    return best_val, best_x
