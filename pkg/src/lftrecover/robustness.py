"""First-order sensitivity of the recovered parameters to RTIM errors.

Linearizing ``A(theta) T1 - T1 Xi + B(theta) Pi = 0`` and
``C(theta) T1 + D(theta) Pi = Gamma`` around the true parameter gives

    R_xv d_theta + R_xx vec(d_T1) = 0,
    R_yv d_theta + R_yx vec(d_T1) = vec(d_Gamma).

With ``N`` a right null basis of ``[R_xv R_xx]`` the parameter error is
determined by the RTIM error iff ``[R_yv R_yx] N`` has full column rank, in
which case ``||d_theta|| <= kappa ||d_Gamma||`` to first order with
``kappa = ||[I 0] N ([R_yv R_yx] N)^+||_2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import matops
from .exceptions import DimensionMismatch
from .interpolation import InterpSpec, check_dimension_order, solve_x
from .lft import LftPlant, assemble_system, eval_p, psi_matrix

__all__ = ["RobustnessReport", "build_r_matrices", "check_robustness"]


@dataclass
class RobustnessReport:
    """``amplification`` is ``None`` unless ``robust`` is true.

    ``degenerate`` flags an empty null basis of ``[R_xv R_xx]``, where the
    linearized equations pin ``(d_theta, d_T1)`` to zero regardless of the data.
    """

    robust: bool
    amplification: float | None
    condition_matrix_rank: int
    dims: dict = field(default_factory=dict)
    degenerate: bool = False


def build_r_matrices(plant: LftPlant, theta, spec: InterpSpec, t1=None) -> dict:
    """Jacobian blocks of the state and output interpolation equations.

    ``t1`` defaults to the exact state solution ``X(theta)``.
    """
    check_dimension_order(plant, spec)
    if t1 is None:
        t1 = solve_x(plant, theta, spec)
    t1 = np.asarray(t1, dtype=float)
    mx, mxi = plant.dims["m_x"], spec.m_xi
    if t1.shape != (mx, mxi):
        raise DimensionMismatch(f"T1 must be {mx}x{mxi}, got {t1.shape}", block="T1")
    a, _, c, _ = assemble_system(plant, theta)  # raises IllPosed
    p = eval_p(plant, theta)
    mv, mz = p.shape
    right = np.linalg.solve(np.eye(mz) - plant.d_zv @ p, plant.c_zx @ t1 + plant.d_zu @ spec.pi)
    left_inv = np.linalg.inv(np.eye(mv) - p @ plant.d_zv)
    psi = psi_matrix(plant)
    eye_xi = np.eye(mxi)
    return {
        "r_xv": matops.kron(right.T, plant.b_xv @ left_inv) @ psi,
        "r_xx": matops.sylvester_operator(a, spec.xi),
        "r_yv": matops.kron(right.T, plant.d_yv @ left_inv) @ psi,
        "r_yx": matops.kron(eye_xi, c),
    }


def check_robustness(plant: LftPlant, theta, spec: InterpSpec, t1=None, tol: float | None = None) -> RobustnessReport:
    """Robustness flag and error amplification factor at ``theta``."""
    r = build_r_matrices(plant, theta, spec, t1)
    top = np.hstack([r["r_xv"], r["r_xx"]])
    bottom = np.hstack([r["r_yv"], r["r_yx"]])
    null = matops.right_null_basis(top, tol)
    m_theta = r["r_xv"].shape[1]
    dims = {
        "r_xv": r["r_xv"].shape, "r_xx": r["r_xx"].shape,
        "r_yv": r["r_yv"].shape, "r_yx": r["r_yx"].shape, "null_width": null.shape[1],
    }
    if null.shape[1] == 0:
        return RobustnessReport(False, None, 0, dims, degenerate=True)
    cond = bottom @ null
    # N is orthonormal, so ||cond|| <= ||bottom||; measuring singular values
    # against ||bottom|| keeps rounding noise in a zero product from counting
    sv = np.linalg.svd(cond, compute_uv=False)
    rel = matops.default_tol(cond.shape) if tol is None else tol
    scale = max(np.linalg.norm(bottom, 2), np.finfo(float).tiny)
    rk = int(np.sum(sv > rel * scale))
    robust = rk == cond.shape[1]
    kappa = None
    if robust:
        gain = null[:m_theta] @ matops.pinv(cond, tol)
        kappa = float(np.linalg.norm(gain, 2))
    return RobustnessReport(bool(robust), kappa, int(rk), dims)
