"""Parameter recovery from an RTIM.

The consistency equations are rewritten as an affine residual
``e(theta, alpha, Gamma)`` subject to a rank-one condition on the matrix
``R(theta, alpha) = [[1, theta^T], [alpha_t, alpha_t_i...], [alpha_s, alpha_s_i...]]``.
:func:`recover` minimizes

    J = 1/2 ||e||^2 + lambda1 * (1/2 ||R - R_in||_F^2 + lambda2 * sum_{i>=2} sigma_i(R_in))

by alternating a fixed-step gradient step in ``(theta, alpha)`` with the
closed-form update of the instrumental matrix ``R_in`` (:func:`prox_rin`).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import matops
from .exceptions import DimensionMismatch, NonFinite
from .interpolation import InterpSpec, Rtim, check_dimension_order
from .lft import LftPlant, ParamBox, assemble_system, eval_p

__all__ = [
    "RecoveryProblem",
    "AlphaVec",
    "RecoveryConfig",
    "RecoveryResult",
    "check_consistency",
    "build_problem",
    "eval_e",
    "eval_t1",
    "eval_r",
    "cost_j",
    "grad_j",
    "prox_rin",
    "prox_objective",
    "recover",
    "init_alpha_ls",
    "induced_alpha",
]

log = logging.getLogger(__name__)


def _gamma_matrix(rtim) -> np.ndarray:
    return rtim.gamma if isinstance(rtim, Rtim) else np.array(rtim, dtype=float, ndmin=2)


# --------------------------------------------------------------------------
# consistency test


def check_consistency(plant: LftPlant, theta, spec: InterpSpec, rtim, tol: float = 1e-8):
    """Test whether ``theta`` is consistent with the RTIM.

    Solves ``A T1 - T1 Xi = -B Pi`` and ``C T1 = Gamma - D Pi`` jointly in the
    least-squares sense and accepts when the stacked residual is below
    ``tol * max(1, ||Gamma||)`` and ``T1`` has full column rank.

    Returns
    -------
    consistent : bool
    t1 : ndarray
    """
    check_dimension_order(plant, spec)
    gamma = _gamma_matrix(rtim)
    a, b, c, d = assemble_system(plant, theta)
    mx, mxi = a.shape[0], spec.m_xi
    if gamma.shape != (c.shape[0], mxi):
        raise DimensionMismatch(f"Gamma must be {c.shape[0]}x{mxi}, got {gamma.shape}", block="Gamma")
    coeff = np.vstack([matops.sylvester_operator(a, spec.xi), matops.kron(np.eye(mxi), c)])
    rhs = np.concatenate([-matops.vec(b @ spec.pi), matops.vec(gamma - d @ spec.pi)])
    sol, *_ = np.linalg.lstsq(coeff, rhs, rcond=None)
    t1 = matops.unvec(sol, mx, mxi)
    resid = np.linalg.norm(coeff @ sol - rhs)
    ok = resid <= tol * max(1.0, np.linalg.norm(gamma)) and matops.is_fcr(t1)
    return bool(ok), t1


# --------------------------------------------------------------------------
# problem data


@dataclass(frozen=True, eq=False)
class RecoveryProblem:
    """Constant data of the residual ``e`` for one plant, stimulus and RTIM.

    ``upsilon_alpha`` holds the ``m_xi`` row blocks of the null basis of
    ``upsilon_s``; ``wt``/``ws``/``w`` are indexed by parameter.
    """

    upsilon_t: np.ndarray
    upsilon_s: np.ndarray
    upsilon_s_pinv: np.ndarray
    upsilon_s_null: np.ndarray
    t10: np.ndarray
    gamma_vec: np.ndarray
    w: tuple
    wt0: np.ndarray
    ws0: np.ndarray
    wt: tuple
    ws: tuple
    dims: dict
    theta_box: ParamBox | None = None
    gamma: np.ndarray | None = None

    @property
    def design(self) -> np.ndarray:
        """``[w_1..w_m, W_t0, W_s0, W_t1..W_tm, W_s1..W_sm]`` so that
        ``e = design @ concat(theta, alpha.flat()) - gamma_vec``."""
        cached = self.__dict__.get("_design")
        if cached is None:
            nrow = self.gamma_vec.size
            cols = [np.column_stack(self.w) if self.w else np.zeros((nrow, 0)), self.wt0, self.ws0]
            cols += list(self.wt) + list(self.ws)
            cached = np.hstack([c.reshape(nrow, -1) for c in cols])
            self.__dict__["_design"] = cached
        return cached

    @property
    def width_t(self) -> int:
        return self.dims["width_t"]

    @property
    def width_s(self) -> int:
        return self.dims["width_s"]

    @property
    def n_theta(self) -> int:
        return self.dims["m_theta"]

    @property
    def n_alpha(self) -> int:
        return (1 + self.n_theta) * (self.width_t + self.width_s)


def _constant_blocks(plant: LftPlant, spec: InterpSpec, tol=None) -> dict:
    """Everything that does not depend on Gamma."""
    d = plant.dims
    mx, my, mxi = d["m_x"], d["m_y"], spec.m_xi
    bd = plant.bd_v
    bd_pinv = matops.pinv(bd, tol)
    n_l = matops.left_null_basis(bd, tol)
    n_r = matops.right_null_basis(bd, tol)
    eye_xi = np.eye(mxi)
    ups_t = matops.kron(eye_xi, np.vstack([np.eye(mx), np.zeros((my, mx))]))
    # vec([T1; 0] Xi - [A_xx; C_yx] T1) = shift @ vec(T1)
    shift = matops.kron(spec.xi.T, np.eye(mx + my)) @ ups_t - matops.kron(eye_xi, plant.ac)
    ups_s = matops.kron(eye_xi, n_l) @ shift
    ups_s_pinv = matops.pinv(ups_s, tol)
    ups_s_null = matops.right_null_basis(ups_s, tol)
    eye_v = np.eye(d["m_v"])
    m0 = matops.kron(eye_xi, plant.p0 @ plant.c_zx) + matops.kron(
        eye_xi, (plant.p0 @ plant.d_zv - eye_v) @ bd_pinv
    ) @ shift
    mi = [
        matops.kron(eye_xi, p @ plant.c_zx) + matops.kron(eye_xi, p @ plant.d_zv @ bd_pinv) @ shift
        for p in plant.p_basis
    ]
    return dict(
        bd_pinv=bd_pinv, n_l=n_l, n_r=n_r, ups_t=ups_t, ups_s=ups_s, ups_s_pinv=ups_s_pinv,
        ups_s_null=ups_s_null, m0=m0, mi=mi,
    )


def build_problem(plant: LftPlant, spec: InterpSpec, rtim, tol: float | None = None) -> RecoveryProblem:
    """Assemble every constant vector and matrix feeding ``e``, ``T1`` and ``R``."""
    check_dimension_order(plant, spec)
    gamma = _gamma_matrix(rtim)
    d = plant.dims
    mx, my, mxi, mv = d["m_x"], d["m_y"], spec.m_xi, d["m_v"]
    if gamma.shape != (my, mxi):
        raise DimensionMismatch(f"Gamma must be {my}x{mxi}, got {gamma.shape}", block="Gamma")
    k = _constant_blocks(plant, spec, tol)
    pi = spec.pi
    # g_mat = [-B_xu Pi; Gamma - D_yu Pi]; the Sylvester projection uses -g_mat
    g_mat = np.vstack([-plant.b_xu @ pi, gamma - plant.d_yu @ pi])
    tau0 = k["ups_s_pinv"] @ matops.vec(k["n_l"] @ (-g_mat))
    eye_v = np.eye(mv)
    gamma_vec = matops.vec(
        (eye_v - plant.p0 @ plant.d_zv) @ k["bd_pinv"] @ g_mat - plant.p0 @ plant.d_zu @ pi
    ) - k["m0"] @ tau0
    w = tuple(
        matops.vec(p @ (plant.d_zu @ pi + plant.d_zv @ k["bd_pinv"] @ g_mat)) + m @ tau0
        for p, m in zip(plant.p_basis, k["mi"])
    )
    ns = k["ups_s_null"]
    n_r = k["n_r"]
    eye_xi = np.eye(mxi)
    wt0 = k["m0"] @ ns
    wt = tuple(m @ ns for m in k["mi"])
    ws0 = matops.kron(eye_xi, (plant.p0 @ plant.d_zv - eye_v) @ n_r)
    ws = tuple(matops.kron(eye_xi, p @ plant.d_zv @ n_r) for p in plant.p_basis)
    dims = dict(d)
    dims.update(m_xi=mxi, width_t=ns.shape[1], width_s=n_r.shape[1] * mxi, width_r=n_r.shape[1])
    return RecoveryProblem(
        upsilon_t=k["ups_t"], upsilon_s=k["ups_s"], upsilon_s_pinv=k["ups_s_pinv"],
        upsilon_s_null=ns, t10=matops.unvec(tau0, mx, mxi), gamma_vec=gamma_vec, w=w,
        wt0=wt0, ws0=ws0, wt=wt, ws=ws, dims=dims, theta_box=plant.theta_box, gamma=gamma,
    )


# --------------------------------------------------------------------------
# alpha bookkeeping


@dataclass
class AlphaVec:
    """Auxiliary variables; per-parameter blocks are stored as rows."""

    alpha_t: np.ndarray
    alpha_s: np.ndarray
    alpha_t_i: np.ndarray
    alpha_s_i: np.ndarray

    @classmethod
    def zeros(cls, prob: RecoveryProblem) -> "AlphaVec":
        nt, wt, ws = prob.n_theta, prob.width_t, prob.width_s
        return cls(np.zeros(wt), np.zeros(ws), np.zeros((nt, wt)), np.zeros((nt, ws)))

    @classmethod
    def tied(cls, alpha_t, alpha_s, theta) -> "AlphaVec":
        """Alpha satisfying the rank-one structure ``alpha_*_i = theta_i * alpha_*``."""
        at = np.asarray(alpha_t, float).reshape(-1)
        as_ = np.asarray(alpha_s, float).reshape(-1)
        th = np.asarray(theta, float).reshape(-1)
        return cls(at, as_, np.outer(th, at), np.outer(th, as_))

    def flat(self) -> np.ndarray:
        return np.concatenate(
            [self.alpha_t, self.alpha_s, self.alpha_t_i.reshape(-1), self.alpha_s_i.reshape(-1)]
        )

    @classmethod
    def from_flat(cls, v, prob: RecoveryProblem) -> "AlphaVec":
        nt, wt, ws = prob.n_theta, prob.width_t, prob.width_s
        v = np.asarray(v, dtype=float)
        if v.size != prob.n_alpha:
            raise DimensionMismatch(f"alpha has {v.size} entries, expected {prob.n_alpha}")
        i = 0
        at = v[i:i + wt]; i += wt
        as_ = v[i:i + ws]; i += ws
        ati = v[i:i + nt * wt].reshape(nt, wt); i += nt * wt
        asi = v[i:i + nt * ws].reshape(nt, ws)
        return cls(at.copy(), as_.copy(), ati.copy(), asi.copy())


def _check_alpha(prob: RecoveryProblem, alpha: AlphaVec):
    nt, wt, ws = prob.n_theta, prob.width_t, prob.width_s
    if (alpha.alpha_t.shape != (wt,) or alpha.alpha_s.shape != (ws,)
            or alpha.alpha_t_i.shape != (nt, wt) or alpha.alpha_s_i.shape != (nt, ws)):
        raise DimensionMismatch("alpha blocks do not conform to the problem dimensions")


def _check_theta(prob: RecoveryProblem, theta) -> np.ndarray:
    t = np.asarray(theta, dtype=float).reshape(-1)
    if t.size != prob.n_theta:
        raise DimensionMismatch(f"theta has {t.size} entries, expected {prob.n_theta}")
    return t


# --------------------------------------------------------------------------
# residual and structured matrices


def eval_e(prob: RecoveryProblem, theta, alpha: AlphaVec) -> np.ndarray:
    t = _check_theta(prob, theta)
    _check_alpha(prob, alpha)
    e = prob.wt0 @ alpha.alpha_t + prob.ws0 @ alpha.alpha_s - prob.gamma_vec
    for i in range(prob.n_theta):
        e = e + prob.w[i] * t[i] + prob.wt[i] @ alpha.alpha_t_i[i] + prob.ws[i] @ alpha.alpha_s_i[i]
    return e


def eval_t1(prob: RecoveryProblem, alpha: AlphaVec) -> np.ndarray:
    """``T10 + [U_1 alpha_t, ..., U_mxi alpha_t]`` with ``U_j`` the null-basis row blocks."""
    if alpha.alpha_t.shape != (prob.width_t,):
        raise DimensionMismatch("alpha_t does not match the null-space width of upsilon_s")
    mx, mxi = prob.t10.shape
    return prob.t10 + matops.unvec(prob.upsilon_s_null @ alpha.alpha_t, mx, mxi)


def eval_r(theta, alpha: AlphaVec) -> np.ndarray:
    t = np.asarray(theta, dtype=float).reshape(-1)
    top = np.concatenate([[1.0], t])
    mid = np.column_stack([alpha.alpha_t, alpha.alpha_t_i.T]) if alpha.alpha_t.size else np.zeros((0, t.size + 1))
    bot = np.column_stack([alpha.alpha_s, alpha.alpha_s_i.T]) if alpha.alpha_s.size else np.zeros((0, t.size + 1))
    return np.vstack([top, mid, bot])


def _split_r(prob: RecoveryProblem, m: np.ndarray):
    wt = prob.width_t
    d_theta = m[0, 1:]
    d_alpha = AlphaVec(m[1:1 + wt, 0], m[1 + wt:, 0], m[1:1 + wt, 1:].T, m[1 + wt:, 1:].T)
    return d_theta, d_alpha


# --------------------------------------------------------------------------
# configuration / cost / gradient


@dataclass
class RecoveryConfig:
    """Tuning of :func:`recover`.

    Defaults reproduce the settings used for the fourth-order example.
    ``project_theta`` clamps each iterate to the plant's parameter box;
    ``backtracking`` enables an Armijo step reduction in place of the fixed step.
    """

    lambda1: float = 2.0
    lambda2: float = 10.0
    step: float = 0.05
    eps_it: float = 1e-10
    max_iter: int = 2500
    init_theta: np.ndarray | None = None
    init_alpha: AlphaVec | None = None
    seed: int = 0
    project_theta: bool = True
    backtracking: bool = False

    def __post_init__(self):
        for name in ("lambda1", "lambda2", "step", "eps_it"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if int(self.max_iter) < 1:
            raise ValueError("max_iter must be at least 1")


def prox_objective(r_in, r, lambda2: float) -> float:
    """Objective of the ``R_in`` update, linearized at the top singular pair of ``r``.

    ``1/2 ||r - r_in||_F^2 + lambda2 (||r_in||_* - u1^T r_in v1)``.
    """
    u, s, vt = _svd_signed(r)
    nuc = np.linalg.svd(r_in, compute_uv=False).sum()
    lin = u[:, 0] @ r_in @ vt[0] if s.size else 0.0
    return 0.5 * np.sum((r - r_in) ** 2) + lambda2 * (nuc - lin)


def cost_j(prob: RecoveryProblem, cfg: RecoveryConfig, theta, alpha: AlphaVec, r_in) -> float:
    e = eval_e(prob, theta, alpha)
    r = eval_r(theta, alpha)
    sv = np.linalg.svd(np.asarray(r_in, float), compute_uv=False)
    return float(0.5 * e @ e + cfg.lambda1 * (0.5 * np.sum((r - r_in) ** 2) + cfg.lambda2 * sv[1:].sum()))


def grad_j(prob: RecoveryProblem, cfg: RecoveryConfig, theta, alpha: AlphaVec, r_in):
    """Gradient of the smooth part of :func:`cost_j` in ``theta`` and ``alpha``.

    Returns ``(d_theta, d_alpha)`` with ``d_alpha`` an :class:`AlphaVec`.
    """
    t = _check_theta(prob, theta)
    e = eval_e(prob, t, alpha)
    dr = cfg.lambda1 * (eval_r(t, alpha) - r_in)
    g_theta, g_alpha = _split_r(prob, dr)
    g_theta = g_theta + np.array([w @ e for w in prob.w])
    g_alpha.alpha_t = g_alpha.alpha_t + prob.wt0.T @ e
    g_alpha.alpha_s = g_alpha.alpha_s + prob.ws0.T @ e
    g_alpha.alpha_t_i = g_alpha.alpha_t_i + np.array([wt.T @ e for wt in prob.wt]).reshape(g_alpha.alpha_t_i.shape)
    g_alpha.alpha_s_i = g_alpha.alpha_s_i + np.array([ws.T @ e for ws in prob.ws]).reshape(g_alpha.alpha_s_i.shape)
    return g_theta, g_alpha


# --------------------------------------------------------------------------
# proximal step


def _svd_signed(r):
    """SVD with the first nonzero entry of ``u1`` made positive."""
    u, s, vt = np.linalg.svd(np.asarray(r, float), full_matrices=False)
    if s.size:
        nz = np.flatnonzero(np.abs(u[:, 0]) > 0)
        if nz.size and u[nz[0], 0] < 0:
            u[:, 0] *= -1
            vt[0] *= -1
    return u, s, vt


def prox_rin(r, lambda2: float, return_info: bool = False):
    """Minimizer of ``1/2 ||r - X||_F^2 + lambda2 (||X||_* - u1^T X v1)``.

    Keeps the leading singular triple of ``r`` and soft-thresholds the others
    by ``lambda2``. When every trailing singular value is at least ``lambda2``
    all of them are shrunk and ``info["no_valid_tau"]`` is set.
    """
    if lambda2 <= 0:
        raise ValueError("lambda2 must be positive")
    u, s, vt = _svd_signed(r)
    below = np.flatnonzero(s[1:] < lambda2)
    info = {"tau": int(below[0] + 1) if below.size else int(s.size), "no_valid_tau": not below.size}
    shrunk = s.copy()
    shrunk[1:] = np.maximum(s[1:] - lambda2, 0.0)
    out = (u * shrunk) @ vt
    return (out, info) if return_info else out


# --------------------------------------------------------------------------
# initialization and iteration


def init_alpha_ls(prob: RecoveryProblem, init_theta) -> AlphaVec:
    """Least-squares ``alpha_s`` at fixed ``theta`` with ``alpha_s_i = theta_i alpha_s``."""
    t = _check_theta(prob, init_theta)
    alpha = AlphaVec.zeros(prob)
    if prob.width_s == 0:
        return alpha
    coeff = prob.ws0 + sum(ti * ws for ti, ws in zip(t, prob.ws))
    rhs = prob.gamma_vec - sum(ti * w for ti, w in zip(t, prob.w))
    a_s = matops.pinv(coeff) @ rhs
    return AlphaVec.tied(alpha.alpha_t, a_s, t)


def induced_alpha(plant: LftPlant, spec: InterpSpec, prob: RecoveryProblem, theta, x=None) -> AlphaVec:
    """Alpha built from the exact state solution ``X(theta)``.

    At the generating parameter and exact RTIM this makes ``e`` vanish with
    ``R`` of rank one and ``T1 = X``.
    """
    from .interpolation import solve_x

    t = _check_theta(prob, theta)
    if x is None:
        x = solve_x(plant, t, spec)
    tau0 = matops.vec(prob.t10)
    alpha_t = prob.upsilon_s_null.T @ (matops.vec(x) - tau0)
    p = eval_p(plant, t)
    loop = np.linalg.solve(np.eye(p.shape[0]) - p @ plant.d_zv, p)
    y = loop @ (plant.c_zx @ x + plant.d_zu @ spec.pi)
    n_r = matops.right_null_basis(plant.bd_v)
    alpha_s = matops.vec(n_r.T @ y)
    return AlphaVec.tied(alpha_t, alpha_s, t)


@dataclass
class RecoveryResult:
    theta_hat: np.ndarray
    alpha_hat: AlphaVec
    r_in: np.ndarray
    cost_trace: list
    converged: bool
    iterations: int
    e_norm_trace: list = field(default_factory=list)
    sigma_trace: list = field(default_factory=list)
    no_valid_tau_events: int = 0
    t1_full_rank: bool | None = None


def recover(prob: RecoveryProblem, cfg: RecoveryConfig) -> RecoveryResult:
    """Run the alternating gradient / proximal iteration.

    Starts from ``cfg.init_theta`` (the box midpoint when absent) with
    ``alpha`` from :func:`init_alpha_ls` unless ``cfg.init_alpha`` is given,
    and ``R_in = R(theta, alpha)``. Stops once consecutive costs differ by at
    most ``cfg.eps_it`` or after ``cfg.max_iter`` iterations.
    """
    if cfg.init_theta is not None:
        theta = _check_theta(prob, cfg.init_theta).copy()
    elif prob.theta_box is not None:
        theta = 0.5 * (prob.theta_box.lower + prob.theta_box.upper)
    else:
        theta = np.zeros(prob.n_theta)
    alpha = cfg.init_alpha if cfg.init_alpha is not None else init_alpha_ls(prob, theta)
    _check_alpha(prob, alpha)
    x = np.concatenate([theta, alpha.flat()])
    nt, wt, ws = prob.n_theta, prob.width_t, prob.width_s
    box = prob.theta_box if cfg.project_theta else None
    design = prob.design
    gvec = prob.gamma_vec
    lam1, lam2 = cfg.lambda1, cfg.lambda2
    # positions of the entries of R inside x (R[0, 0] = 1 is fixed)
    r_shape = (1 + wt + ws, 1 + nt)
    r_index = np.full(r_shape, -1)
    r_index[0, 1:] = np.arange(nt)
    r_index[1:1 + wt, 0] = nt + np.arange(wt)
    r_index[1 + wt:, 0] = nt + wt + np.arange(ws)
    off = nt + wt + ws
    r_index[1:1 + wt, 1:] = (off + np.arange(nt * wt)).reshape(nt, wt).T
    r_index[1 + wt:, 1:] = (off + nt * wt + np.arange(nt * ws)).reshape(nt, ws).T
    free = r_index >= 0
    r_pos = r_index[free]

    def unpack(v):
        return v[:nt], AlphaVec.from_flat(v[nt:], prob)

    def to_r(v):
        r = np.empty(r_shape)
        r[0, 0] = 1.0
        r[free] = v[r_pos]
        return r

    def smooth(v, r_in):
        e = design @ v - gvec
        return 0.5 * e @ e + 0.5 * lam1 * np.sum((to_r(v) - r_in) ** 2)

    def total(v, r_in, sv_in):
        return smooth(v, r_in) + lam1 * lam2 * sv_in[1:].sum()

    r_in = to_r(x)
    sig = np.linalg.svd(r_in, compute_uv=False)
    cost = total(x, r_in, sig)
    trace = [float(cost)]
    e_trace = [float(np.linalg.norm(design @ x - gvec))]
    s_trace = [(float(sig[0]), float(sig[1]) if sig.size > 1 else 0.0)]
    converged = False
    no_tau = 0
    it = 0
    for it in range(1, int(cfg.max_iter) + 1):
        e = design @ x - gvec
        g = design.T @ e
        g[r_pos] += lam1 * (to_r(x) - r_in)[free]
        step = cfg.step
        x_new = x - step * g
        if box is not None:
            x_new[:nt] = box.project(x_new[:nt])
        if cfg.backtracking:
            f0 = smooth(x, r_in)
            while smooth(x_new, r_in) > f0 - 1e-4 * g @ (x - x_new) and step > 1e-12:
                step *= 0.5
                x_new = x - step * g
                if box is not None:
                    x_new[:nt] = box.project(x_new[:nt])
        if not np.all(np.isfinite(x_new)):
            raise NonFinite(f"non-finite iterate at iteration {it}", state={"x": x, "r_in": r_in, "iteration": it})
        x = x_new
        r = to_r(x)
        u, sig, vt = _svd_signed(r)
        shrunk = sig.copy()
        shrunk[1:] = np.maximum(sig[1:] - lam2, 0.0)
        no_tau += not np.any(sig[1:] < lam2)
        r_in = (u * shrunk) @ vt
        new_cost = total(x, r_in, shrunk)
        if not np.isfinite(new_cost):
            raise NonFinite(f"non-finite cost at iteration {it}", state={"x": x, "r_in": r_in, "iteration": it})
        trace.append(float(new_cost))
        e_trace.append(float(np.linalg.norm(design @ x - gvec)))
        s_trace.append((float(sig[0]), float(sig[1]) if sig.size > 1 else 0.0))
        if abs(new_cost - cost) <= cfg.eps_it:
            converged = True
            break
        cost = new_cost
    th, al = unpack(x)
    t1 = eval_t1(prob, al)
    return RecoveryResult(
        theta_hat=th.copy(), alpha_hat=al, r_in=r_in, cost_trace=trace, converged=converged,
        iterations=it, e_norm_trace=e_trace, sigma_trace=s_trace, no_valid_tau_events=no_tau,
        t1_full_rank=matops.is_fcr(t1),
    )
