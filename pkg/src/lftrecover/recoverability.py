"""Whether the parameter vector is uniquely determined by an RTIM.

Two parameter values ``theta`` and ``theta - delta`` produce the same RTIM
exactly when, for some ``phi``,

    M(phi) delta = Q phi,
    M(phi) = ((K^T (x) I) Psi) - [S_1 phi, ..., S_m phi],
    Q = I (x) ((I - P D_zv) N_r),   S_i = I (x) (P_i D_zv N_r),

where ``K = (I - D_zv P)^{-1} (C_zx X + D_zu Pi)`` and ``N_r`` is a right
null basis of ``[B_xv; D_yv]``. Uniqueness therefore holds iff the
projection of ``Q phi`` onto the left null space of ``M(phi)`` never
vanishes for ``phi != 0`` (see :func:`uniqueness_residual`). This module
evaluates that test by random sampling and provides the rank tests that
apply in special cases.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import matops
from .exceptions import DimensionMismatch, InapplicableCase, SharedEigenvalue
from .interpolation import InterpSpec, solve_x
from .lft import LftPlant, eval_p, psi_matrix

__all__ = [
    "SamplingPlan",
    "RecoverabilityVerdict",
    "check_identifiability",
    "uniqueness_residual",
    "uniqueness_operators",
    "check_recoverability_sampled",
    "rank_test_decoupled",
    "rank_test_full_row_rank_output",
    "necessary_conditions",
]

log = logging.getLogger(__name__)

VERDICTS = ("recoverable_whp", "locally_recoverable", "not_recoverable", "identifiability_failed")


@dataclass(frozen=True)
class SamplingPlan:
    """Sample counts and threshold of the randomized uniqueness test.

    ``n_probe`` extra ``phi`` samples per ``theta`` are aimed at the
    zero set of the test by alternating between the left null basis of
    ``M(phi)`` and the ``phi`` that minimizes the projected residual.
    ``max_resample`` caps how often a ``theta`` sample that makes the
    state equation singular is redrawn.
    """

    n_theta: int = 50
    n_phi: int = 50
    mu_t: float = 1e-8
    seed: int = 0
    n_probe: int = 8
    max_resample: int = 20

    def __post_init__(self):
        if self.n_theta < 1 or self.n_phi < 1:
            raise ValueError("n_theta and n_phi must be at least 1")
        if not self.mu_t > 0:
            raise ValueError("mu_t must be positive")
        if self.n_probe < 0 or self.max_resample < 0:
            raise ValueError("n_probe and max_resample must be nonnegative")


@dataclass
class RecoverabilityVerdict:
    """Outcome of :func:`check_recoverability_sampled`.

    ``min_ratio`` is the smallest ``||lhs||^2 / ||phi||^2`` observed;
    ``per_theta`` lists ``(theta, min ratio, passed)`` for every sample.
    ``n_empty_left_null`` counts samples where ``M(phi)`` had full row rank
    (the test vector is empty, counted as a failure) and ``n_vacuous``
    counts ``theta`` samples with no ``phi`` to test.
    """

    verdict: str
    failed_thetas: list = field(default_factory=list)
    min_ratio: float = np.inf
    per_theta: list = field(default_factory=list)
    n_empty_left_null: int = 0
    n_vacuous: int = 0
    n_resampled: int = 0
    n_probe_failures: int = 0


def check_identifiability(plant: LftPlant, tol: float | None = None) -> bool:
    """``Psi = [vec P_1, ..., vec P_m]`` has full column rank."""
    return matops.is_fcr(psi_matrix(plant), tol)


def _output_factor(plant: LftPlant, theta, spec: InterpSpec, x=None) -> np.ndarray:
    """``C_zx X(theta) + D_zu Pi``."""
    if x is None:
        x = solve_x(plant, theta, spec)
    return plant.c_zx @ x + plant.d_zu @ spec.pi


def uniqueness_operators(plant: LftPlant, theta, spec: InterpSpec, x=None) -> dict:
    """Pieces of the uniqueness equation at ``theta``.

    Returns ``base = (K^T (x) I) Psi``, ``q``, the list ``s`` of ``S_i``,
    ``n_r`` and ``m_phi``.
    """
    p = eval_p(plant, theta)
    mv, mz = p.shape
    mxi = spec.m_xi
    cz = _output_factor(plant, theta, spec, x)
    k = np.linalg.solve(np.eye(mz) - plant.d_zv @ p, cz)
    base = matops.kron(k.T, np.eye(mv)) @ psi_matrix(plant)
    n_r = matops.right_null_basis(plant.bd_v)
    eye_xi = np.eye(mxi)
    q = matops.kron(eye_xi, (np.eye(mv) - p @ plant.d_zv) @ n_r)
    s = [matops.kron(eye_xi, pi @ plant.d_zv @ n_r) for pi in plant.p_basis]
    return {"base": base, "q": q, "s": s, "n_r": n_r, "m_phi": n_r.shape[1] * mxi}


def _m_of_phi(ops, phi):
    if not ops["s"]:
        return ops["base"]
    return ops["base"] - np.column_stack([si @ phi for si in ops["s"]])


def uniqueness_residual(plant: LftPlant, theta, spec: InterpSpec, phi, x=None, ops=None) -> np.ndarray:
    """Projection of ``Q phi`` onto the left null space of ``M(phi)``.

    A nonzero result for every ``phi != 0`` is necessary and sufficient for
    ``theta`` to be uniquely determined by its RTIM. The result is empty
    when ``M(phi)`` has full row rank or when ``phi`` has length zero.
    """
    if ops is None:
        ops = uniqueness_operators(plant, theta, spec, x)
    phi = np.asarray(phi, dtype=float).reshape(-1)
    if phi.size != ops["m_phi"]:
        raise DimensionMismatch(f"phi has {phi.size} entries, expected {ops['m_phi']}", block="phi")
    if phi.size == 0:
        return np.zeros(0)
    left = matops.left_null_basis(_m_of_phi(ops, phi))
    return left @ (ops["q"] @ phi)


def _probe_phis(ops, rng, n_probe, n_refine=6):
    """Candidate ``phi`` aimed at the zero set of the uniqueness residual.

    Starting from a random unit vector, each refinement freezes the left null
    basis ``L`` of ``M(phi)`` and replaces ``phi`` by the unit vector that
    minimizes ``||L Q phi||``. When ``M`` does not depend on ``phi`` (no
    coupling through ``D_zv``) one step reaches the exact minimizer. The
    candidates are only proposals: the caller evaluates them like any other
    sample.
    """
    out = []
    m_phi = ops["m_phi"]
    for _ in range(n_probe):
        phi = rng.standard_normal(m_phi)
        phi /= np.linalg.norm(phi)
        for _ in range(n_refine):
            left = matops.left_null_basis(_m_of_phi(ops, phi))
            if left.shape[0] == 0:
                break
            vt = np.linalg.svd(left @ ops["q"], full_matrices=True)[2]
            phi = vt[-1]
        out.append(phi / np.max(np.abs(phi)))
    return out


def _theta_rng(seed, index, attempt):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index, attempt))))


def check_recoverability_sampled(plant: LftPlant, spec: InterpSpec, plan: SamplingPlan = SamplingPlan()) -> RecoverabilityVerdict:
    """Randomized uniqueness test over the parameter box.

    For each of ``plan.n_theta`` uniform ``theta`` draws, ``plan.n_phi``
    uniform ``phi`` draws on ``[-1, 1]^m_phi`` (plus ``plan.n_probe`` aimed
    candidates) must satisfy ``||lhs||^2 > mu_t ||phi||^2``. The ``phi = 0``
    reduction, full column rank of ``(K^T (x) I) Psi``, is also required.
    All samples pass: ``recoverable_whp``; some ``theta`` fail:
    ``locally_recoverable``; all fail: ``not_recoverable``.
    """
    if plant.theta_box is None:
        raise ValueError("the plant needs a theta_box to sample from")
    if not check_identifiability(plant):
        return RecoverabilityVerdict("identifiability_failed", min_ratio=np.nan)
    out = RecoverabilityVerdict("recoverable_whp")
    for i in range(plan.n_theta):
        for attempt in range(plan.max_resample + 1):
            rng = _theta_rng(plan.seed, i, attempt)
            theta = plant.theta_box.sample(rng)
            try:
                ops = uniqueness_operators(plant, theta, spec)
                break
            except SharedEigenvalue:
                out.n_resampled += 1
        else:
            raise SharedEigenvalue(f"theta sample {i}: state equation singular after {plan.max_resample} redraws")
        passed = matops.is_fcr(ops["base"])
        worst = np.inf
        if ops["m_phi"] == 0:
            out.n_vacuous += 1
        else:
            phis = []
            while len(phis) < plan.n_phi:
                phi = rng.uniform(-1.0, 1.0, ops["m_phi"])
                if np.linalg.norm(phi) >= 1e-12:
                    phis.append(phi)
            probes = _probe_phis(ops, rng, plan.n_probe)
            for j, phi in enumerate(phis + probes):
                lhs = uniqueness_residual(plant, theta, spec, phi, ops=ops)
                if lhs.size == 0:
                    out.n_empty_left_null += 1
                    ratio = 0.0
                else:
                    ratio = float(lhs @ lhs / (phi @ phi))
                worst = min(worst, ratio)
                if not ratio > plan.mu_t:
                    passed = False
                    if j >= len(phis):
                        out.n_probe_failures += 1
        out.min_ratio = min(out.min_ratio, worst)
        out.per_theta.append((theta, worst, passed))
        if not passed:
            out.failed_thetas.append(theta)
    n_fail = len(out.failed_thetas)
    if n_fail == plan.n_theta:
        out.verdict = "not_recoverable"
    elif n_fail:
        out.verdict = "locally_recoverable"
    return out


# --------------------------------------------------------------------------
# special-case rank tests


def rank_test_decoupled(plant: LftPlant, theta, spec: InterpSpec, tol: float | None = None) -> bool:
    """Exact test when ``D_zv N_r = 0``.

    The uniqueness equation becomes linear and ``theta`` is recoverable iff
    ``[Psi^T (K (x) I); I (x) N_r^T]`` has full row rank.

    Raises
    ------
    InapplicableCase
        If ``D_zv N_r != 0``.
    """
    n_r = matops.right_null_basis(plant.bd_v)
    coupling = plant.d_zv @ n_r
    if coupling.size and np.linalg.norm(coupling) > matops.default_tol(coupling.shape) * max(1.0, np.linalg.norm(plant.d_zv)):
        raise InapplicableCase("D_zv times the right null basis of [B_xv; D_yv] is nonzero")
    ops = uniqueness_operators(plant, theta, spec)
    stacked = np.vstack([ops["base"].T, matops.kron(np.eye(spec.m_xi), n_r.T)])
    return matops.is_frr(stacked, tol)


def rank_test_full_row_rank_output(plant: LftPlant, theta, spec: InterpSpec, tol: float | None = None) -> bool:
    """Exact test when ``C_zx X + D_zu Pi`` has full row rank.

    ``theta`` is recoverable iff ``[I (x) [B_xv; D_yv]; Psi_l (I (x) (I - P D_zv))]``
    has full column rank, with ``Psi_l`` a left null basis of ``Psi``.

    Raises
    ------
    InapplicableCase
        If ``C_zx X + D_zu Pi`` is not of full row rank.
    """
    cz = _output_factor(plant, theta, spec)
    if not matops.is_frr(cz, tol):
        raise InapplicableCase("C_zx X + D_zu Pi does not have full row rank")
    p = eval_p(plant, theta)
    mv, mz = p.shape
    psi_l = matops.left_null_basis(psi_matrix(plant))
    top = matops.kron(np.eye(mz), plant.bd_v)
    bottom = psi_l @ matops.kron(np.eye(mz), np.eye(mv) - p @ plant.d_zv)
    return matops.is_fcr(np.vstack([top, bottom]), tol)


def necessary_conditions(plant: LftPlant, theta, spec: InterpSpec, phi_samples: int = 20,
                         seed: int = 0, tol: float | None = None) -> dict:
    """Two necessary conditions for uniqueness at ``theta``.

    ``cond1``: ``M(phi)`` is rank deficient in its rows for every sampled
    nonzero ``phi`` (trivially true when there is no ``phi``).
    ``cond2``: ``[(C_zx X + D_zu Pi)^T (x) I; Psi_l ((I - D_zv P)^T (x) I)]``
    has full column rank.
    """
    ops = uniqueness_operators(plant, theta, spec)
    rng = np.random.Generator(np.random.PCG64(seed))
    cond1 = True
    if ops["m_phi"]:
        drawn = 0
        while drawn < phi_samples:
            phi = rng.uniform(-1.0, 1.0, ops["m_phi"])
            if np.linalg.norm(phi) < 1e-12:
                continue
            drawn += 1
            if matops.is_frr(_m_of_phi(ops, phi), tol):
                cond1 = False
                break
    p = eval_p(plant, theta)
    mv, mz = p.shape
    cz = _output_factor(plant, theta, spec)
    psi_l = matops.left_null_basis(psi_matrix(plant))
    top = matops.kron(cz.T, np.eye(mv))
    bottom = psi_l @ matops.kron((np.eye(mz) - plant.d_zv @ p).T, np.eye(mv))
    cond2 = matops.is_fcr(np.vstack([top, bottom]), tol)
    return {"cond1": bool(cond1), "cond2": bool(cond2)}

