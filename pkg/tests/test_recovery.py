"""Residual construction, cost, gradient, proximal step and the recovery iteration."""

import dataclasses

import numpy as np
import pytest
from scipy.optimize import minimize

from lftrecover import matops
from lftrecover.exceptions import DimensionMismatch, DimensionOrder
from lftrecover.interpolation import InterpSpec, compute_rtim, solve_x
from lftrecover.recovery import (
    AlphaVec,
    RecoveryConfig,
    build_problem,
    check_consistency,
    cost_j,
    eval_e,
    eval_r,
    eval_t1,
    grad_j,
    induced_alpha,
    init_alpha_ls,
    prox_objective,
    prox_rin,
    recover,
)
from helpers import factored_prox_descent, random_plant, random_spec

TRUE = np.array([0.1, 5.0])


def random_problem(rng, **kw):
    plant = random_plant(rng, **kw)
    spec = random_spec(rng, plant)
    theta = plant.theta_box.sample(rng)
    gamma = compute_rtim(plant, theta, spec).gamma
    return plant, spec, theta, gamma, build_problem(plant, spec, gamma)


def random_alpha(rng, prob):
    return AlphaVec.from_flat(rng.standard_normal(prob.n_alpha), prob)


# ---------------------------------------------------------------- consistency

def test_consistency_exact(example_plant, designs, exact_gammas):
    ok, t1 = check_consistency(example_plant, TRUE, designs["spec0"], exact_gammas["spec0"])
    assert ok
    assert np.allclose(t1, solve_x(example_plant, TRUE, designs["spec0"]), atol=1e-10)


def test_consistency_perturbed_gamma(example_plant, designs, exact_gammas):
    g = exact_gammas["spec0"].copy()
    g[0, 2] *= 1.1
    assert not check_consistency(example_plant, TRUE, designs["spec0"], g)[0]


def test_consistency_wrong_theta(example_plant, designs, exact_gammas):
    assert not check_consistency(example_plant, [0.2, 4.0], designs["spec1"], exact_gammas["spec1"])[0]


def test_consistency_dimension_order():
    from test_interpolation import scalar_plant

    with pytest.raises(DimensionOrder):
        check_consistency(scalar_plant(), [0.5], InterpSpec(np.eye(2), np.ones((1, 2))), np.ones((1, 2)))


# ---------------------------------------------------------------- problem data

def test_scalar_problem_upsilon():
    from test_interpolation import scalar_plant

    plant = scalar_plant()  # [B_xv; D_yv] = 0, so N_l = I
    prob = build_problem(plant, InterpSpec([[0.0]], [[1.0]]), [[1.0]])
    assert np.array_equal(prob.upsilon_t, [[1.0], [0.0]])
    n_l = matops.left_null_basis(plant.bd_v)
    assert np.allclose(prob.upsilon_s, -n_l @ plant.ac)


def test_example_upsilon_s_full_column_rank(example_plant, designs, exact_gammas):
    for key in ("spec0", "spec1"):
        prob = build_problem(example_plant, designs[key], exact_gammas[key])
        assert matops.is_fcr(prob.upsilon_s)
        assert prob.width_t == 0 and prob.upsilon_s_null.shape[1] == 0
        assert prob.width_s == 4


def test_width_t_zero_iff_fcr(rng):
    for _ in range(20):
        _, _, _, _, prob = random_problem(rng)
        assert (prob.width_t == 0) == matops.is_fcr(prob.upsilon_s)


def test_problem_shapes(rng):
    for _ in range(10):
        plant, spec, _, _, prob = random_problem(rng)
        d = prob.dims
        n_rows = d["m_v"] * d["m_xi"]
        assert prob.gamma_vec.shape == (n_rows,)
        assert prob.wt0.shape == (n_rows, prob.width_t)
        assert prob.ws0.shape == (n_rows, prob.width_s)
        assert all(w.shape == (n_rows,) for w in prob.w)
        assert prob.t10.shape == (d["m_x"], d["m_xi"])
        assert prob.design.shape == (n_rows, prob.n_theta + prob.n_alpha)


def test_gamma_dependence_isolated(rng):
    plant, spec, _, gamma, prob = random_problem(rng)
    other = build_problem(plant, spec, gamma + rng.standard_normal(gamma.shape))
    for name in ("upsilon_t", "upsilon_s", "upsilon_s_pinv", "upsilon_s_null", "wt0", "ws0"):
        assert np.array_equal(getattr(prob, name), getattr(other, name))
    for a, b in zip(prob.wt + prob.ws, other.wt + other.ws):
        assert np.array_equal(a, b)


def test_gamma_affinity_superposition(rng):
    for _ in range(10):
        plant, spec, _, gamma, prob = random_problem(rng)
        d1, d2 = rng.standard_normal((2,) + gamma.shape)
        p1 = build_problem(plant, spec, gamma + d1)
        p2 = build_problem(plant, spec, gamma + d2)
        p12 = build_problem(plant, spec, gamma + d1 + d2)
        for name in ("gamma_vec",):
            lhs = getattr(p12, name) - getattr(prob, name)
            rhs = (getattr(p1, name) - getattr(prob, name)) + (getattr(p2, name) - getattr(prob, name))
            assert np.allclose(lhs, rhs, atol=1e-9 * (1 + np.abs(lhs).max()))
        for i in range(prob.n_theta):
            lhs = p12.w[i] - prob.w[i]
            rhs = (p1.w[i] - prob.w[i]) + (p2.w[i] - prob.w[i])
            assert np.allclose(lhs, rhs, atol=1e-9 * (1 + np.abs(lhs).max()))
        # e itself is affine in Gamma at fixed (theta, alpha)
        theta = rng.standard_normal(prob.n_theta)
        alpha = random_alpha(rng, prob)
        e0, e1, e2, e12 = (eval_e(p, theta, alpha) for p in (prob, p1, p2, p12))
        assert np.allclose(e12 - e0, (e1 - e0) + (e2 - e0), atol=1e-9 * (1 + np.abs(e12).max()))


def test_build_problem_rejects_bad_gamma(example_plant, designs):
    with pytest.raises(DimensionMismatch):
        build_problem(example_plant, designs["spec0"], np.ones((2, 4)))


# ---------------------------------------------------------------- e, T1, R

def test_e_at_zero_is_minus_gamma(rng):
    _, _, _, _, prob = random_problem(rng)
    e = eval_e(prob, np.zeros(prob.n_theta), AlphaVec.zeros(prob))
    assert np.array_equal(e, -prob.gamma_vec)


def test_e_affine(rng):
    _, _, _, _, prob = random_problem(rng)
    t1, t2 = rng.standard_normal((2, prob.n_theta))
    a1, a2 = random_alpha(rng, prob), random_alpha(rng, prob)
    a12 = AlphaVec.from_flat(a1.flat() + a2.flat(), prob)
    lhs = eval_e(prob, t1 + t2, a12)
    rhs = eval_e(prob, t1, a1) + eval_e(prob, t2, a2) + prob.gamma_vec
    assert np.allclose(lhs, rhs, atol=1e-10 * (1 + np.abs(lhs).max()))


def zero_certificate(plant, spec, theta, gamma, prob):
    alpha = induced_alpha(plant, spec, prob, theta)
    e = eval_e(prob, theta, alpha)
    t1 = eval_t1(prob, alpha)
    r = eval_r(theta, alpha)
    return alpha, e, t1, r


def test_zero_certificate_random_plants(rng):
    widths_t, widths_s = [], []
    for i in range(30):
        kw = {"m_v": 3, "bd_rank": 1} if i % 3 == 0 else {}
        plant, spec, theta, gamma, prob = random_problem(rng, **kw)
        _, e, t1, r = zero_certificate(plant, spec, theta, gamma, prob)
        assert np.linalg.norm(e) <= 1e-8 * max(1.0, np.linalg.norm(prob.gamma_vec))
        assert matops.rank(t1) == spec.m_xi
        assert np.allclose(t1, solve_x(plant, theta, spec), atol=1e-8 * (1 + np.abs(t1).max()))
        assert matops.rank(r) == 1
        widths_t.append(prob.width_t)
        widths_s.append(prob.width_s)
    # the sample exercises both empty and non-empty auxiliary blocks
    assert min(widths_t) == 0 and max(widths_t) > 0
    assert min(widths_s) == 0 and max(widths_s) > 0


def test_zero_certificate_example(example_plant, designs, exact_gammas):
    for key in ("spec0", "spec1"):
        spec, gamma = designs[key], exact_gammas[key]
        prob = build_problem(example_plant, spec, gamma)
        alpha, e, t1, r = zero_certificate(example_plant, spec, TRUE, gamma, prob)
        assert np.linalg.norm(e) <= 1e-8 * max(1.0, np.linalg.norm(prob.gamma_vec))
        # no T1 freedom on the example: T1 is the constant part for every alpha
        assert np.array_equal(eval_t1(prob, alpha), prob.t10)
        assert np.array_equal(eval_t1(prob, random_alpha(np.random.default_rng(0), prob)), prob.t10)


def test_t1_without_alpha_t_is_t10(rng):
    _, _, _, _, prob = random_problem(rng, m_v=3)
    alpha = random_alpha(rng, prob)
    alpha.alpha_t = np.zeros(prob.width_t)
    assert np.array_equal(eval_t1(prob, alpha), prob.t10)


def test_r_rank_one_when_tied(rng):
    _, _, _, _, prob = random_problem(rng)
    theta = rng.standard_normal(prob.n_theta)
    alpha = AlphaVec.tied(rng.standard_normal(prob.width_t), rng.standard_normal(prob.width_s), theta)
    assert matops.rank(eval_r(theta, alpha)) == 1
    zero = eval_r(np.zeros(prob.n_theta), AlphaVec.zeros(prob))
    expected = np.zeros_like(zero)
    expected[0, 0] = 1.0
    assert np.array_equal(zero, expected)


def test_r_generic_rank_at_least_two(example_plant, designs, exact_gammas):
    prob = build_problem(example_plant, designs["spec1"], exact_gammas["spec1"])
    g = np.random.default_rng(3)
    for _ in range(20):
        alpha = random_alpha(g, prob)
        assert matops.rank(eval_r(g.standard_normal(2), alpha)) >= 2


def test_alpha_flat_round_trip(rng):
    _, _, _, _, prob = random_problem(rng)
    v = rng.standard_normal(prob.n_alpha)
    assert np.array_equal(AlphaVec.from_flat(v, prob).flat(), v)
    with pytest.raises(DimensionMismatch):
        AlphaVec.from_flat(np.zeros(prob.n_alpha + 1), prob)


# ---------------------------------------------------------------- cost

CFG = RecoveryConfig()


def test_cost_zero_at_certificate(example_plant, designs, exact_gammas):
    prob = build_problem(example_plant, designs["spec1"], exact_gammas["spec1"])
    alpha = induced_alpha(example_plant, designs["spec1"], prob, TRUE)
    r = eval_r(TRUE, alpha)
    assert cost_j(prob, CFG, TRUE, alpha, r) <= 1e-14 * (1 + np.sum(r ** 2))
    g_theta, g_alpha = grad_j(prob, CFG, TRUE, alpha, r)
    assert np.max(np.abs(g_theta)) <= 1e-8 and np.max(np.abs(g_alpha.flat())) <= 1e-8


def test_cost_with_zero_rin(rng):
    _, _, _, _, prob = random_problem(rng)
    theta = rng.standard_normal(prob.n_theta)
    alpha = random_alpha(rng, prob)
    r = eval_r(theta, alpha)
    e = eval_e(prob, theta, alpha)
    expected = 0.5 * e @ e + 0.5 * CFG.lambda1 * np.sum(r ** 2)
    assert np.isclose(cost_j(prob, CFG, theta, alpha, np.zeros_like(r)), expected, rtol=1e-12)


def test_tail_singular_sum_identity(rng):
    for _ in range(20):
        m = rng.standard_normal(tuple(rng.integers(1, 7, size=2)))
        s = np.linalg.svd(m, compute_uv=False)
        nuc = np.linalg.norm(m, "nuc")
        assert np.isclose(s[1:].sum(), nuc - np.linalg.norm(m, 2), atol=1e-12 * nuc)


# ---------------------------------------------------------------- gradient

def flat_cost(prob, cfg, r_in):
    def f(v):
        return cost_j(prob, cfg, v[:prob.n_theta], AlphaVec.from_flat(v[prob.n_theta:], prob), r_in)
    return f


def flat_grad(prob, cfg, v, r_in):
    g_t, g_a = grad_j(prob, cfg, v[:prob.n_theta], AlphaVec.from_flat(v[prob.n_theta:], prob), r_in)
    return np.concatenate([g_t, g_a.flat()])


def central_difference(f, v, h=1e-6):
    g = np.zeros_like(v)
    for i in range(v.size):
        e = np.zeros_like(v)
        e[i] = h
        g[i] = (f(v + e) - f(v - e)) / (2 * h)
    return g


def test_gradient_matches_finite_differences(rng):
    worst = 0.0
    for _ in range(50):
        _, _, _, _, prob = random_problem(rng)
        v = rng.standard_normal(prob.n_theta + prob.n_alpha)
        r_in = rng.standard_normal((1 + prob.width_t + prob.width_s, 1 + prob.n_theta))
        g = flat_grad(prob, CFG, v, r_in)
        fd = central_difference(flat_cost(prob, CFG, r_in), v)
        worst = max(worst, np.linalg.norm(g - fd) / max(np.linalg.norm(fd), 1e-12))
    assert worst <= 1e-6


def test_gradient_theta_specialization(rng):
    _, _, _, _, prob = random_problem(rng)
    theta = rng.standard_normal(prob.n_theta)
    alpha = AlphaVec.zeros(prob)
    r_in = np.zeros((1 + prob.width_t + prob.width_s, 1 + prob.n_theta))
    g_theta, _ = grad_j(prob, CFG, theta, alpha, r_in)
    resid = sum(w * t for w, t in zip(prob.w, theta)) - prob.gamma_vec
    expected = np.array([w @ resid for w in prob.w]) + CFG.lambda1 * theta
    assert np.allclose(g_theta, expected, rtol=1e-12, atol=1e-12)


# ---------------------------------------------------------------- proximal step

def test_prox_rank_one_unchanged(rng):
    u, v = rng.standard_normal(4), rng.standard_normal(3)
    u /= np.linalg.norm(u)
    v /= np.linalg.norm(v)
    r = 5 * np.outer(u, v)
    assert np.allclose(prox_rin(r, 10.0), r, atol=1e-12)


def test_prox_diag_small_tail():
    assert np.allclose(prox_rin(np.diag([10.0, 3.0]), 10.0), np.diag([10.0, 0.0]))


def test_prox_diag_three():
    out = prox_rin(np.diag([10.0, 6.0, 1.0]), 2.0)
    assert np.allclose(out, np.diag([10.0, 4.0, 0.0]), atol=1e-12)


def test_prox_diag_three_brute_force():
    r = np.diag([10.0, 6.0, 1.0])
    target = prox_objective(np.diag([10.0, 4.0, 0.0]), r, 2.0)
    g = np.random.default_rng(7)
    val, x_best = factored_prox_descent(r, 2.0, 20, g)
    assert abs(val - target) <= 1e-6
    assert np.allclose(x_best, np.diag([10.0, 4.0, 0.0]), atol=1e-4)
    # direct descent on the 9 entries, started around the closed form, never beats it
    best = np.inf
    for _ in range(50):
        x0 = np.diag([10.0, 4.0, 0.0]) + g.standard_normal((3, 3))
        res = minimize(lambda z: prox_objective(z.reshape(3, 3), r, 2.0), x0.ravel(), method="Powell",
                       options={"xtol": 1e-10, "ftol": 1e-14, "maxfev": 40000})
        best = min(best, res.fun)
        assert res.fun >= target - 1e-9
    assert best - target <= 1e-6


def test_prox_matches_factored_descent(rng):
    worst = 0.0
    for i in range(100):
        rows, cols = int(rng.integers(2, 9)), int(rng.integers(2, 5))
        r = rng.standard_normal((rows, cols)) * rng.uniform(0.5, 8)
        lam2 = (0.5, 2.0, 10.0)[i % 3]
        ours = prox_objective(prox_rin(r, lam2), r, lam2)
        ref, _ = factored_prox_descent(r, lam2, 10, rng)
        worst = max(worst, abs(ours - ref))
    assert worst <= 1e-6


def subgradient_residual(r, lam2):
    """Distance of ``(r - X)/lam2 + u1 v1^T`` from the nuclear-norm subdifferential at X."""
    x = prox_rin(r, lam2)
    u, s, vt = np.linalg.svd(r, full_matrices=False)
    g = (r - x) / lam2 + np.outer(u[:, 0], vt[0])
    ux, sx, vxt = np.linalg.svd(x, full_matrices=False)
    k = int(np.sum(sx > 1e-10 * max(sx[0], 1.0)))
    uk, vk = ux[:, :k], vxt[:k].T
    pu = np.eye(r.shape[0]) - uk @ uk.T
    pv = np.eye(r.shape[1]) - vk @ vk.T
    on_support = np.linalg.norm(uk.T @ g @ vk - np.eye(k))
    mixed = np.linalg.norm(pu @ g @ vk) + np.linalg.norm(uk.T @ g @ pv)
    excess = max(np.linalg.norm(pu @ g @ pv, 2) - 1.0, 0.0)
    return max(on_support, mixed, excess)


def test_prox_stationarity(rng):
    for i in range(100):
        r = rng.standard_normal((int(rng.integers(2, 9)), int(rng.integers(2, 5)))) * 5
        lam2 = (0.5, 2.0, 10.0)[i % 3]
        assert subgradient_residual(r, lam2) <= 1e-8


def test_prox_local_optimality_probe(rng):
    for i in range(30):
        r = rng.standard_normal((int(rng.integers(2, 9)), int(rng.integers(2, 5)))) * 5
        lam2 = (0.5, 2.0, 10.0)[i % 3]
        x = prox_rin(r, lam2)
        f0 = prox_objective(x, r, lam2)
        for _ in range(50):
            d = rng.standard_normal(x.shape)
            assert prox_objective(x + 1e-2 * d / np.linalg.norm(d), r, lam2) >= f0 - 1e-12


def test_prox_no_valid_tau_flag():
    _, info = prox_rin(np.diag([10.0, 6.0, 5.0]), 2.0, return_info=True)
    assert info["no_valid_tau"]
    out, info = prox_rin(np.diag([10.0, 6.0, 1.0]), 2.0, return_info=True)
    assert not info["no_valid_tau"] and info["tau"] == 2


def test_prox_rejects_nonpositive_lambda():
    with pytest.raises(ValueError):
        prox_rin(np.eye(2), 0.0)


# ---------------------------------------------------------------- initialization

def test_init_alpha_zero_gamma(example_plant, designs):
    prob = build_problem(example_plant, designs["spec1"], np.zeros((1, 4)))
    alpha = init_alpha_ls(prob, np.zeros(2))
    assert np.allclose(alpha.alpha_s, 0.0)


def test_init_alpha_tied_and_optimal(example_plant, designs, exact_gammas):
    prob = build_problem(example_plant, designs["spec1"], exact_gammas["spec1"])
    theta0 = np.array([1.0, 10.0])
    alpha = init_alpha_ls(prob, theta0)
    assert np.allclose(alpha.alpha_s_i[0], 1.0 * alpha.alpha_s)
    assert np.allclose(alpha.alpha_s_i[1], 10.0 * alpha.alpha_s)
    base = np.sum(eval_e(prob, theta0, alpha) ** 2)
    for i in range(prob.width_s):
        for sign in (1, -1):
            a_s = alpha.alpha_s.copy()
            a_s[i] += sign * 1e-3
            moved = AlphaVec.tied(alpha.alpha_t, a_s, theta0)
            assert np.sum(eval_e(prob, theta0, moved) ** 2) >= base - 1e-15


# ---------------------------------------------------------------- iteration

def test_recover_noiseless_example(example_plant, designs, exact_gammas):
    prob = build_problem(example_plant, designs["spec1"], exact_gammas["spec1"])
    res = recover(prob, RecoveryConfig(init_theta=np.array([1.0, 10.0])))
    assert res.converged and res.iterations <= 2500
    assert np.all(np.abs(res.theta_hat - TRUE) / TRUE <= 1e-2)
    assert np.all(np.diff(res.cost_trace) <= 0)
    assert res.t1_full_rank


def test_recover_degenerate_zero_problem(example_plant, designs, exact_gammas):
    prob = build_problem(example_plant, designs["spec1"], exact_gammas["spec1"])
    zero = dataclasses.replace(prob, gamma_vec=np.zeros_like(prob.gamma_vec),
                               w=tuple(np.zeros_like(w) for w in prob.w))
    cfg = RecoveryConfig(init_theta=np.zeros(2), init_alpha=AlphaVec.zeros(zero), project_theta=False)
    res = recover(zero, cfg)
    assert res.converged and res.iterations == 1
    assert np.array_equal(res.theta_hat, np.zeros(2))
    assert res.cost_trace == [0.0, 0.0]


def test_recover_deterministic(example_plant, designs, exact_gammas):
    g = exact_gammas["spec0"] * 1.01
    prob = build_problem(example_plant, designs["spec0"], g)
    cfg = RecoveryConfig(init_theta=np.array([1.0, 10.0]), max_iter=300)
    a, b = recover(prob, cfg), recover(prob, cfg)
    assert a.cost_trace == b.cost_trace
    assert np.array_equal(a.theta_hat, b.theta_hat)


def test_recover_respects_box(example_plant, designs, exact_gammas):
    prob = build_problem(example_plant, designs["spec1"], exact_gammas["spec1"])
    res = recover(prob, RecoveryConfig(init_theta=np.array([1.0, 10.0]), max_iter=50))
    assert example_plant.theta_box.contains(res.theta_hat)
    assert res.iterations <= 50 and len(res.cost_trace) == res.iterations + 1


def test_recover_backtracking_option(example_plant, designs, exact_gammas):
    prob = build_problem(example_plant, designs["spec1"], exact_gammas["spec1"])
    res = recover(prob, RecoveryConfig(init_theta=np.array([1.0, 10.0]), backtracking=True))
    assert np.all(np.abs(res.theta_hat - TRUE) / TRUE <= 1e-2)


def test_config_validation():
    with pytest.raises(ValueError):
        RecoveryConfig(step=0.0)
    with pytest.raises(ValueError):
        RecoveryConfig(max_iter=0)
