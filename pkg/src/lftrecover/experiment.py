"""Fourth-order damping / natural-frequency example and its noise study.

The plant

    H(s) = k (s + r_z)(s^2 + 2 zeta_z omega_z s + omega_z^2)
           / ((s + r_p1)(s + r_p2)(s^2 + 2 zeta_p omega_p s + omega_p^2))

has known ``k, r_z, zeta_z, omega_z, r_p1, r_p2`` and unknown
``theta = (zeta_p, omega_p)``. Two stimulus designs with equal data length
are compared: one sampling ``H`` and its first derivative at a single
complex pair, the other sampling ``H`` alone at two nearby pairs.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .exceptions import LftRecoverError
from .interpolation import InterpSpec, compute_rtim
from .lft import LftPlant, ParamBox
from .recovery import RecoveryConfig, build_problem, recover

__all__ = [
    "ExamplePlantParams",
    "TrialRecord",
    "ExperimentConfig",
    "build_example_plant",
    "example_transfer",
    "build_xi_designs",
    "search_omegas",
    "run_monte_carlo",
    "bin_table",
    "DEFAULT_BIN_EDGES",
    "REFERENCE_TABLE",
]

log = logging.getLogger(__name__)

#: Bin edges on ``||eps||_2`` used for the tabulated distribution.
DEFAULT_BIN_EDGES = (0.05, 0.20, 0.35, 0.50, 0.65, 1.00)

#: Published per-bin counts (total, r_zeta < 1, r_omega < 1) for 300 trials.
REFERENCE_TABLE = {
    "total": (46, 153, 75, 24, 2),
    "r_zeta_lt_1": (31, 97, 43, 14, 2),
    "r_omega_lt_1": (28, 70, 36, 10, 2),
}


@dataclass(frozen=True)
class ExamplePlantParams:
    """Coefficients of the factored transfer function.

    ``zeta_p`` and ``omega_p`` are the true values of the unknown parameters.
    """

    k: float = 6.0
    r_z: float = 2.0
    zeta_z: float = 0.2
    omega_z: float = 8.0
    r_p1: float = 3.0
    r_p2: float = 5.0
    zeta_p: float = 0.1
    omega_p: float = 5.0

    def __post_init__(self):
        if not (self.r_p1 > 0 and self.r_p2 > 0 and self.zeta_p * self.omega_p > 0):
            raise ValueError("denominator must be stable: r_p1, r_p2 and zeta_p*omega_p must be positive")

    @property
    def theta(self) -> np.ndarray:
        return np.array([self.zeta_p, self.omega_p])


def build_example_plant(params: ExamplePlantParams = ExamplePlantParams(),
                        theta_box: ParamBox | None = None) -> LftPlant:
    """LFT encoding with ``P(theta) = [[0, omega_p, 0], [zeta_p, 0, omega_p]]``.

    The default parameter box is ``[0.01, 1] x [1, 10]``.
    """
    p = params
    if theta_box is None:
        theta_box = ParamBox(np.array([0.01, 1.0]), np.array([1.0, 10.0]))
    a_xx = np.array([
        [-p.r_p1, p.r_p1 - p.r_z, 0, 0],
        [0, -p.r_p2, 0, 0],
        [0, 0, 0, 1],
        [-1, 1, 0, 0],
    ], dtype=float)
    b_xu = np.array([[0], [p.k], [0], [0]], dtype=float)
    b_xv = np.zeros((4, 2))
    b_xv[3, 0] = 1.0
    c_zx = np.array([[0, 0, 0, -2], [0, 0, 0, 0], [0, 0, -1, 0]], dtype=float)
    d_zv = np.array([[0, 0], [0, 1], [0, 0]], dtype=float)
    d_zu = np.zeros((3, 1))
    c_yx = np.array([[-1, 1, p.omega_z ** 2, 2 * p.zeta_z * p.omega_z]], dtype=float)
    d_yu = np.zeros((1, 1))
    d_yv = np.array([[1.0, 0.0]])
    p0 = np.zeros((2, 3))
    p1 = np.array([[0, 0, 0], [1, 0, 0]], dtype=float)
    p2 = np.array([[0, 1, 0], [0, 0, 1]], dtype=float)
    return LftPlant(a_xx=a_xx, b_xu=b_xu, b_xv=b_xv, c_yx=c_yx, c_zx=c_zx, d_zu=d_zu,
                    d_zv=d_zv, d_yu=d_yu, d_yv=d_yv, p0=p0, p_basis=(p1, p2), theta_box=theta_box)


def example_transfer(params: ExamplePlantParams, s, theta=None):
    """Factored rational form of the example transfer function."""
    p = params
    zeta, omega = (p.zeta_p, p.omega_p) if theta is None else theta
    s = np.asarray(s, dtype=complex)
    num = p.k * (s + p.r_z) * (s ** 2 + 2 * p.zeta_z * p.omega_z * s + p.omega_z ** 2)
    den = (s + p.r_p1) * (s + p.r_p2) * (s ** 2 + 2 * zeta * omega * s + omega ** 2)
    return num / den


def _pair_block(sigma, omega):
    return np.array([[sigma, omega], [-omega, sigma]], dtype=float)


def build_xi_designs(sigma, omegas):
    """Stimulus pairs for the derivative design and the value-only design.

    Parameters
    ----------
    sigma : float or sequence of float
        Real part of the sampling points. A scalar is shared by every pair;
        a sequence of length 2 gives the two value-only pairs (the derivative
        design uses the first entry).
    omegas : sequence of float
        ``(omega1, omega01, omega02)``: the imaginary part for the derivative
        design followed by those of the two value-only pairs.

    Returns
    -------
    dict
        ``{"spec0": value-only InterpSpec, "spec1": derivative InterpSpec}``.
    """
    sig = np.broadcast_to(np.asarray(sigma, dtype=float), (2,))
    om = np.asarray(omegas, dtype=float).reshape(-1)
    if om.size != 3:
        raise ValueError("omegas must hold (omega1, omega01, omega02)")
    b1 = _pair_block(sig[0], om[0])
    xi1 = np.block([[b1, np.eye(2)], [np.zeros((2, 2)), b1]])
    xi0 = np.zeros((4, 4))
    xi0[:2, :2] = _pair_block(sig[0], om[1])
    xi0[2:, 2:] = _pair_block(sig[1], om[2])
    spec1 = InterpSpec(xi1, np.array([[1.0, 1.0, 0.0, 0.0]]))
    spec0 = InterpSpec(xi0, np.array([[1.0, 1.0, 1.0, 1.0]]))
    return {"spec0": spec0, "spec1": spec1}


# --------------------------------------------------------------------------
# configuration and trial records


def _default_recovery_cfg() -> RecoveryConfig:
    return RecoveryConfig(init_theta=np.array([1.0, 10.0]))


@dataclass
class ExperimentConfig:
    """Constants of the noise study; every field can be overridden.

    ``omegas`` is ``(omega1, omega01, omega02)`` as in :func:`build_xi_designs`.
    """

    plant: ExamplePlantParams = field(default_factory=ExamplePlantParams)
    sigma: float = -0.05
    omegas: tuple = (4.4799, 4.4179, 4.5306)
    recovery: RecoveryConfig = field(default_factory=_default_recovery_cfg)
    n_trials: int = 300
    noise_std: float = 0.17
    search_noise_std: float = 0.017
    search_interval: tuple = (4.0, 6.0)
    search_samples: int = 100
    seed: int = 2024
    bin_edges: tuple = DEFAULT_BIN_EDGES


@dataclass
class TrialRecord:
    """Outcome of one noisy trial.

    ``rel_err_zeta`` and ``rel_err_omega`` are percentages, indexed
    ``[value-only design, derivative design]``. A ratio is ``None`` when its
    denominator is negligible, a recovery failed, or the trial is noiseless.
    """

    index: int
    eps: np.ndarray
    eps_norm: float
    rel_err_zeta: tuple
    rel_err_omega: tuple
    r_zeta: float | None
    r_omega: float | None
    converged: tuple
    failed: tuple = (False, False)

    def as_row(self) -> dict:
        row = {"index": self.index}
        row.update({f"eps{k + 1}": float(v) for k, v in enumerate(self.eps)})
        row["eps_norm"] = self.eps_norm
        row["rel_err_zeta_0"], row["rel_err_zeta_1"] = self.rel_err_zeta
        row["rel_err_omega_0"], row["rel_err_omega_1"] = self.rel_err_omega
        row["r_zeta"] = "" if self.r_zeta is None else self.r_zeta
        row["r_omega"] = "" if self.r_omega is None else self.r_omega
        row["converged_0"], row["converged_1"] = (int(c) for c in self.converged)
        row["failed_0"], row["failed_1"] = (int(f) for f in self.failed)
        return row


RATIO_FLOOR = 1e-12


def _ratio(num: float, den: float) -> float | None:
    """``num / den`` for percentage errors; ``None`` below ``RATIO_FLOOR`` relative error."""
    return None if den / 100.0 < RATIO_FLOOR else num / den


def trial_rng(seed: int, index: int) -> np.random.Generator:
    """PCG64 stream for trial ``index``, independent of how many trials run."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def _recover_theta(plant, spec, gamma, cfg):
    """Estimate theta, returning ``(theta_hat, converged, failed, result)``."""
    try:
        res = recover(build_problem(plant, spec, gamma), cfg)
    except LftRecoverError as exc:
        log.warning("recovery failed: %s", exc)
        return np.full(2, np.nan), False, True, None
    return res.theta_hat, res.converged, False, res


def _one_trial(args):
    plant, specs, gammas, cfg, noise_std, seed, index, theta_true = args
    eps = trial_rng(seed, index).standard_normal(4) * noise_std
    rel_z, rel_w, conv, fail = [], [], [], []
    for spec, gamma in zip(specs, gammas):
        th, c, f, _ = _recover_theta(plant, spec, gamma * (1.0 + eps), cfg)
        rel_z.append(100 * abs((theta_true[0] - th[0]) / theta_true[0]))
        rel_w.append(100 * abs((theta_true[1] - th[1]) / theta_true[1]))
        conv.append(bool(c))
        fail.append(bool(f))
    # ratios of absolute errors equal ratios of relative errors; without noise
    # both errors are optimization residue and the ratio carries no information
    defined = not any(fail) and np.any(eps != 0)
    r_z = _ratio(rel_z[1], rel_z[0]) if defined else None
    r_w = _ratio(rel_w[1], rel_w[0]) if defined else None
    return TrialRecord(index, eps, float(np.linalg.norm(eps)), tuple(rel_z), tuple(rel_w),
                       r_z, r_w, tuple(conv), tuple(fail))


def run_monte_carlo(plant: LftPlant, spec0: InterpSpec, spec1: InterpSpec,
                    cfg: RecoveryConfig | None = None, n_trials: int = 300,
                    noise_std: float = 0.17, seed: int = 2024, theta_true=(0.1, 5.0),
                    n_jobs: int = 1) -> list:
    """Noisy-RTIM trials comparing the value-only and derivative designs.

    Each trial draws ``eps`` (four iid normals of standard deviation
    ``noise_std``) from its own PCG64 stream, scales the columns of both exact
    RTIMs by ``1 + eps`` and recovers theta from each. Records are returned
    in trial order; the result is identical for any ``n_jobs``.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be at least 1")
    cfg = cfg or _default_recovery_cfg()
    theta_true = np.asarray(theta_true, dtype=float)
    specs = (spec0, spec1)
    gammas = tuple(compute_rtim(plant, theta_true, s).gamma for s in specs)
    jobs = [(plant, specs, gammas, cfg, noise_std, seed, i, theta_true) for i in range(n_trials)]
    if n_jobs == 1:
        return [_one_trial(j) for j in jobs]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=None if n_jobs < 1 else n_jobs) as pool:
        return list(pool.map(_one_trial, jobs, chunksize=max(1, n_trials // 64)))


def sort_by_eps_norm(records) -> list:
    return sorted(records, key=lambda r: (r.eps_norm, r.index))


def ratio_fractions(records) -> dict:
    """Fraction of all trials with ``r < 1`` plus the count of undefined ratios."""
    n = len(records)
    out = {"n": n}
    for key in ("r_zeta", "r_omega"):
        vals = [getattr(r, key) for r in records]
        out[f"{key}_lt_1"] = sum(1 for v in vals if v is not None and v < 1) / n if n else 0.0
        out[f"{key}_undefined"] = sum(1 for v in vals if v is None)
    return out


# --------------------------------------------------------------------------
# sampling-frequency search


def _search_metric(plant, spec, gamma, cfg, theta_true):
    th, _, failed, _ = _recover_theta(plant, spec, gamma, cfg)
    if failed or not np.all(np.isfinite(th)):
        return np.inf
    return float(np.sqrt(np.sum(((theta_true - th) / theta_true) ** 2)))


def search_omegas(plant: LftPlant, sigma: float = -0.05, interval=(4.0, 6.0), n_samples: int = 100,
                  noise_std: float = 0.017, seed: int = 0, cfg: RecoveryConfig | None = None,
                  theta_true=(0.1, 5.0)) -> dict:
    """Random search over the imaginary parts of the sampling points.

    One perturbation vector ``eps`` is drawn first and reused for every
    candidate. The derivative design is scored on ``n_samples`` uniform
    draws of ``omega1`` and the value-only design on ``n_samples`` uniform
    pairs; the score is ``sqrt(sum(((theta - theta_hat) / theta)^2))``.
    Ties keep the earliest draw. Failed recoveries score ``inf`` and are
    counted in ``n_failed``.
    """
    lo, hi = map(float, interval)
    if not hi > lo:
        raise ValueError("interval must be nonempty")
    cfg = cfg or _default_recovery_cfg()
    theta_true = np.asarray(theta_true, dtype=float)
    rng = np.random.Generator(np.random.PCG64(seed))
    eps = rng.standard_normal(4) * noise_std
    om1 = rng.uniform(lo, hi, size=n_samples)
    pairs = rng.uniform(lo, hi, size=(n_samples, 2))

    def score(spec):
        gamma = compute_rtim(plant, theta_true, spec).gamma
        return _search_metric(plant, spec, gamma * (1.0 + eps), cfg, theta_true)

    m1 = np.array([score(build_xi_designs(sigma, (w, w, w))["spec1"]) for w in om1])
    m0 = np.array([score(build_xi_designs(sigma, (lo, a, b))["spec0"]) for a, b in pairs])
    i1, i0 = int(np.argmin(m1)), int(np.argmin(m0))
    return {
        "omega1_best": float(om1[i1]),
        "omega_pair_best": (float(pairs[i0, 0]), float(pairs[i0, 1])),
        "metric1_best": float(m1[i1]),
        "metric0_best": float(m0[i0]),
        "eps": eps,
        "n_failed": int(np.sum(~np.isfinite(m1)) + np.sum(~np.isfinite(m0))),
    }


# --------------------------------------------------------------------------
# tabulation


def bin_table(records, bin_edges=DEFAULT_BIN_EDGES) -> dict:
    """Counts per ``||eps||_2`` bin (half-open ``[lo, hi)``).

    Returns a dict with ``edges`` and rows ``total``, ``r_zeta_lt_1`` and
    ``r_omega_lt_1``; each row lists one count per bin followed by the
    overflow count (records outside every bin). ``row_sums`` gives the sum
    of each row including overflow.
    """
    edges = np.asarray(bin_edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise ValueError("bin edges must be strictly ascending")
    nb = edges.size - 1
    rows = {k: [0] * (nb + 1) for k in ("total", "r_zeta_lt_1", "r_omega_lt_1")}
    for r in records:
        j = int(np.searchsorted(edges, r.eps_norm, side="right")) - 1
        col = j if 0 <= j < nb else nb
        rows["total"][col] += 1
        if r.r_zeta is not None and r.r_zeta < 1:
            rows["r_zeta_lt_1"][col] += 1
        if r.r_omega is not None and r.r_omega < 1:
            rows["r_omega_lt_1"][col] += 1
    return {"edges": edges.tolist(), **rows, "row_sums": {k: sum(v) for k, v in rows.items()}}
