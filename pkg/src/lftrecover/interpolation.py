"""Right tangential interpolation matrices (RTIMs).

For a plant ``(A, B, C, D)`` and a stimulus pair ``(Xi, Pi)`` the RTIM is
``Gamma = C X + D Pi`` with ``X`` the unique solution of
``A X + B Pi - X Xi = 0``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import factorial

import numpy as np

from . import matops
from .exceptions import DimensionMismatch, DimensionOrder, SingularResolvent
from .lft import LftPlant, assemble_system

__all__ = [
    "InterpSpec",
    "Rtim",
    "solve_x",
    "compute_rtim",
    "derivative_oracle",
    "spec_from_dict",
    "spec_to_dict",
    "load_spec",
    "check_dimension_order",
]


@dataclass(frozen=True, eq=False)
class InterpSpec:
    """Stimulus generator ``xi' = Xi xi, u = Pi xi``."""

    xi: np.ndarray
    pi: np.ndarray

    def __post_init__(self):
        xi = np.array(self.xi, dtype=float, ndmin=2)
        pi = np.array(self.pi, dtype=float, ndmin=2)
        if xi.shape[0] != xi.shape[1]:
            raise DimensionMismatch(f"Xi must be square, got {xi.shape}", block="Xi")
        if pi.shape[1] != xi.shape[0]:
            raise DimensionMismatch(
                f"Pi has {pi.shape[1]} columns, Xi is {xi.shape[0]}x{xi.shape[0]}", block="Pi"
            )
        xi.setflags(write=False)
        pi.setflags(write=False)
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "pi", pi)

    @property
    def m_xi(self) -> int:
        return self.xi.shape[0]

    def __eq__(self, other):
        if not isinstance(other, InterpSpec):
            return NotImplemented
        return np.array_equal(self.xi, other.xi) and np.array_equal(self.pi, other.pi)

    __hash__ = None


@dataclass(frozen=True)
class Rtim:
    """An RTIM together with where it came from.

    ``provenance`` is ``"exact"`` for a model-computed matrix, otherwise
    ``"estimate"`` with ``noise`` describing the perturbation applied.
    """

    gamma: np.ndarray
    provenance: str = "exact"
    noise: dict | None = field(default=None)

    def __post_init__(self):
        g = np.array(self.gamma, dtype=float, ndmin=2)
        if not np.all(np.isfinite(g)):
            raise ValueError("Gamma must be finite")
        object.__setattr__(self, "gamma", g)
        if self.provenance not in ("exact", "estimate"):
            raise ValueError(f"unknown provenance {self.provenance!r}")

    def perturbed(self, delta, noise=None) -> "Rtim":
        return Rtim(self.gamma + np.asarray(delta, float), "estimate", noise)


def check_dimension_order(plant: LftPlant, spec: InterpSpec) -> None:
    mx = plant.dims["m_x"]
    if mx < spec.m_xi:
        raise DimensionOrder(
            f"m_x={mx} < m_xi={spec.m_xi}: block-diagonal splitting of Xi is not supported"
        )
    if spec.pi.shape[0] != plant.dims["m_u"]:
        raise DimensionMismatch(
            f"Pi has {spec.pi.shape[0]} rows, plant has m_u={plant.dims['m_u']}", block="Pi"
        )


def solve_x(plant: LftPlant, theta, spec: InterpSpec, tol: float | None = None) -> np.ndarray:
    """Unique solution ``X`` of ``A(theta) X + B(theta) Pi - X Xi = 0``."""
    check_dimension_order(plant, spec)
    a, b, _, _ = assemble_system(plant, theta)
    return matops.solve_sylvester(a, spec.xi, b @ spec.pi, tol)


def compute_rtim(plant: LftPlant, theta, spec: InterpSpec, tol: float | None = None) -> Rtim:
    check_dimension_order(plant, spec)
    a, b, c, d = assemble_system(plant, theta)
    x = matops.solve_sylvester(a, spec.xi, b @ spec.pi, tol)
    return Rtim(c @ x + d @ spec.pi)


def derivative_oracle(plant: LftPlant, theta, lam: complex, order: int, eta) -> np.ndarray:
    """``d^k H / ds^k (lam) @ eta`` for ``k`` in ``{0, 1}``.

    Uses ``d^k H/ds^k = (-1)^k k! C (lam I - A)^{-(k+1)} B`` for ``k >= 1``.
    """
    if order not in (0, 1):
        raise ValueError("only order 0 and 1 are supported")
    a, b, c, d = assemble_system(plant, theta)
    m = lam * np.eye(a.shape[0]) - a
    sv = np.linalg.svd(m, compute_uv=False)
    if sv[-1] <= matops.default_tol(m.shape) * max(sv[0], 1.0):
        raise SingularResolvent(f"lambda={lam} is an eigenvalue of A(theta)")
    eta = np.asarray(eta, dtype=complex).reshape(-1)
    w = b @ eta
    for _ in range(order + 1):
        w = np.linalg.solve(m, w)
    out = (-1) ** order * factorial(order) * (c @ w)
    if order == 0:
        out = out + d @ eta
    return out


def spec_from_dict(doc: dict) -> InterpSpec:
    for key in ("Xi", "Pi"):
        if key not in doc:
            raise DimensionMismatch(f"missing block {key!r}", block=key)
        rows = doc[key]
        if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
            raise DimensionMismatch(f"{key} must be a list of row lists", block=key)
        if len({len(r) for r in rows}) != 1:
            raise DimensionMismatch(f"{key} has rows of unequal length", block=key)
    return InterpSpec(np.array(doc["Xi"], float), np.array(doc["Pi"], float))


def spec_to_dict(spec: InterpSpec) -> dict:
    return {"Xi": spec.xi.tolist(), "Pi": spec.pi.tolist()}


def load_spec(path) -> InterpSpec:
    with open(path) as fh:
        return spec_from_dict(json.load(fh))
