"""LFT-structured plants: evaluation, assembly and JSON (de)serialization."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from . import matops
from .exceptions import DimensionMismatch, IllPosed, SingularResolvent

__all__ = [
    "ParamBox",
    "LftPlant",
    "StateSpace",
    "eval_p",
    "is_well_posed",
    "assemble_system",
    "psi_matrix",
    "transfer_value",
    "plant_from_dict",
    "plant_to_dict",
    "load_plant",
    "save_plant",
]

BLOCK_NAMES = ("A_xx", "B_xu", "B_xv", "C_yx", "C_zx", "D_zu", "D_zv", "D_yu", "D_yv")


@dataclass(frozen=True)
class ParamBox:
    """Axis-aligned box of admissible parameter values."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float).reshape(-1)
        hi = np.asarray(self.upper, dtype=float).reshape(-1)
        if lo.shape != hi.shape:
            raise DimensionMismatch("theta_box lower/upper lengths differ", block="theta_box")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("theta_box bounds must be finite")
        if np.any(lo > hi):
            raise ValueError("theta_box lower bound exceeds upper bound")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.size

    def sample(self, rng: np.random.Generator, n: int | None = None) -> np.ndarray:
        size = (self.dim,) if n is None else (n, self.dim)
        return rng.uniform(self.lower, self.upper, size=size)

    def project(self, theta) -> np.ndarray:
        return np.clip(theta, self.lower, self.upper)

    def contains(self, theta) -> bool:
        t = np.asarray(theta, dtype=float)
        return bool(np.all(t >= self.lower) and np.all(t <= self.upper))


@dataclass(frozen=True, eq=False)
class LftPlant:
    """System matrices given as an LFT of an affine parameter matrix ``P(theta)``.

    ``p0`` is the constant part and ``p_basis[i]`` multiplies ``theta[i]``.
    """

    a_xx: np.ndarray
    b_xu: np.ndarray
    b_xv: np.ndarray
    c_yx: np.ndarray
    c_zx: np.ndarray
    d_zu: np.ndarray
    d_zv: np.ndarray
    d_yu: np.ndarray
    d_yv: np.ndarray
    p0: np.ndarray
    p_basis: tuple
    theta_box: ParamBox | None = field(default=None)

    def __post_init__(self):
        for name in ("a_xx", "b_xu", "b_xv", "c_yx", "c_zx", "d_zu", "d_zv", "d_yu", "d_yv", "p0"):
            arr = np.array(getattr(self, name), dtype=float, ndmin=2)
            if arr.ndim != 2:
                raise DimensionMismatch(f"{name} must be a matrix", block=name)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        basis = []
        for i, p in enumerate(self.p_basis):
            arr = np.array(p, dtype=float, ndmin=2)
            arr.setflags(write=False)
            basis.append(arr)
        object.__setattr__(self, "p_basis", tuple(basis))
        self._validate()

    def _validate(self):
        mx = self.a_xx.shape[0]
        if self.a_xx.shape != (mx, mx):
            raise DimensionMismatch(f"A_xx must be square, got {self.a_xx.shape}", block="A_xx")
        mu = self.b_xu.shape[1]
        mv = self.b_xv.shape[1]
        my = self.c_yx.shape[0]
        mz = self.c_zx.shape[0]
        expected = {
            "B_xu": (self.b_xu, (mx, mu)),
            "B_xv": (self.b_xv, (mx, mv)),
            "C_yx": (self.c_yx, (my, mx)),
            "C_zx": (self.c_zx, (mz, mx)),
            "D_zu": (self.d_zu, (mz, mu)),
            "D_zv": (self.d_zv, (mz, mv)),
            "D_yu": (self.d_yu, (my, mu)),
            "D_yv": (self.d_yv, (my, mv)),
            "P_0": (self.p0, (mv, mz)),
        }
        for i, p in enumerate(self.p_basis, start=1):
            expected[f"P_{i}"] = (p, (mv, mz))
        for name, (arr, shape) in expected.items():
            if arr.shape != shape:
                raise DimensionMismatch(
                    f"{name} has shape {arr.shape}, expected {shape} "
                    f"(m_x={mx}, m_u={mu}, m_v={mv}, m_y={my}, m_z={mz})",
                    block=name,
                )
        if len(self.p_basis) < 1:
            raise DimensionMismatch("at least one parameter matrix P_1 is required", block="P")
        if self.theta_box is not None and self.theta_box.dim != len(self.p_basis):
            raise DimensionMismatch(
                f"theta_box has {self.theta_box.dim} entries, plant has {len(self.p_basis)} parameters",
                block="theta_box",
            )

    @property
    def dims(self) -> dict:
        return {
            "m_x": self.a_xx.shape[0],
            "m_u": self.b_xu.shape[1],
            "m_v": self.b_xv.shape[1],
            "m_y": self.c_yx.shape[0],
            "m_z": self.c_zx.shape[0],
            "m_theta": len(self.p_basis),
        }

    @property
    def n_theta(self) -> int:
        return len(self.p_basis)

    @property
    def bd_v(self) -> np.ndarray:
        """The stacked input matrix ``[B_xv; D_yv]`` of the uncertainty channel."""
        return np.vstack([self.b_xv, self.d_yv])

    @property
    def ac(self) -> np.ndarray:
        """``[A_xx; C_yx]``."""
        return np.vstack([self.a_xx, self.c_yx])

    def __eq__(self, other):
        if not isinstance(other, LftPlant):
            return NotImplemented
        mine = plant_to_dict(self)
        return mine == plant_to_dict(other)

    __hash__ = None

    def replace(self, **changes) -> "LftPlant":
        kw = {name: getattr(self, name) for name in self.__dataclass_fields__}
        kw.update(changes)
        return LftPlant(**kw)


class StateSpace(NamedTuple):
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray


def _theta(plant: LftPlant, theta) -> np.ndarray:
    t = np.asarray(theta, dtype=float).reshape(-1)
    if t.size != plant.n_theta:
        raise DimensionMismatch(f"theta has {t.size} entries, plant has {plant.n_theta} parameters")
    if not np.all(np.isfinite(t)):
        raise ValueError("theta must be finite")
    return t


def eval_p(plant: LftPlant, theta) -> np.ndarray:
    """``P_0 + sum_i theta_i P_i``."""
    t = _theta(plant, theta)
    p = np.array(plant.p0, dtype=float)
    for ti, pi in zip(t, plant.p_basis):
        p = p + ti * pi
    return p


def is_well_posed(plant: LftPlant, theta, tol: float | None = None) -> bool:
    """Whether ``I - P(theta) D_zv`` is numerically invertible."""
    m = np.eye(plant.dims["m_v"]) - eval_p(plant, theta) @ plant.d_zv
    return matops.rank(m, tol) == m.shape[0]


def _loop_gain(plant: LftPlant, p: np.ndarray, tol=None) -> np.ndarray:
    """``(I - P D_zv)^{-1} P``."""
    m = np.eye(p.shape[0]) - p @ plant.d_zv
    if matops.rank(m, tol) < m.shape[0]:
        raise IllPosed("I - P(theta) D_zv is singular")
    return np.linalg.solve(m, p)


def assemble_system(plant: LftPlant, theta, tol: float | None = None) -> StateSpace:
    """Close the LFT loop at ``theta`` and return ``(A, B, C, D)``."""
    p = eval_p(plant, theta)
    k = _loop_gain(plant, p, tol)
    lower = k @ np.hstack([plant.c_zx, plant.d_zu])
    full = np.block([[plant.a_xx, plant.b_xu], [plant.c_yx, plant.d_yu]]) + plant.bd_v @ lower
    mx = plant.dims["m_x"]
    return StateSpace(full[:mx, :mx], full[:mx, mx:], full[mx:, :mx], full[mx:, mx:])


def psi_matrix(plant: LftPlant) -> np.ndarray:
    """Columns ``vec(P_i)``; full column rank is necessary for identifiability."""
    return np.column_stack([matops.vec(p) for p in plant.p_basis])


def transfer_value(plant: LftPlant, theta, s: complex) -> np.ndarray:
    """``H(s) = C (sI - A)^{-1} B + D`` at the closed loop for ``theta``."""
    a, b, c, d = assemble_system(plant, theta)
    m = s * np.eye(a.shape[0]) - a
    sv = np.linalg.svd(m, compute_uv=False)
    if sv[-1] <= matops.default_tol(m.shape) * max(sv[0], 1.0):
        raise SingularResolvent(f"s={s} is an eigenvalue of A(theta)")
    return c @ np.linalg.solve(m, b.astype(complex)) + d


# --- JSON -----------------------------------------------------------------

def _matrix(doc: dict, key: str, optional_shape=None) -> np.ndarray:
    if key not in doc:
        if optional_shape is not None:
            return np.zeros(optional_shape)
        raise DimensionMismatch(f"missing block {key!r}", block=key)
    rows = doc[key]
    if isinstance(rows, (int, float)):
        rows = [[rows]]
    if not isinstance(rows, list) or not rows:
        raise DimensionMismatch(f"{key} must be a non-empty list of rows", block=key)
    if not all(isinstance(r, list) for r in rows):
        raise DimensionMismatch(f"{key} must be a list of row lists", block=key)
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise DimensionMismatch(f"{key} has rows of unequal length {sorted(widths)}", block=key)
    try:
        return np.array(rows, dtype=float)
    except (TypeError, ValueError) as exc:
        raise DimensionMismatch(f"{key} contains non-numeric entries", block=key) from exc


def plant_from_dict(doc: dict) -> LftPlant:
    mats = {name: _matrix(doc, name) for name in BLOCK_NAMES}
    if "P" not in doc or not isinstance(doc["P"], list) or len(doc["P"]) < 2:
        raise DimensionMismatch("'P' must list P_0 followed by at least one P_i", block="P")
    ps = [_matrix({f"P_{i}": p}, f"P_{i}") for i, p in enumerate(doc["P"])]
    box = None
    if "theta_box" in doc:
        tb = doc["theta_box"]
        box = ParamBox(np.asarray(tb["lower"], float), np.asarray(tb["upper"], float))
    return LftPlant(
        a_xx=mats["A_xx"], b_xu=mats["B_xu"], b_xv=mats["B_xv"], c_yx=mats["C_yx"],
        c_zx=mats["C_zx"], d_zu=mats["D_zu"], d_zv=mats["D_zv"], d_yu=mats["D_yu"],
        d_yv=mats["D_yv"], p0=ps[0], p_basis=tuple(ps[1:]), theta_box=box,
    )


def plant_to_dict(plant: LftPlant) -> dict:
    attr = dict(zip(BLOCK_NAMES, ("a_xx", "b_xu", "b_xv", "c_yx", "c_zx", "d_zu", "d_zv", "d_yu", "d_yv")))
    doc = {name: getattr(plant, a).tolist() for name, a in attr.items()}
    doc["P"] = [plant.p0.tolist()] + [p.tolist() for p in plant.p_basis]
    if plant.theta_box is not None:
        doc["theta_box"] = {"lower": plant.theta_box.lower.tolist(), "upper": plant.theta_box.upper.tolist()}
    return doc


def load_plant(path) -> LftPlant:
    with open(path) as fh:
        return plant_from_dict(json.load(fh))


_NUMBER_LIST = re.compile(r"\[\s*([-+\d.eE,\s]*?)\s*\]")


def dumps_matrices(doc: dict) -> str:
    """JSON text with every matrix row kept on one line."""
    text = json.dumps(doc, indent=2)
    return _NUMBER_LIST.sub(lambda m: "[" + re.sub(r"\s+", " ", m.group(1)) + "]", text) + "\n"


def save_plant(plant: LftPlant, path) -> None:
    Path(path).write_text(dumps_matrices(plant_to_dict(plant)))
