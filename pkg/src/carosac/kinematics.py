"""Rig geometry and straight-line cable kinematics for a 4-cable suspended CDPR.

Cables are modelled as straight segments between the exit point ``a_i`` and the
platform attachment ``p + o_i``. Attachment offsets are fixed in the world frame
(the platform is treated as a point, orientation is not modelled).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import InvalidRig, NonConvergence

N_CABLES = 4


@dataclass(frozen=True)
class RigGeometry:
    anchors: np.ndarray  # (4, 3) cable exit points
    offsets: np.ndarray  # (4, 3) attachment offsets from the platform center
    workspace_min: np.ndarray
    workspace_max: np.ndarray
    length_bounds: tuple[float, float]

    def __post_init__(self):
        for name in ("anchors", "offsets", "workspace_min", "workspace_max"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        lo, hi = self.length_bounds
        object.__setattr__(self, "length_bounds", (float(lo), float(hi)))
        validate_rig(self)

    @property
    def workspace_center(self) -> np.ndarray:
        return 0.5 * (self.workspace_min + self.workspace_max)

    @property
    def workspace_diagonal(self) -> float:
        return float(np.linalg.norm(self.workspace_max - self.workspace_min))

    def corners(self) -> np.ndarray:
        lo, hi = self.workspace_min, self.workspace_max
        return np.array([[(lo, hi)[b][k] for k, b in enumerate(bits)]
                         for bits in itertools.product((0, 1), repeat=3)])

    def contains(self, p, tol: float = 0.0) -> bool:
        p = np.asarray(p, dtype=float)
        return bool(np.all(p >= self.workspace_min - tol) and np.all(p <= self.workspace_max + tol))

    def clip(self, p) -> np.ndarray:
        return np.clip(p, self.workspace_min, self.workspace_max)

    def sample_positions(self, rng: np.random.Generator, n: int | None = None) -> np.ndarray:
        size = (3,) if n is None else (n, 3)
        return rng.uniform(self.workspace_min, self.workspace_max, size=size)

    def to_dict(self) -> dict:
        return {
            "anchors": self.anchors.tolist(),
            "offsets": self.offsets.tolist(),
            "workspace": [self.workspace_min.tolist(), self.workspace_max.tolist()],
            "length_bounds": list(self.length_bounds),
        }


def validate_rig(rig: RigGeometry) -> None:
    """Raise :class:`InvalidRig` naming the first violated invariant."""
    if rig.anchors.shape != (N_CABLES, 3):
        raise InvalidRig(f"exactly 4 anchors required (got shape {rig.anchors.shape})")
    if rig.offsets.shape != (N_CABLES, 3):
        raise InvalidRig(f"exactly 4 offsets required (got shape {rig.offsets.shape})")
    if rig.workspace_min.shape != (3,) or rig.workspace_max.shape != (3,):
        raise InvalidRig("workspace bounds must be 3-vectors")
    arrays = (rig.anchors, rig.offsets, rig.workspace_min, rig.workspace_max)
    if not all(np.all(np.isfinite(a)) for a in arrays):
        raise InvalidRig("all coordinates must be finite")
    for i, j in itertools.combinations(range(N_CABLES), 2):
        if np.allclose(rig.anchors[i], rig.anchors[j], rtol=0.0, atol=1e-12):
            raise InvalidRig(f"anchors must be pairwise distinct (anchors {i} and {j} coincide)")
    if not np.all(rig.workspace_min < rig.workspace_max):
        raise InvalidRig("workspace_min < workspace_max componentwise")
    lo, hi = rig.length_bounds
    if not (math.isfinite(lo) and math.isfinite(hi) and 0.0 <= lo < hi):
        raise InvalidRig("length_bounds must satisfy 0 <= min < max")
    if not np.all(rig.anchors[:, 2] > rig.workspace_max[2]):
        raise InvalidRig("anchors must lie above workspace_max.z (suspended configuration)")
    for corner in rig.corners():
        L = inverse_kinematics(corner, rig)
        if np.any(L < lo) or np.any(L > hi):
            raise InvalidRig(
                f"workspace corner {corner.tolist()} has IK lengths {np.round(L, 4).tolist()} "
                f"outside length_bounds {list(rig.length_bounds)}")


def default_rig() -> RigGeometry:
    """4 m square ceiling rig, workspace x, y in [-2, 2] and z in [0, 2].

    Each attachment sits on the platform corner diagonally opposite its anchor so
    that the anchor-minus-offset hull encloses the whole workspace (every pose is
    statically feasible under gravity).
    """
    corners = np.array([[2.0, 2.0], [-2.0, 2.0], [-2.0, -2.0], [2.0, -2.0]])
    anchors = np.column_stack([corners, np.full(4, 4.0)])
    offsets = np.column_stack([-0.025 * corners, np.zeros(4)])
    return RigGeometry(anchors, offsets, np.array([-2.0, -2.0, 0.0]), np.array([2.0, 2.0, 2.0]),
                       (2.0, 7.0))


def inverse_kinematics(p, rig: RigGeometry) -> np.ndarray:
    """Straight-line cable lengths ``L_i = |p + o_i - a_i|``."""
    d = np.asarray(p, dtype=float) + rig.offsets - rig.anchors
    return np.sqrt(np.einsum("ij,ij->i", d, d))


def inverse_kinematics_batch(P, rig: RigGeometry) -> np.ndarray:
    d = np.asarray(P, dtype=float)[:, None, :] + rig.offsets - rig.anchors
    return np.sqrt(np.einsum("nij,nij->ni", d, d))


def fk_residual(p, L, rig: RigGeometry) -> float:
    """Sum of squared differences between chord lengths at ``p`` and ``L``."""
    r = inverse_kinematics(p, rig) - np.asarray(L, dtype=float)
    return float(r @ r)


class GuessPolicy(str, Enum):
    WORKSPACE_CENTER = "workspace_center"
    PREVIOUS_SOLUTION = "previous_solution"
    CALLER_SUPPLIED = "caller_supplied"


@dataclass(frozen=True)
class FkSolverConfig:
    max_iterations: int = 200
    residual_tolerance: float = 1e-12  # m^2
    step_tolerance: float = 1e-9  # m
    initial_guess_policy: GuessPolicy = GuessPolicy.PREVIOUS_SOLUTION

    def __post_init__(self):
        object.__setattr__(self, "initial_guess_policy", GuessPolicy(self.initial_guess_policy))
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not (self.residual_tolerance > 0 and self.step_tolerance > 0):
            raise ValueError("tolerances must be positive")


def least_squares_position(L, rig: RigGeometry, guess, cfg: FkSolverConfig = FkSolverConfig()):
    """Levenberg-Marquardt minimisation of the chord-length residual.

    Returns ``(p, E, converged)`` where ``converged`` means a stationary point was
    reached (small step), regardless of the residual value. Inconsistent length
    sets (four cables, three unknowns) therefore still yield the best-fit pose.
    """
    L = np.asarray(L, dtype=float)
    p = np.array(guess, dtype=float)
    if L.shape != (N_CABLES,) or not np.all(np.isfinite(L)) or not np.all(np.isfinite(p)):
        raise NonConvergence("cable lengths and guess must be finite 4- and 3-vectors")
    A = rig.anchors - rig.offsets  # effective anchors in platform-center coordinates
    d = p - A
    n = np.sqrt(np.einsum("ij,ij->i", d, d))
    r = n - L
    E = float(r @ r)
    damping = 1e-6
    for _ in range(cfg.max_iterations):
        J = d / np.maximum(n, 1e-12)[:, None]
        g = J.T @ r
        H = J.T @ J
        step = -np.linalg.solve(H + damping * (np.diag(np.diag(H)) + 1e-12 * np.eye(3)), g)
        p_new = p + step
        d_new = p_new - A
        n_new = np.sqrt(np.einsum("ij,ij->i", d_new, d_new))
        r_new = n_new - L
        E_new = float(r_new @ r_new)
        step_norm = float(np.sqrt(step @ step))
        if E_new <= E:
            p, d, n, r, E = p_new, d_new, n_new, r_new, E_new
            damping = max(damping * 0.1, 1e-12)
            if step_norm < cfg.step_tolerance:
                return p, E, True
        else:
            damping *= 10.0
            if damping > 1e12 or step_norm < cfg.step_tolerance:
                return p, E, True
    return p, E, False


def forward_kinematics(L, rig: RigGeometry, cfg: FkSolverConfig = FkSolverConfig(), guess=None) -> np.ndarray:
    """Platform position whose straight-line lengths match ``L``.

    Raises :class:`NonConvergence` when the residual stays above tolerance.
    """
    if guess is None:
        guess = rig.workspace_center
    p, E, converged = least_squares_position(L, rig, guess, cfg)
    if E > cfg.residual_tolerance or not np.all(np.isfinite(p)):
        raise NonConvergence(
            f"residual {E:.3e} m^2 above tolerance {cfg.residual_tolerance:.1e} "
            f"({'stationary point' if converged else 'iteration limit'})")
    return p


@dataclass
class FkSolver:
    """Caller-owned FK handle that remembers its previous solution."""

    rig: RigGeometry
    cfg: FkSolverConfig = field(default_factory=FkSolverConfig)
    previous: np.ndarray | None = None

    def _guess(self, guess):
        policy = self.cfg.initial_guess_policy
        if policy is GuessPolicy.CALLER_SUPPLIED:
            if guess is None:
                raise ValueError("caller_supplied policy requires a guess")
            return guess
        if guess is not None:
            return guess
        if policy is GuessPolicy.PREVIOUS_SOLUTION and self.previous is not None:
            return self.previous
        return self.rig.workspace_center

    def solve(self, L, guess=None) -> np.ndarray:
        p = forward_kinematics(L, self.rig, self.cfg, self._guess(guess))
        self.previous = p
        return p

    def best_fit(self, L, guess=None) -> tuple[np.ndarray, float]:
        """Least-squares pose for possibly inconsistent lengths; never raises on residual."""
        p, E, _ = least_squares_position(L, self.rig, self._guess(guess), self.cfg)
        self.previous = p
        return p, E

    def reset(self) -> None:
        self.previous = None
