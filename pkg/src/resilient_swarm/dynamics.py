"""Agent state, control-affine dynamics, and fixed-step RK4 integration.

Two models are supported: a planar single integrator and the linearized
unicycle (look-ahead point at distance b in front of the wheel axis). For
both, the position block of the dynamics is pdot = u; the unicycle
additionally evolves its heading.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ContractViolation


class ModelKind(enum.Enum):
    SINGLE_INTEGRATOR = "single_integrator"
    LINEARIZED_UNICYCLE = "linearized_unicycle"


_KIND_CODE = {
    ModelKind.SINGLE_INTEGRATOR: _kernels.SINGLE_INTEGRATOR,
    ModelKind.LINEARIZED_UNICYCLE: _kernels.LINEARIZED_UNICYCLE,
}


@dataclass(frozen=True)
class AgentState:
    id: int
    p: np.ndarray  # position, meters
    phi: float  # orientation, radians
    t: float = 0.0

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.shape != (2,) or not np.all(np.isfinite(p)) or not np.isfinite(self.phi):
            raise ContractViolation(f"agent {self.id}: state must be finite with 2-d position")
        object.__setattr__(self, "p", p)


@dataclass(frozen=True)
class DynamicsModel:
    kind: ModelKind
    b: float = 1.0  # look-ahead offset, meters (unicycle only)
    m: int = 2  # input dimension
    b_f: float = 0.0  # Lipschitz bound of the drift term
    b_g: float = 1.0  # Lipschitz bound of the input term

    def __post_init__(self):
        if self.kind is ModelKind.LINEARIZED_UNICYCLE and self.b <= 0:
            raise ContractViolation("linearized unicycle requires look-ahead b > 0")
        if self.b_f < 0 or self.b_g <= 0 or self.m < 1:
            raise ContractViolation("require b_f >= 0, b_g > 0, m >= 1")


@dataclass(frozen=True)
class InputPolytope:
    """Admissible control set {u : A u <= b}. Nonemptiness and boundedness
    are verified at scenario load time with LP probes."""

    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.asarray(self.b, dtype=float).ravel()
        if A.shape[0] != b.shape[0]:
            raise ContractViolation("polytope A and b row counts differ")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise ContractViolation("polytope entries must be finite")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    def contains(self, u: np.ndarray, tol: float = 1e-9) -> bool:
        return bool(np.all(self.A @ u <= self.b + tol))


def box_polytope(limit: float, m: int = 2) -> InputPolytope:
    """Symmetric box |u_k| <= limit."""
    eye = np.eye(m)
    return InputPolytope(np.vstack([eye, -eye]), np.full(2 * m, float(limit)))


def position_drift(model: DynamicsModel, state: AgentState) -> np.ndarray:
    """Drift term of the position block (f^p). Zero for both supported kinds."""
    return np.zeros(2)


def position_input_matrix(model: DynamicsModel, state: AgentState) -> np.ndarray:
    """Input matrix of the position block (g^p). Identity for both kinds."""
    return np.eye(2, model.m)


def eval_dynamics(state: AgentState, model: DynamicsModel, u: np.ndarray) -> np.ndarray:
    """Full state derivative [pdot; phidot] under control u."""
    u = np.asarray(u, dtype=float)
    if u.shape != (model.m,) or not np.all(np.isfinite(u)):
        raise ContractViolation(f"control must be finite with dim {model.m}")
    if model.kind is ModelKind.LINEARIZED_UNICYCLE:
        phidot = (-np.sin(state.phi) * u[0] + np.cos(state.phi) * u[1]) / model.b
        return np.array([u[0], u[1], phidot])
    return np.array([u[0], u[1], 0.0])


def forward_body_inputs(phi: float, b: float, v: float, w: float) -> np.ndarray:
    """Map unicycle body velocities (v, w) to look-ahead-point inputs u."""
    if b <= 0:
        raise ContractViolation("require b > 0")
    c, s = np.cos(phi), np.sin(phi)
    return np.array([c * v - b * s * w, s * v + b * c * w])


def recover_body_inputs(phi: float, b: float, u: np.ndarray) -> tuple[float, float]:
    """Invert the look-ahead transform: returns body velocities (v, w)."""
    if b <= 0:
        raise ContractViolation("require b > 0")
    c, s = np.cos(phi), np.sin(phi)
    # inverse of [[c, -b s], [s, b c]]; determinant is b
    v = c * u[0] + s * u[1]
    w = (-s * u[0] + c * u[1]) / b
    return float(v), float(w)


def step(state: AgentState, model: DynamicsModel, u: np.ndarray, dt: float) -> AgentState:
    """One explicit RK4 step with zero-order-hold control."""
    if dt <= 0:
        raise ContractViolation("require dt > 0")
    u = np.asarray(u, dtype=float)
    if u.shape != (model.m,):
        raise ContractViolation(f"control must have dim {model.m}")
    x, y, phi = _kernels.rk4_step(
        _KIND_CODE[model.kind], model.b, state.p[0], state.p[1], state.phi,
        float(u[0]), float(u[1]), float(dt),
    )
    return AgentState(id=state.id, p=np.array([x, y]), phi=phi, t=state.t + dt)
