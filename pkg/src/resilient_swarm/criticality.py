"""Critical time and critical zone computation.

The critical time lower-bounds how long a pair (or an agent-obstacle pair)
provably stays safe under the worst admissible behavior; the critical zone
is the reachable relative displacement over a multiple of that horizon.
Degenerate cases (no possible motion, bound vacuous) saturate at TIME_CAP.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .barriers import Obstacle
from .dynamics import DynamicsModel, ModelKind
from .errors import AlreadyUnsafeError, ContractViolation

TIME_CAP = 1e9

_KIND_CODE = {
    ModelKind.SINGLE_INTEGRATOR: _kernels.SINGLE_INTEGRATOR,
    ModelKind.LINEARIZED_UNICYCLE: _kernels.LINEARIZED_UNICYCLE,
}


@dataclass(frozen=True)
class CriticalZone:
    eta: float  # radius of the relative-displacement zone, meters
    horizon: float  # integration horizon used, seconds


def critical_time_pair(p_i: np.ndarray, p_j: np.ndarray, d: float,
                       model: DynamicsModel, u_min_i: np.ndarray,
                       u_max_j: np.ndarray) -> float:
    """Safe-time lower bound for one inter-agent pair.

    Uses the margin r_ij - d, the contraction rate b_f + b_g ||u_min_i||,
    and the relative-excitation constant built from ||u_max_j - u_min_i||.
    """
    r = float(np.linalg.norm(np.asarray(p_i, dtype=float) - np.asarray(p_j, dtype=float)))
    if r <= d:
        raise AlreadyUnsafeError(f"pair already violated: r={r:.6g} <= d={d:.6g}")
    c = model.b_f + model.b_g * float(np.linalg.norm(u_min_i))
    if c <= 1e-12:
        return TIME_CAP
    p_j_norm = float(np.linalg.norm(np.asarray(p_j, dtype=float)))
    k1 = r + model.b_g * p_j_norm * float(np.linalg.norm(
        np.asarray(u_max_j, dtype=float) - np.asarray(u_min_i, dtype=float))) / c
    ratio = (r - d) / k1
    if ratio >= 1.0 or ratio <= 0.0:
        return TIME_CAP
    return min(-math.log1p(-ratio) / c, TIME_CAP)


def critical_time_obstacle(p_i: np.ndarray, obs: Obstacle, model: DynamicsModel,
                           u_max_i: np.ndarray) -> float:
    """Safe-time lower bound for one agent-obstacle pair."""
    v = float(np.linalg.norm(np.asarray(p_i, dtype=float) - obs.c_o))
    if v <= obs.r_o:
        raise AlreadyUnsafeError(f"obstacle already violated: v={v:.6g} <= r_o={obs.r_o:.6g}")
    c = model.b_f + model.b_g * float(np.linalg.norm(u_max_i))
    if c <= 1e-12:
        return TIME_CAP
    ratio = (v - obs.r_o) / (v + obs.r_o)
    return min(-math.log1p(-ratio) / c, TIME_CAP)


def _displacement(model, phi, u, horizon, dt):
    dx, dy = _kernels.zone_displacement(
        _KIND_CODE[model.kind], model.b, float(phi),
        float(u[0]), float(u[1]), float(horizon), float(dt))
    return np.array([dx, dy])


def critical_zone_pair(model_i: DynamicsModel, model_j: DynamicsModel,
                       phi_i: float, phi_j: float,
                       u_min_i: np.ndarray, u_max_j: np.ndarray,
                       horizon: float, dt: float) -> CriticalZone:
    """Relative displacement magnitude with u_i held at its best-case value
    and neighbor j held at its worst-case value over the horizon."""
    if horizon < 0 or dt <= 0:
        raise ContractViolation("require horizon >= 0 and dt > 0")
    d_i = _displacement(model_i, phi_i, u_min_i, horizon, dt)
    d_j = _displacement(model_j, phi_j, u_max_j, horizon, dt)
    return CriticalZone(eta=float(np.linalg.norm(d_i - d_j)), horizon=float(horizon))


def critical_zone_obstacle(model_i: DynamicsModel, phi_i: float,
                           u_max_i: np.ndarray, horizon: float, dt: float) -> CriticalZone:
    """Own reachable displacement magnitude toward a static obstacle."""
    if horizon < 0 or dt <= 0:
        raise ContractViolation("require horizon >= 0 and dt > 0")
    d_i = _displacement(model_i, phi_i, u_max_i, horizon, dt)
    return CriticalZone(eta=float(np.linalg.norm(d_i)), horizon=float(horizon))
