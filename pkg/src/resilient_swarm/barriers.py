"""Barrier and Lyapunov function evaluations with analytic gradients.

Conventions: barrier values h <= 0 mean safe; Lyapunov values V >= 0 with
V = 0 at the goal. Gradients are with respect to the positions that appear
in each function; Lie derivatives are formed downstream as grad . f^p and
grad . g^p.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, DegenerateWeightsError, SingularityError

COINCIDENCE_TOL = 1e-9


@dataclass(frozen=True)
class Obstacle:
    c_o: np.ndarray  # center, meters
    r_o: float  # radius, meters

    def __post_init__(self):
        c = np.asarray(self.c_o, dtype=float)
        if c.shape != (2,) or self.r_o <= 0:
            raise ContractViolation("obstacle needs a 2-d center and r_o > 0")
        object.__setattr__(self, "c_o", c)


@dataclass(frozen=True)
class SafetyParams:
    d: float  # inter-agent safety distance, meters
    R_s: float  # sensing radius, meters

    def __post_init__(self):
        if not (self.R_s > self.d > 0):
            raise ContractViolation("require R_s > d > 0")


@dataclass(frozen=True)
class BarrierEval:
    value: float
    grad_i: np.ndarray
    grad_j: np.ndarray  # zero vector for obstacle terms


def pair_barrier(p_i: np.ndarray, p_j: np.ndarray, d: float, ids=None) -> BarrierEval:
    """Inter-agent barrier h = d - ||p_i - p_j||."""
    diff = np.asarray(p_i, dtype=float) - np.asarray(p_j, dtype=float)
    r = float(np.linalg.norm(diff))
    if r <= COINCIDENCE_TOL:
        raise SingularityError(f"coincident agent positions {ids}", ids=ids)
    grad_i = -diff / r
    return BarrierEval(value=d - r, grad_i=grad_i, grad_j=-grad_i)


def obstacle_barrier(p_i: np.ndarray, obs: Obstacle) -> BarrierEval:
    """Agent-to-obstacle barrier h = r_o - ||p_i - c_o||."""
    diff = np.asarray(p_i, dtype=float) - obs.c_o
    r = float(np.linalg.norm(diff))
    if r <= COINCIDENCE_TOL:
        raise SingularityError("agent at obstacle center")
    return BarrierEval(value=obs.r_o - r, grad_i=-diff / r, grad_j=np.zeros(2))


def lse_compose(values) -> tuple[float, np.ndarray]:
    """Smooth conjunction ln(sum exp(h_n)) with softmax gradient weights.

    Max-shifted for overflow safety. The returned weights are the
    coefficients of each member gradient in the composite gradient.
    """
    vals = np.asarray(values, dtype=float)
    if vals.size == 0:
        raise ContractViolation("lse_compose requires at least one value")
    top = float(np.max(vals))
    exps = np.exp(vals - top)
    total = float(np.sum(exps))
    return top + float(np.log(total)), exps / total


def goal_clf(p_i: np.ndarray, G: np.ndarray) -> tuple[float, np.ndarray]:
    """Quadratic goal CLF V = ||p - G||^2 and its gradient."""
    diff = np.asarray(p_i, dtype=float) - np.asarray(G, dtype=float)
    return float(diff @ diff), 2.0 * diff


def centroid_clf(positions, weights, G_f) -> tuple[float, np.ndarray, list[np.ndarray]]:
    """Confidence-weighted centroid CLF.

    Returns (value, centroid, per-agent gradients). Uniform weights recover
    the plain centroid form.
    """
    P = np.asarray(positions, dtype=float)
    w = np.asarray(weights, dtype=float)
    total = float(np.sum(w))
    if total <= 1e-9:
        raise DegenerateWeightsError("all centroid weights are (near) zero")
    centroid = (w[:, None] * P).sum(axis=0) / total
    diff = centroid - np.asarray(G_f, dtype=float)
    value = float(diff @ diff)
    grads = [2.0 * (wi / total) * diff for wi in w]
    return value, centroid, grads


def formation_target(p_neighbors, offsets, weights) -> np.ndarray:
    """Weighted formation target p* = sum w_j (p_j + c_ji) / sum w_j."""
    P = np.asarray(p_neighbors, dtype=float)
    C = np.asarray(offsets, dtype=float)
    w = np.asarray(weights, dtype=float)
    if P.shape[0] == 0:
        raise ContractViolation("formation_target requires at least one neighbor")
    total = float(np.sum(w))
    if total <= 1e-9:
        raise DegenerateWeightsError("all formation weights are (near) zero")
    return (w[:, None] * (P + C)).sum(axis=0) / total


def formation_function(p_i: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Formation error h = ||p_i - p*|| with the zero-gradient convention at
    the target (the constraint row is vacuous when the error is zero)."""
    diff = np.asarray(p_i, dtype=float) - np.asarray(target, dtype=float)
    r = float(np.linalg.norm(diff))
    if r <= COINCIDENCE_TOL:
        return 0.0, np.zeros(2)
    return r, diff / r
