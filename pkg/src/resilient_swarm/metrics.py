"""Behavior metrics: safety, goal-convergence, and task (formation) scores.

All metrics map into (0, 1] via x -> exp(-x^n_c); a value of 1 means ideal
behavior. Each metric has a worst-case counterpart evaluated on critical-zone
data, and the gap to 1 of that counterpart is the alarm threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class MetricConfig:
    n_c: int = 4  # sharpness of the exp(-x^n_c) squashing
    theta_w: float = 0.3  # worst-case formation error bound, meters
    theta_envelope: tuple[float, float] | None = None  # (k1, k2) decay of theta_w
    tol_dev: float = 1e-6  # slope tolerance of the deviation flag
    tol_goal: float = 1e-4  # normalized distance below which an agent counts as arrived


@dataclass(frozen=True)
class BehaviorRecord:
    """Per-agent, per-step metric snapshot as written to metrics.csv."""

    t: float
    agent_id: int
    S_R: float
    S_R_w: float
    gamma_S: float
    lam: float
    G_R: float
    F_R_min: float
    C_i: float


def squash(x: float, n_c: int) -> float:
    return math.exp(-float(x) ** n_c)


def safety_metric(ratios, n_c: int) -> float:
    """S_R = exp(-Gamma^n_c) with Gamma the largest proximity ratio
    (d/r_ij over neighbors, r_o/v_io over obstacles). No terms means no
    hazard in range: Gamma = 0 and S_R = 1."""
    gam = max(ratios) if len(ratios) else 0.0
    return squash(gam, n_c)


def worst_safety_metric(zone_ratios, n_c: int) -> tuple[float, float]:
    """Worst-case counterpart on critical-zone data.

    Gamma_w = 1 - max(eta_ij/r_ij, eta_io/v_io); returns (S_w, gamma_S) with
    gamma_S = |S_w - 1| the admissible degradation of S_R.
    """
    reach = max(zone_ratios) if len(zone_ratios) else 0.0
    gam_w = 1.0 - reach
    s_w = squash(gam_w, n_c)
    return s_w, abs(s_w - 1.0)


def safety_alarm(S_R: float, gamma_S: float) -> bool:
    """True when the safety score has degraded beyond its admissible band."""
    return (1.0 - S_R) > gamma_S


def goal_metric(p: np.ndarray, G: np.ndarray, ref_dist_sq: float, n_c: int) -> tuple[float, float]:
    """Normalized goal error lambda = ||p - G||^2 / ref and G_R = exp(-lambda^n_c).

    ref is the squared distance at the start of the current goal segment, so
    lambda starts at 1 and decays to 0 on approach.
    """
    diff = np.asarray(p, dtype=float) - np.asarray(G, dtype=float)
    if ref_dist_sq <= 1e-18:
        lam = 0.0
    else:
        lam = float(diff @ diff) / ref_dist_sq
    return lam, squash(lam, n_c)


def deviation_flag(lam: float, lam_prev: float, dt: float, cfg: MetricConfig) -> bool:
    """An agent deviates when its goal error is not decreasing and it is not
    already at the goal. The slope is a backward difference."""
    lam_dot = (lam - lam_prev) / dt
    return lam_dot >= -cfg.tol_dev and lam > cfg.tol_goal


def task_metric(r_ij: float, c_ij: float, n_c: int) -> float:
    """F_R = exp(-Theta^n_c), Theta = |r_ij - c_ij| the spacing error."""
    return squash(abs(r_ij - c_ij), n_c)


def task_threshold(cfg: MetricConfig, t: float = 0.0, theta0: float = 0.0) -> float:
    """gamma_F = |exp(-theta_w^n_c) - 1|. With an envelope configured the
    bound tightens as k1 * exp(-k2 t) * theta0."""
    if cfg.theta_envelope is not None:
        k1, k2 = cfg.theta_envelope
        theta_w = k1 * math.exp(-k2 * t) * theta0
    else:
        theta_w = cfg.theta_w
    return abs(squash(theta_w, cfg.n_c) - 1.0)


def confidence(n_deviating: int, n_neighbors: int, n_c: int) -> float:
    """Trust weight C_i = exp(-(2 k / N)^n_c) for k flagged of N formation
    neighbors. No neighbors means nothing to distrust: C_i = 1."""
    if n_neighbors == 0:
        return 1.0
    return squash(2.0 * n_deviating / n_neighbors, n_c)
