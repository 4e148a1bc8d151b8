"""Controller synthesis: nominal and resilient QP assembly, adversary models.

Decision vectors are [u; slacks]. Slack slots by name: d1 goal/centroid decay
rate, d2 formation decay rate, d3 shared safety relaxation, d4 resilient
formation decay rate, n<j> per-neighbor safety relaxation. Decay-rate slacks
carry a linear reward -q so that progress toward the objective is preferred
over standing still; safety slacks are only penalized quadratically.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .barriers import BarrierEval, pair_barrier
from .dynamics import AgentState, DynamicsModel, InputPolytope
from .optimizer import QpProblem, Solution, Status, solve_qp, worst_case_control


@dataclass(frozen=True)
class QpWeights:
    w_u: float = 1.0  # control effort
    w_slack: float = 10.0  # quadratic slack penalty
    q: float = 1.0  # linear reward on decay-rate slacks
    slack_box: float = 1e3  # hard bound |slack| <= slack_box


class ControllerMode(enum.Enum):
    NOMINAL = "nominal"
    RESILIENT = "resilient"
    ADVERSARY_CHASE = "adversary_chase"
    ADVERSARY_MISLEAD = "adversary_mislead"


class _Builder:
    """Accumulates rows/columns of one controller QP."""

    def __init__(self, u_dim: int, weights: QpWeights):
        self.u_dim = u_dim
        self.w = weights
        self.names = [f"u{k}" for k in range(u_dim)]
        self.h_diag = [weights.w_u] * u_dim
        self.f_lin = [0.0] * u_dim
        self.rows: list[tuple[np.ndarray, float]] = []

    def add_slack(self, name: str, reward: bool) -> int:
        idx = len(self.names)
        self.names.append(name)
        self.h_diag.append(self.w.w_slack)
        self.f_lin.append(-self.w.q if reward else 0.0)
        return idx

    def add_row(self, u_coeff, slack_idx: int | None, slack_coeff: float, rhs: float):
        self.rows.append((np.asarray(u_coeff, dtype=float), slack_idx, slack_coeff, rhs))

    def add_polytope(self, polytope: InputPolytope):
        for r in range(polytope.A.shape[0]):
            self.add_row(polytope.A[r], None, 0.0, float(polytope.b[r]))

    def add_rate_row(self, value: float, grad, slack: str):
        # grad.u + slack*value <= 0 with slack rewarded (a decay rate)
        idx = self.add_slack(slack, reward=True)
        self.add_row(grad, idx, float(value), 0.0)
        return idx

    def build(self) -> QpProblem:
        n = len(self.names)
        box = self.w.slack_box
        q = len(self.rows) + 2 * (n - self.u_dim)
        G = np.zeros((q, n))
        g = np.zeros(q)
        for r, (u_coeff, idx, coeff, rhs) in enumerate(self.rows):
            G[r, : self.u_dim] = u_coeff
            if idx is not None:
                G[r, idx] = coeff
            g[r] = rhs
        r = len(self.rows)
        for k in range(self.u_dim, n):
            G[r, k] = 1.0
            g[r] = box
            G[r + 1, k] = -1.0
            g[r + 1] = box
            r += 2
        return QpProblem(H=np.array(self.h_diag), F=np.array(self.f_lin),
                         G=G, g=g, var_map=tuple(self.names))


def assemble_nominal_qp(u_dim: int, polytope: InputPolytope, weights: QpWeights,
                        clf: tuple[float, np.ndarray] | None,
                        formation: tuple[float, np.ndarray] | None,
                        safety_terms: list[BarrierEval]) -> QpProblem:
    """Nominal controller QP.

    clf is (V, grad) of the goal (or, for formation members, the uniform
    centroid) Lyapunov function; formation is (h_F, grad) of the spacing
    error; safety_terms are every inter-agent and obstacle barrier in range,
    relaxed by one shared slack.
    """
    b = _Builder(u_dim, weights)
    b.add_polytope(polytope)
    if clf is not None:
        b.add_rate_row(clf[0], clf[1], "d1")
    if formation is not None:
        b.add_rate_row(formation[0], formation[1], "d2")
    if safety_terms:
        idx = b.add_slack("d3", reward=False)
        for term in safety_terms:
            b.add_row(term.grad_i, idx, term.value, 0.0)
    return b.build()


def assemble_resilient_qp(u_dim: int, polytope: InputPolytope, weights: QpWeights,
                          clf: tuple[float, np.ndarray] | None,
                          centroid: tuple[float, np.ndarray] | None,
                          obstacle_terms: list[BarrierEval],
                          formation: tuple[float, np.ndarray] | None,
                          neighbor_rows: list[tuple[int, float, np.ndarray, float]]) -> QpProblem:
    """Resilient controller QP.

    neighbor_rows entries are (j, h_bar, grad_i, pi): the zone-tightened
    pairwise barrier h_bar = h_ij + eta_ij/n, its gradient in this agent's
    position, and the neighbor's known or worst-case drift contribution
    pi = grad_j . u_j. Each pair gets its own relaxation slack.
    """
    b = _Builder(u_dim, weights)
    b.add_polytope(polytope)
    if clf is not None:
        b.add_rate_row(clf[0], clf[1], "d1")
    if centroid is not None:
        b.add_rate_row(centroid[0], centroid[1], "d2")
    if obstacle_terms:
        idx = b.add_slack("d3", reward=False)
        for term in obstacle_terms:
            b.add_row(term.grad_i, idx, term.value, 0.0)
    if formation is not None:
        b.add_rate_row(formation[0], formation[1], "d4")
    for j, h_bar, grad_i, pi in neighbor_rows:
        idx = b.add_slack(f"n{j}", reward=False)
        # grad_i.u + slack*h_bar <= -pi
        b.add_row(grad_i, idx, float(h_bar), -float(pi))
    return b.build()


def structural_start(prob: QpProblem, u0: np.ndarray) -> np.ndarray | None:
    """Cheap feasible point: keep u = u0 (assumed inside the polytope) and
    pick each slack inside its induced interval, closest to zero. Returns
    None when some interval is empty; the QP solver then falls back to its
    LP phase-1."""
    n_u = len([s for s in prob.var_map if s.startswith("u")])
    n = len(prob.var_map)
    z = np.zeros(n)
    z[:n_u] = u0
    for k in range(n_u, n):
        lo, hi = -np.inf, np.inf
        for r in range(prob.G.shape[0]):
            a = prob.G[r, k]
            if a == 0.0:
                continue
            rest = float(prob.G[r, :n_u] @ u0)
            bound = (prob.g[r] - rest) / a
            if a > 0:
                hi = min(hi, bound)
            else:
                lo = max(lo, bound)
        if lo > hi + 1e-9:
            return None
        z[k] = min(max(0.0, lo), hi)
    if np.all(prob.G @ z <= prob.g + 1e-8):
        return z
    return None


def extract_control(prob: QpProblem, sol: Solution) -> np.ndarray:
    n_u = len([s for s in prob.var_map if s.startswith("u")])
    return sol.z[:n_u]


def solve_controller(prob: QpProblem, u0: np.ndarray | None = None) -> Solution:
    z0 = structural_start(prob, u0) if u0 is not None else None
    return solve_qp(prob, z0=z0)


def chase_control(p_i: np.ndarray, p_target: np.ndarray, d: float,
                  state: AgentState, model: DynamicsModel,
                  polytope: InputPolytope) -> np.ndarray:
    """Adversary that maximally degrades the barrier against one target."""
    term = pair_barrier(p_i, p_target, d)
    return worst_case_control([term], state, model, polytope)


def mislead_control(u_nominal: np.ndarray, bias: np.ndarray,
                    polytope: InputPolytope) -> np.ndarray:
    """Adversary that follows its nominal formation command plus a constant
    bias, projected back onto the admissible set."""
    v = np.asarray(u_nominal, dtype=float) + np.asarray(bias, dtype=float)
    m = len(v)
    prob = QpProblem(H=np.ones(m), F=-2.0 * v, G=polytope.A, g=polytope.b)
    z0 = u_nominal if polytope.contains(u_nominal) else None
    sol = solve_qp(prob, z0=z0)
    if sol.status is not Status.OPTIMAL:
        return np.asarray(u_nominal, dtype=float)
    return sol.z
