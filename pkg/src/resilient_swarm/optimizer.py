"""Dense small-scale LP/QP solvers and pointwise best/worst-case controls.

The LP solver is a two-phase revised simplex with Bland's rule; optimal
vertices are post-processed with a min-norm tie-break so results are unique
and deterministic. The QP solver is a primal active-set method for strictly
convex problems with diagonal Hessian. Problem sizes here are tiny (tens of
variables), so dense O(n^3) linear algebra per iteration is fine.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .barriers import lse_compose
from .dynamics import AgentState, DynamicsModel, InputPolytope, position_input_matrix
from .errors import ContractViolation

FEAS_TOL = 1e-9
REDUCED_COST_TOL = 1e-10


class KktTracker:
    """Optional global accumulator of KKT residuals across solves; the
    acceptance harness enables it around whole runs."""

    def __init__(self):
        self.enabled = False
        self.max_residual = 0.0
        self.solves = 0

    def start(self):
        self.enabled = True
        self.max_residual = 0.0
        self.solves = 0

    def stop(self):
        self.enabled = False

    def record(self, sol):
        if self.enabled and sol.status is Status.OPTIMAL:
            self.solves += 1
            self.max_residual = max(self.max_residual, sol.primal_residual,
                                    sol.stationarity_residual, sol.comp_slackness)


KKT_TRACKER = KktTracker()


class Status(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LpProblem:
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray


@dataclass(frozen=True)
class QpProblem:
    """min z' diag(H) z + F z  s.t.  G z <= g, with named decision entries."""

    H: np.ndarray  # diagonal entries, all > 0
    F: np.ndarray
    G: np.ndarray
    g: np.ndarray
    var_map: tuple[str, ...] = ()


@dataclass(frozen=True)
class Solution:
    z: np.ndarray
    objective: float
    status: Status
    active_set: tuple[int, ...] = ()
    multipliers: np.ndarray | None = None
    # KKT residuals, populated for Optimal solutions
    primal_residual: float = 0.0
    stationarity_residual: float = 0.0
    comp_slackness: float = 0.0
    violated_row: int | None = None  # certificate for Infeasible


def _nnls(B: np.ndarray, y: np.ndarray, max_iter: int = 200) -> np.ndarray:
    """Lawson-Hanson nonnegative least squares: min ||B x - y||, x >= 0."""
    m = B.shape[1]
    x = np.zeros(m)
    passive = np.zeros(m, dtype=bool)
    for _ in range(max_iter):
        w = B.T @ (y - B @ x)
        w[passive] = -np.inf
        j = int(np.argmax(w))
        if w[j] <= 1e-12:
            return x
        passive[j] = True
        while True:
            s = np.zeros(m)
            s[passive] = np.linalg.lstsq(B[:, passive], y, rcond=None)[0]
            if np.min(s[passive]) > 0:
                x = s
                break
            mask = passive & (s <= 0)
            ratios = x[mask] / (x[mask] - s[mask])
            alpha = float(np.min(ratios))
            x = x + alpha * (s - x)
            passive &= x > 1e-12
            x[~passive] = 0.0
    return x


# ---------------------------------------------------------------------------
# simplex


def _revised_simplex(c, M, rhs, basis, max_iter=2000):
    """min c'v s.t. M v = rhs, v >= 0, from a feasible basis. Bland's rule.

    Returns (status, basis, xB, y) with y the equality duals.
    """
    q, n = M.shape
    for _ in range(max_iter):
        B = M[:, basis]
        xB = np.linalg.solve(B, rhs)
        y = np.linalg.solve(B.T, c[basis])
        reduced = c - M.T @ y
        entering = -1
        in_basis = np.zeros(n, dtype=bool)
        in_basis[basis] = True
        for j in range(n):
            if not in_basis[j] and reduced[j] < -REDUCED_COST_TOL:
                entering = j
                break
        if entering < 0:
            return "optimal", basis, xB, y
        d = np.linalg.solve(B, M[:, entering])
        best_ratio = np.inf
        leave_pos = -1
        leave_var = -1
        for pos in range(q):
            if d[pos] > 1e-11:
                ratio = xB[pos] / d[pos]
                if ratio < best_ratio - 1e-12 or (
                    abs(ratio - best_ratio) <= 1e-12 and basis[pos] < leave_var
                ):
                    best_ratio = ratio
                    leave_pos = pos
                    leave_var = basis[pos]
        if leave_pos < 0:
            return "unbounded", basis, xB, y
        basis[leave_pos] = entering
    raise RuntimeError("simplex iteration limit reached")


def _simplex_solve(c, A, b):
    """min c'x s.t. A x <= b, x free. Returns (status, x, lam)."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    c = np.asarray(c, dtype=float).ravel()
    q, m = A.shape
    sign = np.where(b < 0, -1.0, 1.0)
    # columns: x+ (m), x- (m), slack (q), artificial (q)
    M = np.hstack([
        sign[:, None] * A,
        -sign[:, None] * A,
        np.diag(sign),
        np.eye(q),
    ])
    rhs = sign * b
    n_real = 2 * m + q

    # phase 1: drive artificials to zero
    c1 = np.zeros(M.shape[1])
    c1[n_real:] = 1.0
    basis = list(range(n_real, n_real + q))
    status, basis, xB, _ = _revised_simplex(c1, M, rhs, basis)
    if status != "optimal" or float(c1[basis] @ xB) > 1e-8:
        return Status.INFEASIBLE, None, None
    # pivot remaining zero-level artificials out where possible
    for pos in range(q):
        if basis[pos] >= n_real:
            B = M[:, basis]
            row = np.linalg.solve(B, M[:, :n_real])[pos]
            repl = -1
            for j in range(n_real):
                if j not in basis and abs(row[j]) > 1e-9:
                    repl = j
                    break
            if repl >= 0:
                basis[pos] = repl

    # phase 2 on real columns only (artificials kept at cost +inf effect)
    c2 = np.zeros(M.shape[1])
    c2[:m] = c
    c2[m:2 * m] = -c
    c2[n_real:] = 1e18  # any remaining degenerate artificial stays at zero
    status, basis, xB, y = _revised_simplex(c2, M, rhs, basis)
    if status == "unbounded":
        return Status.UNBOUNDED, None, None
    v = np.zeros(M.shape[1])
    v[basis] = xB
    x = v[:m] - v[m:2 * m]
    lam = -sign * y  # duals of the original inequality rows
    return Status.OPTIMAL, x, lam


def _box_bounds(A, b):
    """Recognize a pure box polytope; returns (lo, hi) or None."""
    q, m = A.shape
    lo = np.full(m, -np.inf)
    hi = np.full(m, np.inf)
    rows = [[] for _ in range(m)]
    for r in range(q):
        nz = np.nonzero(A[r])[0]
        if len(nz) != 1:
            return None
        k = nz[0]
        a = A[r, k]
        if a > 0:
            hi[k] = min(hi[k], b[r] / a)
        else:
            lo[k] = max(lo[k], b[r] / a)
        rows[k].append(r)
    if np.any(~np.isfinite(lo)) or np.any(~np.isfinite(hi)) or np.any(lo > hi + FEAS_TOL):
        return None
    return lo, hi


def _solve_box(c, A, b, lo, hi):
    m = len(c)
    x = np.empty(m)
    for k in range(m):
        if c[k] > 0:
            x[k] = lo[k]
        elif c[k] < 0:
            x[k] = hi[k]
        else:
            x[k] = min(max(0.0, lo[k]), hi[k])  # min-norm on the optimal face
    lam = np.zeros(A.shape[0])
    slack = b - A @ x
    for r in range(A.shape[0]):
        if slack[r] <= FEAS_TOL:
            k = np.nonzero(A[r])[0][0]
            cand = -c[k] / A[r, k]
            if cand > 0:
                lam[r] = cand
                # stationarity handled by this row alone; zero out duplicates
                c = c.copy()
                c[k] = 0.0
    return x, lam


def solve_lp(prob: LpProblem) -> Solution:
    """min c'x over {A x <= b}; ties broken by minimum Euclidean norm."""
    c = np.asarray(prob.c, dtype=float).ravel()
    A = np.atleast_2d(np.asarray(prob.A, dtype=float))
    b = np.asarray(prob.b, dtype=float).ravel()

    box = _box_bounds(A, b)
    if box is not None:
        x, lam = _solve_box(c.copy(), A, b, *box)
    else:
        status, x, lam = _simplex_solve(c, A, b)
        if status != Status.OPTIMAL:
            return Solution(z=np.zeros(len(c)), objective=np.nan, status=status)
        # min-norm point on the optimal face
        v_star = float(c @ x)
        G = np.vstack([A, c[None, :]])
        g = np.concatenate([b, [v_star + 1e-10]])
        tie = solve_qp(QpProblem(H=np.ones(len(c)), F=np.zeros(len(c)), G=G, g=g), z0=x)
        if tie.status is Status.OPTIMAL:
            x = tie.z
        lam = np.where(lam > 0, lam, 0.0)

    obj = float(c @ x)
    slack = b - A @ x
    active = tuple(int(r) for r in np.nonzero(slack <= 1e-7)[0])
    sol = Solution(
        z=x,
        objective=obj,
        status=Status.OPTIMAL,
        active_set=active,
        multipliers=lam,
        primal_residual=float(max(0.0, -slack.min())) if len(slack) else 0.0,
        stationarity_residual=float(np.max(np.abs(c + A.T @ lam))),
        comp_slackness=float(abs(lam @ (A @ x - b))),
    )
    KKT_TRACKER.record(sol)
    return sol


# ---------------------------------------------------------------------------
# QP


def _phase1_start(G, g):
    """Feasible point for {G z <= g} via LP min t s.t. G z - t <= g, t >= -1."""
    q, n = G.shape
    c = np.zeros(n + 1)
    c[-1] = 1.0
    A1 = np.hstack([G, -np.ones((q, 1))])
    A1 = np.vstack([A1, np.zeros(n + 1)])
    A1[-1, -1] = -1.0
    b1 = np.concatenate([g, [1.0]])
    status, zt, _ = _simplex_solve(c, A1, b1)
    if status != Status.OPTIMAL or zt[-1] > 1e-8:
        return None
    return zt[:n]


def solve_qp(prob: QpProblem, z0: np.ndarray | None = None, max_iter: int = 1000) -> Solution:
    """Global minimizer of a strictly convex QP by primal active-set iteration."""
    H = np.asarray(prob.H, dtype=float).ravel()
    if np.any(H <= 0):
        raise ContractViolation("QP requires strictly positive diagonal H")
    F = np.asarray(prob.F, dtype=float).ravel()
    G = np.atleast_2d(np.asarray(prob.G, dtype=float))
    g = np.asarray(prob.g, dtype=float).ravel()
    n = len(H)
    q = G.shape[0] if G.size else 0
    if q == 0:
        z = -F / (2.0 * H)
        return Solution(z=z, objective=float(z @ (H * z) + F @ z), status=Status.OPTIMAL,
                        multipliers=np.zeros(0))

    z = None
    if z0 is not None:
        z0 = np.asarray(z0, dtype=float).ravel()
        if np.all(G @ z0 <= g + 1e-8):
            z = z0.copy()
    if z is None:
        z = _phase1_start(G, g)
        if z is None:
            viol = G @ np.zeros(n) - g if z0 is None else G @ z0 - g
            return Solution(z=np.zeros(n), objective=np.nan, status=Status.INFEASIBLE,
                            violated_row=int(np.argmax(viol)))

    W: list[int] = []
    twoH = 2.0 * H
    lam_W = np.zeros(0)
    for _ in range(max_iter):
        grad = twoH * z + F
        k = len(W)
        if k == 0:
            p = -grad / twoH
            lam_W = np.zeros(0)
        else:
            # null-space step: p = Z y with Z spanning null(Gw), reduced
            # Hessian Z' diag(2H) Z is positive definite, so this stays well
            # posed even when the working set picks up dependent rows
            Gw = G[W]
            _, s, Vt = np.linalg.svd(Gw)
            rank = int(np.sum(s > 1e-10 * s[0]))
            Z = Vt[rank:].T
            if Z.shape[1] == 0:
                p = np.zeros(n)
            else:
                red = Z.T @ (twoH[:, None] * Z)
                p = Z @ np.linalg.solve(red, -(Z.T @ grad))
            lam_W = np.linalg.lstsq(Gw.T, -(grad + twoH * p), rcond=None)[0]
        if np.max(np.abs(p)) < 1e-9 * (1.0 + np.max(np.abs(z))):
            if k == 0 or np.min(lam_W) >= -1e-9:
                break
            drop = W[int(np.argmin(lam_W))]
            W.remove(drop)
            continue
        alpha = 1.0
        blocking = -1
        Gp = G @ p
        resid = g - G @ z
        for r in range(q):
            if r in W or Gp[r] <= 1e-12:
                continue
            ratio = max(resid[r], 0.0) / Gp[r]
            if ratio < alpha - 1e-14:
                alpha = ratio
                blocking = r
        z = z + alpha * p
        if blocking >= 0:
            W.append(blocking)
    else:
        raise RuntimeError("active-set iteration limit reached")

    slack = g - G @ z
    active = tuple(int(r) for r in np.nonzero(slack <= 1e-7)[0])
    # final multipliers by nonnegative least squares on the active rows: the
    # iteration's min-norm multipliers can blow up on near-dependent sets
    lam = np.zeros(q)
    if active:
        lam[list(active)] = _nnls(G[list(active)].T, -(twoH * z + F))
    # complementarity polish: rows with a real multiplier must hold exactly,
    # a leftover O(1e-11) slack times a large dual fails the KKT budget
    tight = [r for r in active if lam[r] > 1e-8]
    if tight:
        Gt = G[tight]
        z = z - np.linalg.lstsq(Gt, Gt @ z - g[tight], rcond=None)[0]
        slack = g - G @ z
        active = tuple(int(r) for r in np.nonzero(slack <= 1e-7)[0])
    stat = twoH * z + F + G.T @ lam
    sol = Solution(
        z=z,
        objective=float(z @ (H * z) + F @ z),
        status=Status.OPTIMAL,
        active_set=active,
        multipliers=lam,
        primal_residual=float(max(0.0, -slack.min())),
        stationarity_residual=float(np.max(np.abs(stat))),
        comp_slackness=float(abs(lam @ (G @ z - g))),
    )
    KKT_TRACKER.record(sol)
    return sol


# ---------------------------------------------------------------------------
# pointwise best/worst controls (safety-shield LPs)


def _min_norm_control(polytope: InputPolytope) -> np.ndarray:
    m = polytope.A.shape[1]
    sol = solve_lp(LpProblem(c=np.zeros(m), A=polytope.A, b=polytope.b))
    return sol.z


def _pointwise(terms, state, model, polytope, maximize):
    if not terms:
        return _min_norm_control(polytope)
    values = [t.value for t in terms]
    _, weights = lse_compose(values)
    grad = np.zeros(2)
    for w, t in zip(weights, terms):
        grad += w * t.grad_i
    g_p = position_input_matrix(model, state)
    m_vec = g_p.T @ grad
    if np.linalg.norm(m_vec) < 1e-12:
        return _min_norm_control(polytope)
    c = -m_vec if maximize else m_vec
    sol = solve_lp(LpProblem(c=c, A=polytope.A, b=polytope.b))
    if sol.status is not Status.OPTIMAL:
        raise ContractViolation(f"pointwise control LP {sol.status.value}")
    return sol.z


def best_case_control(terms, state: AgentState, model: DynamicsModel,
                      polytope: InputPolytope) -> np.ndarray:
    """Most safety-preserving feasible action: minimizes the composite
    barrier's drift over the input polytope. `terms` are the BarrierEvals of
    every inter-agent and obstacle constraint of this agent."""
    return _pointwise(terms, state, model, polytope, maximize=False)


def worst_case_control(terms, state: AgentState, model: DynamicsModel,
                       polytope: InputPolytope) -> np.ndarray:
    """Most dangerous feasible action; `terms` must be inter-agent only."""
    return _pointwise(terms, state, model, polytope, maximize=True)
