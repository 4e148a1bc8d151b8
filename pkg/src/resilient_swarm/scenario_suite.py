"""Bundled case-study scenarios and the acceptance harness.

Case 1: three unicycle agents with waypoint schedules and two obstacles; in
the chase variants agent 1 turns adversarial and pursues agent 2 after its
own goals are done. Case 2: six single-integrator agents holding a hexagon
formation while driving their centroid to a goal; in the adversarial
variants agents 3 and 6 inject a constant control bias.

The harness replays the scenario matrix plus randomized property suites and
reports one pass/fail line per criterion.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass

import numpy as np

from . import engine, output
from .barriers import (Obstacle, centroid_clf, formation_function, goal_clf,
                       lse_compose, obstacle_barrier, pair_barrier)
from .criticality import critical_time_pair
from .dynamics import AgentState, DynamicsModel, InputPolytope, ModelKind, box_polytope
from .optimizer import (KKT_TRACKER, LpProblem, QpProblem, Status,
                        best_case_control, solve_lp, solve_qp, worst_case_control)
from .scenario import parse_scenario

CASE1_VARIANTS = ("nominal", "chase_nodefense", "chase_detectonly", "chase_resilient")
CASE2_VARIANTS = ("nominal", "two_adversaries", "two_adversaries_resilient")


def generate_case1(variant: str) -> dict:
    if variant not in CASE1_VARIANTS:
        raise ValueError(f"unknown case-1 variant {variant!r}")
    data = {
        "version": 1,
        "name": f"case1_{variant}",
        "dt": 0.05,
        "t_end": 110.0,
        "safety": {"d": 0.1, "R_s": 1.0},
        "metrics": {"n_c": 4, "theta_w": 0.3, "tol_dev": 1e-6, "tol_goal": 0.1},
        "detection": {"n_horizon": 3.0, "max_horizon": 50.0},
        "weights": {"w_u": 1.0, "w_slack": 10.0, "q": 20.0, "slack_box": 1e3},
        "obstacles": [
            {"center": [-1.15, 0.3], "radius": 0.4},
            {"center": [0.3, -1.5], "radius": 0.4},
        ],
        "agents": [
            {
                "id": 1, "model": "linearized_unicycle", "b": 0.1,
                "p0": [-2.0, 0.8], "phi0": 0.0, "u_limit": 0.075,
                "goals": [
                    {"point": [-0.5, 1.8], "radius": 0.75, "window": [0.0, 25.0]},
                    {"point": [-2.0, 1.8], "radius": 0.25, "window": [30.0, 60.0]},
                ],
            },
            {
                "id": 2, "model": "linearized_unicycle", "b": 0.1,
                "p0": [2.0, 1.5], "phi0": 0.0, "u_limit": 0.3,
                "goals": [
                    {"point": [0.8, -0.8], "radius": 0.25, "window": [0.0, 30.0]},
                    {"point": [1.5, 0.2], "radius": 0.25, "window": [35.0, 70.0]},
                ],
            },
            {
                "id": 3, "model": "linearized_unicycle", "b": 0.1,
                "p0": [-0.5, -2.0], "phi0": 0.0, "u_limit": 0.3,
                "goals": [
                    {"point": [2.0, -2.0], "radius": 0.25, "window": [0.0, 40.0]},
                ],
            },
        ],
    }
    if variant != "nominal":
        data["agents"][0]["adversary"] = {"kind": "chase", "target": 2,
                                          "t_start": 55.0}
    return data


def generate_case2(variant: str) -> dict:
    if variant not in CASE2_VARIANTS:
        raise ValueError(f"unknown case-2 variant {variant!r}")
    slots = {}
    agents = []
    for k in range(6):
        ang = math.pi / 3.0 * k
        slot = [round(1.5 * math.cos(ang), 12), round(1.5 * math.sin(ang), 12)]
        aid = k + 1
        slots[str(aid)] = slot
        agents.append({
            "id": aid, "model": "single_integrator",
            "p0": [slot[0] + 3.75, slot[1]], "u_limit": 0.3,
            "formation": True,
        })
    data = {
        "version": 1,
        "name": f"case2_{variant}",
        "dt": 0.05,
        "t_end": 60.0,
        "safety": {"d": 0.1, "R_s": 5.0},
        "metrics": {"n_c": 4, "theta_w": 0.15, "tol_dev": 1e-6, "tol_goal": 0.02},
        "detection": {"n_horizon": 3.0, "max_horizon": 50.0, "settle_time": 2.0},
        "weights": {"w_u": 1.0, "w_slack": 10.0, "q": 20.0, "slack_box": 1e3},
        "obstacles": [],
        "agents": agents,
        "formation": {"G_f": [-3.0, 0.175], "radius": 0.3, "slots": slots},
    }
    if variant != "nominal":
        # biases point radially out of the hexagon so every slot distance of
        # the misled agent is distorted, not just the ones along the bias
        data["agents"][2]["adversary"] = {"kind": "mislead", "bias": [-0.145, 0.251],
                                          "t_start": 10.0}
        data["agents"][5]["adversary"] = {"kind": "mislead", "bias": [0.145, -0.251],
                                          "t_start": 10.0}
    return data


def bundled_files() -> dict:
    """Scenario files shipped under scenarios/."""
    return {
        "case1_nominal.json": generate_case1("nominal"),
        "case1_chase.json": generate_case1("chase_nodefense"),
        "case2_nominal.json": generate_case2("nominal"),
        "case2_two_adversaries.json": generate_case2("two_adversaries"),
    }


def write_bundled(directory):
    import json
    import os
    os.makedirs(directory, exist_ok=True)
    for name, data in sorted(bundled_files().items()):
        with open(os.path.join(directory, name), "w") as fh:
            json.dump(data, fh, indent=2, sort_keys=True)
            fh.write("\n")


# ---------------------------------------------------------------------------
# acceptance harness


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"criterion {self.number:2d} [{tag}] {self.name}: {self.detail}"


def _pair_violation_time(log):
    for e in log.events:
        if e["type"] == "safety_violation" and e.get("other") is not None:
            return e["t"]
    return None


def _positions_at_end(log):
    last_t = log.trajectory[-1][0]
    return {row[1]: np.array([row[2], row[3]])
            for row in log.trajectory if row[0] == last_t}


def _min_pair_gap(log, i, j):
    pi = [(r[0], r[2], r[3]) for r in log.trajectory if r[1] == i]
    pj = {r[0]: (r[2], r[3]) for r in log.trajectory if r[1] == j}
    gaps = [math.hypot(x - pj[t][0], y - pj[t][1]) for t, x, y in pi]
    return min(gaps)


class AcceptanceHarness:
    def __init__(self):
        self._cache = {}
        self._runtime = {}

    def _run(self, case, variant, resilient, detect):
        key = (case, variant, resilient, detect)
        if key not in self._cache:
            gen = generate_case1 if case == 1 else generate_case2
            sc = parse_scenario(gen(variant))
            t0 = time.perf_counter()
            log = engine.run(sc, resilient=resilient, detect=detect)
            self._runtime[key] = time.perf_counter() - t0
            log2 = engine.run(sc, resilient=resilient, detect=detect)
            csv1 = output.trajectories_text(log.trajectory)
            csv2 = output.trajectories_text(log2.trajectory)
            self._cache[key] = (log, sc, csv1 == csv2)
        return self._cache[key]

    def criterion_1(self):
        log, sc, _ = self._run(1, "nominal", False, True)
        rt = self._runtime[(1, "nominal", False, True)]
        viol = [e for e in log.events if e["type"] == "safety_violation"]
        arrivals = {(e["agent"], e["goal"]) for e in log.events
                    if e["type"] == "goal_arrival"}
        expected = {(a.id, k) for a in sc.agents for k in range(len(a.goals))}
        in_window = expected <= arrivals
        s_min = min(r.S_R for r in log.metrics)
        ok = (not viol) and in_window and s_min > math.exp(-1) and rt < 10.0
        detail = (f"violations={len(viol)} arrivals={len(arrivals)}/{len(expected)} "
                  f"min_S_R={s_min:.4f} runtime={rt:.2f}s")
        return CriterionResult(1, "nominal case 1 safe and on schedule", ok, detail)

    def criterion_2(self):
        log, sc, _ = self._run(1, "chase_detectonly", False, True)
        det = log.first_event("detection")
        t_a = _pair_violation_time(log)
        if det is None or t_a is None:
            return CriterionResult(2, "detection precedes violation", False,
                                   f"detection={det} violation_t={t_a}")
        t_d = det["t"]
        margin_req = (sc.n_horizon - 1.0) * det["T_s"]
        ok = (det["suspect"] == 1 and t_d < t_a
              and (t_a - t_d) >= margin_req - sc.dt / 2)
        detail = (f"suspect={det['suspect']} t_d={t_d:.2f} t_a={t_a:.2f} "
                  f"margin={t_a - t_d:.3f} required={margin_req:.3f}")
        return CriterionResult(2, "detection precedes violation", ok, detail)

    def criterion_3(self):
        log, sc, _ = self._run(1, "chase_resilient", True, True)
        intact_ok = not log.intact_violation({1})
        gap = _min_pair_gap(log, 1, 2) - sc.safety.d
        arrivals = {(e["agent"], e["goal"]) for e in log.events
                    if e["type"] == "goal_arrival"}
        goals_ok = all((aid, k) in arrivals
                       for aid in (2, 3)
                       for k in range(len(sc.agent(aid).goals)))
        ok = intact_ok and gap > 0 and goals_ok
        detail = (f"intact_violations={not intact_ok} min_gap={gap:.4f} "
                  f"intact_arrivals={goals_ok}")
        return CriterionResult(3, "resilient case 1 keeps intact agents safe", ok, detail)

    def criterion_4(self):
        log_a, sc, _ = self._run(2, "two_adversaries", False, True)
        log_b, _, _ = self._run(2, "two_adversaries_resilient", True, True)
        members = [a.id for a in sc.agents if a.formation]
        radius = sc.formation_radius

        pos_a = _positions_at_end(log_a)
        p_bar = np.mean([pos_a[i] for i in members], axis=0)
        p0_bar = np.mean([a.p0 for a in sc.agents], axis=0)
        lam_f = float(np.sum((p_bar - sc.formation_goal) ** 2)
                      / np.sum((p0_bar - sc.formation_goal) ** 2))
        missed = lam_f > radius ** 2 / float(np.sum((p0_bar - sc.formation_goal) ** 2))

        pos_b = _positions_at_end(log_b)
        last_t = log_b.metrics[-1].t
        C_end = {r.agent_id: r.C_i for r in log_b.metrics if r.t == last_t}
        w = np.array([0.0 if i in log_b.flagged else C_end[i] for i in members])
        P = np.array([pos_b[i] for i in members])
        cent_w = (w[:, None] * P).sum(axis=0) / w.sum()
        reached = float(np.linalg.norm(cent_w - sc.formation_goal)) < radius
        verdict_ok = log_b.flagged == {3, 6}
        conf_ok = C_end[3] < math.exp(-1) and C_end[6] < math.exp(-1)

        ok = missed and reached and verdict_ok and conf_ok
        detail = (f"lam_f_end={lam_f:.4f} (missed={missed}) "
                  f"weighted_cent_dist={np.linalg.norm(cent_w - sc.formation_goal):.3f} "
                  f"verdicts={sorted(log_b.flagged)} C3={C_end[3]:.3g} C6={C_end[6]:.3g}")
        return CriterionResult(4, "formation resilience", ok, detail)

    def criterion_5(self):
        rng = np.random.default_rng(7)
        d = 0.1
        failures = 0
        for _ in range(200):
            ang = rng.uniform(0, 2 * math.pi)
            p_j = rng.uniform(1.0, 3.0) * np.array([math.cos(ang), math.sin(ang)])
            r = rng.uniform(0.15, 2.0)
            ang2 = rng.uniform(0, 2 * math.pi)
            p_i = p_j + r * np.array([math.cos(ang2), math.sin(ang2)])
            model = DynamicsModel(kind=ModelKind.SINGLE_INTEGRATOR,
                                  b_f=0.0, b_g=1.0)
            pol_i = box_polytope(rng.uniform(0.05, 0.5))
            pol_j = box_polytope(rng.uniform(0.05, 0.5))
            term_i = pair_barrier(p_i, p_j, d)
            term_j = pair_barrier(p_j, p_i, d)
            st_i = AgentState(id=0, p=p_i, phi=0.0)
            st_j = AgentState(id=1, p=p_j, phi=0.0)
            u_min = best_case_control([term_i], st_i, model, pol_i)
            u_max = worst_case_control([term_j], st_j, model, pol_j)
            T = critical_time_pair(p_i, p_j, d, model, u_min, u_max)
            T = min(T, 1e3)
            # closed-form minimum distance under held controls
            dp = p_i - p_j
            du = u_min - u_max
            nn = float(du @ du)
            t_star = 0.0 if nn < 1e-16 else min(max(-float(dp @ du) / nn, 0.0), T)
            r_min = float(np.linalg.norm(dp + t_star * du))
            if r_min <= d:
                failures += 1
        return CriterionResult(5, "critical-time soundness (200 pairs)",
                               failures == 0, f"failures={failures}")

    def criterion_6(self):
        rng = np.random.default_rng(11)
        bad = 0
        checked = 0
        for run_idx in range(50):
            n = int(rng.integers(2, 4))
            agents = []
            for k in range(n):
                p0 = rng.uniform(-1.5, 1.5, size=2)
                while any(np.linalg.norm(p0 - np.asarray(a["p0"])) < 0.3
                          for a in agents):
                    p0 = rng.uniform(-1.5, 1.5, size=2)
                agents.append({
                    "id": k + 1, "model": "single_integrator",
                    "p0": [float(p0[0]), float(p0[1])],
                    "u_limit": float(rng.uniform(0.1, 0.4)),
                    "goals": [{"point": [float(v) for v in rng.uniform(-1.5, 1.5, 2)],
                               "radius": 0.2, "window": [0.0, 2.0]}],
                })
            data = {
                "version": 1, "name": f"prop6_{run_idx}", "dt": 0.05, "t_end": 1.5,
                "safety": {"d": 0.1, "R_s": 2.0},
                "metrics": {"tol_goal": 0.02},
                "agents": agents,
            }
            log = engine.run(parse_scenario(data), detect=False)
            pos = {}
            for t, aid, x, y, *_ in log.trajectory:
                pos.setdefault(t, {})[aid] = np.array([x, y])
            for rec in log.metrics:
                if (1.0 - rec.S_R) <= rec.gamma_S:
                    checked += 1
                    p = pos[rec.t]
                    for j, pj in p.items():
                        if j != rec.agent_id:
                            if np.linalg.norm(p[rec.agent_id] - pj) <= 0.1:
                                bad += 1
        return CriterionResult(6, "quiet alarm implies positive clearance",
                               bad == 0, f"quiet_steps={checked} counterexamples={bad}")

    def criterion_7(self):
        rng = np.random.default_rng(3)
        lp_bad = 0
        for _ in range(100):
            m = int(rng.integers(2, 4))
            extra = int(rng.integers(0, 8 - 2 * m + 1)) if 2 * m < 8 else 0
            A = np.vstack([np.eye(m), -np.eye(m),
                           rng.normal(size=(extra, m))])
            b = np.concatenate([rng.uniform(0.5, 2.0, m),
                                rng.uniform(0.5, 2.0, m),
                                rng.uniform(0.5, 3.0, extra)])
            c = rng.normal(size=m)
            sol = solve_lp(LpProblem(c=c, A=A, b=b))
            ref = _lp_vertex_oracle(c, A, b)
            if sol.status is not Status.OPTIMAL or ref is None:
                lp_bad += 1
            elif abs(sol.objective - ref) > 1e-9:
                lp_bad += 1
        qp_bad = 0
        for _ in range(50):
            n = int(rng.integers(2, 5))
            H = rng.uniform(0.5, 3.0, n)
            F = rng.normal(size=n)
            G = np.vstack([np.eye(n), -np.eye(n), rng.normal(size=(3, n))])
            g = np.concatenate([rng.uniform(0.5, 2.0, n),
                                rng.uniform(0.5, 2.0, n),
                                rng.uniform(0.5, 3.0, 3)])
            sol = solve_qp(QpProblem(H=H, F=F, G=G, g=g))
            z_ref = _qp_pg_oracle(H, F, G, g)
            if sol.status is not Status.OPTIMAL:
                qp_bad += 1
            elif np.max(np.abs(sol.z - z_ref)) > 1e-4:
                qp_bad += 1
        kkt_ok = KKT_TRACKER.max_residual < 1e-6
        ok = lp_bad == 0 and qp_bad == 0 and kkt_ok
        detail = (f"lp_mismatches={lp_bad} qp_mismatches={qp_bad} "
                  f"max_kkt={KKT_TRACKER.max_residual:.3g} over "
                  f"{KKT_TRACKER.solves} solves")
        return CriterionResult(7, "solver oracles and KKT residuals", ok, detail)

    def criterion_8(self):
        rng = np.random.default_rng(19)
        worst = 0.0
        for _ in range(200):
            worst = max(worst, _gradient_check_once(rng))
        return CriterionResult(8, "analytic gradients vs central differences",
                               worst < 1e-5, f"worst_rel_err={worst:.3g}")

    def criterion_9(self):
        keys = [(1, "nominal", False, True), (1, "chase_detectonly", False, True),
                (1, "chase_resilient", True, True), (2, "nominal", False, True),
                (2, "two_adversaries", False, True),
                (2, "two_adversaries_resilient", True, True)]
        bad = [k for k in keys if not self._run(*k)[2]]
        return CriterionResult(9, "byte-identical repeated runs", not bad,
                               f"mismatched={bad or 'none'}")

    def criterion_10(self):
        log1, _, _ = self._run(1, "nominal", False, True)
        log2, _, _ = self._run(2, "nominal", False, True)
        n = len(log1.verdicts) + len(log2.verdicts)
        return CriterionResult(10, "no false-positive verdicts in nominal runs",
                               n == 0, f"verdicts={n}")

    def run_all(self):
        KKT_TRACKER.start()
        try:
            results = [
                self.criterion_1(), self.criterion_2(), self.criterion_3(),
                self.criterion_4(), self.criterion_5(), self.criterion_6(),
                self.criterion_8(), self.criterion_9(), self.criterion_10(),
            ]
            # criterion 7 last so the KKT tracker has seen every solve
            results.insert(6, self.criterion_7())
            results.sort(key=lambda r: r.number)
        finally:
            KKT_TRACKER.stop()
        return results


def _lp_vertex_oracle(c, A, b, tol=1e-9):
    """Exact LP minimum by enumerating all basic feasible points."""
    q, m = A.shape
    best = None
    for rows in itertools.combinations(range(q), m):
        M = A[list(rows)]
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        x = np.linalg.solve(M, b[list(rows)])
        if np.all(A @ x <= b + 1e-9):
            v = float(c @ x)
            if best is None or v < best:
                best = v
    return best


def _qp_pg_oracle(H, F, G, g, iters=100000, tol_step=None):
    """Dual projected-gradient ascent for min z'Hz + Fz s.t. Gz <= g."""
    q = G.shape[0]
    Hinv = 1.0 / (2.0 * H)
    lam = np.zeros(q)
    L = np.linalg.norm(G @ np.diag(Hinv) @ G.T, 2)
    alpha = 1.0 / max(L, 1e-9)
    for _ in range(iters):
        z = -(F + G.T @ lam) * Hinv
        lam_new = np.maximum(0.0, lam + alpha * (G @ z - g))
        if np.max(np.abs(lam_new - lam)) < 1e-12:
            lam = lam_new
            break
        lam = lam_new
    return -(F + G.T @ lam) * Hinv


def _central_diff(f, x, h=1e-6):
    grad = np.zeros_like(x, dtype=float)
    for k in range(len(x)):
        e = np.zeros_like(grad)
        e[k] = h
        grad[k] = (f(x + e) - f(x - e)) / (2 * h)
    return grad


def _rel_err(analytic, numeric):
    denom = max(float(np.linalg.norm(numeric)), 1e-8)
    return float(np.linalg.norm(np.asarray(analytic) - numeric)) / denom


def _gradient_check_once(rng) -> float:
    d = 0.1
    p_i = rng.uniform(-2, 2, 2)
    p_j = rng.uniform(-2, 2, 2)
    while np.linalg.norm(p_i - p_j) < 0.2:
        p_j = rng.uniform(-2, 2, 2)
    G = rng.uniform(-2, 2, 2)
    obs = Obstacle(rng.uniform(-2, 2, 2), rng.uniform(0.2, 0.6))
    while np.linalg.norm(p_i - obs.c_o) < obs.r_o + 0.2:
        obs = Obstacle(rng.uniform(-2, 2, 2), obs.r_o)
    errs = []

    term = pair_barrier(p_i, p_j, d)
    errs.append(_rel_err(term.grad_i,
                         _central_diff(lambda p: pair_barrier(p, p_j, d).value, p_i)))
    errs.append(_rel_err(term.grad_j,
                         _central_diff(lambda p: pair_barrier(p_i, p, d).value, p_j)))

    oterm = obstacle_barrier(p_i, obs)
    errs.append(_rel_err(oterm.grad_i,
                         _central_diff(lambda p: obstacle_barrier(p, obs).value, p_i)))

    _, grad = goal_clf(p_i, G)
    errs.append(_rel_err(grad, _central_diff(lambda p: goal_clf(p, G)[0], p_i)))

    # composite gradient through the smooth conjunction
    terms = [pair_barrier(p_i, p_j, d), obstacle_barrier(p_i, obs)]
    _, w = lse_compose([t.value for t in terms])
    comp = w[0] * terms[0].grad_i + w[1] * terms[1].grad_i

    def composite(p):
        vals = [pair_barrier(p, p_j, d).value, obstacle_barrier(p, obs).value]
        return lse_compose(vals)[0]

    errs.append(_rel_err(comp, _central_diff(composite, p_i)))

    # weighted centroid CLF gradient w.r.t. one member
    P = rng.uniform(-2, 2, (3, 2))
    wts = rng.uniform(0.2, 1.0, 3)
    _, _, grads = centroid_clf(P, wts, G)

    def cent(p):
        Q = P.copy()
        Q[0] = p
        return centroid_clf(Q, wts, G)[0]

    errs.append(_rel_err(grads[0], _central_diff(cent, P[0])))

    # formation error gradient (away from the target)
    tgt = rng.uniform(-2, 2, 2)
    while np.linalg.norm(p_i - tgt) < 0.2:
        tgt = rng.uniform(-2, 2, 2)
    _, fgrad = formation_function(p_i, tgt)
    errs.append(_rel_err(fgrad,
                         _central_diff(lambda p: formation_function(p, tgt)[0], p_i)))
    return max(errs)
