"""Centralized simulation engine.

One fixed-dt loop: sense -> pointwise best/worst controls -> critical times
and zones -> behavior metrics -> detection -> control synthesis -> RK4
integration -> logging. The loop is fully deterministic: no randomness, no
wall-clock dependence, stable iteration order by agent id.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .barriers import (BarrierEval, centroid_clf, formation_function,
                       formation_target, goal_clf, obstacle_barrier, pair_barrier)
from .controllers import (QpWeights, assemble_nominal_qp, assemble_resilient_qp,
                          chase_control, extract_control, mislead_control,
                          solve_controller)
from .criticality import (critical_time_obstacle, critical_time_pair,
                          critical_zone_obstacle, critical_zone_pair)
from .detection import DetectionVerdict, SafetyDetector, formation_check
from .dynamics import AgentState, step
from .errors import AlreadyUnsafeError
from .metrics import (BehaviorRecord, deviation_flag, goal_metric, safety_alarm,
                      safety_metric, task_metric, task_threshold, worst_safety_metric)
from .optimizer import Status, best_case_control, worst_case_control
from .scenario import Scenario


@dataclass
class RunLog:
    scenario_name: str
    backend: str
    dt: float
    trajectory: list = field(default_factory=list)  # (t, id, x, y, phi, u1, u2)
    metrics: list[BehaviorRecord] = field(default_factory=list)
    events: list[dict] = field(default_factory=list)
    verdicts: list[DetectionVerdict] = field(default_factory=list)
    flagged: set[int] = field(default_factory=set)

    def first_event(self, kind: str) -> dict | None:
        for e in self.events:
            if e["type"] == kind:
                return e
        return None

    def intact_violation(self, adversary_ids: set[int]) -> bool:
        """True if any safety violation involved an intact agent."""
        for e in self.events:
            if e["type"] != "safety_violation":
                continue
            involved = [e["agent"], e.get("other")]
            if any(a is not None and a not in adversary_ids for a in involved):
                return True
        return False


class _AgentRuntime:
    def __init__(self, spec, scenario: Scenario):
        self.spec = spec
        self.state = AgentState(id=spec.id, p=spec.p0, phi=spec.phi0, t=0.0)
        self.u = np.zeros(spec.model.m)
        self.goal_idx = -1
        self.goal_ref = 1.0  # squared distance at segment start
        self.lam = 0.0
        self.lam_prev = 0.0
        self.arrived: set[int] = set()
        self.infeasible_logged = False

    def active_goal(self, t: float):
        idx = -1
        for k, g in enumerate(self.spec.goals):
            if g.window[0] <= t:
                idx = k
        return idx


def run(scenario: Scenario, resilient: bool = False, detect: bool = True) -> RunLog:
    sc = scenario
    dt = sc.dt
    n_steps = int(round(sc.t_end / dt))
    agents = {a.id: _AgentRuntime(a, sc) for a in sc.agents}
    ids = sorted(agents)
    formation_ids = [i for i in ids if agents[i].spec.formation]
    free_ids = [i for i in ids if not agents[i].spec.formation]
    adversary_ids = {i for i in ids if agents[i].spec.adversary is not None}

    log = RunLog(scenario_name=sc.name, backend=_kernels.backend_name(), dt=dt)
    detectors = {i: SafetyDetector(i, sc.n_horizon, dt) for i in free_ids}
    violated_pairs: set[tuple] = set()
    n_c = sc.metrics.n_c

    # formation centroid reference for the shared goal-progress metric
    cent_ref = 1.0
    if formation_ids and sc.formation_goal is not None:
        p0 = np.mean([agents[i].spec.p0 for i in formation_ids], axis=0)
        cent_ref = max(float(np.sum((p0 - sc.formation_goal) ** 2)), 1e-18)

    for s in range(n_steps + 1):
        t = s * dt
        pos = {i: agents[i].state.p for i in ids}
        neighbors = {
            i: [j for j in ids if j != i
                and np.linalg.norm(pos[i] - pos[j]) <= sc.safety.R_s]
            for i in ids
        }
        obs_in_range = {
            i: [o for o in sc.obstacles
                if np.linalg.norm(pos[i] - o.c_o) - o.r_o <= sc.safety.R_s]
            for i in ids
        }

        # barrier terms and pointwise extremal controls
        pair_terms = {}
        for i in ids:
            for j in neighbors[i]:
                pair_terms[(i, j)] = pair_barrier(pos[i], pos[j], sc.safety.d, ids=(i, j))
        obs_terms = {i: [obstacle_barrier(pos[i], o) for o in obs_in_range[i]]
                     for i in ids}
        u_min, u_max = {}, {}
        for i in ids:
            rt = agents[i]
            inter = [pair_terms[(i, j)] for j in neighbors[i]]
            u_min[i] = best_case_control(inter + obs_terms[i], rt.state,
                                         rt.spec.model, rt.spec.polytope)
            u_max[i] = worst_case_control(inter, rt.state, rt.spec.model,
                                          rt.spec.polytope)

        # safety-violation events (first occurrence per pair / per obstacle)
        for i in ids:
            for j in neighbors[i]:
                if j > i and -pair_terms[(i, j)].value <= 0:
                    key = (i, j)
                    if key not in violated_pairs:
                        violated_pairs.add(key)
                        log.events.append({"t": t, "type": "safety_violation",
                                           "agent": i, "other": j})
            for o, term in zip(obs_in_range[i], obs_terms[i]):
                if term.value >= 0:
                    key = (i, "obs", float(o.c_o[0]), float(o.c_o[1]))
                    if key not in violated_pairs:
                        violated_pairs.add(key)
                        log.events.append({"t": t, "type": "safety_violation",
                                           "agent": i, "other": None})

        # critical times and zones
        T_s, eta_pair, eta_obs = {}, {}, {}
        for i in ids:
            rt = agents[i]
            times = []
            for j in neighbors[i]:
                try:
                    times.append(critical_time_pair(pos[i], pos[j], sc.safety.d,
                                                    rt.spec.model, u_min[i], u_max[j]))
                except AlreadyUnsafeError:
                    times.append(0.0)
            T_s[i] = min(min(times) if times else sc.max_horizon, sc.max_horizon)
            horizon = sc.n_horizon * T_s[i]
            for j in neighbors[i]:
                z = critical_zone_pair(rt.spec.model, agents[j].spec.model,
                                       rt.state.phi, agents[j].state.phi,
                                       u_min[i], u_max[j], horizon, dt)
                eta_pair[(i, j)] = z.eta
            etas = []
            for o in obs_in_range[i]:
                try:
                    T_o = min(critical_time_obstacle(pos[i], o, rt.spec.model,
                                                     u_max[i]), sc.max_horizon)
                except AlreadyUnsafeError:
                    T_o = 0.0
                etas.append(critical_zone_obstacle(rt.spec.model, rt.state.phi,
                                                   u_max[i], sc.n_horizon * T_o, dt).eta)
            eta_obs[i] = etas

        # behavior metrics
        S_R, gamma_S, alarm, dev = {}, {}, {}, {}
        S_w = {}
        cent_lam = 0.0
        if formation_ids and sc.formation_goal is not None:
            p_bar = np.mean([pos[i] for i in formation_ids], axis=0)
            cent_lam = float(np.sum((p_bar - sc.formation_goal) ** 2)) / cent_ref
        for i in ids:
            rt = agents[i]
            # r_ij = d - value, so d / r_ij is the proximity ratio
            ratios = [sc.safety.d / (sc.safety.d - pair_terms[(i, j)].value)
                      for j in neighbors[i]]
            ratios += [o.r_o / float(np.linalg.norm(pos[i] - o.c_o))
                       for o in obs_in_range[i]]
            S_R[i] = safety_metric(ratios, n_c)
            zr = [eta_pair[(i, j)] / (sc.safety.d - pair_terms[(i, j)].value)
                  for j in neighbors[i]]
            zr += [e / float(np.linalg.norm(pos[i] - o.c_o))
                   for e, o in zip(eta_obs[i], obs_in_range[i])]
            S_w[i], gamma_S[i] = worst_safety_metric(zr, n_c)
            alarm[i] = safety_alarm(S_R[i], gamma_S[i])

            # goal progress
            if rt.spec.formation:
                rt.lam_prev, rt.lam = rt.lam, cent_lam
                G_R = float(np.exp(-cent_lam ** n_c))
            else:
                gi = rt.active_goal(t)
                if gi != rt.goal_idx:
                    rt.goal_idx = gi
                    if gi >= 0:
                        g = rt.spec.goals[gi]
                        rt.goal_ref = max(float(np.sum((pos[i] - g.point) ** 2)), 1e-18)
                        rt.lam = 1.0
                        rt.lam_prev = 1.0
                if rt.goal_idx >= 0:
                    g = rt.spec.goals[rt.goal_idx]
                    lam, G_R = goal_metric(pos[i], g.point, rt.goal_ref, n_c)
                    rt.lam_prev, rt.lam = rt.lam, lam
                    if (g.window[0] <= t <= g.window[1]
                            and np.linalg.norm(pos[i] - g.point) <= g.radius
                            and rt.goal_idx not in rt.arrived):
                        rt.arrived.add(rt.goal_idx)
                        log.events.append({"t": t, "type": "goal_arrival",
                                           "agent": i, "goal": rt.goal_idx})
                else:
                    rt.lam_prev, rt.lam = rt.lam, 0.0
                    G_R = 1.0
            dev[i] = s > 0 and deviation_flag(rt.lam, rt.lam_prev, dt, sc.metrics)

        # formation scores and trust weights
        F_R = {}
        F_min = {i: 1.0 for i in ids}
        C = {i: 1.0 for i in ids}
        gamma_F = task_threshold(sc.metrics, t)
        new_verdicts = []
        for i in formation_ids:
            scores = {}
            for j in formation_ids:
                if j == i or j not in neighbors[i]:
                    continue
                c_ij = float(np.linalg.norm(sc.slots[i] - sc.slots[j]))
                r_ij = sc.safety.d - pair_terms[(i, j)].value
                scores[j] = task_metric(r_ij, c_ij, n_c)
            F_R[i] = scores
            if scores:
                F_min[i] = min(scores.values())
            c_i, verdicts = formation_check(i, t, scores, gamma_F, n_c)
            C[i] = c_i
            if detect and t >= sc.settle_time:
                new_verdicts.extend(verdicts)

        # safety-class detection
        if detect:
            for i in free_ids:
                flags = {i: dev[i]}
                prox = {}
                for j in neighbors[i]:
                    flags[j] = dev[j]
                    prox[j] = sc.safety.d / (sc.safety.d - pair_terms[(i, j)].value)
                v = detectors[i].update(t, T_s[i], alarm[i], flags, prox)
                if v is not None:
                    new_verdicts.append(v)

        for v in new_verdicts:
            log.verdicts.append(v)
            if v.suspect_id not in log.flagged:
                log.flagged.add(v.suspect_id)
                log.events.append({"t": v.t, "type": "detection",
                                   "monitor": v.monitor_id, "suspect": v.suspect_id,
                                   "kind": v.kind, "T_s": v.T_s})

        # control synthesis
        resilient_now = resilient and len(log.flagged) > 0
        u_next = {}
        for i in ids:
            rt = agents[i]
            spec = rt.spec
            adv = spec.adversary
            if adv is not None and t >= adv.t_start:
                if adv.kind == "chase":
                    u_next[i] = chase_control(pos[i], pos[adv.target], sc.safety.d,
                                              rt.state, spec.model, spec.polytope)
                else:
                    u_nom = _nominal_u(sc, rt, i, t, pos, neighbors, obs_terms,
                                       pair_terms, formation_ids, log)
                    u_next[i] = mislead_control(u_nom, adv.bias, spec.polytope)
                continue
            if resilient_now:
                u_next[i] = _resilient_u(sc, agents, rt, i, t, pos, neighbors,
                                         obs_terms, pair_terms, eta_pair,
                                         formation_ids, F_R, C, log)
            else:
                u_next[i] = _nominal_u(sc, rt, i, t, pos, neighbors, obs_terms,
                                       pair_terms, formation_ids, log)

        # log and integrate
        for i in ids:
            rt = agents[i]
            u = u_next[i]
            log.trajectory.append((t, i, rt.state.p[0], rt.state.p[1],
                                   rt.state.phi, float(u[0]), float(u[1])))
            log.metrics.append(BehaviorRecord(
                t=t, agent_id=i, S_R=S_R[i], S_R_w=S_w[i], gamma_S=gamma_S[i],
                lam=rt.lam, G_R=float(np.exp(-rt.lam ** n_c)),
                F_R_min=F_min[i], C_i=C[i],
            ))
        if s == n_steps:
            break
        for i in ids:
            rt = agents[i]
            rt.state = step(rt.state, rt.spec.model, u_next[i], dt)
            rt.u = u_next[i]
    return log


def _goal_clf_row(sc, rt, i, t, pos):
    gi = rt.active_goal(t)
    if gi < 0:
        return None
    g = rt.spec.goals[gi]
    if np.linalg.norm(pos[i] - g.point) <= g.radius:
        return None  # parked inside the goal set
    V, grad = goal_clf(pos[i], g.point)
    return (V, grad)


def _formation_rows(sc, i, pos, neighbors, formation_ids, weights_by_j=None):
    """(centroid_clf_row, formation_row) for formation member i."""
    members = [j for j in formation_ids if j != i and j in neighbors[i]]
    cent = None
    if sc.formation_goal is not None:
        all_members = formation_ids
        w = np.ones(len(all_members))
        V, _, grads = centroid_clf([pos[j] for j in all_members], w, sc.formation_goal)
        cent = (V, grads[all_members.index(i)])
    form = None
    if members:
        if weights_by_j is None:
            w = np.ones(len(members))
        else:
            w = np.array([weights_by_j.get(j, 0.0) for j in members])
        if float(np.sum(w)) > 1e-9:
            offs = [sc.slots[i] - sc.slots[j] for j in members]
            tgt = formation_target([pos[j] for j in members], offs, w)
            h, grad = formation_function(pos[i], tgt)
            if h > 0:
                form = (h, grad)
    return cent, form


def _nominal_u(sc, rt, i, t, pos, neighbors, obs_terms, pair_terms,
               formation_ids, log):
    spec = rt.spec
    safety = [pair_terms[(i, j)] for j in neighbors[i]] + obs_terms[i]
    if spec.formation:
        clf, form = _formation_rows(sc, i, pos, neighbors, formation_ids)
    else:
        clf = _goal_clf_row(sc, rt, i, t, pos)
        form = None
    prob = assemble_nominal_qp(spec.model.m, spec.polytope, sc.weights,
                               clf, form, safety)
    sol = solve_controller(prob, u0=rt.u if spec.polytope.contains(rt.u) else None)
    if sol.status is not Status.OPTIMAL:
        if not rt.infeasible_logged:
            rt.infeasible_logged = True
            log.events.append({"t": t, "type": "qp_infeasible", "agent": i})
        return rt.u
    return extract_control(prob, sol)


def _resilient_u(sc, agents, rt, i, t, pos, neighbors, obs_terms, pair_terms,
                 eta_pair, formation_ids, F_R, C, log):
    spec = rt.spec
    if spec.formation:
        weights = {j: (0.0 if j in log.flagged else C[j]) for j in formation_ids}
        clf = None
        cent, form = _resilient_formation_rows(sc, i, pos, neighbors,
                                               formation_ids, F_R, weights)
    else:
        clf = _goal_clf_row(sc, rt, i, t, pos)
        cent, form = None, None
    rows = []
    for j in neighbors[i]:
        term = pair_terms[(i, j)]
        if j in log.flagged:
            # uncooperative neighbor: inflate the barrier by the reachable
            # drift inside the critical zone and assume its worst-case input
            h_bar = term.value + eta_pair[(i, j)] / sc.n_horizon
            u_j = _worst_u(agents[j], pos, neighbors, pair_terms, sc)
        else:
            h_bar = term.value
            u_j = agents[j].u  # last commanded (one-step lag)
        pi = float(term.grad_j @ u_j)
        rows.append((j, h_bar, term.grad_i, pi))
    prob = assemble_resilient_qp(spec.model.m, spec.polytope, sc.weights,
                                 clf, cent, obs_terms[i], form, rows)
    sol = solve_controller(prob, u0=rt.u if spec.polytope.contains(rt.u) else None)
    if sol.status is not Status.OPTIMAL:
        if not rt.infeasible_logged:
            rt.infeasible_logged = True
            log.events.append({"t": t, "type": "qp_infeasible", "agent": i})
        return rt.u
    return extract_control(prob, sol)


def _resilient_formation_rows(sc, i, pos, neighbors, formation_ids, F_R, weights):
    members = [j for j in formation_ids if j != i and j in neighbors[i]]
    cent = None
    if sc.formation_goal is not None:
        w = np.array([weights.get(j, 0.0) for j in formation_ids])
        if float(np.sum(w)) > 1e-9:
            V, _, grads = centroid_clf([pos[j] for j in formation_ids], w,
                                       sc.formation_goal)
            cent = (V, grads[formation_ids.index(i)])
    form = None
    if members:
        # task-metric weights, with flagged neighbors excluded outright
        w = np.array([0.0 if weights.get(j, 0.0) == 0.0 else F_R.get(i, {}).get(j, 0.0)
                      for j in members])
        if float(np.sum(w)) > 1e-9:
            offs = [sc.slots[i] - sc.slots[j] for j in members]
            tgt = formation_target([pos[j] for j in members], offs, w)
            h, grad = formation_function(pos[i], tgt)
            if h > 0:
                form = (h, grad)
    return cent, form


def _worst_u(rt_j, pos, neighbors, pair_terms, sc):
    j = rt_j.spec.id
    inter = [pair_terms[(j, k)] for k in neighbors[j]]
    return worst_case_control(inter, rt_j.state, rt_j.spec.model, rt_j.spec.polytope)
