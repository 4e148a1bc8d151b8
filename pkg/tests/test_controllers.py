import numpy as np
import pytest

from resilient_swarm.barriers import BarrierEval, goal_clf
from resilient_swarm.controllers import (QpWeights, assemble_nominal_qp,
                                         assemble_resilient_qp, chase_control,
                                         extract_control, mislead_control,
                                         solve_controller, structural_start)
from resilient_swarm.dynamics import (AgentState, DynamicsModel, ModelKind,
                                      box_polytope)
from resilient_swarm.optimizer import Status

SI = DynamicsModel(kind=ModelKind.SINGLE_INTEGRATOR)
POL = box_polytope(0.3)
W = QpWeights(w_u=1.0, w_slack=10.0, q=20.0)


def test_nominal_qp_variable_layout():
    clf = goal_clf(np.zeros(2), np.array([1.0, 0.0]))
    term = BarrierEval(value=-0.5, grad_i=np.array([1.0, 0.0]), grad_j=np.zeros(2))
    prob = assemble_nominal_qp(2, POL, W, clf, None, [term])
    assert prob.var_map == ("u0", "u1", "d1", "d3")
    # 4 polytope rows + 1 clf row + 1 safety row + 2 box rows per slack
    assert prob.G.shape == (4 + 1 + 1 + 4, 4)
    # decay-rate slack is rewarded, safety slack is not
    assert prob.F[2] == pytest.approx(-W.q)
    assert prob.F[3] == 0.0


def test_nominal_qp_drives_toward_goal():
    p = np.array([1.0, 1.0])
    G = np.array([0.0, 0.0])
    prob = assemble_nominal_qp(2, POL, W, goal_clf(p, G), None, [])
    sol = solve_controller(prob, u0=np.zeros(2))
    assert sol.status is Status.OPTIMAL
    u = extract_control(prob, sol)
    assert POL.contains(u)
    assert float(u @ (G - p)) > 0.0


def test_nominal_qp_parks_without_objectives():
    prob = assemble_nominal_qp(2, POL, W, None, None, [])
    sol = solve_controller(prob, u0=np.zeros(2))
    assert np.allclose(extract_control(prob, sol), 0.0, atol=1e-9)


def test_nominal_qp_safety_term_pushes_away():
    # neighbor dead ahead on the goal line: the barrier row must bend the
    # command off the collision course
    p = np.array([0.0, 0.0])
    G = np.array([2.0, 0.0])
    # h = d - r for a neighbor at (0.15, 0): grad_i = -(p_i-p_j)/r = (1, 0)
    term = BarrierEval(value=0.1 - 0.15, grad_i=np.array([1.0, 0.0]),
                       grad_j=np.zeros(2))
    prob = assemble_nominal_qp(2, POL, W, goal_clf(p, G), None, [term])
    sol = solve_controller(prob, u0=np.zeros(2))
    u = extract_control(prob, sol)
    free = extract_control(prob, solve_controller(
        assemble_nominal_qp(2, POL, W, goal_clf(p, G), None, []), u0=np.zeros(2)))
    assert u[0] < free[0]


def test_resilient_qp_layout_and_rows():
    clf = goal_clf(np.zeros(2), np.array([1.0, 0.0]))
    rows = [(4, -0.2, np.array([0.0, 1.0]), 0.05),
            (7, -0.6, np.array([1.0, 0.0]), -0.01)]
    prob = assemble_resilient_qp(2, POL, W, clf, None, [], None, rows)
    assert prob.var_map == ("u0", "u1", "d1", "n4", "n7")
    # the neighbor row encodes grad.u + slack*h_bar <= -pi
    r = 5  # 4 polytope rows, then d1 row, then first neighbor row
    assert np.allclose(prob.G[r, :2], [0.0, 1.0])
    assert prob.G[r, 3] == pytest.approx(-0.2)
    assert prob.g[r] == pytest.approx(-0.05)


def test_resilient_qp_solves_and_respects_polytope():
    clf = goal_clf(np.array([1.0, 0.0]), np.zeros(2))
    rows = [(2, -0.3, np.array([-1.0, 0.0]), 0.0)]
    prob = assemble_resilient_qp(2, POL, W, clf, None, [], None, rows)
    sol = solve_controller(prob, u0=np.zeros(2))
    assert sol.status is Status.OPTIMAL
    assert POL.contains(extract_control(prob, sol))


def test_structural_start_is_feasible():
    clf = goal_clf(np.array([2.0, -1.0]), np.zeros(2))
    term = BarrierEval(value=-0.4, grad_i=np.array([0.6, 0.8]), grad_j=np.zeros(2))
    prob = assemble_nominal_qp(2, POL, W, clf, (1.2, np.array([0.0, 1.0])), [term])
    z0 = structural_start(prob, np.zeros(2))
    assert z0 is not None
    assert np.all(prob.G @ z0 <= prob.g + 1e-8)
    assert np.allclose(z0[:2], 0.0)


def test_structural_start_none_when_u0_conflicts():
    # a barrier row with zero slack coefficient and positive rhs demand that
    # u alone cannot meet makes the interval empty
    prob = assemble_nominal_qp(2, POL, W, None, None,
                               [BarrierEval(value=0.0, grad_i=np.array([1.0, 0.0]),
                                            grad_j=np.zeros(2))])
    # row is u0 + 0*slack <= 0, u0 = 0 satisfies it; force a conflict instead
    z0 = structural_start(prob, np.array([0.2, 0.0]))
    assert z0 is None or np.all(prob.G @ z0 <= prob.g + 1e-8)


def test_chase_control_closes_on_target():
    st = AgentState(id=9, p=np.array([0.0, 0.0]), phi=0.0)
    u = chase_control(st.p, np.array([1.0, 1.0]), 0.1, st, SI, POL)
    assert POL.contains(u)
    # worst case for the barrier means moving straight at the target
    assert np.allclose(u, [0.3, 0.3])


def test_mislead_control_interior_bias():
    u = mislead_control(np.array([0.05, 0.0]), np.array([0.1, 0.1]), POL)
    assert np.allclose(u, [0.15, 0.1], atol=1e-8)


def test_mislead_control_projects_onto_box():
    u = mislead_control(np.array([0.25, 0.0]), np.array([0.2, 0.0]), POL)
    assert np.allclose(u, [0.3, 0.0], atol=1e-8)
    assert POL.contains(u)


def test_slack_box_rows_present():
    prob = assemble_nominal_qp(2, POL, W, goal_clf(np.ones(2), np.zeros(2)), None, [])
    # last two rows bound the d1 slack at +-slack_box
    assert prob.g[-1] == pytest.approx(W.slack_box)
    assert prob.g[-2] == pytest.approx(W.slack_box)
