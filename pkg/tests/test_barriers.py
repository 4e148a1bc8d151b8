import numpy as np
import pytest

from resilient_swarm.barriers import (Obstacle, SafetyParams, centroid_clf,
                                      formation_function, formation_target,
                                      goal_clf, lse_compose, obstacle_barrier,
                                      pair_barrier)
from resilient_swarm.errors import (ContractViolation, DegenerateWeightsError,
                                    SingularityError)


def test_pair_barrier_values_and_gradients():
    ev = pair_barrier(np.array([0.0, 0.0]), np.array([3.0, 4.0]), d=1.0)
    assert ev.value == pytest.approx(1.0 - 5.0)
    assert np.allclose(ev.grad_i, [0.6, 0.8])
    assert np.allclose(ev.grad_j, -ev.grad_i)


def test_pair_barrier_sign_convention():
    # closer than d: unsafe, h > 0
    ev = pair_barrier(np.zeros(2), np.array([0.5, 0.0]), d=1.0)
    assert ev.value > 0


def test_pair_barrier_coincident_raises():
    with pytest.raises(SingularityError):
        pair_barrier(np.zeros(2), np.zeros(2) + 1e-12, d=1.0, ids=(1, 2))


def test_obstacle_barrier():
    obs = Obstacle(c_o=np.array([1.0, 0.0]), r_o=0.5)
    ev = obstacle_barrier(np.array([-1.0, 0.0]), obs)
    assert ev.value == pytest.approx(0.5 - 2.0)
    assert np.allclose(ev.grad_i, [1.0, 0.0])
    assert np.allclose(ev.grad_j, 0.0)


def test_obstacle_validation():
    with pytest.raises(ContractViolation):
        Obstacle(c_o=np.zeros(2), r_o=0.0)
    with pytest.raises(SingularityError):
        obstacle_barrier(np.array([1.0, 0.0]), Obstacle(c_o=np.array([1.0, 0.0]), r_o=0.5))


def test_safety_params_ordering():
    SafetyParams(d=0.1, R_s=1.0)
    with pytest.raises(ContractViolation):
        SafetyParams(d=1.0, R_s=1.0)
    with pytest.raises(ContractViolation):
        SafetyParams(d=0.0, R_s=1.0)


def test_lse_compose_matches_logaddexp():
    rng = np.random.default_rng(11)
    for _ in range(100):
        vals = rng.normal(scale=5.0, size=rng.integers(1, 6))
        comp, w = lse_compose(vals)
        assert comp == pytest.approx(np.logaddexp.reduce(vals), abs=1e-12)
        assert w.sum() == pytest.approx(1.0)
        assert np.all(w >= 0)


def test_lse_compose_overflow_safe():
    comp, w = lse_compose([1000.0, 999.0])
    assert np.isfinite(comp) and comp > 1000.0
    assert np.argmax(w) == 0


def test_lse_compose_empty_raises():
    with pytest.raises(ContractViolation):
        lse_compose([])


def test_lse_upper_bounds_max():
    # composite value dominates the max, so driving it <= 0 enforces all
    rng = np.random.default_rng(12)
    for _ in range(100):
        vals = rng.normal(size=4)
        comp, _ = lse_compose(vals)
        assert comp >= np.max(vals)


def test_goal_clf():
    v, g = goal_clf(np.array([1.0, 2.0]), np.array([0.0, 0.0]))
    assert v == pytest.approx(5.0)
    assert np.allclose(g, [2.0, 4.0])
    v0, g0 = goal_clf(np.array([3.0, -1.0]), np.array([3.0, -1.0]))
    assert v0 == 0.0 and np.allclose(g0, 0.0)


def test_centroid_clf_symmetric_pair():
    v, cen, grads = centroid_clf([[1.0, 0.0], [-1.0, 0.0]], [1.0, 1.0], [0.0, 0.0])
    assert v == pytest.approx(0.0)
    assert np.allclose(cen, 0.0)
    assert all(np.allclose(g, 0.0) for g in grads)


def test_centroid_clf_single_agent():
    v, cen, grads = centroid_clf([[2.0, 0.0]], [1.0], [0.0, 0.0])
    assert np.allclose(cen, [2.0, 0.0])
    assert v == pytest.approx(4.0)
    assert np.allclose(grads[0], [4.0, 0.0])


def test_centroid_clf_offset_pair():
    v, cen, grads = centroid_clf([[2.0, 0.0], [0.0, 0.0]], [1.0, 1.0], [0.0, 0.0])
    assert np.allclose(cen, [1.0, 0.0])
    assert v == pytest.approx(1.0)
    # each agent holds half the weight: grad = 2 * (1/2) * (cen - G)
    assert np.allclose(grads[0], [1.0, 0.0])
    assert np.allclose(grads[1], [1.0, 0.0])


def test_centroid_clf_degenerate_weights():
    with pytest.raises(DegenerateWeightsError):
        centroid_clf([[1.0, 0.0]], [1e-10], [0.0, 0.0])


def test_centroid_gradient_matches_finite_difference():
    rng = np.random.default_rng(21)
    for _ in range(50):
        P = rng.normal(size=(4, 2))
        w = rng.uniform(0.2, 1.0, size=4)
        G = rng.normal(size=2)
        _, _, grads = centroid_clf(P, w, G)
        k = rng.integers(0, 4)
        eps = 1e-6
        for axis in range(2):
            Pp, Pm = P.copy(), P.copy()
            Pp[k, axis] += eps
            Pm[k, axis] -= eps
            vp = centroid_clf(Pp, w, G)[0]
            vm = centroid_clf(Pm, w, G)[0]
            assert grads[k][axis] == pytest.approx((vp - vm) / (2 * eps), abs=1e-6)


def test_formation_target_two_neighbors():
    # neighbors at (0,0) and (2,0); both imply the slot point (1,1)
    tgt = formation_target([[0.0, 0.0], [2.0, 0.0]],
                           [[1.0, 1.0], [-1.0, 1.0]], [1.0, 1.0])
    assert np.allclose(tgt, [1.0, 1.0])


def test_formation_target_weighting():
    tgt = formation_target([[0.0, 0.0], [4.0, 0.0]],
                           [[0.0, 0.0], [0.0, 0.0]], [3.0, 1.0])
    assert np.allclose(tgt, [1.0, 0.0])


def test_formation_target_errors():
    with pytest.raises(ContractViolation):
        formation_target(np.zeros((0, 2)), np.zeros((0, 2)), np.zeros(0))
    with pytest.raises(DegenerateWeightsError):
        formation_target([[1.0, 1.0]], [[0.0, 0.0]], [0.0])


def test_formation_function_unit_gradient():
    v, g = formation_function(np.array([2.0, 0.0]), np.array([0.0, 0.0]))
    assert v == pytest.approx(2.0)
    assert np.allclose(g, [1.0, 0.0])


def test_formation_function_zero_at_target():
    v, g = formation_function(np.array([1.0, 1.0]), np.array([1.0, 1.0]))
    assert v == 0.0
    assert np.allclose(g, 0.0)


def test_pair_gradient_matches_finite_difference():
    rng = np.random.default_rng(31)
    for _ in range(50):
        p_i = rng.normal(size=2)
        p_j = p_i + rng.normal(size=2) * 2 + np.array([3.0, 0.0])
        ev = pair_barrier(p_i, p_j, d=0.5)
        eps = 1e-6
        for axis in range(2):
            dp = np.zeros(2)
            dp[axis] = eps
            num = (pair_barrier(p_i + dp, p_j, 0.5).value
                   - pair_barrier(p_i - dp, p_j, 0.5).value) / (2 * eps)
            assert ev.grad_i[axis] == pytest.approx(num, abs=1e-6)
