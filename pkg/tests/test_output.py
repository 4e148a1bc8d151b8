import os

import numpy as np

from resilient_swarm.metrics import BehaviorRecord
from resilient_swarm.output import (METRIC_HEADER, TRAJ_HEADER, fmt,
                                    read_events, read_metrics,
                                    read_trajectories, render_svg,
                                    trajectories_text, write_events,
                                    write_metrics, write_trajectories)


def test_fmt_nine_significant_digits():
    assert fmt(1.0) == "1"
    assert fmt(0.123456789123) == "0.123456789"
    assert fmt(-0.0) == "0"
    assert fmt(1e-12) == "1e-12"


def test_headers_are_frozen():
    assert TRAJ_HEADER == ["t", "agent_id", "x", "y", "phi", "u1", "u2"]
    assert METRIC_HEADER == ["t", "agent_id", "S_R", "S_R_w", "gamma_S",
                             "lambda", "G_R", "F_R_min", "C_i"]


def test_trajectories_roundtrip(tmp_path):
    rows = [
        (0.0, 1, 0.5, -0.25, 0.1, 0.02, -0.03),
        (0.0, 2, 1.5, 0.75, 0.0, 0.0, 0.0),
        (0.05, 1, 0.501, -0.2515, 0.1, 0.02, -0.03),
        (0.05, 2, 1.5, 0.75, 0.0, 0.0, 0.0),
    ]
    path = tmp_path / "trajectories.csv"
    write_trajectories(path, rows)
    ids, per_agent = read_trajectories(path)
    assert ids == [1, 2]
    assert per_agent[1].shape == (2, 6)
    assert np.allclose(per_agent[1][1], [0.05, 0.501, -0.2515, 0.1, 0.02, -0.03])


def test_trajectories_text_is_deterministic():
    rows = [(0.0, 1, 1 / 3, 2 / 7, 0.0, 0.0, 0.0)]
    assert trajectories_text(rows) == trajectories_text(rows)
    assert trajectories_text(rows).startswith("t,agent_id,x,y,phi,u1,u2\n")


def test_metrics_roundtrip(tmp_path):
    recs = [BehaviorRecord(t=0.0, agent_id=1, S_R=0.99, S_R_w=0.5,
                           gamma_S=0.5, lam=1.0, G_R=0.37, F_R_min=1.0, C_i=1.0)]
    path = tmp_path / "metrics.csv"
    write_metrics(path, recs)
    ids, per_agent = read_metrics(path)
    assert ids == [1]
    assert np.allclose(per_agent[1][0], [0.0, 0.99, 0.5, 0.5, 1.0, 0.37, 1.0, 1.0])


def test_events_roundtrip(tmp_path):
    events = [
        {"t": 1.5, "type": "detection", "monitor": 1, "suspect": 2},
        {"t": 2.0, "type": "goal_arrival", "agent": 1},
    ]
    path = tmp_path / "events.jsonl"
    write_events(path, events)
    assert read_events(path) == events
    write_events(path, [])
    assert read_events(path) == []
    assert os.path.getsize(path) == 0


def test_events_keys_sorted_on_disk(tmp_path):
    path = tmp_path / "events.jsonl"
    write_events(path, [{"type": "x", "t": 0.0, "agent": 3}])
    text = path.read_text()
    assert text == '{"agent": 3, "t": 0.0, "type": "x"}\n'


def test_render_svg_idempotent():
    trajs = {1: np.array([[0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
                          [0.1, 1.0, 0.5, 0.0, 0.0, 0.0]]),
             2: np.array([[0.0, -1.0, 0.3, 0.0, 0.0, 0.0]])}
    obstacles = [(np.array([0.5, 0.5]), 0.2)]
    goals = [np.array([2.0, 1.0])]
    a = render_svg(trajs, obstacles, goals)
    b = render_svg(trajs, obstacles, goals)
    assert a == b
    assert a.startswith("<svg ") and a.rstrip().endswith("</svg>")
    assert a.count("<polyline") == 2
    assert a.count("<circle") == 3  # one obstacle + one start marker per agent


def test_render_svg_empty_input():
    svg = render_svg({})
    assert svg.startswith("<svg ")


def test_atomic_write_leaves_no_tmp(tmp_path):
    path = tmp_path / "trajectories.csv"
    write_trajectories(path, [])
    assert path.exists()
    assert not (tmp_path / "trajectories.csv.tmp").exists()
