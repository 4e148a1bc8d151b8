"""Run artifacts: trajectories.csv, metrics.csv, events.jsonl, plot.svg.

All writers are deterministic byte for byte: numbers are formatted with 9
significant digits, dict keys are sorted, and the SVG is assembled by hand
(no plotting library) so repeated runs of the same scenario produce
identical files. Writes go through a temp file and an atomic rename.
"""

from __future__ import annotations

import csv
import json
import os

import numpy as np

TRAJ_HEADER = ["t", "agent_id", "x", "y", "phi", "u1", "u2"]
METRIC_HEADER = ["t", "agent_id", "S_R", "S_R_w", "gamma_S", "lambda",
                 "G_R", "F_R_min", "C_i"]

_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
            "#8c564b", "#e377c2", "#17becf"]


def fmt(x) -> str:
    s = "{:.9g}".format(float(x))
    return "0" if s == "-0" else s


def _atomic_write(path, text: str):
    tmp = f"{path}.tmp"
    with open(tmp, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def trajectories_text(rows) -> str:
    lines = [",".join(TRAJ_HEADER)]
    for t, aid, x, y, phi, u1, u2 in rows:
        lines.append(",".join([fmt(t), str(int(aid)), fmt(x), fmt(y),
                               fmt(phi), fmt(u1), fmt(u2)]))
    return "\n".join(lines) + "\n"


def write_trajectories(path, rows):
    _atomic_write(path, trajectories_text(rows))


def write_metrics(path, records):
    lines = [",".join(METRIC_HEADER)]
    for r in records:
        lines.append(",".join([fmt(r.t), str(int(r.agent_id)), fmt(r.S_R),
                               fmt(r.S_R_w), fmt(r.gamma_S), fmt(r.lam),
                               fmt(r.G_R), fmt(r.F_R_min), fmt(r.C_i)]))
    _atomic_write(path, "\n".join(lines) + "\n")


def write_events(path, events):
    lines = [json.dumps(e, sort_keys=True) for e in events]
    _atomic_write(path, "\n".join(lines) + ("\n" if lines else ""))


def read_trajectories(path):
    """Returns (agent_ids, {id: array of [t, x, y, phi, u1, u2]})."""
    per_agent: dict[int, list] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            aid = int(row["agent_id"])
            per_agent.setdefault(aid, []).append(
                [float(row[k]) for k in ("t", "x", "y", "phi", "u1", "u2")])
    return sorted(per_agent), {k: np.array(v) for k, v in per_agent.items()}


def read_metrics(path):
    per_agent: dict[int, list] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            aid = int(row["agent_id"])
            per_agent.setdefault(aid, []).append(
                [float(row[k]) for k in METRIC_HEADER if k != "agent_id"])
    return sorted(per_agent), {k: np.array(v) for k, v in per_agent.items()}


def read_events(path):
    events = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                events.append(json.loads(line))
    return events


def render_svg(trajectories: dict, obstacles=(), goals=(), size: int = 640,
               pad: float = 0.5) -> str:
    """Plain-SVG trajectory plot: one polyline per agent (start marked with a
    circle, end with a square), obstacles as filled circles, goals as
    crosses. Output is a deterministic function of its inputs."""
    xs, ys = [], []
    for arr in trajectories.values():
        xs.extend(arr[:, 1])
        ys.extend(arr[:, 2])
    for c, r in obstacles:
        xs.extend([c[0] - r, c[0] + r])
        ys.extend([c[1] - r, c[1] + r])
    for g in goals:
        xs.append(g[0])
        ys.append(g[1])
    if not xs:
        xs, ys = [0.0], [0.0]
    x0, x1 = min(xs) - pad, max(xs) + pad
    y0, y1 = min(ys) - pad, max(ys) + pad
    span = max(x1 - x0, y1 - y0, 1e-9)
    scale = (size - 20) / span

    def sx(x):
        return 10 + (x - x0) * scale

    def sy(y):
        return size - 10 - (y - y0) * scale

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
    ]
    for c, r in obstacles:
        parts.append(f'<circle cx="{fmt(sx(c[0]))}" cy="{fmt(sy(c[1]))}" '
                     f'r="{fmt(r * scale)}" fill="#cccccc" stroke="#666666"/>')
    for g in goals:
        x, y = sx(g[0]), sy(g[1])
        parts.append(f'<path d="M {fmt(x - 5)} {fmt(y)} H {fmt(x + 5)} '
                     f'M {fmt(x)} {fmt(y - 5)} V {fmt(y + 5)}" '
                     f'stroke="#333333" stroke-width="1.5"/>')
    for k, aid in enumerate(sorted(trajectories)):
        arr = trajectories[aid]
        color = _PALETTE[k % len(_PALETTE)]
        pts = " ".join(f"{fmt(sx(x))},{fmt(sy(y))}" for x, y in arr[:, 1:3])
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                     f'stroke-width="1.2"/>')
        parts.append(f'<circle cx="{fmt(sx(arr[0, 1]))}" cy="{fmt(sy(arr[0, 2]))}" '
                     f'r="3" fill="{color}"/>')
        parts.append(f'<rect x="{fmt(sx(arr[-1, 1]) - 3)}" y="{fmt(sy(arr[-1, 2]) - 3)}" '
                     f'width="6" height="6" fill="{color}"/>')
        parts.append(f'<text x="{fmt(sx(arr[0, 1]) + 5)}" y="{fmt(sy(arr[0, 2]) - 5)}" '
                     f'font-family="monospace" font-size="11" fill="{color}">'
                     f'{aid}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_svg(path, svg_text: str):
    _atomic_write(path, svg_text)


def write_run(out_dir, log, scenario=None):
    """Write every artifact of one run into out_dir (created if missing)."""
    os.makedirs(out_dir, exist_ok=True)
    write_trajectories(os.path.join(out_dir, "trajectories.csv"), log.trajectory)
    write_metrics(os.path.join(out_dir, "metrics.csv"), log.metrics)
    write_events(os.path.join(out_dir, "events.jsonl"), log.events)
    per_agent: dict[int, list] = {}
    for t, aid, x, y, phi, u1, u2 in log.trajectory:
        per_agent.setdefault(aid, []).append([t, x, y, phi, u1, u2])
    trajs = {k: np.array(v) for k, v in per_agent.items()}
    obstacles = []
    goals = []
    if scenario is not None:
        obstacles = [(o.c_o, o.r_o) for o in scenario.obstacles]
        for a in scenario.agents:
            goals.extend(g.point for g in a.goals)
        if scenario.formation_goal is not None:
            goals.append(scenario.formation_goal)
    write_svg(os.path.join(out_dir, "plot.svg"),
              render_svg(trajs, obstacles, goals))
