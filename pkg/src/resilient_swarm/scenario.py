"""Scenario files: JSON schema, semantic validation, and typed parsing.

Validation collects every problem it can find (schema violations first, then
semantic checks such as polytope boundedness and initial safety) and reports
them with JSON-pointer paths.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from jsonschema import Draft202012Validator

from .barriers import Obstacle, SafetyParams
from .controllers import QpWeights
from .dynamics import DynamicsModel, InputPolytope, ModelKind, box_polytope
from .errors import ScenarioError
from .metrics import MetricConfig
from .optimizer import LpProblem, Status, solve_lp

_VEC2 = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["name", "dt", "t_end", "safety", "agents"],
    "properties": {
        "version": {"type": "integer", "minimum": 1},
        "name": {"type": "string", "minLength": 1},
        "dt": {"type": "number", "exclusiveMinimum": 0},
        "t_end": {"type": "number", "exclusiveMinimum": 0},
        "safety": {
            "type": "object",
            "additionalProperties": False,
            "required": ["d", "R_s"],
            "properties": {
                "d": {"type": "number", "exclusiveMinimum": 0},
                "R_s": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "metrics": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_c": {"type": "integer", "minimum": 1},
                "theta_w": {"type": "number", "exclusiveMinimum": 0},
                "theta_envelope": {
                    "type": "array", "items": {"type": "number"},
                    "minItems": 2, "maxItems": 2,
                },
                "tol_dev": {"type": "number", "minimum": 0},
                "tol_goal": {"type": "number", "minimum": 0},
            },
        },
        "detection": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_horizon": {"type": "number", "minimum": 1},
                "max_horizon": {"type": "number", "exclusiveMinimum": 0},
                "settle_time": {"type": "number", "minimum": 0},
            },
        },
        "weights": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "w_u": {"type": "number", "exclusiveMinimum": 0},
                "w_slack": {"type": "number", "exclusiveMinimum": 0},
                "q": {"type": "number", "minimum": 0},
                "slack_box": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "obstacles": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["center", "radius"],
                "properties": {
                    "center": _VEC2,
                    "radius": {"type": "number", "exclusiveMinimum": 0},
                },
            },
        },
        "formation": {
            "type": "object",
            "additionalProperties": False,
            "required": ["G_f", "slots"],
            "properties": {
                "G_f": _VEC2,
                "radius": {"type": "number", "exclusiveMinimum": 0},
                "slots": {
                    "type": "object",
                    "additionalProperties": _VEC2,
                    "propertyNames": {"pattern": "^[0-9]+$"},
                },
            },
        },
        "agents": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["id", "model", "p0"],
                "properties": {
                    "id": {"type": "integer", "minimum": 0},
                    "model": {"enum": ["single_integrator", "linearized_unicycle"]},
                    "b": {"type": "number", "exclusiveMinimum": 0},
                    "b_f": {"type": "number", "minimum": 0},
                    "b_g": {"type": "number", "exclusiveMinimum": 0},
                    "p0": _VEC2,
                    "phi0": {"type": "number"},
                    "u_limit": {"type": "number", "exclusiveMinimum": 0},
                    "polytope": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["A", "b"],
                        "properties": {
                            "A": {"type": "array",
                                  "items": {"type": "array",
                                            "items": {"type": "number"},
                                            "minItems": 2, "maxItems": 2},
                                  "minItems": 1},
                            "b": {"type": "array", "items": {"type": "number"},
                                  "minItems": 1},
                        },
                    },
                    "formation": {"type": "boolean"},
                    "goals": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "additionalProperties": False,
                            "required": ["point", "radius", "window"],
                            "properties": {
                                "point": _VEC2,
                                "radius": {"type": "number", "exclusiveMinimum": 0},
                                "window": {
                                    "type": "array", "items": {"type": "number"},
                                    "minItems": 2, "maxItems": 2,
                                },
                            },
                        },
                    },
                    "adversary": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["kind", "t_start"],
                        "properties": {
                            "kind": {"enum": ["chase", "mislead"]},
                            "target": {"type": "integer", "minimum": 0},
                            "bias": _VEC2,
                            "t_start": {"type": "number", "minimum": 0},
                        },
                    },
                },
            },
        },
    },
}


@dataclass(frozen=True)
class GoalSpec:
    point: np.ndarray
    radius: float
    window: tuple[float, float]


@dataclass(frozen=True)
class AdversarySpec:
    kind: str
    t_start: float
    target: int | None = None
    bias: np.ndarray | None = None


@dataclass(frozen=True)
class AgentSpec:
    id: int
    model: DynamicsModel
    p0: np.ndarray
    phi0: float
    polytope: InputPolytope
    formation: bool = False
    goals: tuple[GoalSpec, ...] = ()
    adversary: AdversarySpec | None = None


@dataclass(frozen=True)
class Scenario:
    name: str
    dt: float
    t_end: float
    safety: SafetyParams
    metrics: MetricConfig
    weights: QpWeights
    agents: tuple[AgentSpec, ...]
    obstacles: tuple[Obstacle, ...] = ()
    formation_goal: np.ndarray | None = None
    formation_radius: float = 0.25
    slots: dict[int, np.ndarray] = field(default_factory=dict)
    n_horizon: float = 3.0
    max_horizon: float = 50.0
    settle_time: float = 0.0

    def agent(self, agent_id: int) -> AgentSpec:
        for a in self.agents:
            if a.id == agent_id:
                return a
        raise KeyError(agent_id)


def _pointer(err) -> str:
    return "/" + "/".join(str(p) for p in err.absolute_path)


def _polytope_probe(pol: InputPolytope, path: str, out: list):
    m = pol.A.shape[1]
    for k in range(m):
        for s in (1.0, -1.0):
            c = np.zeros(m)
            c[k] = s
            sol = solve_lp(LpProblem(c=c, A=pol.A, b=pol.b))
            if sol.status is Status.INFEASIBLE:
                out.append((path, "input polytope is empty"))
                return
            if sol.status is Status.UNBOUNDED:
                out.append((path, "input polytope is unbounded"))
                return


def validate_data(data) -> list[tuple[str, str]]:
    """All violations found in a raw scenario dict, as (json-pointer, message)."""
    validator = Draft202012Validator(SCHEMA)
    out = [(_pointer(e), e.message) for e in validator.iter_errors(data)]
    if out:
        return out

    safety = data["safety"]
    if safety["R_s"] <= safety["d"]:
        out.append(("/safety", "require R_s > d"))

    ids = [a["id"] for a in data["agents"]]
    if len(set(ids)) != len(ids):
        out.append(("/agents", "agent ids must be unique"))
    id_set = set(ids)

    for i, a in enumerate(data["agents"]):
        path = f"/agents/{i}"
        if a["model"] == "linearized_unicycle" and "b" not in a:
            out.append((path, "linearized unicycle requires look-ahead b"))
        if "polytope" in a and "u_limit" in a:
            out.append((path, "give either polytope or u_limit, not both"))
        if "polytope" not in a and "u_limit" not in a:
            out.append((path, "an input polytope or u_limit is required"))
        if "polytope" in a:
            A = a["polytope"]["A"]
            b = a["polytope"]["b"]
            if len(A) != len(b):
                out.append((path + "/polytope", "A and b row counts differ"))
            else:
                _polytope_probe(InputPolytope(np.array(A), np.array(b)),
                                path + "/polytope", out)
        adv = a.get("adversary")
        if adv is not None:
            if adv["kind"] == "chase":
                if "target" not in adv:
                    out.append((path + "/adversary", "chase requires a target id"))
                elif adv["target"] not in id_set or adv["target"] == a["id"]:
                    out.append((path + "/adversary", "chase target must be another agent"))
            if adv["kind"] == "mislead" and "bias" not in adv:
                out.append((path + "/adversary", "mislead requires a bias vector"))
        for gidx, goal in enumerate(a.get("goals", [])):
            t0, t1 = goal["window"]
            if not (0 <= t0 < t1):
                out.append((f"{path}/goals/{gidx}/window", "require 0 <= t0 < t1"))
        windows = [g["window"] for g in a.get("goals", [])]
        for (_, e0), (s1, _) in zip(windows, windows[1:]):
            if s1 < e0:
                out.append((path + "/goals", "goal windows must be ordered and disjoint"))
                break

    if any(a.get("formation") for a in data["agents"]):
        if "formation" not in data:
            out.append(("/formation", "formation agents need a formation block"))
        else:
            slot_ids = {int(k) for k in data["formation"]["slots"]}
            member_ids = {a["id"] for a in data["agents"] if a.get("formation")}
            if not member_ids <= slot_ids:
                out.append(("/formation/slots",
                            f"missing slots for agents {sorted(member_ids - slot_ids)}"))

    d = safety["d"]
    pts = {a["id"]: np.asarray(a["p0"], dtype=float) for a in data["agents"]}
    items = sorted(pts.items())
    for n, (i, pi) in enumerate(items):
        for j, pj in items[n + 1:]:
            if np.linalg.norm(pi - pj) <= d:
                out.append(("/agents", f"agents {i} and {j} start within safety distance"))
    for oidx, obs in enumerate(data.get("obstacles", [])):
        c = np.asarray(obs["center"], dtype=float)
        for i, pi in items:
            if np.linalg.norm(pi - c) <= obs["radius"]:
                out.append((f"/obstacles/{oidx}", f"agent {i} starts inside the obstacle"))
    return out


def parse_scenario(data) -> Scenario:
    violations = validate_data(data)
    if violations:
        raise ScenarioError(violations)

    met = data.get("metrics", {})
    env = met.get("theta_envelope")
    metrics = MetricConfig(
        n_c=met.get("n_c", 4),
        theta_w=met.get("theta_w", 0.3),
        theta_envelope=tuple(env) if env is not None else None,
        tol_dev=met.get("tol_dev", 1e-6),
        tol_goal=met.get("tol_goal", 1e-4),
    )
    wts = data.get("weights", {})
    weights = QpWeights(
        w_u=wts.get("w_u", 1.0), w_slack=wts.get("w_slack", 10.0),
        q=wts.get("q", 1.0), slack_box=wts.get("slack_box", 1e3),
    )
    det = data.get("detection", {})

    agents = []
    for a in data["agents"]:
        model = DynamicsModel(
            kind=ModelKind(a["model"]), b=a.get("b", 1.0),
            b_f=a.get("b_f", 0.0), b_g=a.get("b_g", 1.0),
        )
        if "polytope" in a:
            pol = InputPolytope(np.array(a["polytope"]["A"], dtype=float),
                                np.array(a["polytope"]["b"], dtype=float))
        else:
            pol = box_polytope(a["u_limit"])
        goals = tuple(
            GoalSpec(point=np.asarray(g["point"], dtype=float), radius=g["radius"],
                     window=(g["window"][0], g["window"][1]))
            for g in a.get("goals", [])
        )
        adv = None
        if a.get("adversary") is not None:
            raw = a["adversary"]
            adv = AdversarySpec(
                kind=raw["kind"], t_start=raw["t_start"],
                target=raw.get("target"),
                bias=np.asarray(raw["bias"], dtype=float) if "bias" in raw else None,
            )
        agents.append(AgentSpec(
            id=a["id"], model=model, p0=np.asarray(a["p0"], dtype=float),
            phi0=a.get("phi0", 0.0), polytope=pol,
            formation=a.get("formation", False), goals=goals, adversary=adv,
        ))

    fg = None
    f_radius = 0.25
    slots: dict[int, np.ndarray] = {}
    if "formation" in data:
        fg = np.asarray(data["formation"]["G_f"], dtype=float)
        f_radius = data["formation"].get("radius", 0.25)
        slots = {int(k): np.asarray(v, dtype=float)
                 for k, v in data["formation"]["slots"].items()}

    return Scenario(
        name=data["name"], dt=float(data["dt"]), t_end=float(data["t_end"]),
        safety=SafetyParams(d=data["safety"]["d"], R_s=data["safety"]["R_s"]),
        metrics=metrics, weights=weights,
        agents=tuple(sorted(agents, key=lambda x: x.id)),
        obstacles=tuple(Obstacle(np.asarray(o["center"], dtype=float), o["radius"])
                        for o in data.get("obstacles", [])),
        formation_goal=fg, formation_radius=f_radius, slots=slots,
        n_horizon=det.get("n_horizon", 3.0),
        max_horizon=det.get("max_horizon", 50.0),
        settle_time=det.get("settle_time", 0.0),
    )


def load_scenario(path) -> Scenario:
    with open(path) as fh:
        return parse_scenario(json.load(fh))
