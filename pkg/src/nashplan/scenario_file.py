"""JSON scenario files: schema, validation, dotted overrides, conversion."""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Optional

import jsonschema

from .agents import AgentSpec, AgentState, BicycleParams, SearchParams
from .costs import CostWeights
from .dmpc import DmpcConfig, DmpcWeights
from .geometry import Point2, Polyline
from .nash_planner import NashConfig
from .sim import PLANNERS, DmpcSettings, Randomization, Scenario
from .speed import SpeedModParams

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_nonneg = {"type": "number", "minimum": 0}
_xy = {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}

_dmpc_weights = {
    "type": "object",
    "description": "q1/q2 tracking weights (1/m^2, scalar or one per horizon step), p1 (s^4/m^2), p2 (1/rad^2), k repulsion gain, r softening (m^2)",
    "properties": {
        "q1": {"oneOf": [_nonneg, {"type": "array", "items": _nonneg}]},
        "q2": {"oneOf": [_nonneg, {"type": "array", "items": _nonneg}]},
        "p1": _nonneg,
        "p2": _nonneg,
        "k": _nonneg,
        "r": _pos,
    },
    "additionalProperties": False,
}

SCHEMA: dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "scenario",
    "description": "All quantities SI: metres, seconds, radians, m/s, m/s^2.",
    "type": "object",
    "required": ["agents", "search", "speed_mod", "sim"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "description": {"type": "string"},
        "agents": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["id", "role", "initial"],
                "additionalProperties": False,
                "properties": {
                    "id": {"type": "string", "minLength": 1},
                    "role": {"enum": ["ego", "vehicle", "pedestrian"]},
                    "initial": {
                        "type": "object",
                        "required": ["x", "y", "heading", "speed"],
                        "additionalProperties": False,
                        "properties": {"x": _num, "y": _num, "heading": {"type": "number", "description": "rad"}, "speed": {**_nonneg, "description": "m/s"}},
                    },
                    "reference_path": {"type": "array", "items": _xy, "minItems": 2},
                    "goal": _xy,
                    "branch_count": {"type": "integer", "minimum": 1},
                    "desired_speed": _nonneg,
                },
            },
        },
        "search": {
            "type": "object",
            "required": ["k_v", "delta_theta"],
            "additionalProperties": False,
            "properties": {
                "k_v": {**_pos, "description": "s; displacement length = k_v * speed"},
                "delta_theta": {**_pos, "description": "rad"},
                "depth": {"type": "integer", "minimum": 1},
                "horizon": {"type": "integer", "minimum": 1, "description": "planning ticks rolled out per replan"},
                "cell_budget": {"type": "integer", "minimum": 1},
            },
        },
        "speed_mod": {
            "type": "object",
            "required": ["z", "delta_v"],
            "additionalProperties": False,
            "properties": {"z": {**_pos, "description": "m"}, "delta_v": {**_pos, "description": "m/s per tick"}, "v_min": _nonneg, "v_max": _pos},
        },
        "costs": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"lane": _nonneg, "dist": _nonneg, "goal": _nonneg},
        },
        "vehicle": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"l_f": _pos, "l_r": _pos, "a_max": _pos, "delta_max": _pos},
        },
        "dmpc": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "weights": _dmpc_weights,
                "weights_other": _dmpc_weights,
                "horizon": {"type": "integer", "minimum": 1},
                "dt": _pos,
                "alpha": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "epsilons": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {"epsilon": _pos, "tau": _pos},
                },
                "q_max": {"type": "integer", "minimum": 1},
                "inner": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {"step_size": _pos, "iters": {"type": "integer", "minimum": 1}, "fd_step": _pos, "grad_tol": _pos},
                },
            },
        },
        "sim": {
            "type": "object",
            "required": ["duration", "tick"],
            "additionalProperties": False,
            "properties": {
                "duration": {**_pos, "description": "s"},
                "tick": {**_pos, "description": "s"},
                "seed": {"type": "integer", "minimum": 0},
                "noise_std": {**_nonneg, "description": "rad"},
                "planner": {"enum": list(PLANNERS)},
                "lookahead": {**_pos, "description": "m"},
                "goal_tolerance": _pos,
                "collision_radius": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {"ego": _pos, "vehicle": _pos, "pedestrian": _pos},
                },
                "randomize": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {"position": _nonneg, "speed": _nonneg},
                },
            },
        },
    },
}


class ScenarioError(ValueError):
    """Scenario file failed to parse or validate; ``errors`` lists every finding."""

    def __init__(self, errors: list[str], warnings: Optional[list[str]] = None):
        self.errors = list(errors)
        self.warnings = list(warnings or [])
        super().__init__("; ".join(self.errors))


@dataclass
class LoadedScenario:
    scenario: Scenario
    document: dict
    warnings: list[str] = field(default_factory=list)


def bundled_path(name: str) -> Path:
    fname = name if name.endswith(".json") else name + ".json"
    return Path(str(resources.files("nashplan") / "scenarios" / fname))


def resolve_path(path_or_name: str | Path) -> Path:
    p = Path(path_or_name)
    if p.exists():
        return p
    b = bundled_path(str(path_or_name))
    if b.exists():
        return b
    raise ScenarioError([f"{path_or_name}: no such file or bundled scenario"])


def read_document(path: str | Path) -> dict:
    p = resolve_path(path)
    text = p.read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError([f"{p}: line {exc.lineno} column {exc.colno}: {exc.msg}"]) from None


def _parse_value(raw: str) -> Any:
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def apply_overrides(doc: dict, overrides: list[str]) -> dict:
    """Apply ``a.b.c=value`` assignments; integer path parts index into lists."""
    doc = copy.deepcopy(doc)
    for item in overrides or []:
        if "=" not in item:
            raise ScenarioError([f"override {item!r}: expected key=value"])
        key, raw = item.split("=", 1)
        parts = key.strip().split(".")
        node = doc
        try:
            for part in parts[:-1]:
                if isinstance(node, list):
                    node = node[int(part)]
                else:
                    node = node.setdefault(part, {})
            last = parts[-1]
            if isinstance(node, list):
                node[int(last)] = _parse_value(raw)
            elif isinstance(node, dict):
                node[last] = _parse_value(raw)
            else:
                raise TypeError(f"{'.'.join(parts[:-1])} is not an object or list")
        except (IndexError, ValueError, TypeError, AttributeError) as exc:
            raise ScenarioError([f"override {item!r}: {exc}"]) from None
    return doc


def _where(path) -> str:
    out = ""
    for p in path:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out or "<root>"


def validate_document(doc: Any) -> tuple[list[str], list[str]]:
    """Return ``(errors, warnings)`` for a parsed scenario document."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = [
        f"{_where(e.absolute_path)}: {e.message}"
        for e in sorted(validator.iter_errors(doc), key=lambda e: [str(p) for p in e.absolute_path])
    ]
    warns: list[str] = []
    if not isinstance(doc, dict) or not isinstance(doc.get("agents"), list):
        return errors, warns
    agents = [a for a in doc["agents"] if isinstance(a, dict)]
    n_ego = sum(a.get("role") == "ego" for a in agents)
    if n_ego != 1:
        errors.append(f"agents: scenario needs exactly one ego, found {n_ego}")
    ids = [a.get("id") for a in agents]
    if len(set(ids)) != len(ids):
        errors.append("agents: agent ids must be unique")
    for k, a in enumerate(agents):
        path = a.get("reference_path")
        if isinstance(path, list) and len(path) >= 2:
            try:
                Polyline(path)
            except (ValueError, TypeError) as exc:
                errors.append(f"agents[{k}].reference_path: {exc}")
        bc = a.get("branch_count", 5)
        if isinstance(bc, int) and bc % 2 == 0:
            warns.append(f"agents[{k}].branch_count: even value {bc} gives an asymmetric heading fan")
        if "reference_path" not in a and "goal" not in a:
            warns.append(f"agents[{k}]: no reference_path or goal, only the distance cost drives it")
    sm = doc.get("speed_mod")
    if isinstance(sm, dict):
        lo, hi = sm.get("v_min", 0.0), sm.get("v_max", math.inf)
        if isinstance(lo, (int, float)) and isinstance(hi, (int, float)) and not lo < hi:
            errors.append("speed_mod: v_min must be < v_max")
    sim = doc.get("sim", {})
    search = doc.get("search", {})
    if isinstance(sim, dict) and isinstance(search, dict):
        tick, kv = sim.get("tick"), search.get("k_v")
        if isinstance(tick, (int, float)) and isinstance(kv, (int, float)) and tick > 0 and abs(kv - tick) > 1e-12:
            warns.append(f"search.k_v ({kv}) differs from sim.tick ({tick}); predicted nodes will not match executed steps")
    return errors, warns


def _weights(d: Optional[dict]) -> DmpcWeights:
    return DmpcWeights(**(d or {}))


def build_scenario(doc: dict, name: str = "scenario") -> Scenario:
    agents = []
    for a in doc["agents"]:
        ini = a["initial"]
        agents.append(
            AgentSpec(
                id=a["id"],
                role=a["role"],
                initial_state=AgentState(Point2(ini["x"], ini["y"]), ini["heading"], ini["speed"]),
                reference_path=Polyline(a["reference_path"]) if "reference_path" in a else None,
                goal=Point2(*a["goal"]) if "goal" in a else None,
                branch_count=a.get("branch_count", 5),
                desired_speed=a.get("desired_speed"),
            )
        )
    s = doc["search"]
    sm = doc["speed_mod"]
    nash = NashConfig(
        search=SearchParams(s["k_v"], s["delta_theta"], s.get("depth", 1)),
        speed=SpeedModParams(sm["z"], sm["delta_v"], sm.get("v_min", 0.0), sm.get("v_max", math.inf)),
        weights=CostWeights(**doc.get("costs", {})),
        horizon=s.get("horizon", 1),
        **({"cell_budget": s["cell_budget"]} if "cell_budget" in s else {}),
    )
    dm = doc.get("dmpc", {})
    inner = dm.get("inner", {})
    eps = dm.get("epsilons", {})
    cfg_kw = {
        "horizon": dm.get("horizon"),
        "alpha": dm.get("alpha"),
        "q_max": dm.get("q_max"),
        "epsilon": eps.get("epsilon"),
        "tau": eps.get("tau"),
        "step_size": inner.get("step_size"),
        "inner_iters": inner.get("iters"),
        "fd_step": inner.get("fd_step"),
        "grad_tol": inner.get("grad_tol"),
    }
    we = _weights(dm.get("weights"))
    dmpc = DmpcSettings(
        weights_e=we,
        weights_h=_weights(dm["weights_other"]) if "weights_other" in dm else we,
        config=DmpcConfig(**{k: v for k, v in cfg_kw.items() if v is not None}),
        dt=dm.get("dt"),
    )
    sim = doc["sim"]
    radius = {"ego": 1.0, "vehicle": 1.0, "pedestrian": 0.5}
    radius.update(sim.get("collision_radius", {}))
    rnd = sim.get("randomize", {})
    return Scenario(
        name=doc.get("name", name),
        agents=tuple(agents),
        duration=sim["duration"],
        tick=sim["tick"],
        planner=sim.get("planner", "nash"),
        nash=nash,
        dmpc=dmpc,
        bicycle=BicycleParams(**doc.get("vehicle", {})),
        noise_std=sim.get("noise_std", 0.0),
        seed=sim.get("seed", 0),
        lookahead=sim.get("lookahead", 3.0),
        collision_radius=radius,
        goal_tolerance=sim.get("goal_tolerance", 0.5),
        randomize=Randomization(rnd.get("position", 0.0), rnd.get("speed", 0.0)),
    )


def load_scenario(path: str | Path, overrides: Optional[list[str]] = None) -> LoadedScenario:
    p = resolve_path(path)
    doc = apply_overrides(read_document(p), overrides or [])
    errors, warns = validate_document(doc)
    if errors:
        raise ScenarioError(errors, warns)
    try:
        sc = build_scenario(doc, name=p.stem)
    except (ValueError, TypeError) as exc:
        raise ScenarioError([str(exc)], warns) from None
    return LoadedScenario(sc, doc, warns)
