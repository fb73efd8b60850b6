"""Scenario files: parsing, schema checks, and world construction.

A scenario is a YAML mapping (see ``docs/scenario-format.md``). Bundled
scenarios ship inside the package and can be referred to by name.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import Any, Optional, Union

import jsonschema
import numpy as np
import yaml

from .engine import EngineParams, StopPredicate
from .model import (
    SETTABLE,
    Channel,
    ChannelSetting,
    Entity,
    Environment,
    Goal,
    GoalKind,
    Pose,
    Preference,
    World,
    bearing,
    require_valid,
    select_goal,
)
from .signals import DEFAULT_CHANNEL_PARAMS, AlignmentModel, ChannelParams
from .strategy import EffortPlan, Movement

SCHEMA_VERSION = 1
BUNDLED = (
    "fig4",
    "two_agent_engage",
    "group_of_three",
    "occluded_observer",
    "occluded_observer_full",
    "noisy_room",
    "random_crowd",
)


class ScenarioError(Exception):
    exit_code = 2


class ScenarioParseError(ScenarioError):
    def __init__(self, message: str, line: int = 1, column: int = 1):
        self.line, self.column = line, column
        super().__init__(f"line {line}, column {column}: {message}")


class ScenarioSchemaError(ScenarioError):
    exit_code = 1

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path or '<root>'}: {message}")


def _obj(properties: dict, required=()) -> dict:
    return {
        "type": "object",
        "additionalProperties": False,
        "properties": properties,
        "required": list(required),
    }


_num = {"type": "number"}
_nonneg = {"type": "number", "minimum": 0}
_point = {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}
_setting = _obj(
    {"magnitude": _nonneg, "contribution": _nonneg, "target": {"type": ["string", "null"]}},
    ["magnitude"],
)
_settable = {ch.value: _setting for ch in Channel if ch in SETTABLE}
_goal = _obj(
    {
        "kind": {"enum": [k.value for k in GoalKind]},
        "target": {"type": "string"},
        "priority": {"type": "integer"},
        "politeness_bound": {"type": "number", "exclusiveMinimum": 0},
    },
    ["kind"],
)
_entity = _obj(
    {
        "id": {"type": "string", "minLength": 1},
        "name": {"type": "string"},
        "position": _point,
        "heading": _num,
        "face": {"type": "string"},
        "body_radius": {"type": "number", "exclusiveMinimum": 0},
        "fov_half_angle": {"type": "number", "exclusiveMinimum": 0, "maximum": math.pi},
        "engageable": {"type": "boolean"},
        "focus": {"type": "string"},
        "preferences": _obj({ch.value: _nonneg for ch in Channel}),
        "channels": _obj(_settable),
        "goals": {"type": "array", "items": _goal},
    },
    ["id", "position"],
)
_channel_params = _obj(
    {
        "cone_half_angle": {"type": "number", "exclusiveMinimum": 0, "maximum": math.pi},
        "attenuation": _nonneg,
        "contact_threshold": {"type": ["number", "null"], "minimum": 0},
        "contact_reach": _nonneg,
    }
)
_engine_props = {}
for _f in fields(EngineParams):
    _engine_props[_f.name] = {"type": "boolean"} if isinstance(_f.default, bool) else _nonneg

SCENARIO_SCHEMA: dict = _obj(
    {
        "schema_version": {"type": "integer"},
        "name": {"type": "string"},
        "description": {"type": "string"},
        "seed": {"type": "integer"},
        "ticks": {"type": "integer", "minimum": 0},
        "environment": _obj(
            {
                "noise": _obj({ch.value: {"type": "number", "minimum": 0, "maximum": 1} for ch in Channel}),
                "bounds": {"type": "array", "items": _num, "minItems": 4, "maxItems": 4},
            }
        ),
        "alignment": _obj(
            {
                "channels": _obj({ch.value: _channel_params for ch in Channel}),
                "walking_magnitude": _nonneg,
                "bumping_magnitude": _nonneg,
            }
        ),
        "engine": _obj(_engine_props),
        "entities": {"type": "array", "items": _entity},
        "generate": _obj(
            {
                "n": {"type": "integer", "minimum": 1},
                "objects": {"type": "number", "minimum": 0, "maximum": 1},
                "goals": {"type": "number", "minimum": 0, "maximum": 1},
            },
            ["n"],
        ),
        "script": {
            "type": "array",
            "items": _obj(
                {
                    "tick": {"type": "integer", "minimum": 0},
                    "entity": {"type": "string"},
                    "channels": _obj(_settable),
                    "movement": _obj({"heading": _num, "speed": _nonneg}, ["heading"]),
                },
                ["tick", "entity"],
            ),
        },
        "stop": _obj(
            {"kind": {"enum": ["engaged", "focus"]}, "a": {"type": "string"}, "b": {"type": "string"}},
            ["kind", "a", "b"],
        ),
    },
    ["schema_version"],
)


@dataclass
class Scenario:
    name: str
    world: World
    params: EngineParams = field(default_factory=EngineParams)
    model: AlignmentModel = field(default_factory=AlignmentModel)
    script: dict[int, list[EffortPlan]] = field(default_factory=dict)
    stop: Optional[StopPredicate] = None
    ticks: int = 20
    seed: int = 0
    raw: dict = field(default_factory=dict)

    @property
    def hash(self) -> str:
        return scenario_hash(self.raw)

    @property
    def names(self) -> dict[str, str]:
        return {e.id: e.name for e in self.world.entities}


def scenario_hash(raw: dict) -> str:
    blob = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def bundled_path(name: str) -> Path:
    return Path(str(resources.files("engagesim") / "scenarios" / f"{name}.yaml"))


def resolve(path_or_name: Union[str, Path]) -> Path:
    p = Path(path_or_name)
    if p.exists() or p.suffix:
        return p
    return bundled_path(str(path_or_name))


def parse_scenario_text(text: str) -> dict:
    try:
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        line, col = (mark.line + 1, mark.column + 1) if mark else (1, 1)
        raise ScenarioParseError(exc.problem or str(exc), line, col) from exc
    except yaml.YAMLError as exc:
        raise ScenarioParseError(str(exc)) from exc
    if data is None:
        raise ScenarioParseError("empty scenario document")
    if not isinstance(data, dict):
        raise ScenarioParseError("scenario must be a mapping at the top level")
    return data


def check_schema(data: dict) -> None:
    validator = jsonschema.Draft202012Validator(SCENARIO_SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    if errors:
        err = errors[0]
        raise ScenarioSchemaError(err.message, "/".join(str(p) for p in err.absolute_path))
    if data["schema_version"] != SCHEMA_VERSION:
        raise ScenarioSchemaError(
            f"unsupported schema_version {data['schema_version']} (expected {SCHEMA_VERSION})",
            "schema_version",
        )
    has_entities = "entities" in data
    if has_entities == ("generate" in data):
        raise ScenarioSchemaError("exactly one of 'entities' or 'generate' is required")


def _setting(d: dict) -> ChannelSetting:
    return ChannelSetting(float(d["magnitude"]), float(d.get("contribution", 1.0)), d.get("target"))


def _settings(d: dict) -> dict[Channel, ChannelSetting]:
    return {Channel(k): _setting(v) for k, v in d.items()}


def _build_entities(specs: list[dict], kappa: float) -> list[Entity]:
    positions = {s["id"]: (float(s["position"][0]), float(s["position"][1])) for s in specs}
    out = []
    for i, s in enumerate(specs):
        pos = positions[s["id"]]
        heading = float(s.get("heading", 0.0))
        if "face" in s:
            if s["face"] not in positions:
                raise ScenarioSchemaError(f"unknown entity {s['face']!r}", f"entities/{i}/face")
            if positions[s["face"]] != pos:
                heading = bearing(pos, positions[s["face"]])
        goals = [
            Goal(
                GoalKind(g["kind"]),
                g.get("target"),
                int(g.get("priority", 0)),
                float(g.get("politeness_bound", kappa)),
            )
            for g in s.get("goals", [])
        ]
        out.append(
            Entity(
                id=s["id"],
                name=s.get("name", s["id"]),
                pose=Pose(pos, heading, float(s.get("body_radius", 0.3))),
                fov_half_angle=float(s.get("fov_half_angle", math.pi / 2)),
                engageable=bool(s.get("engageable", True)),
                preferences=Preference(
                    s["id"], {Channel(k): float(v) for k, v in s.get("preferences", {}).items()}
                ),
                focus=s.get("focus", s["id"]),
                goal=select_goal(goals),
                channel_settings=_settings(s.get("channels", {})),
            )
        )
    return out


def generate_entity_specs(
    n: int, seed: int, bounds=(0.0, 0.0, 20.0, 20.0), objects: float = 0.1, goals: float = 0.0
) -> list[dict]:
    """A random crowd in the raw scenario format; fully determined by ``seed``."""
    rng = np.random.default_rng(seed)
    xmin, ymin, xmax, ymax = bounds
    ids = [f"e{i:03d}" for i in range(n)]
    engageable = rng.random(n) >= objects
    specs = []
    for i, eid in enumerate(ids):
        spec: dict[str, Any] = {
            "id": eid,
            "position": [float(rng.uniform(xmin + 1, xmax - 1)), float(rng.uniform(ymin + 1, ymax - 1))],
            "heading": float(rng.uniform(0.0, 2.0 * math.pi)),
            "body_radius": float(rng.uniform(0.25, 0.35)),
            "fov_half_angle": float(rng.uniform(math.pi / 4, math.pi / 2)),
            "engageable": bool(engageable[i]),
            "preferences": {ch.value: float(rng.uniform(0.5, 1.5)) for ch in Channel},
            "channels": {"body": {"magnitude": float(rng.uniform(0.2, 1.0))}},
        }
        others = [j for j in range(n) if j != i]
        if engageable[i] and others:
            for ch, p in (("gaze", 0.7), ("gesture", 0.2), ("talking", 0.1)):
                if rng.random() < p:
                    spec["channels"][ch] = {
                        "magnitude": float(rng.uniform(0.2, 1.0)),
                        "target": ids[others[int(rng.integers(len(others)))]],
                    }
            partners = [j for j in others if engageable[j]]
            if partners and rng.random() < goals:
                spec["goals"] = [{"kind": "engage", "target": ids[partners[int(rng.integers(len(partners)))]]}]
        specs.append(spec)
    return specs


def build_scenario(data: dict, seed: Optional[int] = None) -> Scenario:
    """Turn a schema-checked mapping into a :class:`Scenario`.

    ``seed`` overrides the file's seed (and therefore any generated crowd).
    """
    check_schema(data)
    raw = copy.deepcopy(data)
    if seed is not None:
        raw["seed"] = int(seed)
    seed_value = int(raw.get("seed", 0))

    params = EngineParams(**raw.get("engine", {}))
    env_d = raw.get("environment", {})
    bounds = tuple(float(b) for b in env_d.get("bounds", (-50.0, -50.0, 50.0, 50.0)))
    environment = Environment(
        {Channel(k): float(v) for k, v in env_d.get("noise", {}).items()}, bounds
    )
    al = raw.get("alignment", {})
    channels = dict(DEFAULT_CHANNEL_PARAMS)
    for k, v in al.get("channels", {}).items():
        base = DEFAULT_CHANNEL_PARAMS[Channel(k)]
        channels[Channel(k)] = ChannelParams(
            float(v.get("cone_half_angle", base.cone_half_angle)),
            float(v.get("attenuation", base.attenuation)),
            v.get("contact_threshold", base.contact_threshold),
            float(v.get("contact_reach", base.contact_reach)),
        )
    model = AlignmentModel(
        channels,
        float(al.get("walking_magnitude", 0.3)),
        float(al.get("bumping_magnitude", 2.0)),
    )

    if "generate" in raw:
        g = raw["generate"]
        specs = generate_entity_specs(
            g["n"], seed_value, bounds, g.get("objects", 0.1), g.get("goals", 0.0)
        )
    else:
        specs = raw["entities"]
    entities = _build_entities(specs, params.kappa)
    world = World(tuple(entities), environment, 0, seed_value)
    require_valid(world)

    script: dict[int, list[EffortPlan]] = {}
    for i, s in enumerate(raw.get("script", [])):
        if s["entity"] not in world:
            raise ScenarioSchemaError(f"unknown entity {s['entity']!r}", f"script/{i}/entity")
        mv = s.get("movement")
        plan = EffortPlan(
            s["entity"],
            _settings(s.get("channels", {})),
            Movement(float(mv["heading"]), float(mv.get("speed", 0.0))) if mv else None,
            reason="script",
        )
        script.setdefault(int(s["tick"]), []).append(plan)

    stop = None
    if "stop" in raw:
        st = raw["stop"]
        for key in ("a", "b"):
            if st[key] not in world:
                raise ScenarioSchemaError(f"unknown entity {st[key]!r}", f"stop/{key}")
        stop = StopPredicate(st["kind"], st["a"], st["b"])

    return Scenario(
        name=raw.get("name", "scenario"),
        world=world,
        params=params,
        model=model,
        script=script,
        stop=stop,
        ticks=int(raw.get("ticks", 20)),
        seed=seed_value,
        raw=raw,
    )


def load_scenario(path_or_name: Union[str, Path], seed: Optional[int] = None) -> Scenario:
    path = resolve(path_or_name)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
    return build_scenario(parse_scenario_text(text), seed)
