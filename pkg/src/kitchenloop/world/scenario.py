"""Scenario documents: validation, loading, canonical state serialization.

A scenario is a JSON document::

    {
      "schema_version": 1,
      "name": "wash_pineapple",      # optional
      "seed": 7,
      "kitchen": "default",
      "objects": [{"id", "class", "location", "pose", "extent"?}, ...],
      "fixtures": {"drawer_left_open", "drawer_right_open", "faucet_on"},
      "disturbances": [{"kind", "payload", "trigger"?}, ...],
      "instruction": "...",          # optional
      "goal": {...predicate doc...}  # optional
    }

Validation errors name the offending field, e.g. ``objects[1].class``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..canonical import canonical_bytes
from ..rng import DeterministicRng
from .geometry import KITCHENS
from .types import (
    DEFAULT_EXTENTS,
    LOCATIONS,
    OBJECT_CLASSES,
    Disturbance,
    FixtureState,
    GripperState,
    InvariantError,
    ObjectState,
    WorldState,
)

SCHEMA_VERSION = 1


class ScenarioError(Exception):
    """Scenario document failed validation; message names the field."""


def _require(doc: dict, key: str, kind, where: str):
    if key not in doc:
        raise ScenarioError(f"missing field {where}{key}")
    value = doc[key]
    if kind is float:
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ScenarioError(f"field {where}{key} must be a number")
        return float(value)
    if not isinstance(value, kind):
        raise ScenarioError(f"field {where}{key} must be {kind.__name__}")
    return value


@dataclass
class Scenario:
    """Parsed scenario: initial-state builder plus episode metadata."""

    name: str
    seed: int
    kitchen: str
    objects: list[dict]
    fixtures: dict
    disturbances: list[Disturbance] = field(default_factory=list)
    instruction: str | None = None
    goal: dict | None = None
    holding: str | None = None

    def initial_state(self) -> WorldState:
        geometry = KITCHENS[self.kitchen]
        objects: dict[str, ObjectState] = {}
        for doc in self.objects:
            obj = ObjectState.from_doc({"extent": list(DEFAULT_EXTENTS[doc["class"]]), **doc})
            objects[obj.id] = obj
        gripper = GripperState()
        if self.holding is not None:
            held = objects[self.holding]
            gripper = GripperState(pose=held.pose, open=False, holding=held.id)
        state = WorldState(
            objects=objects,
            fixtures=FixtureState(
                drawer_left_open=bool(self.fixtures["drawer_left_open"]),
                drawer_right_open=bool(self.fixtures["drawer_right_open"]),
                faucet_on=bool(self.fixtures["faucet_on"]),
                geometry=geometry,
            ),
            gripper=gripper,
            step=0,
            rng=DeterministicRng(self.seed),
        )
        state.validate()
        return state


def parse_scenario(doc: dict) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be an object")
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ScenarioError(f"field schema_version: unsupported version {version!r}")
    name = doc.get("name", "")
    if not isinstance(name, str):
        raise ScenarioError("field name must be str")
    seed = _require(doc, "seed", int, "")
    kitchen = doc.get("kitchen", "default")
    if kitchen not in KITCHENS:
        raise ScenarioError(f"field kitchen: unknown kitchen {kitchen!r}")

    raw_objects = _require(doc, "objects", list, "")
    seen: set[str] = set()
    objects: list[dict] = []
    for i, odoc in enumerate(raw_objects):
        where = f"objects[{i}]."
        if not isinstance(odoc, dict):
            raise ScenarioError(f"field objects[{i}] must be an object")
        oid = _require(odoc, "id", str, where)
        if oid in seen:
            raise ScenarioError(f"field objects[{i}].id: duplicate object id {oid!r}")
        seen.add(oid)
        cls = _require(odoc, "class", str, where)
        if cls not in OBJECT_CLASSES:
            raise ScenarioError(f"field objects[{i}].class: unknown class {cls!r}")
        location = _require(odoc, "location", str, where)
        if location not in LOCATIONS:
            raise ScenarioError(f"field objects[{i}].location: unknown location {location!r}")
        pose = _require(odoc, "pose", list, where)
        if len(pose) != 4 or not all(isinstance(v, (int, float)) for v in pose):
            raise ScenarioError(f"field objects[{i}].pose must be [x, y, z, yaw]")
        entry = {"id": oid, "class": cls, "location": location, "pose": [float(v) for v in pose]}
        if "extent" in odoc:
            extent = odoc["extent"]
            if not isinstance(extent, list) or len(extent) != 3:
                raise ScenarioError(f"field objects[{i}].extent must be [hx, hy, hz]")
            entry["extent"] = [float(v) for v in extent]
        objects.append(entry)

    raw_fixtures = _require(doc, "fixtures", dict, "")
    fixtures = {}
    for key in ("drawer_left_open", "drawer_right_open", "faucet_on"):
        fixtures[key] = bool(_require(raw_fixtures, key, bool, "fixtures."))

    disturbances = []
    for i, ddoc in enumerate(doc.get("disturbances", [])):
        try:
            disturbances.append(Disturbance.from_doc(ddoc))
        except (KeyError, InvariantError, TypeError) as exc:
            raise ScenarioError(f"field disturbances[{i}]: {exc}") from exc

    holding = doc.get("holding")
    if holding is not None and holding not in seen:
        raise ScenarioError(f"field holding: unknown object id {holding!r}")

    scenario = Scenario(
        name=name,
        seed=seed,
        kitchen=kitchen,
        objects=objects,
        fixtures=fixtures,
        disturbances=disturbances,
        instruction=doc.get("instruction"),
        goal=doc.get("goal"),
        holding=holding,
    )
    # Fail fast on geometry violations (pose outside the location's region).
    try:
        scenario.initial_state()
    except InvariantError as exc:
        raise ScenarioError(str(exc)) from exc
    return scenario


def load_scenario(source) -> WorldState:
    """Build the initial WorldState from a scenario document, path, or JSON text."""
    if isinstance(source, (str, Path)) and Path(str(source)).exists():
        doc = json.loads(Path(source).read_text())
    elif isinstance(source, str):
        doc = json.loads(source)
    else:
        doc = source
    return parse_scenario(doc).initial_state()


def canonical_state(state: WorldState) -> bytes:
    """Byte-stable serialization of a world state (sorted keys, 6-decimal floats)."""
    return canonical_bytes(state.to_doc())
