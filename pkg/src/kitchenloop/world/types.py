"""Domain types for the simulated kitchen."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

from ..canonical import q6, q6_tuple
from ..rng import DeterministicRng
from .geometry import KITCHENS, KitchenGeometry, Pose

OBJECT_CLASSES = ("pineapple", "starfruit", "milk", "duck", "pan", "bowl", "distractor")
FRUIT_CLASSES = ("pineapple", "starfruit")
LOCATIONS = ("table", "sink", "drawer_left", "drawer_right", "gripper", "absent")
STORABLE_LOCATIONS = ("table", "sink", "drawer_left", "drawer_right")
SKILLS = ("grasp", "place", "turn", "open", "close")

# Semantic channels: one per object class plus a shared fixture channel.
SEMANTIC_CLASSES = OBJECT_CLASSES + ("fixture",)

# Axis-aligned half sizes in meters, per class.
DEFAULT_EXTENTS = {
    "pineapple": (0.040, 0.040, 0.060),
    "starfruit": (0.035, 0.035, 0.030),
    "milk": (0.030, 0.030, 0.070),
    "duck": (0.030, 0.030, 0.030),
    "pan": (0.090, 0.060, 0.020),
    "bowl": (0.060, 0.060, 0.030),
    "distractor": (0.030, 0.030, 0.030),
}

GRASP_TOLERANCE = 0.03   # radius around the object grasp point
FIXTURE_TOLERANCE = 0.03  # radius around a fixture handle

GRIPPER_HOME: Pose = (0.0, 0.0, 0.35, 0.0)


class WorldError(Exception):
    """Base class for simulator errors (as opposed to in-world failures)."""


class InvariantError(WorldError):
    pass


@dataclass
class ObjectState:
    id: str
    cls: str
    pose: Pose
    location: str
    extent: tuple[float, float, float]

    def __post_init__(self):
        if self.cls not in OBJECT_CLASSES:
            raise InvariantError(f"object {self.id!r}: unknown class {self.cls!r}")
        if self.location not in LOCATIONS:
            raise InvariantError(f"object {self.id!r}: unknown location {self.location!r}")
        self.pose = q6_tuple(self.pose)
        self.extent = q6_tuple(self.extent)

    def to_doc(self) -> dict:
        return {
            "id": self.id,
            "class": self.cls,
            "pose": list(self.pose),
            "location": self.location,
            "extent": list(self.extent),
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "ObjectState":
        return cls(
            id=doc["id"],
            cls=doc["class"],
            pose=tuple(doc["pose"]),
            location=doc["location"],
            extent=tuple(doc["extent"]),
        )


@dataclass
class FixtureState:
    drawer_left_open: bool
    drawer_right_open: bool
    faucet_on: bool
    geometry: KitchenGeometry

    def drawer_open(self, name: str) -> bool:
        if name == "drawer_left":
            return self.drawer_left_open
        if name == "drawer_right":
            return self.drawer_right_open
        raise InvariantError(f"not a drawer: {name!r}")

    def to_doc(self) -> dict:
        return {
            "drawer_left_open": self.drawer_left_open,
            "drawer_right_open": self.drawer_right_open,
            "faucet_on": self.faucet_on,
            "kitchen": self.geometry.name,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "FixtureState":
        return cls(
            drawer_left_open=bool(doc["drawer_left_open"]),
            drawer_right_open=bool(doc["drawer_right_open"]),
            faucet_on=bool(doc["faucet_on"]),
            geometry=KITCHENS[doc.get("kitchen", "default")],
        )


@dataclass
class GripperState:
    pose: Pose = GRIPPER_HOME
    open: bool = True
    holding: str | None = None

    def __post_init__(self):
        self.pose = q6_tuple(self.pose)

    def to_doc(self) -> dict:
        return {"pose": list(self.pose), "open": self.open, "holding": self.holding}

    @classmethod
    def from_doc(cls, doc: dict) -> "GripperState":
        return cls(pose=tuple(doc["pose"]), open=bool(doc["open"]), holding=doc["holding"])


@dataclass
class WorldState:
    objects: dict[str, ObjectState]
    fixtures: FixtureState
    gripper: GripperState = field(default_factory=GripperState)
    step: int = 0
    rng: DeterministicRng = field(default_factory=lambda: DeterministicRng(0))

    def copy(self) -> "WorldState":
        return copy.deepcopy(self)

    def validate(self) -> None:
        """Check structural invariants; raises InvariantError on violation."""
        holding = self.gripper.holding
        if holding is not None:
            if holding not in self.objects:
                raise InvariantError(f"gripper holds unknown object {holding!r}")
            if self.gripper.open:
                raise InvariantError("gripper cannot be open while holding")
            if self.objects[holding].location != "gripper":
                raise InvariantError(f"held object {holding!r} not at location gripper")
        for obj in self.objects.values():
            if obj.location == "gripper":
                if holding != obj.id:
                    raise InvariantError(f"object {obj.id!r} at gripper but not held")
                if obj.pose != self.gripper.pose:
                    raise InvariantError(f"held object {obj.id!r} does not track gripper pose")
            elif obj.location != "absent":
                region = self.fixtures.geometry.region(obj.location)
                if region is None or not region.contains(obj.pose[:3]):
                    raise InvariantError(
                        f"object {obj.id!r} pose {obj.pose[:3]} outside region {obj.location!r}"
                    )
        if self.step < 0:
            raise InvariantError("negative step counter")

    def to_doc(self) -> dict:
        return {
            "objects": {oid: self.objects[oid].to_doc() for oid in sorted(self.objects)},
            "fixtures": self.fixtures.to_doc(),
            "gripper": self.gripper.to_doc(),
            "step": self.step,
            "rng": self.rng.state_dict(),
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "WorldState":
        return cls(
            objects={oid: ObjectState.from_doc(d) for oid, d in doc["objects"].items()},
            fixtures=FixtureState.from_doc(doc["fixtures"]),
            gripper=GripperState.from_doc(doc["gripper"]),
            step=int(doc["step"]),
            rng=DeterministicRng.from_state(doc["rng"]),
        )


@dataclass(frozen=True)
class NoiseSpec:
    """Uniform pose-noise box added to commanded poses when enabled."""

    dx_range: tuple[float, float] = (0.0, 0.0)
    dy_range: tuple[float, float] = (0.0, 0.0)
    dz_range: tuple[float, float] = (0.0, 0.0)
    enabled: bool = False

    def __post_init__(self):
        for name in ("dx_range", "dy_range", "dz_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise InvariantError(f"{name}: lower bound {lo} exceeds upper bound {hi}")

    @classmethod
    def disabled(cls) -> "NoiseSpec":
        return cls()

    def to_doc(self) -> dict:
        return {
            "dx_range": list(self.dx_range),
            "dy_range": list(self.dy_range),
            "dz_range": list(self.dz_range),
            "enabled": self.enabled,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "NoiseSpec":
        return cls(
            dx_range=tuple(doc.get("dx_range", (0.0, 0.0))),
            dy_range=tuple(doc.get("dy_range", (0.0, 0.0))),
            dz_range=tuple(doc.get("dz_range", (0.0, 0.0))),
            enabled=bool(doc.get("enabled", False)),
        )


DISTURBANCE_KINDS = ("add_object", "remove_object", "move_object", "set_fixture")


@dataclass(frozen=True)
class Disturbance:
    """Externally injected scene change.

    ``trigger`` is either ``"immediate"`` or ``{"at_step": k}``; scheduled
    disturbances are applied at the first loop boundary where the world
    step counter has reached ``k``.
    """

    kind: str
    payload: dict
    trigger: object = "immediate"

    def __post_init__(self):
        if self.kind not in DISTURBANCE_KINDS:
            raise InvariantError(f"unknown disturbance kind {self.kind!r}")
        if self.trigger != "immediate":
            if not (isinstance(self.trigger, dict) and "at_step" in self.trigger):
                raise InvariantError(f"bad disturbance trigger {self.trigger!r}")

    @property
    def at_step(self) -> int | None:
        if self.trigger == "immediate":
            return None
        return int(self.trigger["at_step"])

    def to_doc(self) -> dict:
        trigger = self.trigger if self.trigger == "immediate" else {"at_step": self.at_step}
        return {"kind": self.kind, "payload": self.payload, "trigger": trigger}

    @classmethod
    def from_doc(cls, doc: dict) -> "Disturbance":
        trigger = doc.get("trigger", "immediate")
        if isinstance(trigger, dict):
            trigger = {"at_step": int(trigger["at_step"])}
        return cls(kind=doc["kind"], payload=dict(doc["payload"]), trigger=trigger)


class SkillCallError(WorldError):
    """Malformed skill call; distinct from an in-world execution failure."""


@dataclass(frozen=True)
class SkillCall:
    skill: str
    commanded_pose: Pose
    target_object: str | None = None
    target_location: str | None = None

    def __post_init__(self):
        if self.skill not in SKILLS:
            raise SkillCallError(f"unknown skill {self.skill!r}")
        if len(self.commanded_pose) != 4:
            raise SkillCallError("commanded_pose must be (x, y, z, yaw)")
        object.__setattr__(self, "commanded_pose", q6_tuple(self.commanded_pose))
        if self.skill == "grasp" and not self.target_object:
            raise SkillCallError("grasp requires target_object")
        if self.skill == "place":
            if not self.target_location:
                raise SkillCallError("place requires target_location")
            if self.target_location not in STORABLE_LOCATIONS:
                raise SkillCallError(f"cannot place into {self.target_location!r}")
        if self.skill in ("open", "close") and self.target_location not in (
            "drawer_left",
            "drawer_right",
        ):
            raise SkillCallError(f"{self.skill} requires a drawer target_location")

    def to_doc(self) -> dict:
        return {
            "skill": self.skill,
            "commanded_pose": list(self.commanded_pose),
            "target_object": self.target_object,
            "target_location": self.target_location,
        }


@dataclass(frozen=True)
class SkillOutcome:
    success: bool
    perturbed_pose: Pose
    violated_precondition: str | None = None

    def to_doc(self) -> dict:
        return {
            "success": self.success,
            "perturbed_pose": list(self.perturbed_pose),
            "violated_precondition": self.violated_precondition,
        }


def make_object(oid: str, cls: str, location: str, pose, extent=None) -> ObjectState:
    if extent is None:
        extent = DEFAULT_EXTENTS[cls]
    return ObjectState(id=oid, cls=cls, pose=tuple(pose), location=location, extent=tuple(extent))


def q6_pose(pose) -> Pose:
    x, y, z, yaw = pose
    return (q6(x), q6(y), q6(z), q6(yaw))
