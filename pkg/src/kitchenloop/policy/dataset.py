"""Demonstration records, JSONL serialization, and the synthetic reach corpus.

The synthetic tasks are "reach the <class>" scenes: the target object plus
one or two objects of other classes on the table; the demonstrated
trajectory moves the gripper from home to the target center and pauses
there, so keyframe extraction yields the pause and final frames, whose
action target is the object center.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..canonical import canonical_dumps, derive_seed
from ..rng import DeterministicRng
from ..world.geometry import KITCHENS
from ..world.sim import ObservationConfig, observe
from ..world.types import (
    DEFAULT_EXTENTS,
    GRIPPER_HOME,
    OBJECT_CLASSES,
    FixtureState,
    GripperState,
    WorldState,
    make_object,
)
from .keyframes import extract_keyframes
from .rotation import rotation_one_hot
from .types import KeyframeAction, PolicyError

SCHEMA_VERSION = 1

REACH_TEMPLATES = (
    "reach the pineapple",
    "reach the starfruit",
    "reach the milk",
    "reach the duck",
    "reach the bowl",
)


def template_target_class(template_id: str) -> str:
    prefix = "reach the "
    if not template_id.startswith(prefix) or template_id[len(prefix):] not in OBJECT_CLASSES:
        raise PolicyError(f"not a reach template: {template_id!r}")
    return template_id[len(prefix):]


@dataclass
class Demonstration:
    cloud_xyz: np.ndarray
    cloud_sem: np.ndarray
    poses: np.ndarray        # T x 4
    open_flags: list[bool]
    template_id: str
    keyframes: list[int]
    actions: list[KeyframeAction]

    def __post_init__(self):
        if list(self.keyframes) != sorted(set(self.keyframes)):
            raise PolicyError("keyframe indices must be strictly increasing")
        if not self.keyframes or self.keyframes[-1] != len(self.poses) - 1:
            raise PolicyError("last timestep must be a keyframe")
        if len(self.actions) != len(self.keyframes):
            raise PolicyError("one action per keyframe required")

    @classmethod
    def from_trajectory(cls, cloud_xyz, cloud_sem, poses, open_flags, template_id,
                        collide_flags=None) -> "Demonstration":
        poses = np.asarray(poses, dtype=float)
        keyframes = extract_keyframes(poses, open_flags)
        actions = []
        for k in keyframes:
            yaw_deg = math.degrees(poses[k, 3]) % 360.0
            actions.append(KeyframeAction(
                a_trans=poses[k, :3],
                a_rot=rotation_one_hot((0.0, 0.0, yaw_deg)),
                a_open=1.0 if open_flags[k] else 0.0,
                a_collide=float(collide_flags[k]) if collide_flags is not None else 0.0,
            ))
        return cls(cloud_xyz=np.asarray(cloud_xyz, dtype=float),
                   cloud_sem=np.asarray(cloud_sem, dtype=float),
                   poses=poses, open_flags=[bool(f) for f in open_flags],
                   template_id=template_id, keyframes=keyframes, actions=actions)

    def to_doc(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "template_id": self.template_id,
            "n_points": int(self.cloud_xyz.shape[0]),
            "c_sem": int(self.cloud_sem.shape[1]),
            "cloud_xyz": self.cloud_xyz.ravel().tolist(),
            "cloud_sem": self.cloud_sem.ravel().tolist(),
            "poses": self.poses.ravel().tolist(),
            "open_flags": self.open_flags,
            "keyframes": list(self.keyframes),
            "actions": [a.to_doc() for a in self.actions],
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "Demonstration":
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise PolicyError(f"unsupported demonstration schema {doc.get('schema_version')!r}")
        n, c = doc["n_points"], doc["c_sem"]
        actions = []
        for adoc in doc["actions"]:
            rot = np.zeros((3, 72))
            rot[np.arange(3), adoc["rot_bins"]] = 1.0
            actions.append(KeyframeAction(a_trans=np.array(adoc["a_trans"]), a_rot=rot,
                                          a_open=adoc["a_open"], a_collide=adoc["a_collide"]))
        return cls(
            cloud_xyz=np.array(doc["cloud_xyz"], dtype=float).reshape(n, 3),
            cloud_sem=np.array(doc["cloud_sem"], dtype=float).reshape(n, c),
            poses=np.array(doc["poses"], dtype=float).reshape(-1, 4),
            open_flags=[bool(f) for f in doc["open_flags"]],
            template_id=doc["template_id"],
            keyframes=list(doc["keyframes"]),
            actions=actions,
        )


def save_dataset(path, demos: list[Demonstration]) -> None:
    lines = [canonical_dumps(d.to_doc()) for d in demos]
    Path(path).write_text("\n".join(lines) + "\n")


def load_dataset(path) -> list[Demonstration]:
    demos = []
    for i, line in enumerate(Path(path).read_text().splitlines()):
        if not line.strip():
            continue
        try:
            demos.append(Demonstration.from_doc(json.loads(line)))
        except (json.JSONDecodeError, KeyError) as exc:
            raise PolicyError(f"bad demonstration on line {i + 1}: {exc}") from exc
    return demos


def _place_on_table(rng: DeterministicRng, cls: str, taken: list, geometry) -> tuple:
    table = geometry.table
    hx, hy, hz = DEFAULT_EXTENTS[cls]
    for _ in range(100):
        x = rng.uniform(table.lo[0] + 0.06, table.hi[0] - 0.06)
        y = rng.uniform(table.lo[1] + 0.06, table.hi[1] - 0.06)
        if all((x - tx) ** 2 + (y - ty) ** 2 > 0.12 ** 2 for tx, ty in taken):
            taken.append((x, y))
            return (float(x), float(y), float(hz), float(rng.uniform(0.0, 2 * math.pi)))
    raise PolicyError("could not place object without overlap")


def make_reach_scene(template_id: str, seed: int, kitchen: str = "default",
                     n_points: int = 256):
    """One synthetic scene: returns (observation, reach waypoint (3,)).

    The waypoint is the top-center of the target object, the natural hover
    point a reach demonstration ends at.
    """
    target_cls = template_target_class(template_id)
    rng = DeterministicRng(seed)
    geometry = KITCHENS[kitchen]
    taken: list = []
    objects = {}
    pose = _place_on_table(rng, target_cls, taken, geometry)
    objects["target_0"] = make_object("target_0", target_cls, "table", pose)
    others = [c for c in OBJECT_CLASSES if c != target_cls]
    n_extra = 1 + int(rng.integers(0, 2))
    for j in range(n_extra):
        cls = others[int(rng.integers(0, len(others)))]
        opose = _place_on_table(rng, cls, taken, geometry)
        objects[f"extra_{j}"] = make_object(f"extra_{j}", cls, "table", opose)
    state = WorldState(
        objects=objects,
        fixtures=FixtureState(drawer_left_open=False, drawer_right_open=False,
                              faucet_on=False, geometry=geometry),
        gripper=GripperState(),
        step=0,
        rng=rng.spawn("world"),
    )
    obs = observe(state, ObservationConfig(n_points=n_points))
    target = np.array(objects["target_0"].pose[:3])
    target[2] += DEFAULT_EXTENTS[target_cls][2]
    return obs, target


def make_reach_demo(template_id: str, seed: int, kitchen: str = "default",
                    n_points: int = 256) -> Demonstration:
    obs, target = make_reach_scene(template_id, seed, kitchen, n_points)
    home = np.array(GRIPPER_HOME[:3])
    steps = [home + (target - home) * t / 4.0 for t in range(5)]
    steps += [target, target]  # pause at the target
    poses = np.zeros((len(steps), 4))
    poses[:, :3] = np.stack(steps)
    open_flags = [True] * len(steps)
    return Demonstration.from_trajectory(obs.cloud_xyz, obs.cloud_sem, poses,
                                         open_flags, template_id)


def make_reach_dataset(templates, demos_per_task: int, seed: int,
                       kitchen: str = "default", n_points: int = 256) -> list[Demonstration]:
    demos = []
    for template_id in templates:
        for i in range(demos_per_task):
            demo_seed = derive_seed("reach-demo", kitchen, template_id, i, seed)
            demos.append(make_reach_demo(template_id, demo_seed, kitchen, n_points))
    return demos
