"""Core simulator operations: observe, apply_skill, inject_disturbance.

All three are functional: they never mutate their input state. ``observe``
draws from a stream derived from ``(seed, step)`` so observing a snapshot
is repeatable and does not advance the world's own stream; ``apply_skill``
consumes the world stream (noise draws are part of the state transition).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..canonical import derive_seed, digest
from ..rng import DeterministicRng
from .types import (
    FIXTURE_TOLERANCE,
    GRASP_TOLERANCE,
    SEMANTIC_CLASSES,
    Disturbance,
    InvariantError,
    NoiseSpec,
    ObjectState,
    SkillCall,
    SkillCallError,
    SkillOutcome,
    WorldState,
    make_object,
    q6_pose,
)


class DisturbanceError(Exception):
    pass


@dataclass(frozen=True)
class ObservationConfig:
    n_points: int = 4096
    include_cloud: bool = True


@dataclass
class Observation:
    """Synthetic point cloud plus a structured scene summary."""

    cloud_xyz: np.ndarray   # K x 3 float64
    cloud_sem: np.ndarray   # K x len(SEMANTIC_CLASSES) one-hot
    summary: dict
    step: int

    def to_doc(self) -> dict:
        return {
            "step": self.step,
            "summary": self.summary,
            "cloud_xyz": self.cloud_xyz.tolist(),
            "cloud_sem": self.cloud_sem.tolist(),
        }

    def digest(self) -> str:
        return digest(self.to_doc())


def _object_visible(state: WorldState, obj: ObjectState) -> bool:
    if obj.location == "absent":
        return False
    if obj.location in ("drawer_left", "drawer_right"):
        return state.fixtures.drawer_open(obj.location)
    return True


def scene_summary(state: WorldState) -> dict:
    """Sorted (class, location) pairs for visible objects plus fixture booleans."""
    pairs = sorted(
        (obj.cls, obj.location)
        for obj in state.objects.values()
        if _object_visible(state, obj)
    )
    return {
        "objects": [list(p) for p in pairs],
        "fixtures": {
            "drawer_left_open": state.fixtures.drawer_left_open,
            "drawer_right_open": state.fixtures.drawer_right_open,
            "faucet_on": state.fixtures.faucet_on,
        },
    }


def _sample_box_surface(rng, center, half, yaw: float, n: int) -> np.ndarray:
    """Uniform points on the surface of a yaw-rotated axis-aligned box."""
    hx, hy, hz = half
    areas = np.array([hy * hz, hy * hz, hx * hz, hx * hz, hx * hy, hx * hy]) * 4.0
    cum = np.cumsum(areas / areas.sum())
    u = rng.uniform(size=n)
    faces = np.searchsorted(cum, u, side="right").clip(0, 5)
    uv = rng.uniform(-1.0, 1.0, size=(n, 2))
    pts = np.zeros((n, 3))
    for face in range(6):
        mask = faces == face
        if not mask.any():
            continue
        axis, sign = divmod(face, 2)
        sign = 1.0 if sign == 0 else -1.0
        other = [a for a in range(3) if a != axis]
        pts[mask, axis] = sign * (hx, hy, hz)[axis]
        pts[mask, other[0]] = uv[mask, 0] * (hx, hy, hz)[other[0]]
        pts[mask, other[1]] = uv[mask, 1] * (hx, hy, hz)[other[1]]
    c, s = math.cos(yaw), math.sin(yaw)
    rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    return pts @ rot.T + np.asarray(center)


def _sample_rect(rng, lo, hi, n: int) -> np.ndarray:
    """Uniform points on an axis-aligned rectangle given by degenerate box corners."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    u = rng.uniform(size=(n, 3))
    return lo + u * (hi - lo)


def _fixture_elements(state: WorldState) -> list[tuple[str, dict]]:
    geo = state.fixtures.geometry
    elements: list[tuple[str, dict]] = []
    for name in ("drawer_left", "drawer_right"):
        box = geo.region(name)
        front_x = box.hi[0] if abs(box.hi[0]) < abs(box.lo[0]) else box.lo[0]
        elements.append(
            (
                f"{name}_front",
                {"kind": "rect", "lo": (front_x, box.lo[1], box.lo[2]), "hi": (front_x, box.hi[1], box.hi[2])},
            )
        )
        if state.fixtures.drawer_open(name):
            elements.append(
                (
                    f"{name}_cavity",
                    {"kind": "rect", "lo": (box.lo[0], box.lo[1], box.lo[2]), "hi": (box.hi[0], box.hi[1], box.lo[2])},
                )
            )
    handle = geo.faucet_handle
    elements.append(("faucet_handle", {"kind": "ball", "center": handle[:3], "radius": 0.015}))
    sink = geo.sink
    elements.append(
        ("sink_basin", {"kind": "rect", "lo": (sink.lo[0], sink.lo[1], sink.lo[2]), "hi": (sink.hi[0], sink.hi[1], sink.lo[2])})
    )
    table = geo.table
    elements.append(
        ("table_top", {"kind": "rect", "lo": (table.lo[0], table.lo[1], 0.0), "hi": (table.hi[0], table.hi[1], 0.0)})
    )
    return sorted(elements)


def observe(state: WorldState, config: ObservationConfig = ObservationConfig()) -> Observation:
    summary = scene_summary(state)
    if not config.include_cloud or config.n_points <= 0:
        empty = np.zeros((0, 3)), np.zeros((0, len(SEMANTIC_CLASSES)))
        return Observation(cloud_xyz=empty[0], cloud_sem=empty[1], summary=summary, step=state.step)

    rng = state.rng.spawn("observe", state.step)
    sem_index = {cls: i for i, cls in enumerate(SEMANTIC_CLASSES)}

    elements: list[tuple[str, str, dict]] = []  # (sort key, semantic class, geometry)
    for name, geom in _fixture_elements(state):
        elements.append((f"0_fixture_{name}", "fixture", geom))
    for oid in sorted(state.objects):
        obj = state.objects[oid]
        if _object_visible(state, obj):
            elements.append(
                (
                    f"1_object_{oid}",
                    obj.cls,
                    {"kind": "box", "center": obj.pose[:3], "half": obj.extent, "yaw": obj.pose[3]},
                )
            )

    if not elements:
        return Observation(
            cloud_xyz=np.zeros((0, 3)),
            cloud_sem=np.zeros((0, len(SEMANTIC_CLASSES))),
            summary=summary,
            step=state.step,
        )

    base, extra = divmod(config.n_points, len(elements))
    xyz_parts, sem_parts = [], []
    for i, (_, cls, geom) in enumerate(elements):
        count = base + (1 if i < extra else 0)
        if count == 0:
            continue
        if geom["kind"] == "box":
            pts = _sample_box_surface(rng, geom["center"], geom["half"], geom["yaw"], count)
        elif geom["kind"] == "rect":
            pts = _sample_rect(rng, geom["lo"], geom["hi"], count)
        else:  # ball surface
            direction = rng.normal(size=(count, 3))
            direction /= np.linalg.norm(direction, axis=1, keepdims=True)
            pts = np.asarray(geom["center"]) + geom["radius"] * direction
        onehot = np.zeros((count, len(SEMANTIC_CLASSES)))
        onehot[:, sem_index[cls]] = 1.0
        xyz_parts.append(pts)
        sem_parts.append(onehot)

    return Observation(
        cloud_xyz=np.concatenate(xyz_parts, axis=0),
        cloud_sem=np.concatenate(sem_parts, axis=0),
        summary=summary,
        step=state.step,
    )


def _within(p, q, radius: float) -> bool:
    return math.dist(p[:3], q[:3]) <= radius


def _fail(out: WorldState, pose, reason: str | None) -> tuple[WorldState, SkillOutcome]:
    """Failure transition: scene untouched, but step and the consumed noise
    draw persist — otherwise a retry would replay the identical draw and
    retrying a noisy skill could never help. Every failure return happens
    before any scene mutation, so ``out`` differs from the input state only
    in its rng stream."""
    out.step += 1
    return out, SkillOutcome(success=False, perturbed_pose=pose, violated_precondition=reason)


def apply_skill(
    state: WorldState, call: SkillCall, noise: NoiseSpec = NoiseSpec.disabled()
) -> tuple[WorldState, SkillOutcome]:
    """Execute one skill; failures leave everything but the step counter unchanged.

    The perturbed pose is the commanded pose plus one uniform draw from the
    noise box (when enabled); the draw advances the world stream and is part
    of the state transition.
    """
    if not isinstance(call, SkillCall):
        raise SkillCallError("expected a SkillCall")

    out = state.copy()
    if noise.enabled:
        draw = out.rng.uniform(size=3)
        lo = np.array([noise.dx_range[0], noise.dy_range[0], noise.dz_range[0]])
        hi = np.array([noise.dx_range[1], noise.dy_range[1], noise.dz_range[1]])
        delta = lo + draw * (hi - lo)
    else:
        delta = np.zeros(3)
    pose = q6_pose(
        (
            call.commanded_pose[0] + delta[0],
            call.commanded_pose[1] + delta[1],
            call.commanded_pose[2] + delta[2],
            call.commanded_pose[3],
        )
    )
    geo = out.fixtures.geometry

    if call.skill == "grasp":
        obj = out.objects.get(call.target_object)
        if obj is None or obj.location == "absent":
            return _fail(out, pose, "object not in scene")
        if obj.location in ("drawer_left", "drawer_right") and not out.fixtures.drawer_open(obj.location):
            return _fail(out, pose, "object inside closed drawer")
        if out.gripper.holding is not None:
            return _fail(out, pose, "gripper occupied")
        if not _within(pose, obj.pose, GRASP_TOLERANCE):
            return _fail(out, pose, None)
        out.gripper.pose = pose
        out.gripper.open = False
        out.gripper.holding = obj.id
        obj.location = "gripper"
        obj.pose = pose
    elif call.skill == "place":
        held_id = out.gripper.holding
        if held_id is None:
            return _fail(out, pose, "nothing held")
        if call.target_location in ("drawer_left", "drawer_right") and not out.fixtures.drawer_open(
            call.target_location
        ):
            return _fail(out, pose, "target drawer closed")
        region = geo.region(call.target_location)
        if not region.contains(pose[:3]):
            return _fail(out, pose, None)
        held = out.objects[held_id]
        held.location = call.target_location
        held.pose = pose
        out.gripper.pose = pose
        out.gripper.holding = None
        out.gripper.open = True
    elif call.skill == "turn":
        if out.gripper.holding is not None:
            return _fail(out, pose, "gripper occupied")
        if not _within(pose, geo.faucet_handle, FIXTURE_TOLERANCE):
            return _fail(out, pose, None)
        out.fixtures.faucet_on = not out.fixtures.faucet_on
        out.gripper.pose = pose
    elif call.skill in ("open", "close"):
        drawer = call.target_location
        if out.gripper.holding is not None:
            return _fail(out, pose, "gripper occupied")
        is_open = out.fixtures.drawer_open(drawer)
        if call.skill == "open" and is_open:
            return _fail(out, pose, "already open")
        if call.skill == "close" and not is_open:
            return _fail(out, pose, "already closed")
        if not _within(pose, geo.handle(drawer), FIXTURE_TOLERANCE):
            return _fail(out, pose, None)
        setattr(out.fixtures, f"{drawer}_open", call.skill == "open")
        out.gripper.pose = pose
    else:  # unreachable: SkillCall validates the skill name
        raise SkillCallError(f"unknown skill {call.skill!r}")

    out.step += 1
    out.validate()
    return out, SkillOutcome(success=True, perturbed_pose=pose, violated_precondition=None)


def noise_success_probability(noise: NoiseSpec, tolerance: float,
                              n_samples: int = 200_000, seed: int = 0) -> float:
    """Monte-Carlo estimate that one noisy attempt lands within tolerance.

    Success of a fixture skill is a pure geometry event: the uniform draw
    from the noise box must fall inside the tolerance ball around the
    commanded pose. Sampling the box directly gives the single-attempt
    probability without running any episodes.
    """
    if not noise.enabled:
        return 1.0
    rng = DeterministicRng(derive_seed("noise-oracle", seed))
    lo = np.array([noise.dx_range[0], noise.dy_range[0], noise.dz_range[0]])
    hi = np.array([noise.dx_range[1], noise.dy_range[1], noise.dz_range[1]])
    delta = lo + rng.uniform(size=(n_samples, 3)) * (hi - lo)
    return float((np.linalg.norm(delta, axis=1) <= tolerance).mean())


def inject_disturbance(state: WorldState, d: Disturbance) -> WorldState:
    """Apply a scene change; the step counter is untouched."""
    out = state.copy()
    payload = d.payload
    if d.kind == "add_object":
        oid = payload["id"]
        if oid in out.objects:
            raise DisturbanceError(f"duplicate object id {oid!r}")
        location = payload["location"]
        if location in ("gripper",):
            raise DisturbanceError("cannot add an object into the gripper")
        obj = make_object(oid, payload["class"], location, payload["pose"], payload.get("extent"))
        out.objects[oid] = obj
    elif d.kind == "remove_object":
        oid = payload["id"]
        if oid not in out.objects:
            raise DisturbanceError(f"unknown object id {oid!r}")
        if out.gripper.holding == oid:
            out.gripper.holding = None
            out.gripper.open = True
        del out.objects[oid]
    elif d.kind == "move_object":
        oid = payload["id"]
        if oid not in out.objects:
            raise DisturbanceError(f"unknown object id {oid!r}")
        location = payload["location"]
        if location == "gripper":
            raise DisturbanceError("cannot move an object into the gripper")
        if out.gripper.holding == oid:
            out.gripper.holding = None
            out.gripper.open = True
        obj = out.objects[oid]
        obj.location = location
        obj.pose = q6_pose(payload.get("pose", obj.pose))
    elif d.kind == "set_fixture":
        name = payload["name"]
        if name not in ("drawer_left_open", "drawer_right_open", "faucet_on"):
            raise DisturbanceError(f"unknown fixture {name!r}")
        setattr(out.fixtures, name, bool(payload["value"]))
    else:
        raise DisturbanceError(f"unknown disturbance kind {d.kind!r}")
    try:
        out.validate()
    except InvariantError as exc:
        raise DisturbanceError(str(exc)) from exc
    return out
