"""Grounding planner steps into concrete skill calls.

An executor closes the gap between a symbolic plan step ("grasp the milk")
and the metric pose a skill call needs. Two implementations:

- OracleExecutor reads poses straight out of the world state. It bounds
  what the planning stack can achieve with perfect perception and is the
  default for planner-focused evaluation.
- PolicyExecutor grounds grasp targets with the trained keyframe policy
  from a point-cloud observation; every other skill keeps oracle poses,
  since fixture handles and region centers are part of the known kitchen
  geometry rather than learned perception.
"""

from __future__ import annotations

import numpy as np

from ..planner.types import PlannerError, PlanStep
from ..policy.config import PolicyConfig
from ..policy.inference import predict_action
from ..rng import DeterministicRng
from ..world.types import DEFAULT_EXTENTS, SkillCall, WorldState


def _visible_instance(world: WorldState, cls: str):
    """First object of the class reachable by a grasp, stable order by id."""
    best = None
    for obj in world.objects.values():
        if obj.cls != cls or obj.location in ("absent", "gripper"):
            continue
        if obj.location in ("drawer_left", "drawer_right") and not world.fixtures.drawer_open(
            obj.location
        ):
            continue
        if best is None or obj.id < best.id:
            best = obj
    return best


def oracle_pose(step: PlanStep, world: WorldState) -> tuple:
    """Ground-truth pose for a plan step; raises PlannerError when impossible."""
    geo = world.fixtures.geometry
    if step.skill == "grasp":
        obj = _visible_instance(world, step.target_object)
        if obj is None:
            raise PlannerError(f"no reachable {step.target_object} to grasp")
        return obj.pose
    if step.skill == "place":
        region = geo.region(step.target_location)
        if region is None:
            raise PlannerError(f"no region for {step.target_location!r}")
        cx, cy, cz = region.center
        return (cx, cy, cz, 0.0)
    if step.skill == "turn":
        return geo.faucet_handle
    if step.skill in ("open", "close"):
        return geo.handle(step.target_location)
    raise PlannerError(f"cannot ground step kind {step.kind!r}/{step.skill!r}")


def _to_call(step: PlanStep, world: WorldState, pose) -> SkillCall:
    target_id = None
    if step.skill == "grasp":
        obj = _visible_instance(world, step.target_object)
        if obj is None:
            raise PlannerError(f"no reachable {step.target_object} to grasp")
        target_id = obj.id
    return SkillCall(
        skill=step.skill,
        commanded_pose=tuple(pose),
        target_object=target_id,
        target_location=step.target_location,
    )


class OracleExecutor:
    """Plan steps -> skill calls with poses read from the world state."""

    def __call__(self, step: PlanStep, world: WorldState, obs) -> SkillCall:
        return _to_call(step, world, oracle_pose(step, world))


class PolicyExecutor:
    """Grasp poses come from the trained reach policy; the rest are oracle.

    The policy predicts the hover point over the target's top surface, so
    the grasp pose subtracts the class half-height to land on the object
    center. Observations must carry a point cloud.
    """

    def __init__(self, params: dict, cfg: PolicyConfig, *, seed: int = 0,
                 stages: int = 6):
        self.params = params
        self.cfg = cfg
        self.stages = stages
        self._rng = DeterministicRng(seed).spawn("policy-executor")

    def __call__(self, step: PlanStep, world: WorldState, obs) -> SkillCall:
        if step.skill != "grasp":
            return _to_call(step, world, oracle_pose(step, world))
        template_id = f"reach the {step.target_object}"
        if template_id not in self.cfg.templates:
            raise PlannerError(f"policy has no template for {step.target_object!r}")
        if obs.cloud_xyz is None or not len(obs.cloud_xyz):
            raise PlannerError("policy executor needs a point-cloud observation")
        g = world.gripper
        proprio = np.array([*g.pose[:3], g.pose[3], 1.0 if g.open else 0.0])
        action = predict_action(self.params, self.cfg, obs, template_id,
                                proprio, self._rng, stages=self.stages)
        x, y, z = action.a_trans
        z -= DEFAULT_EXTENTS[step.target_object][2]
        return _to_call(step, world, (float(x), float(y), float(z), 0.0))
