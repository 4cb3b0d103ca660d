from .geometry import ALT_KITCHEN, DEFAULT_KITCHEN, KITCHENS, Box, KitchenGeometry, Pose
from .predicates import PredicateError, check_atom, check_predicate
from .scenario import (
    SCHEMA_VERSION,
    Scenario,
    ScenarioError,
    canonical_state,
    load_scenario,
    parse_scenario,
)
from .sim import (
    DisturbanceError,
    Observation,
    ObservationConfig,
    apply_skill,
    inject_disturbance,
    observe,
    scene_summary,
)
from .types import (
    DISTURBANCE_KINDS,
    FIXTURE_TOLERANCE,
    FRUIT_CLASSES,
    GRASP_TOLERANCE,
    GRIPPER_HOME,
    LOCATIONS,
    OBJECT_CLASSES,
    SEMANTIC_CLASSES,
    SKILLS,
    STORABLE_LOCATIONS,
    Disturbance,
    FixtureState,
    GripperState,
    InvariantError,
    NoiseSpec,
    ObjectState,
    SkillCall,
    SkillCallError,
    SkillOutcome,
    WorldError,
    WorldState,
    make_object,
    q6_pose,
)

__all__ = [
    "ALT_KITCHEN",
    "DEFAULT_KITCHEN",
    "DISTURBANCE_KINDS",
    "FIXTURE_TOLERANCE",
    "FRUIT_CLASSES",
    "GRASP_TOLERANCE",
    "GRIPPER_HOME",
    "KITCHENS",
    "LOCATIONS",
    "OBJECT_CLASSES",
    "SCHEMA_VERSION",
    "SEMANTIC_CLASSES",
    "SKILLS",
    "STORABLE_LOCATIONS",
    "Box",
    "Disturbance",
    "DisturbanceError",
    "FixtureState",
    "GripperState",
    "InvariantError",
    "KitchenGeometry",
    "NoiseSpec",
    "ObjectState",
    "Observation",
    "ObservationConfig",
    "Pose",
    "PredicateError",
    "Scenario",
    "ScenarioError",
    "SkillCall",
    "SkillCallError",
    "SkillOutcome",
    "WorldError",
    "WorldState",
    "apply_skill",
    "canonical_state",
    "check_atom",
    "check_predicate",
    "inject_disturbance",
    "load_scenario",
    "make_object",
    "observe",
    "parse_scenario",
    "q6_pose",
    "scene_summary",
]
