"""The evaluation catalog: every suite's cells and their scene builders.

A cell is one reported table entry — a task family at a fixed difficulty
(e.g. "grasp the milk with 1-2 distractors"), run for a fixed number of
trials. Cells carry their own trial counts because the protocols differ
per skill (grasp is 5 trials per object, fixture skills are 10). The
``reference_rate`` field is the accuracy published for the corresponding
hardware cell; it is carried through to reports as an annotation and plays
no part in judging trials.

``build_scenario`` turns a cell plus a trial seed into a concrete Scenario
with randomized, collision-free object placement inside the named regions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..canonical import derive_seed
from ..rng import DeterministicRng
from ..world.geometry import KITCHENS
from ..world.scenario import Scenario
from ..world.types import DEFAULT_EXTENTS, GRIPPER_HOME, Disturbance, NoiseSpec

SUITES = (
    "skills",
    "skills_distractor",
    "composition",
    "long_horizon",
    "ablation_noise",
    "ablation_disturbance",
    "ablation_unaligned",
    "demo_scaling",
    "multi_scene",
)

# Success judgment modes (see suites.judge_trial):
#   goal              episode reports done and the goal atoms hold
#   done_zero_skills  episode reports done without executing anything
#   goal_no_failures  goal, plus every executed skill visibly succeeded
SUCCESS_MODES = ("goal", "done_zero_skills", "goal_no_failures")

_GRASP_CLASSES = ("pineapple", "starfruit", "milk", "duck", "bowl")
_COMPOSE_CLASSES = ("pineapple", "starfruit", "milk", "duck", "pan")
_PLACE_LOCATIONS = ("sink", "table", "drawer_left", "drawer_right")
_LOC_PHRASE = {
    "sink": "sink",
    "table": "table",
    "drawer_left": "left drawer",
    "drawer_right": "right drawer",
}

_MARGIN = 0.05        # keep object centers this far from region walls
_SEPARATION = 0.10    # min center distance between objects sharing a region


class CatalogError(Exception):
    pass


def _fixtures(left=False, right=False, faucet=False) -> dict:
    return {
        "drawer_left_open": left,
        "drawer_right_open": right,
        "faucet_on": faucet,
    }


@dataclass
class Cell:
    """One table cell: a task, its scene recipe, and how to judge a trial."""

    label: str
    instruction: str
    objects: tuple = ()               # (class, location) pairs; ids assigned
    trials: int = 10
    goal: tuple = ()                  # conjunction of predicate atoms
    success: str = "goal"
    fixtures: dict = field(default_factory=_fixtures)
    holding: str | None = None        # class of the object the gripper starts with
    distractors: tuple = (0, 0)       # inclusive range, drawn per trial
    noise: NoiseSpec = NoiseSpec.disabled()
    disturbances: tuple = ()
    retry_budget: int = 1
    step_budget: int = 20
    kitchen: str = "default"
    first_step: bool = False          # also report first-skill success rate
    reference_rate: float | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise CatalogError(f"cell {self.label!r}: trials must be >= 1")
        if self.success not in SUCCESS_MODES:
            raise CatalogError(f"cell {self.label!r}: bad success mode {self.success!r}")


def _place_xy(rng, box, taken: list) -> tuple[float, float]:
    lo_x, hi_x = box.lo[0] + _MARGIN, box.hi[0] - _MARGIN
    lo_y, hi_y = box.lo[1] + _MARGIN, box.hi[1] - _MARGIN
    for _ in range(200):
        x = float(rng.uniform(lo_x, hi_x))
        y = float(rng.uniform(lo_y, hi_y))
        if all(math.hypot(x - tx, y - ty) >= _SEPARATION for tx, ty in taken):
            taken.append((x, y))
            return x, y
    raise CatalogError("could not place object without overlap; region too crowded")


def build_scenario(cell: Cell, seed: int) -> Scenario:
    """Concrete scenario for one trial: seeded poses inside each region."""
    geometry = KITCHENS[cell.kitchen]
    rng = DeterministicRng(seed).spawn("placement")

    placements = list(cell.objects)
    lo_n, hi_n = cell.distractors
    n_extra = int(rng.integers(lo_n, hi_n + 1)) if hi_n > 0 else lo_n
    placements += [("distractor", "table")] * n_extra

    taken: dict[str, list] = {}
    counts: dict[str, int] = {}
    objects = []
    holding_id = None
    for cls, location in placements:
        oid = f"{cls}_{counts.get(cls, 0)}"
        counts[cls] = counts.get(cls, 0) + 1
        hz = DEFAULT_EXTENTS[cls][2]
        if location == "gripper":
            pose = list(GRIPPER_HOME)
        else:
            box = geometry.region(location)
            x, y = _place_xy(rng, box, taken.setdefault(location, []))
            z = hz if location == "table" else box.lo[2] + hz
            pose = [x, y, z, 0.0]
        if cell.holding == cls and holding_id is None and location == "gripper":
            holding_id = oid
        objects.append({"id": oid, "class": cls, "location": location, "pose": pose})

    if cell.holding is not None and holding_id is None:
        raise CatalogError(
            f"cell {cell.label!r}: holding {cell.holding!r} but no such object in the gripper")

    return Scenario(
        name=cell.label,
        seed=seed,
        kitchen=cell.kitchen,
        objects=objects,
        fixtures=dict(cell.fixtures),
        disturbances=list(cell.disturbances),
        instruction=cell.instruction,
        goal=list(cell.goal),
        holding=holding_id,
    )


def _skill_cells(distractors: tuple, refs: dict) -> list[Cell]:
    """The single-skill protocol: 5 grasps x 5 trials, 4 places x 5, fixtures x 10."""
    cells = []
    for cls in _GRASP_CLASSES:
        cells.append(Cell(
            label=f"grasp/{cls}",
            instruction=f"pick up the {cls}",
            objects=((cls, "table"),),
            trials=5,
            goal=({"holding": {"id": f"{cls}_0"}},),
            distractors=distractors,
            reference_rate=refs["grasp"],
        ))
    for loc in _PLACE_LOCATIONS:
        prep = "on" if loc == "table" else "in"
        cells.append(Cell(
            label=f"place/{loc}",
            instruction=f"put the pineapple {prep} the {_LOC_PHRASE[loc]}",
            objects=(("pineapple", "gripper"),),
            holding="pineapple",
            trials=5,
            goal=({"object_at": {"id": "pineapple_0", "location": loc}},),
            fixtures=_fixtures(left=True, right=True),
            distractors=distractors,
            reference_rate=refs["place"],
        ))
    cells.append(Cell(
        label="turn/faucet",
        instruction="turn the faucet on",
        goal=({"fixture": {"name": "faucet_on", "value": True}},),
        distractors=distractors,
        reference_rate=refs["turn"],
    ))
    cells.append(Cell(
        label="open/drawer_left",
        instruction="open the left drawer",
        goal=({"fixture": {"name": "drawer_left_open", "value": True}},),
        distractors=distractors,
        reference_rate=refs["open"],
    ))
    cells.append(Cell(
        label="close/drawer_left",
        instruction="close the left drawer",
        fixtures=_fixtures(left=True),
        goal=({"fixture": {"name": "drawer_left_open", "value": False}},),
        distractors=distractors,
        reference_rate=refs["close"],
    ))
    return cells


def _composition_cells() -> list[Cell]:
    """Full pick-then-place over object/location pairs unseen as a pair."""
    refs = {
        "sink": {"pineapple": 0.9, "starfruit": 0.9, "milk": 0.8, "duck": 0.8, "pan": 0.5},
        "drawer_left": {"pineapple": 0.9, "starfruit": 0.8, "milk": 0.7, "duck": 0.9, "pan": 0.4},
    }
    cells = []
    for loc in ("sink", "drawer_left"):
        for cls in _COMPOSE_CLASSES:
            cells.append(Cell(
                label=f"pick_place/{cls}/{loc}",
                instruction=f"put the {cls} in the {_LOC_PHRASE[loc]}",
                objects=((cls, "table"),),
                fixtures=_fixtures(left=True, right=True),
                goal=({"object_at": {"id": f"{cls}_0", "location": loc}},),
                reference_rate=refs[loc][cls],
            ))
    return cells


def _long_horizon_cells() -> list[Cell]:
    return [
        Cell(
            label="long/fruits_to_sink",
            instruction="Put all the fruits in the sink.",
            objects=(("pineapple", "table"), ("starfruit", "table")),
            goal=({"class_at": {"class": "fruit", "location": "sink"}},),
            first_step=True,
            reference_rate=0.6,
        ),
        Cell(
            label="long/duck_drawer_close",
            instruction="Put the duck in the right drawer and close the drawer doors.",
            objects=(("duck", "table"),),
            fixtures=_fixtures(left=True, right=True),
            goal=(
                {"object_at": {"id": "duck_0", "location": "drawer_right"}},
                {"fixture": {"name": "drawer_left_open", "value": False}},
                {"fixture": {"name": "drawer_right_open", "value": False}},
            ),
            first_step=True,
            reference_rate=0.4,
        ),
        Cell(
            label="long/wash_pineapple",
            instruction="Wash the pineapple.",
            objects=(("pineapple", "table"),),
            goal=(
                {"object_at": {"id": "pineapple_0", "location": "sink"}},
                {"fixture": {"name": "faucet_on", "value": True}},
            ),
            first_step=True,
            reference_rate=0.7,
        ),
    ]


# Noise boxes for the robustness ablation: the faucet push may land anywhere
# in +-5 cm laterally and 0..8 cm high of the handle; the drawer push in
# +-5 cm laterally and +-3 cm vertically.
FAUCET_NOISE = NoiseSpec(dx_range=(-0.05, 0.05), dy_range=(-0.05, 0.05),
                         dz_range=(0.0, 0.08), enabled=True)
DRAWER_NOISE = NoiseSpec(dx_range=(-0.05, 0.05), dy_range=(-0.05, 0.05),
                         dz_range=(-0.03, 0.03), enabled=True)

_NOISE_RETRIES = 9  # per-step retry budget for the noise ablation


def _noise_cells() -> list[Cell]:
    return [
        Cell(
            label="noise/turn_faucet",
            instruction="turn the faucet on",
            goal=({"fixture": {"name": "faucet_on", "value": True}},),
            noise=FAUCET_NOISE,
            retry_budget=_NOISE_RETRIES,
            step_budget=_NOISE_RETRIES + 1,
            reference_rate=0.8,
        ),
        Cell(
            label="noise/close_drawer_left",
            instruction="close the left drawer",
            fixtures=_fixtures(left=True),
            goal=({"fixture": {"name": "drawer_left_open", "value": False}},),
            noise=DRAWER_NOISE,
            retry_budget=_NOISE_RETRIES,
            step_budget=_NOISE_RETRIES + 1,
            reference_rate=0.7,
        ),
    ]


def _disturbance_cells() -> list[Cell]:
    # find_fruits: one fruit is visible at the start; a second appears after
    # the first grasp, so the plan must grow to cover it.
    appear = Disturbance(
        kind="add_object",
        payload={"id": "starfruit_late", "class": "starfruit", "location": "table",
                 "pose": [-0.40, -0.28, DEFAULT_EXTENTS["starfruit"][2], 0.0]},
        trigger={"at_step": 1},
    )
    # close_both_drawers: a human shuts the right drawer after the first
    # close, so the correct updated plan skips it (re-closing would fail).
    helped = Disturbance(
        kind="set_fixture",
        payload={"name": "drawer_right_open", "value": False},
        trigger={"at_step": 1},
    )
    return [
        Cell(
            label="disturbance/find_fruits",
            instruction="find all the fruits and put them in the sink",
            objects=(("pineapple", "table"),),
            disturbances=(appear,),
            goal=({"class_at": {"class": "fruit", "location": "sink"}},),
            success="goal_no_failures",
            reference_rate=0.6,
        ),
        Cell(
            label="disturbance/close_both_drawers",
            instruction="close both drawers",
            fixtures=_fixtures(left=True, right=True),
            disturbances=(helped,),
            goal=(
                {"fixture": {"name": "drawer_left_open", "value": False}},
                {"fixture": {"name": "drawer_right_open", "value": False}},
            ),
            success="goal_no_failures",
            reference_rate=0.5,
        ),
    ]


def _unaligned_cells() -> list[Cell]:
    return [
        Cell(
            label="unaligned/pick_pan",
            instruction="pick up the pan",
            objects=(("duck", "table"), ("milk", "table")),
            success="done_zero_skills",
            reference_rate=1.0,
        ),
        Cell(
            label="unaligned/open_drawer",
            instruction="open the left drawer",
            fixtures=_fixtures(left=True),
            success="done_zero_skills",
            reference_rate=0.9,
        ),
    ]


def cells_for(suite: str) -> list[Cell]:
    """All cells of a suite, in report order. Raises on unknown suites.

    demo_scaling and multi_scene train a policy rather than run episodes;
    their rows are produced directly by run_suite and they have no cells.
    """
    if suite == "skills":
        return _skill_cells((0, 0), {"grasp": 0.9, "place": 0.65, "turn": 0.8,
                                     "open": 0.4, "close": 1.0})
    if suite == "skills_distractor":
        return _skill_cells((1, 2), {"grasp": 0.56, "place": 0.5, "turn": 0.7,
                                     "open": 0.4, "close": 0.8})
    if suite == "composition":
        return _composition_cells()
    if suite == "long_horizon":
        return _long_horizon_cells()
    if suite == "ablation_noise":
        return _noise_cells()
    if suite == "ablation_disturbance":
        return _disturbance_cells()
    if suite == "ablation_unaligned":
        return _unaligned_cells()
    if suite in ("demo_scaling", "multi_scene"):
        return []
    raise CatalogError(f"unknown suite {suite!r}")


def trial_seed(suite: str, cell_label: str, trial: int, seed_base: int) -> int:
    return derive_seed("trial", suite, cell_label, trial, seed_base)
