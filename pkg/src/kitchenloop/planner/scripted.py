"""Deterministic scripted backends standing in for a remote LMM.

The planner half is a rule table over instruction templates: it parses the
instruction into a goal, reads the scene summary (never the world state),
and emits the next unmet subgoal's skill. The critic half is a precondition
table over the scene summary alone. Both are pure functions of their
context, which is what makes whole-episode replay byte-identical.
"""

from __future__ import annotations

import re
from collections import Counter

from ..world.types import FRUIT_CLASSES
from .types import CriticContext, CriticVerdict, PlannerContext, PlannerError, PlanStep

_DRAWERS = ("drawer_left", "drawer_right")

_LOC_PHRASES = {
    "sink": "sink",
    "table": "table",
    "left drawer": "drawer_left",
    "right drawer": "drawer_right",
}
_LOC_PATTERN = "|".join(sorted(_LOC_PHRASES, key=len, reverse=True))

# (regex, task kind) — first match wins; slots are lower-case words.
_RULES = [
    (re.compile(r"^(?:pick up|grasp) the (\w+)$"), "pick"),
    (re.compile(r"^wash the (\w+)$"), "wash"),
    (re.compile(rf"^(?:put|place) the (\w+) (?:in|into|on)(?: the)? ({_LOC_PATTERN})"
                r" and close the drawer(?: door)?s?$"), "store_and_close"),
    (re.compile(rf"^(?:put|place) the (\w+) (?:in|into|on)(?: the)? ({_LOC_PATTERN})$"), "move"),
    (re.compile(r"^(?:put|find) all the fruits (?:and put them )?in(?:to)? the sink$"), "fruits"),
    (re.compile(r"^(open|close) both drawers$"), "both_drawers"),
    (re.compile(rf"^(open|close) the (left drawer|right drawer)$"), "drawer"),
    (re.compile(r"^turn the faucet (on|off)$"), "faucet"),
    (re.compile(r"^click the (\w+(?: \w+)*)$"), "click"),
]


def parse_instruction(instruction: str) -> tuple[str, tuple[str, ...]]:
    """Instruction template -> (task kind, slot values). Raises on no match."""
    text = re.sub(r"[.!?]+$", "", instruction.strip().lower())
    text = re.sub(r"\s+", " ", text)
    for pattern, kind in _RULES:
        m = pattern.match(text)
        if m:
            return kind, m.groups()
    raise PlannerError(f"no rule for instruction {instruction!r}")


def _pairs(summary: dict) -> list[tuple[str, str]]:
    return [tuple(p) for p in summary["objects"]]


def _held(pairs) -> str | None:
    for cls, loc in pairs:
        if loc == "gripper":
            return cls
    return None


def _rejected_keys(history) -> set[tuple]:
    """Keys of proposals the critic rejected since the last executed skill."""
    keys: set[tuple] = set()
    for entry in history:
        if entry.get("kind") == "executed":
            keys.clear()
        elif entry.get("kind") == "rejection":
            step = entry["step"]
            keys.add((step.get("skill"), step.get("target_object"), step.get("target_location")))
    return keys


def _placed_in(history, loc: str) -> bool:
    """Did a successful place into ``loc`` already happen this episode?"""
    for entry in history:
        if (entry.get("kind") == "executed" and entry.get("success")
                and entry["step"].get("skill") == "place"
                and entry["step"].get("target_location") == loc):
            return True
    return False


def _grasp(obj: str, pairs, rejected, why: str) -> PlanStep:
    """Grasp, unless the critic already vetoed it and the object is nowhere."""
    step = PlanStep("skill", skill="grasp", target_object=obj, rationale=why)
    visible = {cls for cls, _ in pairs}
    if step.key() in rejected and obj not in visible:
        return PlanStep("done", rationale=f"no {obj} in the scene; nothing to do")
    return step


def _stash(held: str) -> PlanStep:
    return PlanStep("skill", skill="place", target_location="table",
                    rationale=f"free the gripper: set the {held} on the table")


def scripted_planner_propose(ctx: PlannerContext) -> PlanStep:
    kind, args = parse_instruction(ctx.instruction)
    pairs = _pairs(ctx.scene_summary)
    fixtures = ctx.scene_summary["fixtures"]
    held = _held(pairs)
    rejected = _rejected_keys(ctx.history)

    if kind == "pick":
        (obj,) = args
        if held == obj:
            return PlanStep("done", rationale=f"holding the {obj}")
        if held:
            return _stash(held)
        return _grasp(obj, pairs, rejected, f"pick up the {obj}")

    if kind == "wash":
        (obj,) = args
        in_sink = (obj, "sink") in pairs
        if in_sink and fixtures["faucet_on"]:
            return PlanStep("done", rationale=f"{obj} washed")
        if not in_sink:
            if held == obj:
                return PlanStep("skill", skill="place", target_location="sink",
                                rationale=f"put the {obj} under the faucet")
            if held:
                return _stash(held)
            return _grasp(obj, pairs, rejected, f"wash the {obj}")
        return PlanStep("skill", skill="turn", rationale="run the water")

    if kind in ("move", "store_and_close"):
        obj, phrase = args
        loc = _LOC_PHRASES[phrase]
        # A closed drawer hides its contents, so once the object is shut
        # inside the only evidence left is the successful place in history.
        stored = (obj, loc) in pairs or (
            kind == "store_and_close" and _placed_in(ctx.history, loc))
        if stored:
            if kind == "move":
                return PlanStep("done", rationale=f"{obj} is in the {phrase}")
            if held:
                return _stash(held)
            for drawer in _DRAWERS:
                if fixtures[f"{drawer}_open"]:
                    return PlanStep("skill", skill="close", target_location=drawer,
                                    rationale=f"close the {drawer}")
            return PlanStep("done", rationale=f"{obj} stored and the drawers closed")
        if loc in _DRAWERS and not fixtures[f"{loc}_open"]:
            if held:
                return _stash(held)
            return PlanStep("skill", skill="open", target_location=loc,
                            rationale=f"the {phrase} is closed; open it before placing")
        if held == obj:
            return PlanStep("skill", skill="place", target_location=loc,
                            rationale=f"put the {obj} in the {phrase}")
        if held:
            return _stash(held)
        return _grasp(obj, pairs, rejected, f"move the {obj} to the {phrase}")

    if kind == "fruits":
        if held in FRUIT_CLASSES:
            return PlanStep("skill", skill="place", target_location="sink",
                            rationale=f"add the {held} to the sink")
        if held:
            return _stash(held)
        outside = sorted(cls for cls, loc in pairs if cls in FRUIT_CLASSES and loc != "sink")
        if outside:
            return _grasp(outside[0], pairs, rejected, "collect every fruit")
        return PlanStep("done", rationale="every visible fruit is in the sink")

    if kind == "both_drawers":
        (verb,) = args
        want_open = verb == "open"
        if held:
            return _stash(held)
        for drawer in _DRAWERS:
            if fixtures[f"{drawer}_open"] != want_open:
                return PlanStep("skill", skill=verb, target_location=drawer,
                                rationale=f"{verb} the {drawer}")
        return PlanStep("done", rationale=f"both drawers {verb}{'ed' if verb == 'open' else 'd'}")

    if kind == "drawer":
        verb, phrase = args
        loc = _LOC_PHRASES[phrase]
        if fixtures[f"{loc}_open"] == (verb == "open"):
            return PlanStep("done", rationale=f"the {phrase} is already {verb}")
        if held:
            return _stash(held)
        return PlanStep("skill", skill=verb, target_location=loc, rationale=f"{verb} the {phrase}")

    if kind == "faucet":
        (want,) = args
        if fixtures["faucet_on"] == (want == "on"):
            return PlanStep("done", rationale=f"faucet already {want}")
        if held:
            return _stash(held)
        return PlanStep("skill", skill="turn", rationale=f"turn the faucet {want}")

    if kind == "click":
        (target,) = args
        known = {d["name"] for d in ctx.skills}
        if "click" not in known:
            return PlanStep("propose_new_skill", new_skill="click",
                            description=f"press the {target}",
                            rationale="no skill in the library can press a button")
        return PlanStep("done",
                        rationale="click is registered; awaiting demonstrations")

    raise PlannerError(f"no rule for instruction {ctx.instruction!r}")  # unreachable


def scripted_critic_review(ctx: CriticContext) -> CriticVerdict:
    step = ctx.proposed
    if step.kind != "skill":
        return CriticVerdict("approve", "not an action")
    fixtures = ctx.scene_summary["fixtures"]
    pairs = _pairs(ctx.scene_summary)

    if step.skill == "close" and not fixtures.get(f"{step.target_location}_open", False):
        return CriticVerdict("reject", f"{step.target_location} is already closed")
    if step.skill == "open" and fixtures.get(f"{step.target_location}_open", False):
        return CriticVerdict("reject", f"{step.target_location} is already open")
    if step.skill == "grasp":
        visible = {cls for cls, _ in pairs}
        if step.target_object not in visible:
            return CriticVerdict("reject", f"no {step.target_object} in the scene")
    if step.skill == "place" and step.target_location in _DRAWERS:
        if not fixtures[f"{step.target_location}_open"]:
            return CriticVerdict("reject", f"{step.target_location} is closed")
    return CriticVerdict("approve", "preconditions hold")


def detect_skill_failure(step: PlanStep, pre_obs, post_obs) -> bool:
    """Vision-only failure check: expected scene delta absent in post_obs.

    Works from the observation summaries, never the simulator's outcome
    flag, and compares multisets so an unrelated same-class object cannot
    mask a no-op execution.
    """
    pre = Counter(map(tuple, pre_obs.summary["objects"]))
    post = Counter(map(tuple, post_obs.summary["objects"]))
    fx_pre = pre_obs.summary["fixtures"]
    fx_post = post_obs.summary["fixtures"]

    if step.skill == "grasp":
        key = (step.target_object, "gripper")
        return not post[key] > pre[key]
    if step.skill == "place":
        held = next((cls for cls, loc in pre if loc == "gripper"), None)
        if held is None:
            return True
        key = (held, step.target_location)
        return not post[key] > pre[key]
    if step.skill == "turn":
        return fx_post["faucet_on"] == fx_pre["faucet_on"]
    if step.skill in ("open", "close"):
        name = f"{step.target_location}_open"
        want = step.skill == "open"
        return not (fx_pre[name] == (not want) and fx_post[name] == want)
    return True
