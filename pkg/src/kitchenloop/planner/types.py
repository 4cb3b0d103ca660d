"""Types passed between the planning loop, its backends, and the log.

The deliberate asymmetry: PlannerContext carries the task instruction,
memory lessons, and history; CriticContext carries only the scene summary,
the proposed step, and the skill descriptors. The critic judges a proposal
against what it can see, never against what the planner was told, so a
premise baked into the instruction cannot leak into the review.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..canonical import canonical_dumps


class PlannerError(Exception):
    """A planning backend could not produce a step."""


PLAN_KINDS = ("skill", "done", "propose_new_skill")
VERDICTS = ("approve", "reject")


@dataclass(frozen=True)
class TaskSpec:
    instruction: str
    scenario: str = ""
    step_budget: int = 20
    retry_budget: int = 1

    def __post_init__(self):
        if self.step_budget < 0 or self.retry_budget < 0:
            raise ValueError("budgets must be non-negative")

    def to_doc(self) -> dict:
        return {
            "instruction": self.instruction,
            "scenario": self.scenario,
            "step_budget": self.step_budget,
            "retry_budget": self.retry_budget,
        }


@dataclass(frozen=True)
class PlanStep:
    kind: str
    skill: str | None = None
    target_object: str | None = None
    target_location: str | None = None
    new_skill: str | None = None
    description: str = ""
    rationale: str = ""

    def __post_init__(self):
        if self.kind not in PLAN_KINDS:
            raise PlannerError(f"unknown plan-step kind {self.kind!r}")
        if self.kind == "skill" and not self.skill:
            raise PlannerError("skill step needs a skill name")
        if self.kind == "propose_new_skill" and not self.new_skill:
            raise PlannerError("proposal step needs the new skill's name")

    def key(self) -> tuple:
        """Identity for retry accounting: same skill and arguments."""
        return (self.skill, self.target_object, self.target_location)

    def to_doc(self) -> dict:
        return {
            "kind": self.kind,
            "skill": self.skill,
            "target_object": self.target_object,
            "target_location": self.target_location,
            "new_skill": self.new_skill,
            "description": self.description,
            "rationale": self.rationale,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "PlanStep":
        return cls(
            kind=doc["kind"],
            skill=doc.get("skill"),
            target_object=doc.get("target_object"),
            target_location=doc.get("target_location"),
            new_skill=doc.get("new_skill"),
            description=doc.get("description", ""),
            rationale=doc.get("rationale", ""),
        )


@dataclass(frozen=True)
class CriticVerdict:
    decision: str
    reason: str = ""

    def __post_init__(self):
        if self.decision not in VERDICTS:
            raise PlannerError(f"unknown verdict {self.decision!r}")
        if self.decision == "reject" and not self.reason:
            raise PlannerError("a rejection must give a reason")

    def to_doc(self) -> dict:
        return {"decision": self.decision, "reason": self.reason}


@dataclass(frozen=True)
class PlannerContext:
    """Everything the proposing backend sees. History is ordered by step."""

    instruction: str
    scene_summary: dict
    history: tuple[dict, ...] = ()
    lessons: tuple[str, ...] = ()
    skills: tuple[dict, ...] = ()

    def __post_init__(self):
        steps = [h.get("at_step", 0) for h in self.history]
        if any(a > b for a, b in zip(steps, steps[1:])):
            raise PlannerError("history must be ordered by step")

    def to_doc(self) -> dict:
        return {
            "instruction": self.instruction,
            "scene_summary": self.scene_summary,
            "history": list(self.history),
            "lessons": list(self.lessons),
            "skills": list(self.skills),
        }


@dataclass(frozen=True)
class CriticContext:
    """What the reviewing backend sees. There is no instruction field."""

    scene_summary: dict
    proposed: PlanStep
    skills: tuple[dict, ...] = ()

    def to_doc(self) -> dict:
        return {
            "scene_summary": self.scene_summary,
            "proposed": self.proposed.to_doc(),
            "skills": list(self.skills),
        }


@dataclass(frozen=True)
class Event:
    index: int
    at_step: int
    kind: str
    payload: dict

    def to_doc(self) -> dict:
        return {
            "index": self.index,
            "at_step": self.at_step,
            "kind": self.kind,
            "payload": self.payload,
        }


EVENT_KINDS = (
    "observation", "proposal", "verdict", "override", "skill_outcome",
    "disturbance", "critique", "skill_proposed", "status",
)


@dataclass
class EpisodeLog:
    """Append-only event record for one episode.

    Indices are assigned at append time and strictly increase; appended
    events are never mutated or removed. ``events()`` hands out a tuple so
    concurrent readers always see a consistent prefix.
    """

    episode_id: str
    _events: list[Event] = field(default_factory=list)

    def append(self, kind: str, at_step: int, payload: dict) -> Event:
        if kind not in EVENT_KINDS:
            raise PlannerError(f"unknown event kind {kind!r}")
        ev = Event(index=len(self._events), at_step=at_step, kind=kind, payload=payload)
        self._events.append(ev)
        return ev

    def events(self, since: int = -1) -> tuple[Event, ...]:
        """Events with index > since, in order."""
        if since < 0:
            return tuple(self._events)
        return tuple(ev for ev in self._events if ev.index > since)

    def __len__(self) -> int:
        return len(self._events)

    @property
    def status(self) -> str | None:
        for ev in reversed(self._events):
            if ev.kind == "status":
                return ev.payload["status"]
        return None

    def to_doc(self) -> dict:
        return {
            "episode_id": self.episode_id,
            "events": [ev.to_doc() for ev in self._events],
        }

    def canonical(self) -> str:
        return canonical_dumps(self.to_doc())
