"""Skill library: retrieval, new-skill proposal, and the learning hook.

A skill is ``available`` once it has a bound instruction template the
low-level policy was (or can be) trained on; a ``proposed`` skill is a
named placeholder awaiting demonstrations. Retrieval distinguishes the
two failure modes — a name nobody ever mentioned versus a proposal that
has not been learned yet — because the planner reacts differently (it may
propose the former, and must wait on the latter).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

from .store import MemoryError, _atomic_write, _load_doc

SCHEMA_VERSION = 1

STATUSES = ("available", "proposed")


class SkillLibraryError(Exception):
    pass


class UnknownSkill(SkillLibraryError):
    """Name not in the library at all."""


class SkillNotLearned(SkillLibraryError):
    """Proposed, but no demonstrations have been supplied yet."""


@dataclass(frozen=True)
class SkillDescriptor:
    name: str
    takes_object: bool
    takes_location: bool
    template_id: str | None
    status: str = "available"
    description: str = ""

    def __post_init__(self):
        if not self.name:
            raise SkillLibraryError("skill name must be non-empty")
        if self.status not in STATUSES:
            raise SkillLibraryError(f"unknown skill status {self.status!r}")
        if self.status == "available" and not self.template_id:
            raise SkillLibraryError(f"available skill {self.name!r} needs a template")

    def to_doc(self) -> dict:
        return {
            "name": self.name,
            "takes_object": self.takes_object,
            "takes_location": self.takes_location,
            "template_id": self.template_id,
            "status": self.status,
            "description": self.description,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "SkillDescriptor":
        return cls(
            name=doc["name"],
            takes_object=bool(doc["takes_object"]),
            takes_location=bool(doc["takes_location"]),
            template_id=doc["template_id"],
            status=doc["status"],
            description=doc.get("description", ""),
        )


DEFAULT_SKILLS = (
    SkillDescriptor("grasp", True, False, "grasp the {object}",
                    description="pick up a named object"),
    SkillDescriptor("place", False, True, "place into the {location}",
                    description="put the held object at a location"),
    SkillDescriptor("turn", False, False, "turn the faucet",
                    description="toggle the faucet handle"),
    SkillDescriptor("open", False, True, "open the {location}",
                    description="pull a drawer open"),
    SkillDescriptor("close", False, True, "close the {location}",
                    description="push a drawer shut"),
)


class SkillLibrary:
    def __init__(self, skills=DEFAULT_SKILLS):
        self._skills: dict[str, SkillDescriptor] = {}
        for sk in skills:
            if sk.name in self._skills:
                raise SkillLibraryError(f"duplicate skill name {sk.name!r}")
            self._skills[sk.name] = sk

    def names(self) -> tuple[str, ...]:
        return tuple(self._skills)

    def descriptors(self) -> tuple[SkillDescriptor, ...]:
        return tuple(self._skills.values())

    def available(self) -> tuple[SkillDescriptor, ...]:
        return tuple(s for s in self._skills.values() if s.status == "available")

    def retrieve(self, name: str) -> SkillDescriptor:
        sk = self._skills.get(name)
        if sk is None:
            raise UnknownSkill(f"unknown skill {name!r}")
        if sk.status == "proposed":
            raise SkillNotLearned(f"skill {name!r} not yet learned")
        return sk

    def propose(self, name: str, description: str = "") -> None:
        """Register a new skill as proposed. Re-proposing is a no-op."""
        existing = self._skills.get(name)
        if existing is not None:
            if existing.status == "available":
                raise SkillLibraryError(f"skill {name!r} already available")
            return
        self._skills[name] = SkillDescriptor(
            name, takes_object=False, takes_location=False,
            template_id=None, status="proposed", description=description,
        )

    def learn(self, name: str, template_id: str,
              takes_object: bool = False, takes_location: bool = False) -> SkillDescriptor:
        """Promote a proposed skill once demonstrations bound a template."""
        sk = self._skills.get(name)
        if sk is None:
            raise UnknownSkill(f"unknown skill {name!r}")
        if sk.status == "available":
            raise SkillLibraryError(f"skill {name!r} already available")
        learned = replace(sk, status="available", template_id=template_id,
                          takes_object=takes_object, takes_location=takes_location)
        self._skills[name] = learned
        return learned

    def to_doc(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "skills": [self._skills[n].to_doc() for n in sorted(self._skills)],
        }

    def persist(self, path) -> None:
        _atomic_write(path, self.to_doc())

    @classmethod
    def from_doc(cls, doc: dict) -> "SkillLibrary":
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise MemoryError(f"unsupported library schema {doc.get('schema_version')!r}")
        return cls([SkillDescriptor.from_doc(d) for d in doc["skills"]])


def default_library() -> SkillLibrary:
    return SkillLibrary(DEFAULT_SKILLS)


def load_library(path) -> SkillLibrary:
    return SkillLibrary.from_doc(_load_doc(path))
