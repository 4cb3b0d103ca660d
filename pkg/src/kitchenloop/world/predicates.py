"""Goal predicates over world states.

Atoms are small dicts; conjunctions are lists of atoms. Grammar:

    {"object_at": {"id": "apple_0", "location": "sink"}}
    {"class_at": {"class": "apple", "location": "sink"}}   # any instance
    {"class_at": {"class": "fruit", "location": "sink"}}   # every fruit present
    {"fixture": {"name": "faucet_on", "value": true}}
    {"holding": {"id": "apple_0"}}                          # id null = empty hand
"""

from __future__ import annotations

from .types import FRUIT_CLASSES, LOCATIONS, OBJECT_CLASSES, WorldState


class PredicateError(Exception):
    pass


_FIXTURE_NAMES = ("drawer_left_open", "drawer_right_open", "faucet_on")


def _check_location(location: str) -> None:
    if location not in LOCATIONS or location in ("absent", "gripper"):
        raise PredicateError(f"invalid goal location {location!r}")


def check_atom(state: WorldState, atom: dict) -> bool:
    if not isinstance(atom, dict) or len(atom) != 1:
        raise PredicateError(f"atom must be a single-key dict, got {atom!r}")
    key, body = next(iter(atom.items()))
    if key == "object_at":
        oid, location = body.get("id"), body.get("location")
        if not isinstance(oid, str) or not isinstance(location, str):
            raise PredicateError(f"object_at needs string id and location: {body!r}")
        _check_location(location)
        obj = state.objects.get(oid)
        return obj is not None and obj.location == location
    if key == "class_at":
        cls, location = body.get("class"), body.get("location")
        if not isinstance(cls, str) or not isinstance(location, str):
            raise PredicateError(f"class_at needs string class and location: {body!r}")
        _check_location(location)
        if cls == "fruit":
            fruits = [o for o in state.objects.values() if o.cls in FRUIT_CLASSES and o.location != "absent"]
            return bool(fruits) and all(o.location == location for o in fruits)
        if cls not in OBJECT_CLASSES:
            raise PredicateError(f"unknown object class {cls!r}")
        return any(o.cls == cls and o.location == location for o in state.objects.values())
    if key == "holding":
        oid = body.get("id")
        if oid is not None and not isinstance(oid, str):
            raise PredicateError(f"holding needs a string id or null: {body!r}")
        return state.gripper.holding == oid
    if key == "fixture":
        name, value = body.get("name"), body.get("value")
        if name not in _FIXTURE_NAMES:
            raise PredicateError(f"unknown fixture {name!r}")
        if not isinstance(value, bool):
            raise PredicateError(f"fixture value must be a bool: {body!r}")
        return bool(getattr(state.fixtures, name)) == value
    raise PredicateError(f"unknown atom kind {key!r}")


def check_predicate(state: WorldState, atoms: list[dict]) -> bool:
    """True iff every atom in the conjunction holds."""
    if not isinstance(atoms, list):
        raise PredicateError("goal must be a list of atoms")
    return all(check_atom(state, atom) for atom in atoms)
