"""Wire protocol for a remote LMM backend.

Requests are OpenAI-style chat messages whose content is a list of typed
parts (text, optionally base64 images). The model is instructed to answer
with a fenced ```json block; the parser takes the *last* fenced block in
the reply — models love to think out loud first — and validates it into a
PlanStep. Each parse failure carries a distinct code so the retry policy
and the tests can tell them apart.

The remote backend reads its endpoint and API key from the environment
(KITCHENLOOP_LMM_ENDPOINT, KITCHENLOOP_LMM_API_KEY); nothing in the test
suite ever performs network I/O — the client accepts an injected transport.
"""

from __future__ import annotations

import json
import os
import re

import httpx

from ..memory.skills import SkillLibrary
from .types import CriticContext, CriticVerdict, PlannerContext, PlannerError, PlanStep

ENDPOINT_VAR = "KITCHENLOOP_LMM_ENDPOINT"
API_KEY_VAR = "KITCHENLOOP_LMM_API_KEY"

# Parse-failure codes (PlanParseError.code)
NO_BLOCK = "no_block"
BAD_JSON = "bad_json"
BAD_SCHEMA = "bad_schema"
UNKNOWN_SKILL = "unknown_skill"


class PlanParseError(PlannerError):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


PLANNER_SYSTEM = (
    "You control a kitchen robot by choosing its next skill. Respond with a "
    "short justification followed by exactly one fenced ```json block: "
    '{"action": <skill>, "object": <class or null>, "location": <location or null>} '
    'or {"done": true} or {"propose_skill": <name>, "description": <text>}.'
)
CRITIC_SYSTEM = (
    "You review a single proposed robot action against the visible scene. "
    "Respond with one fenced ```json block: "
    '{"decision": "approve"} or {"decision": "reject", "reason": <text>}.'
)

DEFAULT_TEMPLATES = {
    "planner_system": PLANNER_SYSTEM,
    "planner_user": (
        "Task: {instruction}\n"
        "Lessons from earlier runs:\n{lessons}\n"
        "Skills: {skills}\n"
        "Scene: {scene}\n"
        "{history}"
    ),
    "planner_history": "History so far:\n{entries}\nChoose the next step.",
    "planner_first_step": "No steps taken yet. Choose the first step.",
    "critic_system": CRITIC_SYSTEM,
    "critic_user": (
        "Scene: {scene}\n"
        "Skills: {skills}\n"
        "Proposed action: {proposal}\n"
        "Approve or reject."
    ),
}

_PLACEHOLDER = re.compile(r"\{(\w+)\}")


def _render(template: str, values: dict) -> str:
    def sub(m):
        name = m.group(1)
        if name not in values:
            raise PlannerError(f"unbound placeholder {{{name}}}")
        return str(values[name])

    return _PLACEHOLDER.sub(sub, template)


def _scene_text(summary: dict) -> str:
    objs = ", ".join(f"{cls} at {loc}" for cls, loc in summary["objects"]) or "no objects"
    fx = summary["fixtures"]
    states = ", ".join(f"{k}={'yes' if v else 'no'}" for k, v in sorted(fx.items()))
    return f"{objs}; {states}"


def _skills_text(skills) -> str:
    return ", ".join(f"{d['name']} ({d['status']})" for d in skills) or "none"


def build_lmm_request(ctx, templates: dict | None = None, images=None,
                      model: str = "gpt-4v") -> dict:
    """Deterministic chat-request document for a planner or critic context."""
    t = dict(DEFAULT_TEMPLATES)
    t.update(templates or {})

    if isinstance(ctx, PlannerContext):
        lessons = "\n".join(f"- {s}" for s in ctx.lessons) or "(none)"
        if ctx.history:
            entries = "\n".join(json.dumps(h, sort_keys=True) for h in ctx.history)
            history = _render(t["planner_history"], {"entries": entries})
        else:
            history = t["planner_first_step"]
        system = t["planner_system"]
        user = _render(t["planner_user"], {
            "instruction": ctx.instruction,
            "lessons": lessons,
            "skills": _skills_text(ctx.skills),
            "scene": _scene_text(ctx.scene_summary),
            "history": history,
        })
    elif isinstance(ctx, CriticContext):
        system = t["critic_system"]
        user = _render(t["critic_user"], {
            "scene": _scene_text(ctx.scene_summary),
            "skills": _skills_text(ctx.skills),
            "proposal": json.dumps(ctx.proposed.to_doc(), sort_keys=True),
        })
    else:
        raise PlannerError(f"cannot build a request from {type(ctx).__name__}")

    content = [{"type": "text", "text": user}]
    for img in images or []:
        content.append({"type": "image", "data": img})
    return {
        "model": model,
        "messages": [
            {"role": "system", "content": [{"type": "text", "text": system}]},
            {"role": "user", "content": content},
        ],
    }


_FENCE = re.compile(r"```(?:json)?\s*\n(.*?)```", re.DOTALL)


def extract_last_block(text: str) -> str:
    blocks = _FENCE.findall(text)
    if not blocks:
        raise PlanParseError(NO_BLOCK, "no fenced block in response")
    return blocks[-1]


_LOC_ALIASES = {
    "left drawer": "drawer_left", "right drawer": "drawer_right",
    "drawer_left": "drawer_left", "drawer_right": "drawer_right",
    "sink": "sink", "table": "table",
}


def parse_plan_response(text: str, library: SkillLibrary | None = None) -> PlanStep:
    """Last fenced block -> validated PlanStep. Raises PlanParseError."""
    block = extract_last_block(text)
    try:
        doc = json.loads(block)
    except json.JSONDecodeError as exc:
        raise PlanParseError(BAD_JSON, f"fenced block is not JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise PlanParseError(BAD_SCHEMA, "fenced block must be a JSON object")

    if doc.get("done") is True:
        return PlanStep("done", rationale=str(doc.get("reason", "")))
    if "propose_skill" in doc:
        name = doc["propose_skill"]
        if not isinstance(name, str) or not name:
            raise PlanParseError(BAD_SCHEMA, "propose_skill needs a name")
        return PlanStep("propose_new_skill", new_skill=name.strip().lower(),
                        description=str(doc.get("description", "")))
    if "action" not in doc:
        raise PlanParseError(BAD_SCHEMA, "expected action, done, or propose_skill")

    action = doc["action"]
    if not isinstance(action, str):
        raise PlanParseError(BAD_SCHEMA, "action must be a string")
    action = action.strip().lower()
    names = library.names() if library is not None else None
    if names is not None and action not in names:
        raise PlanParseError(UNKNOWN_SKILL, f"unknown skill {action!r}")

    obj = doc.get("object")
    if obj is not None:
        if not isinstance(obj, str):
            raise PlanParseError(BAD_SCHEMA, "object must be a string or null")
        obj = obj.strip().lower()
    loc = doc.get("location")
    if loc is not None:
        if not isinstance(loc, str):
            raise PlanParseError(BAD_SCHEMA, "location must be a string or null")
        loc = _LOC_ALIASES.get(loc.strip().lower())
        if loc is None:
            raise PlanParseError(BAD_SCHEMA, f"unknown location {doc['location']!r}")
    try:
        return PlanStep("skill", skill=action, target_object=obj,
                        target_location=loc, rationale=str(doc.get("reason", "")))
    except PlannerError as exc:
        raise PlanParseError(BAD_SCHEMA, str(exc)) from exc


class RemoteLMMBackend:
    """Planner/critic backend over the HTTP wire.

    Retries the request on timeouts and on unparseable replies, up to
    ``max_retries`` additional attempts, then raises PlannerError (the
    episode loop maps that to status backend_error).
    """

    def __init__(self, *, endpoint: str | None = None, api_key: str | None = None,
                 model: str = "gpt-4v", timeout_s: float = 30.0,
                 max_retries: int = 2, templates: dict | None = None,
                 library: SkillLibrary | None = None, transport=None):
        self.endpoint = endpoint or os.environ.get(ENDPOINT_VAR)
        if not self.endpoint:
            raise PlannerError(f"no LMM endpoint; set {ENDPOINT_VAR}")
        self.api_key = api_key or os.environ.get(API_KEY_VAR, "")
        self.model = model
        self.timeout_s = timeout_s
        self.max_retries = max_retries
        self.templates = templates
        self.library = library
        self._client = httpx.Client(timeout=timeout_s, transport=transport)

    def _call(self, request: dict) -> str:
        headers = {"content-type": "application/json"}
        if self.api_key:
            headers["authorization"] = f"Bearer {self.api_key}"
        resp = self._client.post(self.endpoint, json=request, headers=headers)
        resp.raise_for_status()
        body = resp.json()
        text = body.get("text")
        if not isinstance(text, str):
            raise PlanParseError(BAD_SCHEMA, "response body has no text field")
        return text

    def propose(self, ctx: PlannerContext) -> PlanStep:
        request = build_lmm_request(ctx, self.templates, model=self.model)
        last: Exception | None = None
        for _ in range(self.max_retries + 1):
            try:
                return parse_plan_response(self._call(request), self.library)
            except (httpx.TimeoutException, httpx.HTTPStatusError, PlanParseError) as exc:
                last = exc
        raise PlannerError(f"LMM backend failed after retries: {last}")

    def review(self, ctx: CriticContext) -> CriticVerdict:
        request = build_lmm_request(ctx, self.templates, model=self.model)
        last: Exception | None = None
        for _ in range(self.max_retries + 1):
            try:
                text = self._call(request)
                doc = json.loads(extract_last_block(text))
                decision = doc.get("decision")
                if decision not in ("approve", "reject"):
                    raise PlanParseError(BAD_SCHEMA, f"bad decision {decision!r}")
                return CriticVerdict(decision, str(doc.get("reason", "")) or
                                     ("" if decision == "approve" else "rejected"))
            except (httpx.TimeoutException, httpx.HTTPStatusError, PlanParseError,
                    json.JSONDecodeError) as exc:
                last = exc
        raise PlannerError(f"LMM backend failed after retries: {last}")

    def close(self) -> None:
        self._client.close()
