"""Closed-loop task planning: propose -> critique -> execute -> remember."""

from .loop import MAX_CRITIC_ROUNDS, run_episode
from .scripted import (
    detect_skill_failure,
    parse_instruction,
    scripted_critic_review,
    scripted_planner_propose,
)
from .types import (
    EVENT_KINDS,
    PLAN_KINDS,
    VERDICTS,
    CriticContext,
    CriticVerdict,
    EpisodeLog,
    Event,
    PlannerContext,
    PlannerError,
    PlanStep,
    TaskSpec,
)
from .wire import (
    PlanParseError,
    RemoteLMMBackend,
    build_lmm_request,
    extract_last_block,
    parse_plan_response,
)

__all__ = [
    "MAX_CRITIC_ROUNDS",
    "run_episode",
    "detect_skill_failure",
    "parse_instruction",
    "scripted_critic_review",
    "scripted_planner_propose",
    "EVENT_KINDS",
    "PLAN_KINDS",
    "VERDICTS",
    "CriticContext",
    "CriticVerdict",
    "EpisodeLog",
    "Event",
    "PlannerContext",
    "PlannerError",
    "PlanStep",
    "TaskSpec",
    "PlanParseError",
    "RemoteLMMBackend",
    "build_lmm_request",
    "extract_last_block",
    "parse_plan_response",
]
