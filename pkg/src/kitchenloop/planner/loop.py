"""The closed loop: observe, propose, review, execute, repeat.

One run_episode call drives a single episode to termination. Structure of
each cycle:

1. loop boundary — scheduled disturbances whose step has come due and any
   externally queued commands (live disturbances, critiques, abort) apply
   here, never mid-skill;
2. observe; the summary becomes the only world access the backends get;
3. the planner proposes against instruction + summary + history + lessons;
4. the critic reviews summary + proposal only; rejections feed back into
   the planner's history and re-proposal runs for at most three rounds,
   after which the loop executes the planner's last proposal and logs an
   override;
5. the approved skill executes; success is judged from the observation
   delta (detect_skill_failure), and the judgment enters history so the
   planner can retry.

Termination statuses: done (planner's call), budget_exhausted (skill
budget, per-step retry budget, or cycle cap), backend_error (a backend
raised or kept producing unparseable output), aborted (external command).
"""

from __future__ import annotations

from collections import Counter

from ..world.sim import ObservationConfig, apply_skill, inject_disturbance, observe
from ..world.types import Disturbance, NoiseSpec, SkillCallError
from ..memory.store import CritiqueRecord, CritiqueStore, summarize_memory
from ..memory.skills import SkillLibrary
from .scripted import detect_skill_failure
from .types import (
    CriticContext,
    EpisodeLog,
    PlannerContext,
    PlannerError,
    PlanStep,
    TaskSpec,
)

MAX_CRITIC_ROUNDS = 3

# Summary-only observations for the loop's own bookkeeping (failure
# detection after a skill); the cycle's main observation may carry a cloud
# for the executor.
_SUMMARY_ONLY = ObservationConfig(n_points=0, include_cloud=False)


def _due(disturbances: list[Disturbance], step: int) -> list[Disturbance]:
    ready = [d for d in disturbances if d.at_step is None or d.at_step <= step]
    for d in ready:
        disturbances.remove(d)
    return ready


def _record_critique(memory: CritiqueStore | None, log: EpisodeLog, at_step: int,
                     author: str, text: str, step_index: int) -> None:
    if memory is None:
        return
    rec = CritiqueRecord(
        id=f"{log.episode_id}:c{len(memory)}",
        episode_id=log.episode_id,
        step_index=step_index,
        author=author,
        text=text,
        timestamp=len(log),
    )
    memory.record(rec)
    log.append("critique", at_step, rec.to_doc())


def run_episode(world, planner, critic, memory: CritiqueStore | None,
                library: SkillLibrary, executor, task: TaskSpec, *,
                noise: NoiseSpec = NoiseSpec.disabled(),
                disturbances=(), obs_config: ObservationConfig = _SUMMARY_ONLY,
                command_source=None, episode_id: str = "episode",
                summarizer=None, log: EpisodeLog | None = None):
    """Run one episode; returns (EpisodeLog, final WorldState).

    Callers that need to observe events while the episode is still running
    (the gateway streams them live) pass their own ``log``; it is appended
    to in place. ``episode_id`` is ignored in that case.
    """
    if log is None:
        log = EpisodeLog(episode_id)
    pending = list(disturbances)
    history: list[dict] = []
    exec_counts: Counter = Counter()
    skills_executed = 0
    cycle_cap = 2 * task.step_budget + 8

    def finish(status: str, cause: str | None = None):
        payload = {"status": status, "skills_executed": skills_executed}
        if cause:
            payload["cause"] = cause
        log.append("status", world.step, payload)
        return log, world

    for _ in range(cycle_cap):
        # -- loop boundary: scheduled disturbances, then live commands
        for d in _due(pending, world.step):
            world = inject_disturbance(world, d)
            log.append("disturbance", world.step, d.to_doc())
        if command_source is not None:
            for cmd in command_source():
                kind = cmd.get("kind")
                if kind == "abort":
                    return finish("aborted", cmd.get("reason") or "external abort")
                if kind == "disturbance":
                    world = inject_disturbance(world, cmd["value"])
                    log.append("disturbance", world.step, cmd["value"].to_doc())
                elif kind == "critique":
                    _record_critique(memory, log, world.step, "human",
                                     cmd["text"], skills_executed)

        obs = observe(world, obs_config)
        log.append("observation", world.step,
                   {"digest": obs.digest(), "summary": obs.summary})

        lessons = summarize_memory(memory, summarizer).lessons if memory is not None else ()
        skill_docs = tuple(sk.to_doc() for sk in library.descriptors())

        # -- propose / review, with bounded rejection feedback
        step: PlanStep | None = None
        rounds = 0
        while True:
            ctx = PlannerContext(
                instruction=task.instruction,
                scene_summary=obs.summary,
                history=tuple(history),
                lessons=lessons,
                skills=skill_docs,
            )
            try:
                step = planner(ctx)
            except PlannerError as exc:
                log.append("proposal", world.step, {"error": str(exc)})
                return finish("backend_error", str(exc))
            log.append("proposal", world.step, {"round": rounds, **step.to_doc()})

            if step.kind == "done":
                return finish("done")
            if step.kind == "propose_new_skill":
                library.propose(step.new_skill, step.description)
                log.append("skill_proposed", world.step,
                           {"name": step.new_skill, "description": step.description})
                history.append({"kind": "proposal_forwarded", "at_step": world.step,
                                "step": step.to_doc()})
                break  # re-plan with the updated library

            cctx = CriticContext(scene_summary=obs.summary, proposed=step,
                                 skills=skill_docs)
            verdict = critic(cctx)
            log.append("verdict", world.step,
                       {**verdict.to_doc(), "critic_input": cctx.to_doc()})
            if verdict.decision == "approve":
                break
            rounds += 1
            _record_critique(memory, log, world.step, "critic", verdict.reason,
                             skills_executed)
            history.append({"kind": "rejection", "at_step": world.step,
                            "step": step.to_doc(), "reason": verdict.reason})
            if rounds >= MAX_CRITIC_ROUNDS:
                log.append("override", world.step,
                           {"rounds": rounds, "step": step.to_doc()})
                break

        if step.kind == "propose_new_skill":
            continue

        # -- execute
        if exec_counts[step.key()] > task.retry_budget:
            return finish("budget_exhausted",
                          f"retry budget spent on {step.skill}")
        if skills_executed >= task.step_budget:
            return finish("budget_exhausted", "skill budget spent")
        try:
            call = executor(step, world, obs)
        except (SkillCallError, PlannerError) as exc:
            return finish("backend_error", f"executor: {exc}")
        pre_obs = observe(world, _SUMMARY_ONLY)
        world, outcome = apply_skill(world, call, noise)
        post_obs = observe(world, _SUMMARY_ONLY)
        exec_counts[step.key()] += 1
        skills_executed += 1
        seen_failed = detect_skill_failure(step, pre_obs, post_obs)
        log.append("skill_outcome", world.step, {
            "step": step.to_doc(),
            "call": call.to_doc(),
            "outcome": outcome.to_doc(),
            "observed_success": not seen_failed,
        })
        history.append({"kind": "executed", "at_step": world.step,
                        "step": step.to_doc(), "success": not seen_failed})

    return finish("budget_exhausted", "cycle cap reached")
