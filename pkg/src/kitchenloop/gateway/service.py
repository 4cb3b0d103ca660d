"""Session manager: runs episodes on background threads for remote clients.

Each session owns one episode loop, one event log, and one inbound command
queue. Commands (disturbance, critique, abort) are queued by HTTP handlers
and drained by the loop at its next boundary, so they never land mid-skill.
All sessions share a single critique store: lessons distilled from one
episode's critiques reach the planner prompt of every later episode, which
is the whole point of keeping the store outside the loop.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field

from ..harness.catalog import SUITES, Cell, build_scenario, cells_for, trial_seed
from ..harness.executors import OracleExecutor, PolicyExecutor
from ..memory.skills import default_library
from ..memory.store import CritiqueRecord, CritiqueStore
from ..planner.loop import run_episode
from ..planner.scripted import scripted_critic_review, scripted_planner_propose
from ..planner.types import EpisodeLog, TaskSpec
from ..planner.wire import RemoteLMMBackend
from ..world.scenario import Scenario
from ..world.sim import ObservationConfig
from ..world.types import Disturbance, NoiseSpec


class GatewayError(Exception):
    """Request-level failure; ``code`` picks the HTTP status."""

    def __init__(self, message: str, code: int = 400):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class CatalogEntry:
    scenario: Scenario
    step_budget: int
    retry_budget: int


# Suites whose cells make sensible interactive sessions. Noise cells are
# excluded: their instructions duplicate the fixture cells and actuation
# noise is a benchmark ablation, not something an operator drives.
_CATALOG_SUITES = ("skills", "skills_distractor", "composition",
                   "long_horizon", "ablation_disturbance", "ablation_unaligned")


def scenario_catalog() -> dict[str, CatalogEntry]:
    """Named, fully seeded scenarios offered to clients, keyed suite/label."""
    catalog: dict[str, CatalogEntry] = {}
    for suite in _CATALOG_SUITES:
        for cell in cells_for(suite):
            scenario = build_scenario(cell, trial_seed(suite, cell.label, 0, 0))
            catalog[f"{suite}/{cell.label}"] = CatalogEntry(
                scenario=scenario,
                step_budget=cell.step_budget,
                retry_budget=cell.retry_budget,
            )
    return catalog


_SUMMARY_OBS = ObservationConfig(n_points=0, include_cloud=False)
_CLOUD_OBS = ObservationConfig(n_points=256, include_cloud=True)


@dataclass
class Session:
    """One episode's handle: log, command queue, worker thread."""

    id: str
    scenario_id: str
    instruction: str
    log: EpisodeLog
    step_delay_s: float = 0.0
    commands: list = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)
    done: threading.Event = field(default_factory=threading.Event)
    thread: threading.Thread | None = None

    @property
    def live(self) -> bool:
        return not self.done.is_set()

    @property
    def status(self) -> str:
        if self.live:
            return "running"
        return self.log.status or "backend_error"

    def enqueue(self, command: dict) -> None:
        with self.lock:
            self.commands.append(command)

    def drain(self) -> list:
        if self.step_delay_s:
            time.sleep(self.step_delay_s)
        with self.lock:
            out, self.commands = self.commands, []
        return out

    def snapshot(self) -> dict:
        return {
            "session": self.id,
            "scenario": self.scenario_id,
            "instruction": self.instruction,
            "status": self.status,
            "live": self.live,
            "cursor": len(self.log) - 1,
        }


class SessionManager:
    """Registry of sessions plus the shared critique memory.

    ``checkpoint`` is an optional (params, config) pair enabling the learned
    grasp executor; without it only the oracle executor is available.
    """

    def __init__(self, catalog: dict[str, CatalogEntry] | None = None,
                 checkpoint=None):
        self.catalog = scenario_catalog() if catalog is None else catalog
        self.memory = CritiqueStore()
        self.checkpoint = checkpoint
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()
        self._counter = 0

    # -- lookup

    def session(self, session_id: str) -> Session:
        try:
            return self._sessions[session_id]
        except KeyError:
            raise GatewayError(f"unknown session {session_id!r}", code=404) from None

    def sessions(self) -> list[Session]:
        with self._lock:
            return list(self._sessions.values())

    # -- operations

    def start(self, scenario_id: str, instruction: str | None = None,
              planner: str = "scripted", executor: str = "oracle",
              step_delay_s: float = 0.0) -> Session:
        try:
            entry = self.catalog[scenario_id]
        except KeyError:
            raise GatewayError(f"unknown scenario {scenario_id!r}", code=404) from None
        if planner not in ("scripted", "remote"):
            raise GatewayError(f"unknown planner {planner!r}")
        if executor not in ("oracle", "policy"):
            raise GatewayError(f"unknown executor {executor!r}")
        if executor == "policy" and self.checkpoint is None:
            raise GatewayError("no policy checkpoint loaded on this gateway")
        if step_delay_s < 0 or step_delay_s > 5.0:
            raise GatewayError(f"step_delay_s out of range: {step_delay_s}")

        text = instruction if instruction is not None else entry.scenario.instruction
        if not text:
            raise GatewayError("instruction required: scenario has no default")

        with self._lock:
            self._counter += 1
            sid = f"session-{self._counter:04d}"
            session = Session(id=sid, scenario_id=scenario_id, instruction=text,
                              log=EpisodeLog(sid), step_delay_s=step_delay_s)
            self._sessions[sid] = session

        library = default_library()
        if planner == "remote":
            backend = RemoteLMMBackend(library=library)
            plan_fn, critic_fn = backend.propose, backend.review
        else:
            plan_fn, critic_fn = scripted_planner_propose, scripted_critic_review
        if executor == "policy":
            params, cfg = self.checkpoint
            exec_fn = PolicyExecutor(params, cfg, seed=entry.scenario.seed)
            obs_config = _CLOUD_OBS
        else:
            exec_fn = OracleExecutor()
            obs_config = _SUMMARY_OBS
        task = TaskSpec(instruction=text, scenario=scenario_id,
                        step_budget=entry.step_budget,
                        retry_budget=entry.retry_budget)
        world = entry.scenario.initial_state()
        disturbances = tuple(entry.scenario.disturbances)

        def work():
            try:
                run_episode(world, plan_fn, critic_fn, self.memory, library,
                            exec_fn, task, noise=NoiseSpec.disabled(),
                            disturbances=disturbances, obs_config=obs_config,
                            command_source=session.drain, log=session.log)
            except Exception as exc:  # noqa: BLE001 - surfaced as a terminal event
                session.log.append("status", -1,
                                   {"status": "backend_error", "cause": str(exc),
                                    "skills_executed": -1})
            finally:
                session.done.set()

        session.thread = threading.Thread(target=work, name=sid, daemon=True)
        session.thread.start()
        return session

    def post_disturbance(self, session_id: str, doc: dict) -> dict:
        session = self.session(session_id)
        if not session.live:
            raise GatewayError("session has ended", code=409)
        try:
            disturbance = Disturbance.from_doc(doc)
        except Exception as exc:
            raise GatewayError(f"invalid disturbance: {exc}") from None
        session.enqueue({"kind": "disturbance", "value": disturbance})
        return {"queued": True, "session": session_id}

    def post_critique(self, session_id: str, text: str) -> dict:
        session = self.session(session_id)
        if not isinstance(text, str) or not text.strip():
            raise GatewayError("critique text must be non-empty")
        if session.live:
            session.enqueue({"kind": "critique", "text": text})
            return {"queued": True, "live": True, "session": session_id}
        # The episode is over, so the loop can no longer record it; write it
        # to the shared store directly and it enters the next summarization.
        rec = CritiqueRecord(
            id=f"{session.log.episode_id}:c{len(self.memory)}",
            episode_id=session.log.episode_id,
            step_index=-1,
            author="human",
            text=text,
            timestamp=len(session.log),
        )
        self.memory.record(rec)
        return {"queued": False, "live": False, "session": session_id,
                "record": rec.id}

    def abort(self, session_id: str, reason: str | None = None) -> dict:
        session = self.session(session_id)
        if not session.live:
            raise GatewayError("session has ended", code=409)
        session.enqueue({"kind": "abort", "reason": reason})
        return {"queued": True, "session": session_id}

    def events(self, session_id: str, since: int = -1) -> dict:
        session = self.session(session_id)
        events = session.log.events(since)
        return {
            "session": session_id,
            "events": [ev.to_doc() for ev in events],
            "cursor": events[-1].index if events else since,
            "status": session.status,
            "live": session.live,
        }

    def wait(self, session_id: str, timeout: float = 30.0) -> bool:
        """Block until the session's episode thread finishes (test helper)."""
        return self.session(session_id).done.wait(timeout)
