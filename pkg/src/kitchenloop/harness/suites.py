"""The experiment runner: seeded trials per cell, merged into result tables.

Every trial is an isolated closed-loop episode: its own world built from
the cell's scene recipe, its own skill library and critique memory, and a
seed derived from (suite, cell, trial, seed base) so trials are independent
and the whole table is reproducible byte for byte. ``run_trial`` is a pure
function of those inputs, which is what makes trial order irrelevant and
parallel execution safe: ``run_suite`` merges by cell label, not by
completion order.

Two suites train a policy instead of running episodes (demo_scaling and
multi_scene); their rows report held-out waypoint accuracy.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace

from ..canonical import derive_seed, digest
from ..memory.skills import default_library
from ..memory.store import CritiqueStore
from ..planner import (
    RemoteLMMBackend,
    TaskSpec,
    run_episode,
    scripted_critic_review,
    scripted_planner_propose,
)
from ..planner.wire import ENDPOINT_VAR
from ..policy.checkpoint import load_checkpoint
from ..policy.config import PolicyConfig
from ..policy.dataset import REACH_TEMPLATES, make_reach_dataset
from ..policy.training import TrainConfig, evaluate_reach, train_policy
from ..world.predicates import check_predicate
from ..world.scenario import Scenario
from ..world.sim import ObservationConfig, apply_skill
from ..world.types import NoiseSpec, SkillCall
from .catalog import SUITES, Cell, build_scenario, cells_for, trial_seed
from .executors import OracleExecutor, PolicyExecutor


class HarnessError(Exception):
    pass


PLANNERS = ("scripted", "remote")
EXECUTORS = ("oracle", "policy")

# Cloud resolution for policy-grounded trials; matches the training scenes.
_POLICY_OBS = ObservationConfig(n_points=256, include_cloud=True)


@dataclass(frozen=True)
class SuiteSpec:
    """What to run and how: one spec fully determines one result table."""

    suite: str
    seed_base: int = 0
    trials: int | None = None          # per-cell override; None = catalog counts
    planner: str = "scripted"
    executor: str = "oracle"
    checkpoint: str | None = None      # required when executor == "policy"
    retry_budget: int | None = None    # per-cell override
    noise: NoiseSpec | None = None     # override for cells that run with noise
    epochs: int = 8                    # training suites only
    demos_per_task: int = 10           # multi_scene training set size
    eval_scenes: int = 20              # held-out scenes per template
    seeds: tuple[int, ...] = (0, 1, 2)  # demo_scaling training seeds

    def __post_init__(self):
        if self.suite not in SUITES:
            raise HarnessError(f"unknown suite {self.suite!r}")
        if self.planner not in PLANNERS:
            raise HarnessError(f"unknown planner backend {self.planner!r}")
        if self.executor not in EXECUTORS:
            raise HarnessError(f"unknown executor {self.executor!r}")
        if self.trials is not None and self.trials < 1:
            raise HarnessError("trials must be >= 1")
        if len(set(self.seeds)) != len(self.seeds):
            raise HarnessError("seeds must be distinct")

    def to_doc(self) -> dict:
        return {
            "suite": self.suite,
            "seed_base": self.seed_base,
            "trials": self.trials,
            "planner": self.planner,
            "executor": self.executor,
            "checkpoint": self.checkpoint,
            "retry_budget": self.retry_budget,
            "noise": None if self.noise is None else self.noise.to_doc(),
            "epochs": self.epochs,
            "demos_per_task": self.demos_per_task,
            "eval_scenes": self.eval_scenes,
            "seeds": list(self.seeds),
        }

    def config_hash(self) -> str:
        return digest(self.to_doc())


@dataclass(frozen=True)
class Row:
    cell: str
    successes: int
    trials: int
    reference_rate: float | None = None

    def __post_init__(self):
        if not 0 <= self.successes <= self.trials:
            raise HarnessError(
                f"row {self.cell!r}: successes {self.successes} outside 0..{self.trials}")

    @property
    def rate(self) -> float:
        return self.successes / self.trials

    def to_doc(self) -> dict:
        return {
            "cell": self.cell,
            "successes": self.successes,
            "trials": self.trials,
            "rate": self.rate,
            "reference": self.reference_rate,
        }


@dataclass(frozen=True)
class ResultTable:
    suite: str
    rows: tuple
    config_hash: str
    provenance: str

    def to_doc(self) -> dict:
        return {
            "suite": self.suite,
            "config_hash": self.config_hash,
            "provenance": self.provenance,
            "rows": [row.to_doc() for row in self.rows],
        }


def _apply_overrides(spec: SuiteSpec, cell: Cell) -> Cell:
    out = cell
    if spec.trials is not None:
        out = replace(out, trials=spec.trials)
    if spec.retry_budget is not None:
        out = replace(out, retry_budget=spec.retry_budget,
                      step_budget=max(out.step_budget, spec.retry_budget + 1))
    if spec.noise is not None and cell.noise.enabled:
        out = replace(out, noise=spec.noise)
    return out


def _make_backends(spec: SuiteSpec, library):
    if spec.planner == "scripted":
        return scripted_planner_propose, scripted_critic_review, lambda: None
    backend = RemoteLMMBackend(library=library)
    return backend.propose, backend.review, backend.close


def judge_trial(cell: Cell, log, final_state) -> bool:
    """Apply the cell's success mode to a finished episode."""
    status = log.status
    if status != "done":
        return False
    if cell.success == "done_zero_skills":
        last = [ev for ev in log.events() if ev.kind == "status"][-1]
        return last.payload["skills_executed"] == 0
    goal_ok = check_predicate(final_state, list(cell.goal))
    if cell.success == "goal":
        return goal_ok
    outcomes = [ev.payload["observed_success"]
                for ev in log.events() if ev.kind == "skill_outcome"]
    return goal_ok and all(outcomes)


def first_skill_succeeded(log) -> bool:
    for ev in log.events():
        if ev.kind == "skill_outcome":
            return bool(ev.payload["observed_success"])
    return False


def run_trial(spec: SuiteSpec, cell: Cell, trial: int, policy=None):
    """One isolated episode; returns (success, first_skill_success).

    ``policy`` is the preloaded (params, cfg) pair when the spec grounds
    grasps with the trained policy; loading it once per suite keeps trials
    cheap without breaking their independence.
    """
    seed = trial_seed(spec.suite, cell.label, trial, spec.seed_base)
    scenario = build_scenario(cell, seed)
    world = scenario.initial_state()
    library = default_library()
    memory = CritiqueStore()
    planner, critic, close = _make_backends(spec, library)
    if spec.executor == "policy":
        params, cfg = policy
        executor = PolicyExecutor(params, cfg, seed=seed)
        obs_config = _POLICY_OBS
    else:
        executor = OracleExecutor()
        obs_config = ObservationConfig(n_points=0, include_cloud=False)
    task = TaskSpec(
        instruction=cell.instruction,
        scenario=cell.label,
        step_budget=cell.step_budget,
        retry_budget=cell.retry_budget,
    )
    try:
        log, final = run_episode(
            world, planner, critic, memory, library, executor, task,
            noise=cell.noise,
            disturbances=list(cell.disturbances),
            obs_config=obs_config,
            episode_id=f"{spec.suite}/{cell.label}/{trial}",
        )
    finally:
        close()
    return judge_trial(cell, log, final), first_skill_succeeded(log)


def _episode_rows(spec: SuiteSpec) -> list[Row]:
    cells = [_apply_overrides(spec, cell) for cell in cells_for(spec.suite)]
    if not cells:
        raise HarnessError(f"suite {spec.suite!r} has no scenes in the catalog")
    policy = None
    if spec.executor == "policy":
        if spec.checkpoint is None:
            raise HarnessError("executor 'policy' needs a checkpoint")
        policy = load_checkpoint(spec.checkpoint)
    if spec.planner == "remote" and not os.environ.get(ENDPOINT_VAR):
        raise HarnessError(f"planner 'remote' needs {ENDPOINT_VAR} set")

    outcomes: dict[str, list] = {cell.label: [] for cell in cells}
    for cell in cells:
        for trial in range(cell.trials):
            outcomes[cell.label].append(run_trial(spec, cell, trial, policy))

    rows = []
    for cell in cells:
        results = outcomes[cell.label]
        rows.append(Row(cell.label, sum(ok for ok, _ in results), len(results),
                        cell.reference_rate))
        if cell.first_step:
            rows.append(Row(f"{cell.label}/first_step",
                            sum(first for _, first in results), len(results)))
    return rows


def _eval_row(label: str, params, cfg, seed: int, spec: SuiteSpec,
              kitchen: str = "default") -> Row:
    ev = evaluate_reach(params, cfg, cfg.templates, n_scenes=spec.eval_scenes,
                        seed=seed, stages=6, kitchen=kitchen)
    hits = sum(err <= 0.02 for err in ev["errors"])
    return Row(label, hits, len(ev["errors"]))


def _demo_scaling_rows(spec: SuiteSpec) -> list[Row]:
    cfg = PolicyConfig(templates=REACH_TEMPLATES)
    rows = []
    for n_demos in (5, 10):
        for seed in spec.seeds:
            demos = make_reach_dataset(REACH_TEMPLATES, n_demos, seed=seed)
            params, _ = train_policy(demos, cfg,
                                     TrainConfig(epochs=spec.epochs, seed=seed))
            rows.append(_eval_row(
                f"demos_{n_demos}/seed_{seed}", params, cfg,
                derive_seed("demo-scaling-eval", spec.seed_base), spec))
    return rows


def _multi_scene_rows(spec: SuiteSpec) -> list[Row]:
    cfg = PolicyConfig(templates=REACH_TEMPLATES)
    seed = spec.seeds[0]
    demos = []
    for kitchen in ("default", "alt"):
        demos += make_reach_dataset(REACH_TEMPLATES, spec.demos_per_task,
                                    seed=seed, kitchen=kitchen)
    params, _ = train_policy(demos, cfg, TrainConfig(epochs=spec.epochs, seed=seed))
    return [
        _eval_row(f"kitchen/{kitchen}", params, cfg,
                  derive_seed("multi-scene-eval", spec.seed_base), spec, kitchen)
        for kitchen in ("default", "alt")
    ]


def run_suite(spec: SuiteSpec) -> ResultTable:
    """All trials of a suite, merged by cell into one reproducible table."""
    if spec.suite == "demo_scaling":
        rows = _demo_scaling_rows(spec)
    elif spec.suite == "multi_scene":
        rows = _multi_scene_rows(spec)
    else:
        rows = _episode_rows(spec)
    config_hash = spec.config_hash()
    return ResultTable(
        suite=spec.suite,
        rows=tuple(rows),
        config_hash=config_hash,
        provenance=f"kitchenloop:{spec.suite}@{config_hash[:12]}",
    )


def single_attempt_rate(noise: NoiseSpec, skill: str = "turn",
                        n_attempts: int = 10_000, seed_base: int = 0) -> float:
    """Empirical single-shot success of one noisy fixture skill.

    Each attempt is a fresh world whose only rng consumption is the one
    noise draw inside apply_skill, so this measures exactly the geometry
    event the Monte-Carlo oracle integrates: commanded pose + noise within
    the fixture tolerance.
    """
    fixtures = {"drawer_left_open": skill == "close",
                "drawer_right_open": False, "faucet_on": False}
    successes = 0
    for i in range(n_attempts):
        scenario = Scenario(name="attempt", seed=derive_seed("attempt", skill, i, seed_base),
                            kitchen="default", objects=[], fixtures=dict(fixtures))
        world = scenario.initial_state()
        geo = world.fixtures.geometry
        if skill == "turn":
            call = SkillCall(skill="turn", commanded_pose=geo.faucet_handle)
        else:
            call = SkillCall(skill=skill, commanded_pose=geo.handle("drawer_left"),
                             target_location="drawer_left")
        _, outcome = apply_skill(world, call, noise)
        successes += outcome.success
    return successes / n_attempts


def retry_success_rates(noise: NoiseSpec, budgets, trials: int = 200,
                        seed_base: int = 0) -> dict[int, float]:
    """Episode success of the noisy faucet task as the retry budget grows.

    Seeds are shared across budgets: an episode's attempt sequence is
    identical until it either succeeds or runs out of retries, so success
    at budget r implies success at r+1 and the curve is monotone by
    construction — what this measures is where it saturates.
    """
    base = Cell(
        label="noise/turn_faucet",
        instruction="turn the faucet on",
        goal=({"fixture": {"name": "faucet_on", "value": True}},),
        noise=noise,
    )
    rates = {}
    for budget in budgets:
        cell = replace(base, retry_budget=budget, step_budget=budget + 1,
                       trials=trials)
        spec = SuiteSpec(suite="ablation_noise", seed_base=seed_base)
        hits = sum(run_trial(spec, cell, t)[0] for t in range(trials))
        rates[budget] = hits / trials
    return rates
