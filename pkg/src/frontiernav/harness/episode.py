"""One navigation episode: map, pick frontiers, plan, act, until stop or budget."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from frontiernav import consensus
from frontiernav.config import Config
from frontiernav.experts import (
    AffinityTable,
    ExpertRecommendation,
    http_expert_recommend,
    noisy_oracle_recommend,
    o2f_recommend,
    r2f_recommend,
    sle_recommend,
)
from frontiernav.harness.metrics import (
    EpisodeResult,
    ErrorClass,
    FailureEvidence,
    StopReason,
    classify_error,
)
from frontiernav.mapping import BeliefMap, Frontier, FrontierContext, extract_frontiers, frontier_context
from frontiernav.planner import (
    DistanceField,
    StuckError,
    extract_path,
    fmm_field,
    next_action,
    traversable_mask,
)
from frontiernav.world import Action, Cell, Pose, Scenario, observe, step


_SPEND_RADIUS = 0  # cells, Chebyshev


def _around(cell: Cell, shape: tuple[int, int]) -> set[Cell]:
    r, c = cell
    return {(r + dr, c + dc) for dr in (-1, 0, 1) for dc in (-1, 0, 1)
            if 0 <= r + dr < shape[0] and 0 <= c + dc < shape[1]}


@dataclass(frozen=True)
class Policy:
    """Global frontier-selection strategy: ``consensus``, ``majority:k``, ``closest`` or ``oracle:p``."""

    kind: str
    k: int = 1
    p: float = 1.0

    @classmethod
    def parse(cls, text: str) -> "Policy":
        name, _, arg = text.partition(":")
        try:
            if name == "consensus" and not arg:
                return cls("consensus")
            if name == "closest" and not arg:
                return cls("closest")
            if name == "majority":
                k = int(arg) if arg else 3
                if k < 1:
                    raise ValueError
                return cls("majority", k=k)
            if name == "oracle":
                p = float(arg) if arg else 1.0
                if not 0.0 <= p <= 1.0:
                    raise ValueError
                return cls("oracle", p=p)
        except ValueError:
            pass
        raise ValueError(f"bad policy {text!r}; expected consensus, majority:k, closest or oracle:p")

    def __str__(self) -> str:
        if self.kind == "majority":
            return f"majority:{self.k}"
        if self.kind == "oracle":
            return f"oracle:{self.p:g}"
        return self.kind


@dataclass(frozen=True)
class EpisodeSpec:
    scenario: Scenario
    target: str | None = None
    start: Pose | None = None
    seed: int = 0
    max_steps: int = 500
    success_radius: float = 1.0
    episode_id: str = ""

    def __post_init__(self):
        env = self.scenario.env
        if self.target is None:
            object.__setattr__(self, "target", self.scenario.target)
        if self.start is None:
            object.__setattr__(self, "start", self.scenario.start)
        if self.target not in env.target_positions:
            raise ValueError(f"target {self.target!r} does not occur in the scenario")
        if not env.pose_valid(self.start):
            raise ValueError(f"start {self.start} is not in free space")

    @classmethod
    def from_config(cls, scenario: Scenario, config: Config, **kw) -> "EpisodeSpec":
        kw.setdefault("max_steps", config.harness.max_steps)
        kw.setdefault("success_radius", config.harness.success_radius)
        return cls(scenario, **kw)


@dataclass
class _Goal:
    kind: str  # "frontier" or "target"
    cells: frozenset[Cell]
    anchor: Cell
    frontier_id: int | None = None

    def record(self) -> dict:
        return {"kind": self.kind, "cell": list(self.anchor), "frontier_id": self.frontier_id}


@dataclass
class _Decision:
    """Everything an expert may look at for one global decision."""

    target: str
    frontiers: list[Frontier]
    distances: dict[int, float]
    true_distances: dict[int, float]
    belief: BeliefMap
    context_radius: float
    _contexts: list[FrontierContext] | None = field(default=None, repr=False)

    @property
    def contexts(self) -> list[FrontierContext]:
        if self._contexts is None:
            self._contexts = [frontier_context(self.belief, f, self.context_radius)
                              for f in self.frontiers]
        return self._contexts

    @property
    def ids(self) -> list[int]:
        return [f.id for f in self.frontiers]


Expert = Callable[[_Decision, np.random.Generator], ExpertRecommendation]


def build_experts(config: Config, table: AffinityTable | None = None) -> list[Expert]:
    """The three experts for the configured backend (object, room, scene-layout order)."""
    ec = config.experts
    if ec.backend == "oracle":
        return [lambda d, rng, n=n: noisy_oracle_recommend(d.true_distances, ec.oracle_p, rng, name=n)
                for n in ("oracle1", "oracle2", "oracle3")]
    if ec.backend == "http":
        return [lambda d, rng, n=n: http_expert_recommend(
                    ec.endpoints[n], d.target, d.frontiers, d.contexts, ec.timeout,
                    explored_fraction=d.belief.explored_fraction(), name=n)
                for n in ("o2f", "r2f", "sle")]
    table = table or AffinityTable.load(ec.affinity_table)
    return [
        lambda d, rng: o2f_recommend(table, d.target, d.contexts, ec.threshold, ec.top_k),
        lambda d, rng: r2f_recommend(table, d.target, d.contexts, ec.threshold, ec.top_k),
        lambda d, rng: sle_recommend(table, d.target, d.contexts, ec.sle_weights,
                                     ec.threshold, ec.top_k),
    ]


def _choose(policy: Policy, experts: list[Expert], d: _Decision,
            rng: np.random.Generator) -> tuple[int, dict]:
    ids, dist = d.ids, d.distances
    audit: dict = {"policy": str(policy), "candidate_ids": ids,
                   "distances": {str(i): dist[i] for i in ids},
                   "s1": [], "s2": [], "s3": [], "tier": None, "consensus_set": []}
    if policy.kind == "consensus":
        recs = [e(d, rng) for e in experts]
        out = consensus.decide(*(r.frontier_ids for r in recs), ids, dist)
        audit.update({f"s{i + 1}": sorted(r.frontier_ids) for i, r in enumerate(recs)})
        audit.update(tier=out.tier.value, consensus_set=sorted(out.consensus_set))
        errors = [r.expert_name for r in recs if r.error]
        if errors:
            audit["expert_failures"] = errors
        chosen = out.chosen
    elif policy.kind == "majority":
        # the scene-layout slot doubles as the single expert that is re-queried
        samples: list[list[int]] = []

        def sample(r):
            ids_ = experts[-1](d, r).frontier_ids
            samples.append(sorted(ids_))
            return ids_

        chosen = consensus.majority_vote_baseline(sample, policy.k, ids, dist, rng)
        audit["samples"] = samples
    elif policy.kind == "oracle":
        rec = noisy_oracle_recommend(d.true_distances, policy.p, rng)
        audit["samples"] = [sorted(rec.frontier_ids)]
        chosen = min(rec.frontier_ids) if rec.frontier_ids else consensus.closest_frontier_baseline(ids, dist)
    else:
        chosen = consensus.closest_frontier_baseline(ids, dist)
    audit["chosen"] = chosen
    return chosen, audit


def _truth_fields(scenario: Scenario, target: str, radius: float, start: Cell):
    env = scenario.env
    targets = env.target_positions[target]
    to_target = fmm_field(env.free, targets, env.cell_size)
    region = np.argwhere(to_target.values <= radius + 1e-9)
    if to_target.values[start] <= radius + 1e-9:
        shortest = 0.0
    else:
        shortest = fmm_field(env.free, [tuple(c) for c in region], env.cell_size)[start]
    return to_target, shortest


def run_episode(spec: EpisodeSpec, policy: Policy | str, config: Config | None = None,
                table: AffinityTable | None = None,
                experts: list[Expert] | None = None,
                on_finish: Callable[[BeliefMap], None] | None = None,
                ) -> tuple[EpisodeResult, list[dict]]:
    """Run one episode and return its result plus the per-step trace records.

    ``on_finish`` receives the final belief map, e.g. to export a snapshot.
    """
    config = config or Config()
    policy = Policy.parse(policy) if isinstance(policy, str) else policy
    experts = experts if experts is not None else build_experts(config, table)
    env = spec.scenario.env
    h = env.cell_size
    target = spec.target
    true_cells = frozenset(env.target_positions[target])
    radius = spec.success_radius
    sensor, action_spec = config.sensor, config.action
    replan = config.harness.replan_interval
    inflate = config.planner.inflate_obstacles

    start_cell = env.cell_of(spec.start.x, spec.start.y)
    truth, shortest = _truth_fields(spec.scenario, target, radius, start_cell)
    sense_seed, expert_seed = np.random.SeedSequence(spec.seed).spawn(2)
    sense_rng = np.random.default_rng(sense_seed)
    expert_rng = np.random.default_rng(expert_seed)

    belief = BeliefMap(env.height, env.width, h)
    pose = spec.start
    trace: list[dict] = []
    goal: _Goal | None = None
    plan: DistanceField | None = None
    spent: set[Cell] = set()
    unplannable: set[Cell] = set()  # spent because the planner could not reach them
    scans: dict[Cell, int] = {}
    n_scan = math.ceil((2 * math.pi - sensor.fov) / action_spec.turn_angle - 1e-9)
    last_decision = -replan
    path_length = 0.0
    decisions = 0
    frontier_distance_sum = 0.0
    collisions = 0
    seen = mapped = planner_stuck = false_target = False
    stop_reason: StopReason | None = None
    steps = 0

    for t in range(spec.max_steps):
        obs = observe(env, pose, sensor, sense_rng)
        belief.integrate(obs)
        seen = seen or any(c in true_cells for c, _ in obs.visible_cells)
        mapped = mapped or any(l == target and c in true_cells for l, c in obs.object_reports)
        agent = env.cell_of(pose.x, pose.y)
        frontiers = extract_frontiers(belief, config.mapping.min_frontier_size)
        frontier_cells = {c for f in frontiers for c in f.cells}

        believed = belief.cells_labelled(target)
        if believed:
            if goal is None or goal.kind != "target" or goal.cells != believed:
                anchor = min(believed, key=lambda c: (math.dist(c, agent), c))
                goal, plan = _Goal("target", believed, anchor), None
        elif goal is not None and (goal.kind == "target" or not goal.cells & frontier_cells
                                   or t - last_decision >= replan):
            goal, plan = None, None

        audits: list[dict] = []
        dist_field: DistanceField | None = None
        action: Action | None = None
        while action is None and stop_reason is None:
            if goal is None:
                cands = [(f, frozenset(f.cells) - spent) for f in frontiers]
                cands = [(f, cells) for f, cells in cands if cells]
                if not cands:
                    # frontiers left over only because the planner could not reach them
                    # (they were reachable over known free space) mean a planning failure
                    planner_stuck = bool(unplannable & frontier_cells)
                    stop_reason = StopReason.STUCK if planner_stuck else StopReason.FRONTIERS_EXHAUSTED
                    break
                if dist_field is None:
                    dist_field = fmm_field(traversable_mask(belief, keep=[agent]), [agent], h)
                dist = {f.id: min(dist_field[c] for c in cells) for f, cells in cands}
                cands = [(f, cells) for f, cells in cands if math.isfinite(dist[f.id])]
                if not cands:
                    planner_stuck = bool(unplannable & frontier_cells)
                    stop_reason = StopReason.STUCK if planner_stuck else StopReason.FRONTIERS_EXHAUSTED
                    break
                d = _Decision(target, [f for f, _ in cands], {f.id: dist[f.id] for f, _ in cands},
                              {f.id: truth[f.anchor] for f, _ in cands}, belief,
                              config.mapping.context_radius)
                chosen, audit = _choose(policy, experts, d, expert_rng)
                audit["step"] = t
                audits.append(audit)
                decisions += 1
                frontier_distance_sum += dist[chosen]
                last_decision = t
                f, cells = next((f, c) for f, c in cands if f.id == chosen)
                goal, plan = _Goal("frontier", cells, f.anchor, f.id), None

            # the agent's own neighbourhood stays open so it can step off a wall
            trav = traversable_mask(belief, unknown_traversable=True, inflate=inflate,
                                    keep=goal.cells | _around(agent, belief.state.shape))
            if plan is not None and plan.reachable(agent):
                try:
                    path = extract_path(plan, agent)
                    if not all(trav[c] for c in path):
                        plan = None
                except StuckError:
                    plan = None
            if plan is None:
                plan = fmm_field(trav, goal.cells, h)
            if not plan.reachable(agent):
                if goal.kind == "frontier":
                    spent |= goal.cells
                    unplannable |= goal.cells
                    goal, plan = None, None
                    continue
                stop_reason, planner_stuck = StopReason.STUCK, True
                break
            if goal.kind == "target" and plan[agent] <= radius:
                action = Action.STOP
                break
            if goal.kind == "frontier" and agent in goal.cells:
                # look around before giving up on the frontier under our feet
                if scans.get(agent, 0) < n_scan:
                    scans[agent] = scans.get(agent, 0) + 1
                    action = Action.LEFT
                    break
                # only the stretch of frontier around the agent counts as visited
                spent |= {c for c in frontier_cells
                          if max(abs(c[0] - agent[0]), abs(c[1] - agent[1])) <= _SPEND_RADIUS}
                goal, plan = None, None
                continue
            try:
                path = extract_path(plan, agent)
            except StuckError:
                stop_reason, planner_stuck = StopReason.STUCK, True
                break
            action = next_action(pose, path, action_spec, h)

        record = {"step": t, "pose": pose.as_list(), "goal": goal.record() if goal else None}
        if audits:
            record["decision_audit"] = audits
        if action is None:
            record.update(action=None, moved=False)
            trace.append(record)
            break

        new_pose, moved = step(env, pose, action, action_spec)
        steps += 1
        record.update(action=action.value, moved=moved)
        trace.append(record)
        if action is Action.STOP:
            if truth[agent] <= radius + 1e-9:
                stop_reason = StopReason.STOPPED_NEAR_TARGET
            else:
                stop_reason = StopReason.STOPPED_FAR
                nearest = min(goal.cells, key=lambda c: (math.dist(c, agent), c))
                false_target = nearest not in true_cells
            break
        if moved:
            path_length += action_spec.forward_step
            collisions = 0
        elif action is Action.FORWARD:
            collisions += 1
            if collisions >= config.harness.stuck_collisions:
                stop_reason, planner_stuck = StopReason.STUCK, True
                break
        pose = new_pose

    if stop_reason is None:
        stop_reason = StopReason.BUDGET_EXHAUSTED
    success = stop_reason is StopReason.STOPPED_NEAR_TARGET
    error = ErrorClass.NONE if success else classify_error(FailureEvidence(
        stop_reason, false_target_stop=false_target, target_seen=seen,
        target_mapped=mapped, planner_stuck=planner_stuck))
    if on_finish is not None:
        on_finish(belief)
    result = EpisodeResult(spec.episode_id, str(policy), success, steps, path_length,
                           shortest, stop_reason, error, decisions, frontier_distance_sum)
    return result, trace
