"""Batch evaluation over scenarios x policies x episodes, serial or thread-parallel.

Every (scenario, episode) pair gets one seed that all policies share, so policy
comparisons run on common random numbers. Output order never depends on the
executor: results are sorted by (episode_id, policy).
"""
from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from frontiernav.config import Config
from frontiernav.experts import AffinityTable
from frontiernav.harness.episode import EpisodeSpec, Policy, run_episode
from frontiernav.harness.metrics import EpisodeResult, RunReport, compute_metrics
from frontiernav.world import Scenario, load_scenario


def episode_seed(base_seed: int, scenario_index: int, episode_index: int) -> int:
    state = np.random.SeedSequence([base_seed, scenario_index, episode_index]).generate_state(1)
    return int(state[0])


@dataclass(frozen=True)
class Job:
    scenario_index: int
    episode_index: int
    policy: Policy
    seed: int
    episode_id: str


@dataclass(frozen=True)
class Evaluation:
    results: tuple[EpisodeResult, ...]
    traces: dict[tuple[str, str], list[dict]]  # (episode_id, policy) -> records

    def report(self, policy: str) -> RunReport:
        return compute_metrics([r for r in self.results if r.policy == policy])

    def reports(self) -> dict[str, RunReport]:
        return {p: self.report(p) for p in sorted({r.policy for r in self.results})}


def load_scenarios(directory: str | Path) -> list[Scenario]:
    paths = sorted(Path(directory).glob("*.json"))
    return [load_scenario(p) for p in paths]


def plan_jobs(scenarios: Sequence[Scenario], policies: Iterable[Policy | str],
              episodes_per_scenario: int = 1, base_seed: int = 0) -> list[Job]:
    policies = [Policy.parse(p) if isinstance(p, str) else p for p in policies]
    jobs = []
    for si, sc in enumerate(scenarios):
        for ei in range(episodes_per_scenario):
            seed = episode_seed(base_seed, si, ei)
            eid = f"{sc.name or si}#{ei}"
            jobs.extend(Job(si, ei, pol, seed, eid) for pol in policies)
    return jobs


def evaluate(scenarios: Sequence[Scenario], policies: Iterable[Policy | str],
             config: Config | None = None, episodes_per_scenario: int = 1,
             base_seed: int = 0, workers: int = 1,
             table: AffinityTable | None = None) -> Evaluation:
    config = config or Config()
    if config.experts.backend == "rules" and table is None:
        table = AffinityTable.load(config.experts.affinity_table)
    jobs = plan_jobs(scenarios, policies, episodes_per_scenario, base_seed)

    def run(job: Job):
        spec = EpisodeSpec.from_config(scenarios[job.scenario_index], config,
                                       seed=job.seed, episode_id=job.episode_id)
        return run_episode(spec, job.policy, config, table)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run, jobs))
    else:
        outcomes = [run(j) for j in jobs]
    pairs = sorted(outcomes, key=lambda o: (o[0].episode_id, o[0].policy))
    return Evaluation(tuple(r for r, _ in pairs),
                      {(r.episode_id, r.policy): tr for r, tr in pairs})


def dumps(record: dict) -> str:
    """Canonical one-line JSON, so equal records give equal bytes."""
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


def write_trace(path: str | Path, records: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(dumps(rec) + "\n")


def write_audit(path: str | Path, ev: Evaluation) -> None:
    """One line per step of every episode, tagged with episode id and policy."""
    with open(path, "w", encoding="utf-8") as fh:
        for (eid, pol), records in sorted(ev.traces.items()):
            for rec in records:
                fh.write(dumps({"episode_id": eid, "policy": pol, **rec}) + "\n")


REPORT_FIELDS = ["policy", "episodes", "SR", "SPL", "err_detection", "err_planning",
                 "err_exploration", "frontier_dist_m"]


def write_report(path: str | Path, ev: Evaluation) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=REPORT_FIELDS, lineterminator="\n")
        w.writeheader()
        for pol, rep in ev.reports().items():
            w.writerow({"policy": pol, **rep.row()})
