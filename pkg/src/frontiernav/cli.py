"""Command line: generate scenarios, run or evaluate episodes, dump distance fields."""
from __future__ import annotations

import argparse
import csv
import logging
import math
import sys

from frontiernav.config import Config, ConfigError
from frontiernav.harness.episode import EpisodeSpec, Policy, run_episode
from frontiernav.harness.evaluate import dumps, evaluate, load_scenarios, write_audit, \
    write_report, write_trace
from frontiernav.harness.scenarios import GenerationError, GeneratorParams, generate_scenarios
from frontiernav.planner import fmm_field
from frontiernav.world import ScenarioError, load_scenario

EXIT_OK, EXIT_CONFIG, EXIT_SCENARIO = 0, 2, 3


def _config(path: str | None) -> Config:
    return Config.load(path) if path else Config()


def _policy(text: str) -> Policy:
    try:
        return Policy.parse(text)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _xy(text: str) -> tuple[float, float]:
    try:
        x, y = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected x,y in meters, got {text!r}") from None
    return x, y


def cmd_gen(args) -> int:
    try:
        params = GeneratorParams(width=args.size, height=args.size, rooms=args.rooms,
                                 object_density=args.density, seed=args.seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    docs = generate_scenarios(params, args.n, args.out_dir)
    print(f"wrote {len(docs)} scenarios to {args.out_dir}")
    return EXIT_OK


def cmd_run(args) -> int:
    config = _config(args.config)
    policy = _policy(args.policy)
    scenario = load_scenario(args.scenario)
    try:
        spec = EpisodeSpec.from_config(scenario, config, target=args.target, seed=args.seed,
                                       episode_id=scenario.name)
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc

    def snapshot(belief):
        if args.map_out:
            belief.export(f"{args.map_out}.txt", f"{args.map_out}.json")

    result, trace = run_episode(spec, policy, config, on_finish=snapshot)
    if args.trace_out:
        write_trace(args.trace_out, trace)
    print(dumps(result.to_dict()))
    return EXIT_OK


def cmd_eval(args) -> int:
    config = _config(args.config)
    policies = [_policy(p) for p in args.policies.split(",") if p]
    if not policies:
        raise ConfigError("--policies is empty")
    scenarios = load_scenarios(args.scenario_dir)
    if not scenarios:
        raise ScenarioError(f"no *.json scenarios in {args.scenario_dir}")
    ev = evaluate(scenarios, policies, config, args.episodes_per_scenario, args.seed,
                  workers=args.workers)
    if args.report:
        write_report(args.report, ev)
    if args.audit:
        write_audit(args.audit, ev)
    for pol, rep in ev.reports().items():
        print(dumps({"policy": pol, **rep.row()}))
    return EXIT_OK


def cmd_field(args) -> int:
    scenario = load_scenario(args.scenario)
    env = scenario.env
    goal = env.cell_of(*args.goal)
    if not env.in_bounds(goal) or not env.is_free(goal):
        raise ScenarioError(f"goal {args.goal} is not in free space")
    field = fmm_field(env.free, [goal], env.cell_size)
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        for row in field.values:
            w.writerow(["" if not math.isfinite(v) else repr(float(v)) for v in row])
    finally:
        if args.out:
            out.close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="frontiernav", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate floor-plan scenarios")
    g.add_argument("--n", type=int, default=10)
    g.add_argument("--size", type=int, default=32)
    g.add_argument("--rooms", type=int, default=4)
    g.add_argument("--density", type=float, default=0.04)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out-dir", required=True)
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("run", help="run one episode")
    r.add_argument("--scenario", required=True)
    r.add_argument("--target")
    r.add_argument("--policy", default="consensus")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--config")
    r.add_argument("--trace-out")
    r.add_argument("--map-out", help="prefix for the final map snapshot (.txt and .json)")
    r.set_defaults(func=cmd_run)

    e = sub.add_parser("eval", help="evaluate policies over a scenario directory")
    e.add_argument("--scenario-dir", required=True)
    e.add_argument("--policies", default="consensus,majority:3,closest")
    e.add_argument("--episodes-per-scenario", type=int, default=1)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--config")
    e.add_argument("--report")
    e.add_argument("--audit")
    e.add_argument("--workers", type=int, default=1)
    e.set_defaults(func=cmd_eval)

    f = sub.add_parser("field", help="ground-truth distance field to a goal point, as CSV")
    f.add_argument("--scenario", required=True)
    f.add_argument("--goal", type=_xy, required=True)
    f.add_argument("--out")
    f.set_defaults(func=cmd_field)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ScenarioError, GenerationError) as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO


if __name__ == "__main__":
    sys.exit(main())
