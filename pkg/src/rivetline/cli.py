"""Command-line harness.

Exit codes: 0 success, 1 usage error, 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import json
import logging
import random
import sys
from typing import Optional, Sequence

from pydantic import ValidationError

from rivetline.agents import GreedyPolicy, evaluate, load_policy, save_policy, train
from rivetline.client import TransportError, connect
from rivetline.config import FactorySection, RewardSection, load_config
from rivetline.env import Environment, RewardConfig
from rivetline.errors import ConfigError, OracleError, UaError, UsageError
from rivetline.factory import Color, FactoryConfig, event_to_dict
from rivetline.infomodel import local_plant
from rivetline.logs import EpisodeLogWriter, MetricsWriter, read_episode_log
from rivetline.oracle import solve_optimal
from rivetline.protocol import resolve_port
from rivetline.render import render
from rivetline.rng import derive_seed
from rivetline.server import PlantServer

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3

log = logging.getLogger("rivetline")


class _UsageExit(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageExit(f"{self.prog}: {message}")


def _colors(text: str) -> list[str]:
    out = []
    for part in text.split(","):
        part = part.strip().capitalize()
        if part not in ("Blue", "Green"):
            raise argparse.ArgumentTypeError(f"unknown color {part!r}")
        out.append(part)
    return out


def _endpoint(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    if not host:
        return text or "127.0.0.1", resolve_port(None)
    try:
        return host, int(port)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad endpoint {text!r}") from None


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rivetline", description="Riveting/sorting plant test bed for RL agents.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="serve a fresh plant over TCP")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=None, help="default: $RIVETLINE_PORT or 4850")
    p.add_argument("--products", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-steps", type=int, default=None)

    p = sub.add_parser("train", help="train an agent from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None, help="override factory.seed")
    p.add_argument("--connect", type=_endpoint, default=None, metavar="HOST:PORT",
                   help="drive a served plant instead of an in-process one")

    def episode_opts(p):
        p.add_argument("--products", type=int, default=None)
        p.add_argument("--colors", type=_colors, default=None, help="comma-separated, e.g. blue,green")
        p.add_argument("--max-steps", type=int, default=None)
        p.add_argument("--reward", choices=("R1", "R2"), default=None)
        p.add_argument("--connect", type=_endpoint, default=None, metavar="HOST:PORT")

    p = sub.add_parser("eval", help="evaluate a saved policy greedily")
    p.add_argument("--policy", required=True)
    p.add_argument("--episodes", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    episode_opts(p)

    p = sub.add_parser("rollout", help="run one episode")
    p.add_argument("--policy", default="random", help="random, oracle, or a policy file")
    p.add_argument("--render", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--log", default=None, help="write a JSONL episode log")
    episode_opts(p)

    p = sub.add_parser("oracle", help="print the shortest all-correct action sequence")
    p.add_argument("--colors", type=_colors, required=True)

    p = sub.add_parser("replay", help="re-execute an episode log and compare event for event")
    p.add_argument("--log", required=True)
    return parser


# --- helpers --------------------------------------------------------------------


def _plant_env(factory: FactoryConfig, reward, endpoint) -> Environment:
    plant = connect(*endpoint) if endpoint else local_plant(factory)
    env = Environment(plant, factory, reward)
    env.reset()
    return env


def _episode_setup(args, base: Optional[dict]):
    """Factory and reward sections from a policy's embedded config, overridden by flags."""
    base = base or {}
    factory = dict(base.get("factory") or {"nProducts": 1})
    reward = dict(base.get("reward") or {})
    if args.colors is not None:
        factory["forcedColors"] = args.colors
        factory["nProducts"] = len(args.colors)
    elif args.products is not None:
        factory["nProducts"] = args.products
        factory["forcedColors"] = None
    if args.max_steps is not None:
        factory["maxSteps"] = args.max_steps
    if getattr(args, "seed", None) is not None:
        factory["seed"] = args.seed
    if args.reward is not None:
        reward["mode"] = args.reward
    return _sections(factory, reward)


def _sections(factory: dict, reward: dict):
    try:
        return FactorySection.model_validate(factory), RewardSection.model_validate(reward)
    except ValidationError as exc:
        err = exc.errors()[0]
        raise ConfigError(err["msg"], ".".join(str(p) for p in err["loc"])) from None


def _factory_config(f: FactorySection) -> FactoryConfig:
    colors = tuple(Color(c) for c in f.forcedColors) if f.forcedColors else None
    return FactoryConfig(f.nProducts, f.seed, colors, f.maxSteps)


def _reward_config(r: RewardSection) -> RewardConfig:
    return RewardConfig(r.mode, r.correctSort, r.completion, r.collision, r.incorrectSort, r.invalid, r.stepCost)


# --- commands -------------------------------------------------------------------


def cmd_serve(args) -> int:
    factory = FactoryConfig(args.products, args.seed, None, args.max_steps)
    server = PlantServer(local_plant(factory), args.host, resolve_port(args.port))
    host, port = server.address
    print(f"serving plant on {host}:{port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.factory.seed = args.seed
    resolved = cfg.resolved()
    env = _plant_env(cfg.factory_config(), cfg.reward_config(), args.connect)
    episode_log = EpisodeLogWriter(cfg.output.episodeLogPath, resolved) if cfg.output.episodeLogPath else None
    with MetricsWriter(cfg.output.metricsPath, resolved) as metrics:
        agent, train_log = train(
            cfg.agent.kind, env, cfg.schedule.episodes, seed=cfg.factory.seed, config=cfg.agent_config(),
            on_episode=metrics.write, total_steps=cfg.schedule.totalSteps, episode_log=episode_log,
        )
    if episode_log is not None:
        episode_log.close()
    if cfg.output.policyPath:
        save_policy(GreedyPolicy.from_agent(agent, resolved), cfg.output.policyPath)
    tail = train_log[-100:]
    print(json.dumps({
        "episodes": len(train_log),
        "recentAllCorrectRate": sum(r.all_correct for r in tail) / max(len(tail), 1),
        "metricsPath": cfg.output.metricsPath,
        "policyPath": cfg.output.policyPath,
    }, sort_keys=True))
    return EXIT_OK


def _load_policy(path) -> GreedyPolicy:
    try:
        return load_policy(path)
    except (ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from None


def cmd_eval(args) -> int:
    policy = _load_policy(args.policy)
    f, r = _episode_setup(args, policy.config)
    env = _plant_env(_factory_config(f), _reward_config(r), args.connect)
    stats = evaluate(policy, env, args.episodes, args.seed)
    print(json.dumps(stats.as_dict(), sort_keys=True))
    return EXIT_OK


def cmd_rollout(args) -> int:
    base = None
    if args.policy not in ("random", "oracle"):
        policy_file = _load_policy(args.policy)
        base = policy_file.config
    f, r = _episode_setup(args, base)
    factory = _factory_config(f)
    env = _plant_env(factory, _reward_config(r), args.connect)

    if args.policy == "random":
        rng = random.Random(derive_seed(args.seed, 1))
        choose = lambda _s: rng.randrange(env.action_count)  # noqa: E731
    elif args.policy == "oracle":
        colors = tuple(factory.color(i) for i in range(factory.n_products))
        plan = iter(solve_optimal(FactoryConfig(factory.n_products, factory.seed, colors)))
        index = {name: i for i, name in enumerate(env.action_names)}
        choose = lambda _s: index[next(plan).value]  # noqa: E731
    else:
        choose = policy_file

    config = {"factory": f.model_dump(mode="json"), "reward": r.model_dump(mode="json"), "policy": args.policy}
    writer = EpisodeLogWriter(args.log, config) if args.log else None
    if writer:
        writer.episode(0, factory.seed)
    obs = env.reset()
    if args.render:
        print(f"step 0\n{render(obs)}")
    total = 0.0
    while not env.done:
        action = choose(env.state_key())
        result = env.step(action)
        total += result.reward
        if writer:
            writer.step(action, result, env.steps)
        if args.render:
            kinds = " ".join(e["kind"] for e in map(event_to_dict, result.events))
            print(f"\nstep {env.steps}  {env.action_names[action]}  reward {result.reward:g}  [{kinds}]")
            print(render(result.observation))
    if writer:
        writer.close()
    print(json.dumps({"return": total, "steps": env.steps}, sort_keys=True))
    return EXIT_OK


def cmd_oracle(args) -> int:
    plan = solve_optimal(FactoryConfig(len(args.colors), forced_colors=tuple(args.colors)))
    for action in plan:
        print(action.value)
    print(f"length {len(plan)}")
    return EXIT_OK


def cmd_replay(args) -> int:
    records = iter(read_episode_log(args.log))
    header = next(records, None)
    if not header or header.get("type") != "header":
        raise ConfigError("episode log must start with a header line", "log")
    f, r = _sections(header["config"]["factory"], header["config"].get("reward", {}))
    env = Environment(local_plant(_factory_config(f)), _factory_config(f), _reward_config(r))
    checked = 0
    for rec in records:
        if rec["type"] == "episode":
            env.reset(seed=rec["seed"])
            continue
        result = env.step(rec["actionIndex"])
        got = {
            "reward": result.reward,
            "done": result.done,
            "events": [event_to_dict(e) for e in result.events],
            "observation": list(result.observation),
        }
        want = {k: rec[k] for k in got}
        if got != want or env.steps != rec["step"]:
            print(f"mismatch at episode {rec['episode']} step {rec['step']}: expected {want}, got {got}",
                  file=sys.stderr)
            return EXIT_RUNTIME
        checked += 1
    print(f"replayed {checked} steps: ok")
    return EXIT_OK


COMMANDS = {
    "serve": cmd_serve,
    "train": cmd_train,
    "eval": cmd_eval,
    "rollout": cmd_rollout,
    "oracle": cmd_oracle,
    "replay": cmd_replay,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageExit as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, TransportError, UaError, OracleError, RuntimeError, StopIteration) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
