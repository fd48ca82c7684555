"""Command line entry point: ``uavedge simulate | sweep | checkpoint``.

On failure the last line on stderr is a JSON object
``{"error": <kind>, "message": <text>}`` and the exit code is nonzero.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import harness
from .agent import DdpgAgent, TrainingDivergence
from .config import AGENTS, ConfigError, load_config, parse_value


def _overrides(args) -> dict:
    out = {}
    for item in args.set or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        out[key.strip()] = parse_value(value)
    for flag, key in (("agent", "experiment.agent"), ("seed", "experiment.seed"),
                      ("episodes", "experiment.episodes"), ("vehicles_n", "experiment.n_vehicles")):
        value = getattr(args, flag, None)
        if value is not None:
            out[key] = value
    return out


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")
    p.add_argument("--seed", type=int)
    p.add_argument("--episodes", type=int)
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uavedge", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="train the agent or roll out a baseline; writes per-step metrics")
    _add_common(sim)
    sim.add_argument("--agent", choices=AGENTS)
    sim.add_argument("--out", required=True, help="metrics CSV path")
    sim.add_argument("--load", help="checkpoint to start from (required for equal-bandwidth)")
    sim.add_argument("--save", help="write a checkpoint after training")
    sim.add_argument("--sampling-log", help="CSV of replay batch compositions")

    sw = sub.add_parser("sweep", help="energy per (vehicle count, seed, agent)")
    _add_common(sw)
    sw.add_argument("--vehicles", default="10,20,30,40,50")
    sw.add_argument("--seeds", default="1..5")
    sw.add_argument("--agents", default=",".join(AGENTS))
    sw.add_argument("--jobs", type=int, default=1)
    sw.add_argument("--out", required=True, help="output directory")

    ck = sub.add_parser("checkpoint", help="train and save, or load and describe, an agent checkpoint")
    _add_common(ck)
    group = ck.add_mutually_exclusive_group(required=True)
    group.add_argument("--save")
    group.add_argument("--load")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "checkpoint" and args.load:
            agent, extra = DdpgAgent.load(args.load)
            print(json.dumps({"state_dim": agent.state_dim, "action_dim": agent.action_dim,
                              "updates": agent.updates, "extra": extra}, sort_keys=True))
            return 0
        cfg = load_config(args.config, _overrides(args))
        if args.command == "simulate":
            harness.run(cfg, args.out, load=args.load, save=args.save, sampling_log=args.sampling_log)
        elif args.command == "sweep":
            agents = [a.strip() for a in args.agents.split(",") if a.strip()]
            unknown = set(agents) - set(AGENTS)
            if unknown:
                raise ConfigError(f"unknown agents: {sorted(unknown)}")
            path = harness.sweep(cfg, harness.parse_int_list(args.vehicles), harness.parse_int_list(args.seeds),
                                 args.out, agents, jobs=args.jobs)
            print(path)
        else:
            agent, _, _ = harness.train(cfg)
            agent.save(args.save, {"seed": cfg.experiment.seed, "episodes": cfg.experiment.episodes})
        return 0
    except ConfigError as exc:
        kind, err = "config", exc
    except TrainingDivergence as exc:
        kind, err = "divergence", exc
    except (OSError, ValueError) as exc:
        kind, err = type(exc).__name__, exc
    print(json.dumps({"error": kind, "message": str(err)}), file=sys.stderr)
    return 2


if __name__ == "__main__":
    sys.exit(main())
